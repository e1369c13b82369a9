// Copyright 2026 The hmmmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hmmmix/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "hmmmix/errors.hpp"
#include "hmmmix/matching.hpp"
#include "hmmmix/rng.hpp"

namespace hmmmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool inside_square(const Eigen::Ref<const Eigen::RowVectorXd>& x, double h) {
  return std::abs(x(0)) <= h && std::abs(x(1)) <= h;
}

struct LogDensityVisitor {
  const Eigen::MatrixXd& points;

  Eigen::VectorXd operator()(const GaussianParams& g) const { return log_density_rows(points, g); }

  Eigen::VectorXd operator()(const UniformSquare& s) const {
    const double log_area = std::log(4.0 * s.half_side * s.half_side);
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index t = 0; t < points.rows(); ++t) {
      out(t) = inside_square(points.row(t), s.half_side) ? -log_area : kNegInf;
    }
    return out;
  }

  Eigen::VectorXd operator()(const UniformSquareAnnulus& s) const {
    const double area = 4.0 * (s.outer_half_side * s.outer_half_side - s.inner_half_side * s.inner_half_side);
    const double log_area = std::log(area);
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index t = 0; t < points.rows(); ++t) {
      const bool in = inside_square(points.row(t), s.outer_half_side) &&
                      !inside_square(points.row(t), s.inner_half_side);
      out(t) = in ? -log_area : kNegInf;
    }
    return out;
  }
};

struct SampleVisitor {
  std::mt19937_64& rng;

  Eigen::VectorXd operator()(const GaussianParams& g) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(g.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return g.mean + g.covariance.llt().matrixL() * z;
  }

  Eigen::VectorXd operator()(const UniformSquare& s) const {
    std::uniform_real_distribution<double> u(-s.half_side, s.half_side);
    Eigen::VectorXd x(2);
    x(0) = u(rng);
    x(1) = u(rng);
    return x;
  }

  Eigen::VectorXd operator()(const UniformSquareAnnulus& s) const {
    std::uniform_real_distribution<double> u(-s.outer_half_side, s.outer_half_side);
    Eigen::VectorXd x(2);
    do {
      x(0) = u(rng);
      x(1) = u(rng);
    } while (std::abs(x(0)) < s.inner_half_side && std::abs(x(1)) < s.inner_half_side);
    return x;
  }
};

int draw(const Eigen::Ref<const Eigen::VectorXd>& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (Eigen::Index i = 0; i + 1 < p.size(); ++i) {
    r -= p(i);
    if (r < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace

Eigen::VectorXd emitter_log_density_rows(const Emitter& emitter, const Eigen::MatrixXd& points) {
  return std::visit(LogDensityVisitor{points}, emitter);
}

std::optional<MixtureHMM> SimSpec::true_model() const {
  MixtureHMM model;
  model.trans = trans;
  model.cov_structure = CovStructure::full;
  for (const auto& s : states) {
    MixtureState st;
    st.weights = s.weights;
    for (const auto& e : s.emitters) {
      const auto* g = std::get_if<GaussianParams>(&e);
      if (!g) return std::nullopt;
      st.components.push_back(*g);
    }
    model.states.push_back(std::move(st));
  }
  return model;
}

std::vector<GaussianParams> benchmark_components(double b) {
  auto diag = [](double x, double y) {
    Eigen::Matrix2d m;
    m << x, 0.0, 0.0, y;
    return m;
  };
  Eigen::Matrix2d s5;
  s5 << 0.4, 0.5, 0.5, 1.0;
  Eigen::Matrix2d s6;
  s6 << 0.3, -0.4, -0.4, 0.7;
  const std::vector<std::pair<Eigen::Vector2d, Eigen::Matrix2d>> table = {
      {{1.0, 5.0}, diag(0.1, 1.0)}, {{1.0, 5.0}, diag(1.0, 0.1)}, {{8.0, 0.0}, diag(0.1, 1.0)},
      {{8.0, 0.0}, diag(1.0, 0.1)}, {{0.0, 0.0}, s5},             {{8.0, 5.0}, s6},
  };
  std::vector<GaussianParams> out;
  for (const auto& [mu, sigma] : table) out.push_back({mu, b * sigma});
  return out;
}

SimSpec benchmark_design(double a, double b, Eigen::Index n, std::uint64_t seed) {
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("benchmark design needs a in (0, 1)");
  if (!(b > 0.0)) throw ConfigError("benchmark design needs b > 0");
  if (n < 1) throw ConfigError("sequence length must be positive");
  SimSpec spec;
  spec.design = "benchmark";
  spec.n = n;
  spec.seed = seed;
  Eigen::Matrix4d pi = Eigen::Matrix4d::Constant((1.0 - a) / 3.0);
  pi.diagonal().setConstant(a);
  spec.trans = TransitionMatrix(pi);
  const auto comps = benchmark_components(b);
  const std::vector<std::vector<int>> groups = {{0, 1}, {2, 3}, {4}, {5}};
  for (const auto& g : groups) {
    GenerativeState st;
    st.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), 1.0 / static_cast<double>(g.size()));
    for (int c : g) st.emitters.emplace_back(comps[static_cast<std::size_t>(c)]);
    spec.states.push_back(std::move(st));
  }
  spec.notes = {"state 1 = components {1, 2} (shared mean (1, 5))",
                "state 2 = components {3, 4} (shared mean (8, 0))", "state 3 = component 5",
                "state 4 = component 6", "within-state weights 0.5 / 0.5"};
  return spec;
}

SimSpec nested_squares_design(double gap, Eigen::Index n, std::uint64_t seed) {
  if (!(gap > 0.0 && gap <= 0.2)) throw ConfigError("nested design needs gap in (0, 0.2]");
  if (n < 1) throw ConfigError("sequence length must be positive");
  SimSpec spec;
  spec.design = "nested";
  spec.n = n;
  spec.seed = seed;
  Eigen::Matrix2d pi;
  pi << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  spec.trans = TransitionMatrix(pi);
  const double inner = 0.5 + gap;
  spec.states.push_back({Eigen::VectorXd::Ones(1), {UniformSquare{0.5}}});
  spec.states.push_back({Eigen::VectorXd::Ones(1), {UniformSquareAnnulus{inner, inner + 0.2}}});
  spec.notes = {"state 0 uniform on [-0.5, 0.5]^2",
                "state 1 uniform on the square annulus with half-sides " + std::to_string(inner) +
                    " and " + std::to_string(inner + 0.2)};
  return spec;
}

Eigen::MatrixXd true_posterior(const SimSpec& spec, const Eigen::MatrixXd& points) {
  Eigen::MatrixXd log_emission(points.rows(), spec.num_states());
  for (int d = 0; d < spec.num_states(); ++d) {
    const auto& st = spec.states[static_cast<std::size_t>(d)];
    Eigen::MatrixXd terms(points.rows(), st.weights.size());
    for (Eigen::Index k = 0; k < st.weights.size(); ++k) {
      terms.col(k) = emitter_log_density_rows(st.emitters[static_cast<std::size_t>(k)], points).array() +
                     std::log(st.weights(k));
    }
    for (Eigen::Index t = 0; t < points.rows(); ++t) log_emission(t, d) = log_sum_exp(terms.row(t).transpose());
  }
  return forward_backward(log_emission, spec.trans, stationary_distribution(spec.trans),
                          {.keep_eta = false})
      .tau;
}

SimResult simulate(const SimSpec& spec) {
  if (spec.n < 1 || spec.states.empty()) throw ConfigError("invalid simulation spec");
  std::mt19937_64 rng(derive_seed(spec.seed, 0x51u));
  const Eigen::VectorXd q = stationary_distribution(spec.trans);
  const Eigen::Index q_dim = 2;
  SimResult out;
  out.data.observations.resize(spec.n, q_dim);
  out.states.resize(static_cast<std::size_t>(spec.n));
  out.components.resize(static_cast<std::size_t>(spec.n));
  SampleVisitor sampler{rng};
  int s = draw(q, rng);
  for (Eigen::Index t = 0; t < spec.n; ++t) {
    if (t > 0) s = draw(spec.trans.matrix().row(s).transpose(), rng);
    const auto& st = spec.states[static_cast<std::size_t>(s)];
    const int z = draw(st.weights, rng);
    const Eigen::VectorXd x = std::visit(sampler, st.emitters[static_cast<std::size_t>(z)]);
    if (x.size() != q_dim) throw ParameterError("simulation supports bivariate emitters only");
    out.data.observations.row(t) = x.transpose();
    out.states[static_cast<std::size_t>(t)] = s;
    out.components[static_cast<std::size_t>(t)] = z;
  }
  out.data.true_states = out.states;
  out.data.true_components = out.components;
  out.data.source = spec.design + " seed=" + std::to_string(spec.seed);
  out.true_tau = true_posterior(spec, out.data.observations);
  return out;
}

double mse(const Eigen::MatrixXd& tau_hat, const Eigen::MatrixXd& true_tau) {
  if (tau_hat.rows() != true_tau.rows() || tau_hat.cols() != true_tau.cols()) {
    throw ShapeError("posterior matrices differ in shape");
  }
  const Eigen::Index n = tau_hat.rows();
  const Eigen::Index d = tau_hat.cols();
  if (n == 0) return 0.0;
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  auto score = [&](const std::vector<int>& p) {
    double total = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      double sq = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = tau_hat(t, p[static_cast<std::size_t>(j)]) - true_tau(t, j);
        sq += diff * diff;
      }
      total += std::sqrt(sq);
    }
    return total / static_cast<double>(n);
  };
  if (d <= 6) {
    double best = std::numeric_limits<double>::infinity();
    do {
      best = std::min(best, score(perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // cost(j, c): squared distance between true column j and estimated column c.
  Eigen::MatrixXd cost(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index c = 0; c < d; ++c) cost(j, c) = (tau_hat.col(c) - true_tau.col(j)).squaredNorm();
  }
  return score(min_cost_assignment(cost));
}

double correct_rate(const std::vector<int>& labels_hat, const std::vector<int>& truth) {
  if (labels_hat.size() != truth.size()) throw ShapeError("label vectors differ in length");
  if (truth.empty()) return 1.0;
  const int a = *std::max_element(labels_hat.begin(), labels_hat.end()) + 1;
  const int b = *std::max_element(truth.begin(), truth.end()) + 1;
  const int m = std::max(a, b);
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (labels_hat[t] < 0 || truth[t] < 0) throw ParameterError("labels must be non-negative");
    overlap(labels_hat[t], truth[t]) += 1.0;
  }
  const auto assign = min_cost_assignment(-overlap);
  double matched = 0.0;
  for (int i = 0; i < m; ++i) matched += overlap(i, assign[static_cast<std::size_t>(i)]);
  return matched / static_cast<double>(truth.size());
}

std::vector<MethodConfig> standard_methods(const std::vector<MergeCriterion>& criteria, bool independence,
                                           int k_init) {
  std::vector<MethodConfig> out;
  for (auto c : criteria) {
    MethodConfig m;
    m.name = std::string(to_string(c));
    m.criterion = c;
    m.k_init = k_init;
    out.push_back(std::move(m));
  }
  if (independence) {
    // With identical transition rows the observed likelihood does not depend on
    // the merge, so the state-entropy criterion drives the merging.
    MethodConfig m;
    m.name = "independent";
    m.criterion = MergeCriterion::XS;
    m.chain = ChainStructure::independent;
    m.k_init = k_init;
    out.push_back(std::move(m));
  }
  return out;
}

ReplicateOutcome evaluate_replicate(const SimResult& sim, int true_states, const MethodConfig& method,
                                    std::uint64_t seed, const std::optional<MixtureHMM>& fitted_initial) {
  ReplicateOutcome out;
  out.method = method.name;
  try {
    MixtureHMM initial;
    if (fitted_initial) {
      initial = *fitted_initial;
    } else {
      InitOptions init = method.init;
      init.structure = method.structure;
      init.chain = method.chain;
      initial = init_k_components(sim.data, method.k_init, derive_seed(seed, 1), init);
    }
    MergeOptions merge;
    merge.criterion = method.criterion;
    merge.refine = method.refine;
    merge.search.jobs = method.jobs;
    const MergePath path = hierarchical_merge(initial, sim.data, merge);
    const MergeStep* step = path.at(true_states);
    if (!step) throw ConfigError("merge path does not reach the true number of states");
    const FullPosterior post = e_step(step->model, sim.data);
    out.mse = mse(post.chain.tau, sim.true_tau);
    out.rate = correct_rate(map_classify(post.chain.tau), sim.states);

    CriteriaReport report;
    for (const auto& s : path.steps) {
      report.records.push_back(make_record(s.clusters, {s.loglik, s.entropy_s, s.entropy_z_given_s}, s.nu,
                                           sim.data.size()));
    }
    out.selected_bic = argmax_clusters(report, SelectionCriterion::BIC);
    out.selected_icl = argmax_clusters(report, SelectionCriterion::ICL);
    out.selected_icl_s = argmax_clusters(report, SelectionCriterion::ICL_S);
    out.criteria = std::move(report.records);
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

std::vector<BenchmarkCell> full_grid() {
  std::vector<BenchmarkCell> out;
  for (double a : {0.25, 0.5, 0.75, 0.9}) {
    for (double b : {1.0, 3.0, 5.0, 7.0}) out.push_back({a, b, 0.0});
  }
  return out;
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t cell, int replicate) {
  return derive_seed(master, {static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(replicate)});
}

std::pair<double, double> mean_sd(const std::vector<double>& values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

std::vector<ReplicateOutcome> run_task(const BenchmarkConfig& config, std::size_t cell, int replicate,
                                       std::uint64_t seed, const std::vector<MethodConfig>& methods) {
  const auto& c = config.cells[cell];
  const SimSpec spec = config.design == Design::benchmark ? benchmark_design(c.a, c.b, config.n, seed)
                                                          : nested_squares_design(c.gap, config.n, seed);
  const SimResult sim = simulate(spec);
  const int true_states = spec.num_states();

  // Markov methods share the same initial K-component fit.
  std::optional<MixtureHMM> shared;
  std::string shared_error;
  std::vector<ReplicateOutcome> out;
  for (const auto& m : methods) {
    std::optional<MixtureHMM> initial;
    if (m.chain == ChainStructure::markov) {
      if (!shared && shared_error.empty()) {
        try {
          InitOptions init = m.init;
          init.structure = m.structure;
          init.chain = m.chain;
          shared = init_k_components(sim.data, m.k_init, derive_seed(seed, 1), init);
        } catch (const std::exception& e) {
          shared_error = e.what();
        }
      }
      initial = shared;
    }
    ReplicateOutcome r;
    if (m.chain == ChainStructure::markov && !shared) {
      r.method = m.name;
      r.failed = true;
      r.error = shared_error;
    } else {
      r = evaluate_replicate(sim, true_states, m, seed, initial);
    }
    r.cell = cell;
    r.replicate = replicate;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  if (config.replicates < 1) throw ConfigError("at least one replicate is required");
  if (config.cells.empty()) throw ConfigError("benchmark grid is empty");
  auto methods = standard_methods(config.criteria, config.independence, config.k_init);
  if (methods.empty()) throw ConfigError("no method selected");
  for (auto& m : methods) {
    m.init = config.init;
    m.refine = config.refine;
  }

  const std::size_t tasks = config.cells.size() * static_cast<std::size_t>(config.replicates);
  BenchmarkReport report;
  report.seeds.resize(tasks);
  std::vector<std::vector<ReplicateOutcome>> results(tasks);
  for (std::size_t i = 0; i < tasks; ++i) {
    report.seeds[i] = replicate_seed(config.seed, i / static_cast<std::size_t>(config.replicates),
                                     static_cast<int>(i % static_cast<std::size_t>(config.replicates)));
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tasks; i = next++) {
      const std::size_t cell = i / static_cast<std::size_t>(config.replicates);
      const int rep = static_cast<int>(i % static_cast<std::size_t>(config.replicates));
      results[i] = run_task(config, cell, rep, report.seeds[i], methods);
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(tasks)));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
  }

  const int true_states = config.design == Design::benchmark ? 4 : 2;
  for (std::size_t c = 0; c < config.cells.size(); ++c) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      CellSummary row;
      row.cell = config.cells[c];
      row.method = methods[m].name;
      std::vector<double> mses, rates;
      int hit_bic = 0, hit_icl = 0, hit_icl_s = 0;
      for (int r = 0; r < config.replicates; ++r) {
        const auto& o = results[c * static_cast<std::size_t>(config.replicates) + static_cast<std::size_t>(r)][m];
        if (o.failed) {
          ++row.failures;
          continue;
        }
        ++row.successes;
        mses.push_back(o.mse);
        rates.push_back(o.rate);
        hit_bic += o.selected_bic == true_states;
        hit_icl += o.selected_icl == true_states;
        hit_icl_s += o.selected_icl_s == true_states;
      }
      std::tie(row.mean_mse, row.sd_mse) = mean_sd(mses);
      std::tie(row.mean_rate, row.sd_rate) = mean_sd(rates);
      const double denom = row.successes > 0 ? row.successes : std::numeric_limits<double>::quiet_NaN();
      row.hit_rate_bic = hit_bic / denom;
      row.hit_rate_icl = hit_icl / denom;
      row.hit_rate_icl_s = hit_icl_s / denom;
      row.cluster_hit_rate = config.selection == SelectionCriterion::BIC  ? row.hit_rate_bic
                             : config.selection == SelectionCriterion::ICL ? row.hit_rate_icl
                                                                           : row.hit_rate_icl_s;
      report.rows.push_back(row);
    }
  }
  for (auto& r : results) {
    for (auto& o : r) report.replicates.push_back(std::move(o));
  }
  return report;
}

}  // namespace hmmmix
