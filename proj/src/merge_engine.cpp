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

#include "hmmmix/merge_engine.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "hmmmix/errors.hpp"
#include "hmmmix/selection.hpp"

namespace hmmmix {

std::string_view to_string(MergeCriterion c) {
  switch (c) {
    case MergeCriterion::X: return "X";
    case MergeCriterion::XS: return "XS";
    case MergeCriterion::XZ: return "XZ";
  }
  return "?";
}

MergeCriterion parse_merge_criterion(std::string_view text) {
  if (text == "X") return MergeCriterion::X;
  if (text == "XS") return MergeCriterion::XS;
  if (text == "XZ") return MergeCriterion::XZ;
  throw ConfigError("unknown merge criterion '" + std::string(text) + "'");
}

namespace {

// Lumps states k < l of a chain with stationary law q.
Eigen::MatrixXd lump_transitions(const Eigen::MatrixXd& pi, const Eigen::VectorXd& q, int k, int l) {
  const Eigen::Index g = pi.rows();
  auto target = [&](Eigen::Index i) -> Eigen::Index { return i == l ? k : (i > l ? i - 1 : i); };
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g - 1, g - 1);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(g - 1);
  for (Eigen::Index i = 0; i < g; ++i) {
    mass(target(i)) += q(i);
    for (Eigen::Index j = 0; j < g; ++j) out(target(i), target(j)) += q(i) * pi(i, j);
  }
  for (Eigen::Index i = 0; i < g - 1; ++i) {
    if (i == k) {
      out.row(i) /= mass(i);
    } else {
      // Unmerged rows: plain sums of the original row.
      const Eigen::Index src = i >= l ? i + 1 : i;
      out.row(i).setZero();
      for (Eigen::Index j = 0; j < g; ++j) out(i, target(j)) += pi(src, j);
    }
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

std::pair<int, int> ordered(int k, int l) { return k < l ? std::pair{k, l} : std::pair{l, k}; }

}  // namespace

MixtureHMM merge_pair(const MixtureHMM& model, int k, int l) {
  const int g = model.num_states();
  if (g < 2) throw ParameterError("merge needs at least two clusters");
  if (k == l || k < 0 || l < 0 || k >= g || l >= g) throw ParameterError("invalid merge indices");
  std::tie(k, l) = ordered(k, l);

  const Eigen::VectorXd q = model.initial();
  const double share_k = q(k) / (q(k) + q(l));
  const double share_l = q(l) / (q(k) + q(l));

  MixtureHMM out;
  out.cov_structure = model.cov_structure;
  out.chain = model.chain;
  for (int d = 0; d < g; ++d) {
    if (d == l) continue;
    if (d != k) {
      out.states.push_back(model.states[static_cast<std::size_t>(d)]);
      continue;
    }
    const auto& a = model.states[static_cast<std::size_t>(k)];
    const auto& b = model.states[static_cast<std::size_t>(l)];
    MixtureState merged;
    merged.weights.resize(a.size() + b.size());
    merged.weights << share_k * a.weights, share_l * b.weights;
    merged.weights /= merged.weights.sum();
    merged.components = a.components;
    merged.components.insert(merged.components.end(), b.components.begin(), b.components.end());
    out.states.push_back(std::move(merged));
  }
  Eigen::MatrixXd pi = lump_transitions(model.trans.matrix(), q, k, l);
  if (model.chain == ChainStructure::independent) {
    out.trans = TransitionMatrix::independent(pi.row(0).transpose());
  } else {
    out.trans = TransitionMatrix(std::move(pi));
  }
  return out;
}

double ModelScore::criterion(MergeCriterion c) const {
  switch (c) {
    case MergeCriterion::X: return loglik;
    case MergeCriterion::XS: return loglik - entropy_s;
    case MergeCriterion::XZ: return loglik - entropy_s - entropy_z_given_s;
  }
  return loglik;
}

ModelScore score_model(const MixtureHMM& model, const Dataset& data) {
  const FullPosterior post = e_step(model, data, {.keep_eta = false, .compute_entropy = true});
  return {post.chain.loglik, *post.chain.entropy, *post.component_entropy};
}

double criterion_value(const MixtureHMM& model_after_merge, const Dataset& data, MergeCriterion kind) {
  if (kind == MergeCriterion::X) return e_step(model_after_merge, data).chain.loglik;
  return score_model(model_after_merge, data).criterion(kind);
}

namespace {

// Shared, read-only quantities of the current model; each candidate merge only
// rewrites one emission column and the transition matrix.
class PairScorer {
 public:
  PairScorer(const MixtureHMM& model, const Dataset& data, MergeCriterion kind)
      : model_(model), kind_(kind), q_(model.initial()) {
    const auto comp = weighted_component_log_densities(model, data.observations);
    const Eigen::Index n = data.size();
    log_emission_.resize(n, model.num_states());
    if (kind == MergeCriterion::XZ) within_entropy_.resize(n, model.num_states());
    for (std::size_t d = 0; d < comp.size(); ++d) {
      const auto col = static_cast<Eigen::Index>(d);
      for (Eigen::Index t = 0; t < n; ++t) {
        const double lse = log_sum_exp(comp[d].row(t).transpose());
        log_emission_(t, col) = lse;
        if (kind == MergeCriterion::XZ) {
          within_entropy_(t, col) =
              comp[d].cols() == 1 ? 0.0 : entropy_of((comp[d].row(t).array() - lse).exp().matrix().transpose());
        }
      }
    }
  }

  double score(int k, int l) const {
    const Eigen::Index g = model_.num_states();
    const Eigen::Index n = log_emission_.rows();
    const double log_wk = std::log(q_(k) / (q_(k) + q_(l)));
    const double log_wl = std::log(q_(l) / (q_(k) + q_(l)));

    Eigen::MatrixXd emission(n, g - 1);
    Eigen::MatrixXd within;
    if (kind_ == MergeCriterion::XZ) within.resize(n, g - 1);
    for (Eigen::Index d = 0, c = 0; d < g; ++d) {
      if (d == l) continue;
      if (d != k) {
        emission.col(c) = log_emission_.col(d);
        if (kind_ == MergeCriterion::XZ) within.col(c) = within_entropy_.col(d);
      }
      ++c;
    }
    for (Eigen::Index t = 0; t < n; ++t) {
      const double a = log_wk + log_emission_(t, k);
      const double b = log_wl + log_emission_(t, l);
      const double m = std::max(a, b);
      const double lse = std::isfinite(m) ? m + std::log(std::exp(a - m) + std::exp(b - m)) : m;
      emission(t, k) = lse;
      if (kind_ == MergeCriterion::XZ) {
        const double rho_k = std::isfinite(lse) ? std::exp(a - lse) : 0.5;
        const double rho_l = 1.0 - rho_k;
        double h = 0.0;
        if (rho_k > 0.0) h -= rho_k * std::log(rho_k);
        if (rho_l > 0.0) h -= rho_l * std::log(rho_l);
        within(t, k) = h + rho_k * within_entropy_(t, k) + rho_l * within_entropy_(t, l);
      }
    }

    Eigen::MatrixXd pi = lump_transitions(model_.trans.matrix(), q_, k, l);
    const TransitionMatrix trans = model_.chain == ChainStructure::independent
                                       ? TransitionMatrix::independent(pi.row(0).transpose())
                                       : TransitionMatrix(std::move(pi));
    const Eigen::VectorXd init = stationary_distribution(trans);
    if (kind_ == MergeCriterion::X) return forward_loglik(emission, trans, init);

    const ChainPosterior post =
        forward_backward(emission, trans, init, {.keep_eta = false, .compute_entropy = true});
    double value = post.loglik - *post.entropy;
    if (kind_ == MergeCriterion::XZ) value -= post.tau.cwiseProduct(within).sum();
    return value;
  }

 private:
  const MixtureHMM& model_;
  MergeCriterion kind_;
  Eigen::VectorXd q_;
  Eigen::MatrixXd log_emission_;
  Eigen::MatrixXd within_entropy_;
};

}  // namespace

std::vector<std::pair<std::pair<int, int>, double>> score_all_pairs(const MixtureHMM& model,
                                                                    const Dataset& data,
                                                                    MergeCriterion kind,
                                                                    const PairSearchOptions& options) {
  const int g = model.num_states();
  if (g < 2) throw ParameterError("pair search needs at least two clusters");
  if (data.dim() != model.dim()) throw ShapeError("data dimension does not match model");
  std::vector<std::pair<std::pair<int, int>, double>> candidates;
  for (int k = 0; k < g; ++k) {
    for (int l = k + 1; l < g; ++l) {
      if (!options.screen || options.screen(k, l)) candidates.push_back({{k, l}, 0.0});
    }
  }
  const PairScorer scorer(model, data, kind);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < candidates.size(); i = next++) {
      candidates[i].second = scorer.score(candidates[i].first.first, candidates[i].first.second);
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(candidates.size())));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
  }
  return candidates;
}

PairChoice best_pair(const MixtureHMM& model, const Dataset& data, MergeCriterion kind,
                     const PairSearchOptions& options) {
  const auto scored = score_all_pairs(model, data, kind, options);
  if (scored.empty()) throw ParameterError("no candidate pair passes the screen");
  PairChoice best{scored.front().first.first, scored.front().first.second, scored.front().second, 0};
  for (const auto& [pair, value] : scored) {
    if (value > best.value) best = {pair.first, pair.second, value, 0};
  }
  best.evaluated = static_cast<int>(scored.size());
  return best;
}

int MergePath::total_components() const {
  return steps.empty() ? 0 : steps.front().model.num_components();
}

const MergeStep* MergePath::at(int g) const {
  for (const auto& s : steps) {
    if (s.clusters == g) return &s;
  }
  return nullptr;
}

namespace {

MergeStep describe(MixtureHMM model, const Dataset& data) {
  MergeStep step;
  const ModelScore score = score_model(model, data);
  step.clusters = model.num_states();
  step.loglik = score.loglik;
  step.plugin_loglik = score.loglik;
  step.entropy_s = score.entropy_s;
  step.entropy_z_given_s = score.entropy_z_given_s;
  step.nu = count_free_parameters(model);
  step.model = std::move(model);
  return step;
}

}  // namespace

MergePath hierarchical_merge(const MixtureHMM& initial, const Dataset& data, const MergeOptions& options) {
  initial.validate();
  if (options.min_clusters < 1) throw ConfigError("min_clusters must be at least 1");
  MergePath path;
  path.criterion = options.criterion;
  path.steps.push_back(describe(initial, data));

  std::optional<int> forced;
  while (path.steps.back().clusters > options.min_clusters) {
    const MixtureHMM& current = path.steps.back().model;
    PairSearchOptions search = options.search;
    if (forced) {
      const int f = *forced;
      search.screen = [f, base = options.search.screen](int k, int l) {
        return (k == f || l == f) && (!base || base(k, l));
      };
    }
    const PairChoice choice = best_pair(current, data, options.criterion, search);
    MixtureHMM merged = merge_pair(current, choice.k, choice.l);
    const double plugin = e_step(merged, data).chain.loglik;

    forced.reset();
    bool refined = true;
    try {
      merged = run_em(std::move(merged), data, options.refine).model;
    } catch (const EmptyStateError& e) {
      // `merged` was moved into run_em; rebuild the plug-in model.
      merged = merge_pair(current, choice.k, choice.l);
      forced = e.state();
      refined = false;
    }
    MergeStep step = describe(std::move(merged), data);
    step.merged_pair = std::pair{choice.k, choice.l};
    step.criterion_value = choice.value;
    step.plugin_loglik = plugin;
    step.refined = refined;
    path.steps.push_back(std::move(step));
  }
  return path;
}

}  // namespace hmmmix
