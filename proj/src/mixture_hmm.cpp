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

#include "hmmmix/mixture_hmm.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "hmmmix/errors.hpp"
#include "hmmmix/rng.hpp"

namespace hmmmix {

std::string_view to_string(ChainStructure s) {
  return s == ChainStructure::markov ? "markov" : "independent";
}

ChainStructure parse_chain_structure(std::string_view text) {
  if (text == "markov") return ChainStructure::markov;
  if (text == "independent") return ChainStructure::independent;
  throw ConfigError("unknown chain structure '" + std::string(text) + "'");
}

int MixtureHMM::num_components() const {
  int k = 0;
  for (const auto& s : states) k += static_cast<int>(s.size());
  return k;
}

std::vector<int> MixtureHMM::component_counts() const {
  std::vector<int> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(static_cast<int>(s.size()));
  return out;
}

Eigen::Index MixtureHMM::dim() const {
  return states.empty() || states.front().components.empty()
             ? 0
             : states.front().components.front().dim();
}

void MixtureHMM::validate() const {
  if (states.empty()) throw ParameterError("model has no states");
  if (trans.size() != num_states()) throw ParameterError("transition order differs from state count");
  const Eigen::Index q = dim();
  for (std::size_t d = 0; d < states.size(); ++d) {
    const auto& s = states[d];
    if (s.size() < 1 || static_cast<std::size_t>(s.size()) != s.components.size()) {
      throw ParameterError("state " + std::to_string(d) + " has inconsistent component lists");
    }
    if (std::abs(s.weights.sum() - 1.0) > 1e-12 || (s.weights.array() <= 0.0).any() ||
        (s.weights.array() > 1.0).any()) {
      throw ParameterError("mixing weights of state " + std::to_string(d) + " are invalid");
    }
    for (const auto& c : s.components) {
      c.validate();
      if (c.dim() != q) throw ParameterError("components have different dimensions");
    }
  }
  if (chain == ChainStructure::independent) {
    for (Eigen::Index i = 1; i < trans.size(); ++i) {
      if ((trans.matrix().row(i) - trans.matrix().row(0)).cwiseAbs().maxCoeff() > 1e-12) {
        throw ParameterError("independent chain must have identical transition rows");
      }
    }
  }
}

std::vector<Eigen::MatrixXd> weighted_component_log_densities(const MixtureHMM& model,
                                                              const Eigen::MatrixXd& points) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(model.states.size());
  for (const auto& s : model.states) {
    Eigen::MatrixXd m(points.rows(), s.size());
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      m.col(k) = log_density_rows(points, s.components[static_cast<std::size_t>(k)]).array() +
                 std::log(s.weights(k));
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

Eigen::VectorXd row_log_sum_exp(const Eigen::MatrixXd& m) {
  if (m.cols() == 1) return m.col(0);
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    out(t) = std::isfinite(mx(t)) ? mx(t) + std::log((m.row(t).array() - mx(t)).exp().sum()) : mx(t);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd state_log_emissions(const MixtureHMM& model, const Eigen::MatrixXd& points) {
  const auto comp = weighted_component_log_densities(model, points);
  Eigen::MatrixXd out(points.rows(), model.num_states());
  for (std::size_t d = 0; d < comp.size(); ++d) {
    out.col(static_cast<Eigen::Index>(d)) = row_log_sum_exp(comp[d]);
  }
  return out;
}

double emission_log_density(const MixtureHMM& model, const Eigen::VectorXd& x, int state) {
  if (state < 0 || state >= model.num_states()) throw ParameterError("state index out of range");
  const auto& s = model.states[static_cast<std::size_t>(state)];
  Eigen::VectorXd terms(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    terms(k) = std::log(s.weights(k)) + log_density(x, s.components[static_cast<std::size_t>(k)]);
  }
  return log_sum_exp(terms);
}

ComponentChain expand_to_component_chain(const MixtureHMM& model) {
  const int k_total = model.num_components();
  const Eigen::VectorXd q = model.initial();
  ComponentChain out;
  out.init.resize(k_total);
  Eigen::VectorXd lambda(k_total);
  std::vector<int> state_of;
  for (int d = 0; d < model.num_states(); ++d) {
    const auto& s = model.states[static_cast<std::size_t>(d)];
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(out.index.size());
      out.index.emplace_back(d, static_cast<int>(k));
      out.components.push_back(s.components[static_cast<std::size_t>(k)]);
      lambda(i) = s.weights(k);
      out.init(i) = q(d) * s.weights(k);
      state_of.push_back(d);
    }
  }
  Eigen::MatrixXd omega(k_total, k_total);
  for (int i = 0; i < k_total; ++i) {
    for (int j = 0; j < k_total; ++j) {
      omega(i, j) = model.trans(state_of[static_cast<std::size_t>(i)], state_of[static_cast<std::size_t>(j)]) * lambda(j);
    }
  }
  // Rows sum to one only up to rounding of the lambda sums.
  out.omega = TransitionMatrix::from_weights(std::move(omega));
  out.init /= out.init.sum();
  return out;
}

FullPosterior e_step(const MixtureHMM& model, const Dataset& data, EStepOptions options) {
  if (data.dim() != model.dim()) throw ShapeError("data dimension does not match model");
  const auto comp = weighted_component_log_densities(model, data.observations);
  const Eigen::Index n = data.size();
  Eigen::MatrixXd log_emission(n, model.num_states());
  FullPosterior post;
  post.delta.reserve(comp.size());
  for (std::size_t d = 0; d < comp.size(); ++d) {
    const Eigen::VectorXd lse = row_log_sum_exp(comp[d]);
    log_emission.col(static_cast<Eigen::Index>(d)) = lse;
    Eigen::MatrixXd delta = (comp[d].colwise() - lse).array().exp().matrix();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!std::isfinite(lse(t))) delta.row(t).setConstant(1.0 / static_cast<double>(delta.cols()));
    }
    post.delta.push_back(std::move(delta));
  }
  post.chain = forward_backward(log_emission, model.trans, model.initial(),
                                {.keep_eta = options.keep_eta, .compute_entropy = options.compute_entropy});
  if (options.compute_entropy) {
    double h = 0.0;
    for (std::size_t d = 0; d < post.delta.size(); ++d) {
      const auto& delta = post.delta[d];
      if (delta.cols() == 1) continue;
      for (Eigen::Index t = 0; t < n; ++t) {
        const double tau = post.chain.tau(t, static_cast<Eigen::Index>(d));
        if (tau > 0.0) h += tau * entropy_of(delta.row(t).transpose());
      }
    }
    post.component_entropy = h;
  }
  return post;
}

namespace {

Eigen::MatrixXd floor_rows(Eigen::MatrixXd m, double floor) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m.row(i) = m.row(i).cwiseMax(floor);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

}  // namespace

MixtureHMM m_step(const Dataset& data, const FullPosterior& post, const MixtureHMM& model) {
  const Eigen::Index n = data.size();
  const int num_states = model.num_states();
  if (post.chain.tau.rows() != n || post.chain.tau.cols() != num_states ||
      static_cast<int>(post.delta.size()) != num_states) {
    throw ShapeError("posterior shape does not match model and data");
  }
  const Eigen::VectorXd mass = post.chain.tau.colwise().sum().transpose();
  for (int d = 0; d < num_states; ++d) {
    if (mass(d) < kEmptyStateMass) throw EmptyStateError(d);
  }
  const double floor = kRelativeVarianceFloor * variance_scale(data.observations);

  MixtureHMM out;
  out.cov_structure = model.cov_structure;
  out.chain = model.chain;
  out.states.resize(static_cast<std::size_t>(num_states));
  for (int d = 0; d < num_states; ++d) {
    const auto& old_state = model.states[static_cast<std::size_t>(d)];
    const auto& delta = post.delta[static_cast<std::size_t>(d)];
    auto& st = out.states[static_cast<std::size_t>(d)];
    const Eigen::VectorXd tau = post.chain.tau.col(d);
    st.weights.resize(old_state.size());
    st.components.reserve(old_state.components.size());
    for (Eigen::Index k = 0; k < old_state.size(); ++k) {
      const Eigen::VectorXd w = tau.cwiseProduct(delta.col(k));
      const double total = w.sum();
      st.weights(k) = total / mass(d);
      if (total > 0.0) {
        st.components.push_back(weighted_mle(data.observations, w, model.cov_structure, floor));
      } else {
        st.components.push_back(old_state.components[static_cast<std::size_t>(k)]);
      }
    }
    st.weights = st.weights.cwiseMax(kWeightFloor);
    st.weights /= st.weights.sum();
  }

  if (model.chain == ChainStructure::independent) {
    Eigen::MatrixXd row = (mass / static_cast<double>(n)).transpose();
    row = floor_rows(row, kTransitionFloor);
    out.trans = TransitionMatrix::independent(row.row(0).transpose());
  } else {
    Eigen::MatrixXd counts = post.chain.eta_sum;
    for (int d = 0; d < num_states; ++d) {
      if (!(counts.row(d).sum() > 0.0)) counts.row(d) = model.trans.matrix().row(d);
      counts.row(d) /= counts.row(d).sum();
    }
    out.trans = TransitionMatrix(floor_rows(std::move(counts), kTransitionFloor));
  }
  return out;
}

namespace {

// Expected complete-data log-likelihood terms that depend on the transition
// matrix when the initial law is tied to it.
double transition_objective(const TransitionMatrix& trans, const ChainPosterior& post) {
  const Eigen::VectorXd q = stationary_distribution(trans);
  double value = 0.0;
  for (Eigen::Index d = 0; d < trans.size(); ++d) {
    const double tau = post.tau(0, d);
    if (tau > 0.0) value += tau * std::log(q(d));
    for (Eigen::Index e = 0; e < trans.size(); ++e) {
      const double s = post.eta_sum(d, e);
      if (s > 0.0) value += s * std::log(trans(d, e));
    }
  }
  return std::isnan(value) ? -std::numeric_limits<double>::infinity() : value;
}

// The closed-form transition update ignores the ln q(S_1) term. Backtrack
// towards the previous matrix until the full objective does not decrease, which
// keeps the iteration a generalised EM.
TransitionMatrix safeguard_transition(const TransitionMatrix& previous, const TransitionMatrix& proposed,
                                      const ChainPosterior& post) {
  const double base = transition_objective(previous, post);
  double step = 1.0;
  for (int i = 0; i < 40; ++i, step *= 0.5) {
    Eigen::MatrixXd mixed = (1.0 - step) * previous.matrix() + step * proposed.matrix();
    for (Eigen::Index r = 0; r < mixed.rows(); ++r) mixed.row(r) /= mixed.row(r).sum();
    TransitionMatrix candidate(std::move(mixed));
    if (transition_objective(candidate, post) >= base) return candidate;
  }
  return previous;
}

}  // namespace

EmResult run_em(MixtureHMM model, const Dataset& data, EmOptions options) {
  if (!(options.tol > 0.0)) throw ConfigError("EM tolerance must be positive");
  if (options.max_iter < 1) throw ConfigError("EM max_iter must be at least 1");
  EmResult result;
  for (int iter = 0;; ++iter) {
    FullPosterior post = e_step(model, data);
    const double ll = post.chain.loglik;
    if (!result.trace.empty()) {
      const double prev = result.trace.back();
      result.trace.push_back(ll);
      if ((ll - prev) < options.tol * std::abs(prev)) {
        result.converged = true;
      }
    } else {
      result.trace.push_back(ll);
    }
    if (result.converged || iter == options.max_iter) {
      result.model = std::move(model);
      result.posterior = std::move(post);
      result.iterations = iter;
      return result;
    }
    MixtureHMM next = m_step(data, post, model);
    if (model.chain == ChainStructure::markov) {
      next.trans = safeguard_transition(model.trans, next.trans, post.chain);
    }
    model = std::move(next);
  }
}

namespace {

MixtureHMM kmeans_start(const Dataset& data, int k, std::mt19937_64& rng, const InitOptions& options) {
  const Eigen::MatrixXd& x = data.observations;
  const Eigen::Index n = x.rows();
  const double scale = variance_scale(x);

  // k-means++ seeding.
  Eigen::MatrixXd centres(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centres.row(0) = x.row(pick(rng));
  Eigen::VectorXd dist2 = (x.rowwise() - centres.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        r -= dist2(chosen);
        if (r <= 0.0) break;
      }
    } else {
      chosen = pick(rng);
    }
    centres.row(c) = x.row(chosen);
    dist2 = dist2.cwiseMin((x.rowwise() - centres.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> label(static_cast<std::size_t>(n), 0);
  auto assign = [&] {
    for (Eigen::Index t = 0; t < n; ++t) {
      Eigen::Index best = 0;
      (centres.rowwise() - x.row(t)).rowwise().squaredNorm().minCoeff(&best);
      label[static_cast<std::size_t>(t)] = static_cast<int>(best);
    }
  };
  assign();
  for (int sweep = 0; sweep < options.kmeans_sweeps; ++sweep) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index t = 0; t < n; ++t) {
      sums.row(label[static_cast<std::size_t>(t)]) += x.row(t);
      counts(label[static_cast<std::size_t>(t)]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0.0) {
        centres.row(c) = sums.row(c) / counts(c);
      } else {
        // Empty cluster: move it to the point farthest from its centre.
        Eigen::Index far = 0;
        Eigen::VectorXd d2(n);
        for (Eigen::Index t = 0; t < n; ++t) {
          d2(t) = (x.row(t) - centres.row(label[static_cast<std::size_t>(t)])).squaredNorm();
        }
        d2.maxCoeff(&far);
        centres.row(c) = x.row(far);
        label[static_cast<std::size_t>(far)] = c;
      }
    }
    assign();
  }

  MixtureHMM model;
  model.cov_structure = options.structure;
  model.chain = options.chain;
  model.states.resize(static_cast<std::size_t>(k));
  Eigen::VectorXd props(k);
  const double init_floor = 1e-3 * scale;
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd w(n);
    for (Eigen::Index t = 0; t < n; ++t) w(t) = label[static_cast<std::size_t>(t)] == c ? 1.0 : 0.0;
    props(c) = std::max(w.sum(), 1.0);
    auto& st = model.states[static_cast<std::size_t>(c)];
    st.weights = Eigen::VectorXd::Ones(1);
    if (w.sum() > 0.0) {
      st.components.push_back(weighted_mle(x, w, options.structure, init_floor));
    } else {
      st.components.push_back({centres.row(c).transpose(),
                               scale * Eigen::MatrixXd::Identity(x.cols(), x.cols())});
    }
  }
  if (options.chain == ChainStructure::independent || k == 1) {
    model.trans = TransitionMatrix::independent(props / props.sum());
  } else {
    Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(k, k, 0.2 / (k - 1));
    pi.diagonal().setConstant(0.8);
    model.trans = TransitionMatrix(std::move(pi));
  }
  return model;
}

}  // namespace

MixtureHMM init_k_components(const Dataset& data, int k, std::uint64_t seed, const InitOptions& options) {
  data.validate();
  if (k < 1) throw SizeError("number of components must be at least 1");
  if (data.size() < k) throw SizeError("fewer observations than requested components");
  if (options.restarts < 1) throw ConfigError("restarts must be at least 1");

  std::optional<EmResult> best;
  std::optional<EmptyStateError> last_error;
  for (int r = 0; r < options.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    try {
      EmResult fit = run_em(kmeans_start(data, k, rng, options), data, options.em);
      if (!best || fit.trace.back() > best->trace.back()) best = std::move(fit);
    } catch (const EmptyStateError& e) {
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return std::move(best->model);
}

}  // namespace hmmmix
