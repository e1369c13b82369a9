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

#include "hmmmix/hmm_engine.hpp"

#include <cmath>
#include <limits>

#include "hmmmix/errors.hpp"

namespace hmmmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_inputs(const Eigen::MatrixXd& log_emission, const TransitionMatrix& trans,
                  const Eigen::VectorXd& init) {
  const Eigen::Index d = trans.size();
  if (log_emission.cols() != d) throw ShapeError("emission columns do not match state count");
  if (init.size() != d) throw ShapeError("initial law length does not match state count");
  if (log_emission.rows() == 0) throw ShapeError("empty observation sequence");
  if ((init.array() < 0.0).any() || std::abs(init.sum() - 1.0) > 1e-9) {
    throw ParameterError("initial law is not a probability vector");
  }
}

// Emissions rescaled per observation: column t holds exp(L_t. - max_t), and
// `offsets` the row maxima.
struct ScaledEmission {
  Eigen::MatrixXd values;  // D x n
  Eigen::VectorXd offsets;
};

ScaledEmission scale_emission(const Eigen::MatrixXd& log_emission) {
  const Eigen::Index n = log_emission.rows();
  ScaledEmission out{log_emission.transpose(), Eigen::VectorXd(n)};
  for (Eigen::Index t = 0; t < n; ++t) {
    auto col = out.values.col(t);
    const double m = col.maxCoeff();
    if (!std::isfinite(m)) {
      throw ParameterError("observation " + std::to_string(t) + " has no finite emission density");
    }
    out.offsets(t) = m;
    // std::exp per entry: the vectorised exp clamps -inf to a denormal.
    for (Eigen::Index d = 0; d < col.size(); ++d) col(d) = std::exp(col(d) - m);
  }
  return out;
}

}  // namespace

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw ParameterError("transition matrix must be square and non-empty");
  }
  if (!entries_.allFinite() || (entries_.array() < 0.0).any() || (entries_.array() > 1.0).any()) {
    throw ParameterError("transition probabilities must lie in [0, 1]");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    if (std::abs(entries_.row(i).sum() - 1.0) > 1e-12) {
      throw ParameterError("transition row " + std::to_string(i) + " does not sum to one");
    }
  }
}

TransitionMatrix TransitionMatrix::from_weights(Eigen::MatrixXd weights) {
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    const double s = weights.row(i).sum();
    if (!(s > 0.0)) throw ParameterError("transition row " + std::to_string(i) + " has no mass");
    weights.row(i) /= s;
  }
  return TransitionMatrix(std::move(weights));
}

TransitionMatrix TransitionMatrix::independent(const Eigen::VectorXd& row) {
  Eigen::MatrixXd m(row.size(), row.size());
  for (Eigen::Index i = 0; i < row.size(); ++i) m.row(i) = row.transpose() / row.sum();
  return TransitionMatrix(std::move(m));
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

double entropy_of(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return h;
}

double forward_loglik(const Eigen::MatrixXd& log_emission, const TransitionMatrix& trans,
                      const Eigen::VectorXd& init) {
  check_inputs(log_emission, trans, init);
  const ScaledEmission em = scale_emission(log_emission);
  const Eigen::MatrixXd pit = trans.matrix().transpose();
  const Eigen::Index n = log_emission.rows();

  Eigen::VectorXd alpha = init.cwiseProduct(em.values.col(0));
  Eigen::VectorXd next(alpha.size());
  double loglik = 0.0;
  for (Eigen::Index t = 0;; ++t) {
    const double c = alpha.sum();
    if (!(c > 0.0)) throw ParameterError("observation sequence has zero probability");
    loglik += em.offsets(t) + std::log(c);
    if (t + 1 == n) break;
    alpha /= c;
    next.noalias() = pit * alpha;
    alpha = next.cwiseProduct(em.values.col(t + 1));
  }
  return loglik;
}

ChainPosterior forward_backward(const Eigen::MatrixXd& log_emission, const TransitionMatrix& trans,
                                const Eigen::VectorXd& init, ForwardBackwardOptions options) {
  check_inputs(log_emission, trans, init);
  const ScaledEmission em = scale_emission(log_emission);
  const Eigen::MatrixXd& pi = trans.matrix();
  const Eigen::MatrixXd pit = pi.transpose();
  const Eigen::Index n = log_emission.rows();
  const Eigen::Index d = trans.size();

  ChainPosterior post;
  Eigen::MatrixXd alpha(d, n);
  Eigen::VectorXd scale(n);

  alpha.col(0) = init.cwiseProduct(em.values.col(0));
  for (Eigen::Index t = 0; t < n; ++t) {
    if (t > 0) alpha.col(t).noalias() = (pit * alpha.col(t - 1)).cwiseProduct(em.values.col(t));
    scale(t) = alpha.col(t).sum();
    if (!(scale(t) > 0.0)) throw ParameterError("observation sequence has zero probability");
    alpha.col(t) /= scale(t);
  }
  post.loglik = em.offsets.sum() + scale.array().log().sum();

  // v_t = e_t+1 * beta_t+1 / c_t+1, so that beta_t = Pi v_t and the backward
  // kernel is P(S_t+1 = d' | S_t = d, X) = pi_dd' v_t(d') / beta_t(d).
  Eigen::MatrixXd beta(d, n);
  Eigen::MatrixXd v(d, n > 1 ? n - 1 : 0);
  beta.col(n - 1).setOnes();
  for (Eigen::Index t = n - 2; t >= 0; --t) {
    v.col(t) = em.values.col(t + 1).cwiseProduct(beta.col(t + 1)) / scale(t + 1);
    beta.col(t).noalias() = pi * v.col(t);
  }

  Eigen::MatrixXd tau = alpha.cwiseProduct(beta);
  for (Eigen::Index t = 0; t < n; ++t) tau.col(t) /= tau.col(t).sum();
  post.tau = tau.transpose();

  if (n > 1) {
    post.eta_sum = pi.cwiseProduct(alpha.leftCols(n - 1) * v.transpose());
  } else {
    post.eta_sum = Eigen::MatrixXd::Zero(d, d);
  }
  if (options.keep_eta) {
    post.eta.reserve(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
    for (Eigen::Index t = 0; t + 1 < n; ++t) {
      post.eta.emplace_back(pi.cwiseProduct(alpha.col(t) * v.col(t).transpose()));
    }
  }

  if (options.compute_entropy) {
    double h = entropy_of(tau.col(0));
    if (n > 1) {
      const Eigen::MatrixXd pi_log_pi = pi.unaryExpr([](double p) { return p > 0.0 ? p * std::log(p) : 0.0; });
      const Eigen::MatrixXd v_log_v = v.unaryExpr([](double x) { return x > 0.0 ? x * std::log(x) : 0.0; });
      const Eigen::MatrixXd cross = pi_log_pi * v + pi * v_log_v;
      for (Eigen::Index t = 0; t + 1 < n; ++t) {
        for (Eigen::Index s = 0; s < d; ++s) {
          const double b = beta(s, t);
          if (tau(s, t) > 0.0 && b > 0.0) h += tau(s, t) * (std::log(b) - cross(s, t) / b);
        }
      }
    }
    post.entropy = std::max(h, 0.0);
  }
  return post;
}

bool is_primitive(const TransitionMatrix& trans) {
  const Eigen::Index d = trans.size();
  using Bool = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  Bool reach = (trans.matrix().array() > 0.0).cast<int>().matrix();
  // A primitive matrix of order d has a positive power at exponent (d-1)^2 + 1.
  const long bound = static_cast<long>((d - 1) * (d - 1) + 1);
  long power = 1;
  while (power < bound) {
    reach = (reach * reach).unaryExpr([](int x) { return x > 0 ? 1 : 0; });
    power *= 2;
  }
  return (reach.array() > 0).all();
}

Eigen::VectorXd stationary_distribution(const TransitionMatrix& trans) {
  if (!is_primitive(trans)) throw StructureError("transition matrix is reducible or periodic");
  const Eigen::Index d = trans.size();
  Eigen::MatrixXd a = trans.matrix().transpose() - Eigen::MatrixXd::Identity(d, d);
  a.row(d - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  rhs(d - 1) = 1.0;
  Eigen::VectorXd q = a.fullPivLu().solve(rhs);
  q = q.cwiseMax(0.0);
  return q / q.sum();
}

std::vector<int> map_classify(const Eigen::MatrixXd& tau) {
  std::vector<int> labels(static_cast<std::size_t>(tau.rows()));
  for (Eigen::Index t = 0; t < tau.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index d = 1; d < tau.cols(); ++d) {
      if (tau(t, d) > tau(t, best)) best = d;
    }
    labels[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return labels;
}

std::vector<int> viterbi(const Eigen::MatrixXd& log_emission, const TransitionMatrix& trans,
                         const Eigen::VectorXd& init) {
  check_inputs(log_emission, trans, init);
  const Eigen::Index n = log_emission.rows();
  const Eigen::Index d = trans.size();
  const Eigen::MatrixXd log_pi = trans.matrix().unaryExpr([](double p) {
    return p > 0.0 ? std::log(p) : kNegInf;
  });
  Eigen::VectorXd score(d);
  for (Eigen::Index s = 0; s < d; ++s) {
    score(s) = (init(s) > 0.0 ? std::log(init(s)) : kNegInf) + log_emission(0, s);
  }
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> back(d, n);
  Eigen::VectorXd next(d);
  for (Eigen::Index t = 1; t < n; ++t) {
    for (Eigen::Index to = 0; to < d; ++to) {
      Eigen::Index arg = 0;
      double best = kNegInf;
      for (Eigen::Index from = 0; from < d; ++from) {
        const double c = score(from) + log_pi(from, to);
        if (c > best) {
          best = c;
          arg = from;
        }
      }
      next(to) = best + log_emission(t, to);
      back(to, t) = static_cast<int>(arg);
    }
    score.swap(next);
  }
  std::vector<int> path(static_cast<std::size_t>(n));
  Eigen::Index last = 0;
  score.maxCoeff(&last);
  path.back() = static_cast<int>(last);
  for (Eigen::Index t = n - 1; t > 0; --t) {
    path[static_cast<std::size_t>(t - 1)] = back(path[static_cast<std::size_t>(t)], t);
  }
  return path;
}

double posterior_entropy(const ChainPosterior& post) {
  const Eigen::Index n = post.size();
  if (n == 0) return 0.0;
  if (static_cast<Eigen::Index>(post.eta.size()) != n - 1) {
    throw ShapeError("posterior_entropy needs the pairwise posteriors");
  }
  double h = entropy_of(post.tau.row(0).transpose());
  for (Eigen::Index t = 0; t + 1 < n; ++t) {
    const Eigen::MatrixXd& eta = post.eta[static_cast<std::size_t>(t)];
    for (Eigen::Index d = 0; d < post.states(); ++d) {
      const double tau = post.tau(t, d);
      if (!(tau > 0.0)) continue;
      for (Eigen::Index e = 0; e < post.states(); ++e) {
        const double joint = eta(d, e);
        if (joint > 0.0) h -= joint * std::log(joint / tau);
      }
    }
  }
  return std::max(h, 0.0);
}

}  // namespace hmmmix
