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

// Independent reference implementations used as test oracles. Everything here
// is deliberately naive: explicit path enumeration in long double, densities
// from an LU inverse and determinant, no scaling tricks.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hmmmix/mixture_hmm.hpp"

namespace oracle {

using Real = long double;

inline Real log_gauss(const Eigen::VectorXd& x, const hmmmix::GaussianParams& g) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(g.covariance);
  const Eigen::VectorXd r = x - g.mean;
  const Real quad = r.dot(lu.inverse() * r);
  const Real q = static_cast<Real>(x.size());
  return -0.5L * q * std::log(2.0L * std::numbers::pi_v<Real>) - 0.5L * std::log(static_cast<Real>(lu.determinant())) -
         0.5L * quad;
}

inline Real log_sum(const std::vector<Real>& v) {
  Real m = -INFINITY;
  for (Real x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  Real s = 0;
  for (Real x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Exhaustive sum over all D^n state paths of a plain HMM.
struct ChainEnumeration {
  Real loglik = 0;
  Eigen::MatrixXd tau;
  std::vector<Eigen::MatrixXd> eta;
  Real entropy = 0;     // H(S | X)
  std::vector<int> map_path;
};

inline ChainEnumeration enumerate_chain(const Eigen::MatrixXd& log_em, const Eigen::MatrixXd& trans,
                                        const Eigen::VectorXd& init) {
  const int n = static_cast<int>(log_em.rows());
  const int d = static_cast<int>(log_em.cols());
  long total = 1;
  for (int t = 0; t < n; ++t) total *= d;
  std::vector<Real> lp(static_cast<std::size_t>(total));
  std::vector<int> path(static_cast<std::size_t>(n));
  auto decode = [&](long idx) {
    for (int t = n - 1; t >= 0; --t) {
      path[static_cast<std::size_t>(t)] = static_cast<int>(idx % d);
      idx /= d;
    }
  };
  for (long i = 0; i < total; ++i) {
    decode(i);
    Real v = std::log(static_cast<Real>(init(path[0]))) + log_em(0, path[0]);
    for (int t = 1; t < n; ++t) {
      v += std::log(static_cast<Real>(trans(path[t - 1], path[t]))) + log_em(t, path[t]);
    }
    lp[static_cast<std::size_t>(i)] = v;
  }
  ChainEnumeration out;
  out.loglik = log_sum(lp);
  std::vector<Real> tau(static_cast<std::size_t>(n * d), 0), eta(static_cast<std::size_t>((n > 0 ? n - 1 : 0) * d * d), 0);
  Real best = -INFINITY;
  for (long i = 0; i < total; ++i) {
    decode(i);
    const Real lpi = lp[static_cast<std::size_t>(i)] - out.loglik;
    const Real p = std::exp(lpi);
    if (p > 0) out.entropy -= p * lpi;
    if (lp[static_cast<std::size_t>(i)] > best) {
      best = lp[static_cast<std::size_t>(i)];
      out.map_path = path;
    }
    for (int t = 0; t < n; ++t) tau[static_cast<std::size_t>(t * d + path[t])] += p;
    for (int t = 0; t + 1 < n; ++t) eta[static_cast<std::size_t>((t * d + path[t]) * d + path[t + 1])] += p;
  }
  out.tau.resize(n, d);
  for (int t = 0; t < n; ++t) {
    for (int s = 0; s < d; ++s) out.tau(t, s) = static_cast<double>(tau[static_cast<std::size_t>(t * d + s)]);
  }
  for (int t = 0; t + 1 < n; ++t) {
    Eigen::MatrixXd e(d, d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) e(a, b) = static_cast<double>(eta[static_cast<std::size_t>((t * d + a) * d + b)]);
    }
    out.eta.push_back(e);
  }
  return out;
}

/// Exhaustive sum over every (S, Z) path of a mixture HMM, i.e. over the
/// paths of the lumped component chain.
struct JointEnumeration {
  Real loglik = 0;
  Real entropy_s = 0;   // H(S | X)
  Real entropy_sz = 0;  // H(S, Z | X) = H(Z | X)
  Eigen::MatrixXd tau;  // n x D
  std::vector<Eigen::MatrixXd> delta;  // per state, n x K_d: P(Z_t = dk | S_t = d, X)
};

inline JointEnumeration enumerate_joint(const hmmmix::MixtureHMM& m, const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  const int D = m.num_states();
  std::vector<std::pair<int, int>> comp;
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < static_cast<int>(m.states[static_cast<std::size_t>(d)].size()); ++k) comp.emplace_back(d, k);
  }
  const int K = static_cast<int>(comp.size());
  // Stationary law by brute-force power iteration (independent of the library solver).
  Eigen::MatrixXd p = m.trans.matrix();
  for (int i = 0; i < 200; ++i) {
    p = p * p;
    for (int r = 0; r < p.rows(); ++r) p.row(r) /= p.row(r).sum();
  }
  const Eigen::VectorXd q = p.row(0).transpose();

  std::vector<std::vector<Real>> lg(static_cast<std::size_t>(n), std::vector<Real>(static_cast<std::size_t>(K)));
  for (int t = 0; t < n; ++t) {
    for (int c = 0; c < K; ++c) {
      const auto [d, k] = comp[static_cast<std::size_t>(c)];
      const auto& st = m.states[static_cast<std::size_t>(d)];
      lg[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] =
          std::log(static_cast<Real>(st.weights(k))) +
          log_gauss(x.row(t).transpose(), st.components[static_cast<std::size_t>(k)]);
    }
  }
  long total = 1, total_s = 1;
  for (int t = 0; t < n; ++t) {
    total *= K;
    total_s *= D;
  }
  std::vector<Real> lp(static_cast<std::size_t>(total));
  std::vector<long> spath(static_cast<std::size_t>(total));
  std::vector<int> path(static_cast<std::size_t>(n));
  auto decode = [&](long idx) {
    for (int t = n - 1; t >= 0; --t) {
      path[static_cast<std::size_t>(t)] = static_cast<int>(idx % K);
      idx /= K;
    }
  };
  for (long i = 0; i < total; ++i) {
    decode(i);
    long s_idx = 0;
    Real v = 0;
    for (int t = 0; t < n; ++t) {
      const int c = path[static_cast<std::size_t>(t)];
      const int d = comp[static_cast<std::size_t>(c)].first;
      s_idx = s_idx * D + d;
      if (t == 0) {
        v += std::log(static_cast<Real>(q(d)));
      } else {
        v += std::log(static_cast<Real>(m.trans(comp[static_cast<std::size_t>(path[t - 1])].first, d)));
      }
      v += lg[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
    }
    lp[static_cast<std::size_t>(i)] = v;
    spath[static_cast<std::size_t>(i)] = s_idx;
  }
  JointEnumeration out;
  out.loglik = log_sum(lp);
  std::vector<Real> ps(static_cast<std::size_t>(total_s), 0);
  std::vector<std::vector<Real>> zt(static_cast<std::size_t>(n), std::vector<Real>(static_cast<std::size_t>(K), 0));
  for (long i = 0; i < total; ++i) {
    decode(i);
    const Real lpi = lp[static_cast<std::size_t>(i)] - out.loglik;
    const Real pi = std::exp(lpi);
    if (pi > 0) out.entropy_sz -= pi * lpi;
    ps[static_cast<std::size_t>(spath[static_cast<std::size_t>(i)])] += pi;
    for (int t = 0; t < n; ++t) zt[static_cast<std::size_t>(t)][static_cast<std::size_t>(path[t])] += pi;
  }
  for (Real v : ps) {
    if (v > 0) out.entropy_s -= v * std::log(v);
  }
  out.tau = Eigen::MatrixXd::Zero(n, D);
  for (int d = 0; d < D; ++d) out.delta.emplace_back(n, m.states[static_cast<std::size_t>(d)].size());
  for (int t = 0; t < n; ++t) {
    for (int c = 0; c < K; ++c) out.tau(t, comp[static_cast<std::size_t>(c)].first) += static_cast<double>(zt[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)]);
    for (int c = 0; c < K; ++c) {
      const auto [d, k] = comp[static_cast<std::size_t>(c)];
      out.delta[static_cast<std::size_t>(d)](t, k) =
          static_cast<double>(zt[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)]) / out.tau(t, d);
    }
  }
  return out;
}

/// Random row-stochastic matrix with entries bounded away from zero.
inline Eigen::MatrixXd random_stochastic(std::mt19937_64& rng, int d, double min_entry = 0.05) {
  std::uniform_real_distribution<double> u(min_entry, 1.0);
  Eigen::MatrixXd p(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) p(i, j) = u(rng);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

inline Eigen::VectorXd random_simplex(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::VectorXd w(k);
  for (int i = 0; i < k; ++i) w(i) = u(rng);
  return w / w.sum();
}

inline hmmmix::GaussianParams random_gaussian(std::mt19937_64& rng, int q, hmmmix::CovStructure s, double spread = 3.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  hmmmix::GaussianParams g;
  g.mean.resize(q);
  for (int i = 0; i < q; ++i) g.mean(i) = spread * z(rng);
  if (s == hmmmix::CovStructure::spherical) {
    std::uniform_real_distribution<double> u(0.3, 2.0);
    g.covariance = u(rng) * Eigen::MatrixXd::Identity(q, q);
  } else {
    Eigen::MatrixXd a(q, q);
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < q; ++j) a(i, j) = 0.7 * z(rng);
    }
    g.covariance = a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(q, q);
  }
  return g;
}

inline hmmmix::MixtureHMM random_model(std::mt19937_64& rng, const std::vector<int>& counts, int q,
                                       hmmmix::CovStructure s = hmmmix::CovStructure::full) {
  hmmmix::MixtureHMM m;
  m.cov_structure = s;
  const int d = static_cast<int>(counts.size());
  m.trans = hmmmix::TransitionMatrix(random_stochastic(rng, d));
  for (int c : counts) {
    hmmmix::MixtureState st;
    st.weights = random_simplex(rng, c);
    for (int k = 0; k < c; ++k) st.components.push_back(random_gaussian(rng, q, s));
    m.states.push_back(std::move(st));
  }
  return m;
}

/// Component counts with D states and K components in total.
inline std::vector<int> random_counts(std::mt19937_64& rng, int d, int k) {
  std::vector<int> c(static_cast<std::size_t>(d), 1);
  std::uniform_int_distribution<int> pick(0, d - 1);
  for (int i = d; i < k; ++i) ++c[static_cast<std::size_t>(pick(rng))];
  return c;
}

/// Observations drawn near the model's component means so every path has
/// non-negligible weight.
inline Eigen::MatrixXd random_points(std::mt19937_64& rng, const hmmmix::MixtureHMM& m, int n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<const hmmmix::GaussianParams*> all;
  for (const auto& s : m.states) {
    for (const auto& g : s.components) all.push_back(&g);
  }
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  const auto q = m.dim();
  Eigen::MatrixXd x(n, q);
  for (int t = 0; t < n; ++t) {
    const auto* g = all[pick(rng)];
    for (Eigen::Index j = 0; j < q; ++j) x(t, j) = g->mean(j) + 1.5 * z(rng);
  }
  return x;
}

inline Eigen::MatrixXd log_emissions(const hmmmix::MixtureHMM& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), m.num_states());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    for (int d = 0; d < m.num_states(); ++d) {
      const auto& st = m.states[static_cast<std::size_t>(d)];
      std::vector<Real> v;
      for (Eigen::Index k = 0; k < st.size(); ++k) {
        v.push_back(std::log(static_cast<Real>(st.weights(k))) +
                    log_gauss(x.row(t).transpose(), st.components[static_cast<std::size_t>(k)]));
      }
      out(t, d) = static_cast<double>(log_sum(v));
    }
  }
  return out;
}

/// Log-domain forward recursion, no scaling.
inline double log_forward(const Eigen::MatrixXd& log_em, const Eigen::MatrixXd& trans, const Eigen::VectorXd& init) {
  const Eigen::Index d = log_em.cols();
  std::vector<Real> a(static_cast<std::size_t>(d)), next(static_cast<std::size_t>(d));
  for (Eigen::Index s = 0; s < d; ++s) a[static_cast<std::size_t>(s)] = std::log(static_cast<Real>(init(s))) + log_em(0, s);
  for (Eigen::Index t = 1; t < log_em.rows(); ++t) {
    for (Eigen::Index s = 0; s < d; ++s) {
      std::vector<Real> v;
      for (Eigen::Index r = 0; r < d; ++r) v.push_back(a[static_cast<std::size_t>(r)] + std::log(static_cast<Real>(trans(r, s))));
      next[static_cast<std::size_t>(s)] = log_sum(v) + log_em(t, s);
    }
    a = next;
  }
  return static_cast<double>(log_sum(a));
}

}  // namespace oracle
