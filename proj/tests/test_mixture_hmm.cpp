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

#include <cmath>
#include <random>

#include "doctest.h"
#include "hmmmix/errors.hpp"
#include "hmmmix/mixture_hmm.hpp"
#include "hmmmix/rng.hpp"
#include "hmmmix/simbench.hpp"
#include "oracles.hpp"

using namespace hmmmix;

namespace {

Dataset as_data(Eigen::MatrixXd x) {
  Dataset d;
  d.observations = std::move(x);
  return d;
}

GaussianParams unit(double mx, double my) { return {Eigen::Vector2d(mx, my), Eigen::Matrix2d::Identity()}; }

MixtureHMM two_state_model(double a) {
  MixtureHMM m;
  m.trans = TransitionMatrix((Eigen::MatrixXd(2, 2) << a, 1 - a, 1 - a, a).finished());
  m.states = {{Eigen::VectorXd::Ones(1), {unit(0, 0)}}, {Eigen::VectorXd::Ones(1), {unit(4, 0)}}};
  return m;
}

}  // namespace

TEST_CASE("single-component state density equals the Gaussian density") {
  std::mt19937_64 rng(1);
  const auto m = oracle::random_model(rng, {1, 2}, 2);
  const Eigen::Vector2d x(0.3, -1.2);
  CHECK(emission_log_density(m, x, 0) == doctest::Approx(log_density(x, m.states[0].components[0])).epsilon(1e-15));
}

TEST_CASE("mixture of identical components equals the component density") {
  MixtureHMM m;
  m.states = {{Eigen::Vector2d(0.3, 0.7), {unit(1, 1), unit(1, 1)}}};
  for (double x : {-2.0, 0.0, 1.0, 3.5}) {
    const Eigen::Vector2d p(x, 0.5 * x);
    CHECK(emission_log_density(m, p, 0) == doctest::Approx(log_density(p, unit(1, 1))).epsilon(1e-14));
  }
}

TEST_CASE("two-component state density against a direct two-term sum") {
  const auto comps = benchmark_components(1.0);
  MixtureHMM m;
  m.states = {{Eigen::Vector2d(0.5, 0.5), {comps[0], comps[1]}}};
  const Eigen::Vector2d x(1, 5);
  const long double direct = 0.5L * std::exp(oracle::log_gauss(x, comps[0])) + 0.5L * std::exp(oracle::log_gauss(x, comps[1]));
  CHECK(emission_log_density(m, x, 0) == doctest::Approx(static_cast<double>(std::log(direct))).epsilon(1e-14));
}

TEST_CASE("component order within a state does not change the density") {
  std::mt19937_64 rng(2);
  auto m = oracle::random_model(rng, {3, 2}, 2);
  auto swapped = m;
  std::swap(swapped.states[0].components[0], swapped.states[0].components[2]);
  std::swap(swapped.states[0].weights(0), swapped.states[0].weights(2));
  const Eigen::MatrixXd x = oracle::random_points(rng, m, 25);
  const Eigen::MatrixXd a = state_log_emissions(m, x), b = state_log_emissions(swapped, x);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lumped chain examples") {
  MixtureHMM one;
  one.states = {{Eigen::Vector2d(0.4, 0.6), {unit(0, 0), unit(1, 1)}}};
  const auto c1 = expand_to_component_chain(one);
  CHECK(c1.omega.matrix().isApprox((Eigen::MatrixXd(2, 2) << 0.4, 0.6, 0.4, 0.6).finished()));

  const auto two = two_state_model(0.8);
  CHECK(expand_to_component_chain(two).omega.matrix() == two.trans.matrix());
}

TEST_CASE("lumped chain matches a nested-loop construction") {
  std::mt19937_64 rng(3);
  const auto m = oracle::random_model(rng, {2, 1}, 2);
  const auto c = expand_to_component_chain(m);
  const Eigen::VectorXd q = stationary_distribution(m.trans);
  int row = 0;
  for (int d = 0; d < 2; ++d) {
    for (Eigen::Index k = 0; k < m.states[d].size(); ++k, ++row) {
      int col = 0;
      for (int e = 0; e < 2; ++e) {
        for (Eigen::Index j = 0; j < m.states[e].size(); ++j, ++col) {
          CHECK(c.omega(row, col) == doctest::Approx(m.trans(d, e) * m.states[e].weights(j)).epsilon(1e-15));
        }
      }
      CHECK(c.init(row) == doctest::Approx(q(d) * m.states[d].weights(k)).epsilon(1e-14));
    }
    CHECK(std::abs(c.omega.matrix().row(d).sum() - 1.0) < 1e-12);
  }
  CHECK((stationary_distribution(c.omega) - c.init).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("E-step without a mixture layer") {
  std::mt19937_64 rng(4);
  const auto m = oracle::random_model(rng, {1, 1, 1}, 2);
  const auto post = e_step(m, as_data(oracle::random_points(rng, m, 20)));
  for (const auto& d : post.delta) CHECK((d.array() == 1.0).all());
}

TEST_CASE("one-state E-step reduces to mixture responsibilities") {
  std::mt19937_64 rng(5);
  const auto m = oracle::random_model(rng, {3}, 2);
  const Eigen::MatrixXd x = oracle::random_points(rng, m, 30);
  const auto post = e_step(m, as_data(x));
  CHECK((post.chain.tau.array() == 1.0).all());
  for (int t = 0; t < 30; ++t) {
    Eigen::Vector3d r;
    for (int k = 0; k < 3; ++k) r(k) = m.states[0].weights(k) * std::exp(static_cast<double>(oracle::log_gauss(x.row(t).transpose(), m.states[0].components[k])));
    r /= r.sum();
    CHECK((post.delta[0].row(t).transpose() - r).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("E-step marginals match enumeration of every (S, Z) path") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 2 + rep % 2;
    const auto m = oracle::random_model(rng, oracle::random_counts(rng, d, d + 2), 2,
                                        rep % 2 ? CovStructure::spherical : CovStructure::full);
    const Eigen::MatrixXd x = oracle::random_points(rng, m, 5);
    const auto post = e_step(m, as_data(x), {.keep_eta = true, .compute_entropy = true});
    const auto ref = oracle::enumerate_joint(m, x);
    CHECK(post.chain.loglik == doctest::Approx(static_cast<double>(ref.loglik)).epsilon(1e-12));
    CHECK((post.chain.tau - ref.tau).cwiseAbs().maxCoeff() < 1e-10);
    for (int s = 0; s < d; ++s) CHECK((post.delta[s] - ref.delta[s]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(*post.chain.entropy == doctest::Approx(static_cast<double>(ref.entropy_s)).epsilon(1e-10));
    CHECK(*post.chain.entropy + *post.component_entropy ==
          doctest::Approx(static_cast<double>(ref.entropy_sz)).epsilon(1e-10));
  }
}

TEST_CASE("E-step likelihood equals the lumped-chain likelihood") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const auto m = oracle::random_model(rng, oracle::random_counts(rng, 3, 6), 2);
    const Eigen::MatrixXd x = oracle::random_points(rng, m, 300);
    const auto chain = expand_to_component_chain(m);
    Eigen::MatrixXd le(300, chain.components.size());
    for (std::size_t c = 0; c < chain.components.size(); ++c) le.col(c) = log_density_rows(x, chain.components[c]);
    const double lumped = forward_backward(le, chain.omega, chain.init).loglik;
    CHECK(e_step(m, as_data(x)).chain.loglik == doctest::Approx(lumped).epsilon(1e-12));
  }
}

TEST_CASE("M-step with known labels counts transitions") {
  SimSpec spec;
  spec.trans = TransitionMatrix((Eigen::MatrixXd(2, 2) << 0.9, 0.1, 0.2, 0.8).finished());
  spec.states = {{Eigen::VectorXd::Ones(1), {unit(0, 0)}}, {Eigen::VectorXd::Ones(1), {unit(3, 3)}}};
  spec.n = 500;
  spec.seed = 3;
  const SimResult sim = simulate(spec);
  const auto model = *spec.true_model();
  FullPosterior post;
  post.chain.tau = Eigen::MatrixXd::Zero(500, 2);
  post.chain.eta_sum = Eigen::MatrixXd::Zero(2, 2);
  for (int t = 0; t < 500; ++t) {
    post.chain.tau(t, sim.states[t]) = 1.0;
    if (t > 0) post.chain.eta_sum(sim.states[t - 1], sim.states[t]) += 1.0;
  }
  post.delta = {Eigen::MatrixXd::Ones(500, 1), Eigen::MatrixXd::Ones(500, 1)};
  const auto next = m_step(sim.data, post, model);
  for (int d = 0; d < 2; ++d) {
    for (int e = 0; e < 2; ++e) {
      CHECK(next.trans(d, e) == doctest::Approx(post.chain.eta_sum(d, e) / post.chain.eta_sum.row(d).sum()).epsilon(1e-12));
    }
    CHECK(next.states[d].weights(0) == 1.0);
  }
}

TEST_CASE("M-step weights are ratios of weighted sums") {
  std::mt19937_64 rng(8);
  const auto m = oracle::random_model(rng, {2, 3}, 2);
  const Dataset data = as_data(oracle::random_points(rng, m, 40));
  const auto post = e_step(m, data);
  const auto next = m_step(data, post, m);
  for (int d = 0; d < 2; ++d) {
    double mass = 0.0;
    for (int t = 0; t < 40; ++t) mass += post.chain.tau(t, d);
    for (Eigen::Index k = 0; k < m.states[d].size(); ++k) {
      double num = 0.0;
      for (int t = 0; t < 40; ++t) num += post.chain.tau(t, d) * post.delta[d](t, k);
      CHECK(next.states[d].weights(k) == doctest::Approx(num / mass).epsilon(1e-12));
    }
  }
}

TEST_CASE("a state without posterior mass is reported empty") {
  MixtureHMM m = two_state_model(0.9);
  m.states.push_back({Eigen::VectorXd::Ones(1), {unit(1000, 1000)}});
  m.trans = TransitionMatrix(Eigen::MatrixXd::Constant(3, 3, 1.0 / 3));
  std::mt19937_64 rng(9);
  const Dataset data = as_data(oracle::random_points(rng, two_state_model(0.9), 50));
  try {
    run_em(m, data);
    FAIL("expected an empty state");
  } catch (const EmptyStateError& e) {
    CHECK(e.state() == 2);
  }
}

TEST_CASE("EM never decreases the likelihood") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const auto truth = benchmark_design(0.75, 1.0 + 2 * (rep % 4), 400, static_cast<std::uint64_t>(rep));
    const SimResult sim = simulate(truth);
    auto start = oracle::random_model(rng, oracle::random_counts(rng, 3, 5), 2,
                                      rep % 2 ? CovStructure::full : CovStructure::spherical);
    const auto res = run_em(start, sim.data, {.tol = 1e-10, .max_iter = 60});
    for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] - res.trace[i - 1] >= -1e-8);
    // Normalisations after the last iteration.
    CHECK((res.posterior.chain.tau.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    for (const auto& s : res.model.states) CHECK(std::abs(s.weights.sum() - 1.0) < 1e-12);
    for (const auto& dl : res.posterior.delta) CHECK((dl.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("restarting EM from a fixed point stops at once") {
  const SimResult sim = simulate(benchmark_design(0.9, 1.0, 400, 4));
  const auto first = run_em(init_k_components(sim.data, 4, 4), sim.data);
  const auto again = run_em(first.model, sim.data);
  CHECK(again.trace.size() <= 2);
  CHECK(again.converged);
}

TEST_CASE("EM recovers a persistent two-state chain") {
  double mean_dev = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimSpec spec;
    spec.trans = two_state_model(0.9).trans;
    spec.states = {{Eigen::VectorXd::Ones(1), {unit(0, 0)}}, {Eigen::VectorXd::Ones(1), {unit(2.5, 0)}}};
    spec.n = 800;
    spec.seed = seed;
    const SimResult sim = simulate(spec);
    InitOptions init;
    init.structure = CovStructure::full;
    const auto fit = init_k_components(sim.data, 2, seed, init);
    // Align labels by the first mean coordinate.
    const int lo = fit.states[0].components[0].mean(0) < fit.states[1].components[0].mean(0) ? 0 : 1;
    mean_dev += 0.5 * (std::abs(fit.trans(lo, lo) - 0.9) + std::abs(fit.trans(1 - lo, 1 - lo) - 0.9));
  }
  CHECK(mean_dev / 20 < 0.05);
}

TEST_CASE("initial fit with one component is the global MLE") {
  const SimResult sim = simulate(benchmark_design(0.5, 1.0, 300, 5));
  InitOptions init;
  init.structure = CovStructure::full;
  const auto m = init_k_components(sim.data, 1, 1, init);
  CHECK(m.num_states() == 1);
  CHECK(m.trans(0, 0) == 1.0);
  const Eigen::VectorXd mean = sim.data.observations.colwise().mean();
  const Eigen::MatrixXd centred = sim.data.observations.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centred.transpose() * centred / 300.0;
  CHECK((m.states[0].components[0].mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.states[0].components[0].covariance - cov).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("initial fit finds two separated blobs") {
  SimSpec spec;
  spec.trans = two_state_model(0.5).trans;
  spec.states = {{Eigen::VectorXd::Ones(1), {GaussianParams{Eigen::Vector2d(-5, 0), 0.2 * Eigen::Matrix2d::Identity()}}},
                 {Eigen::VectorXd::Ones(1), {GaussianParams{Eigen::Vector2d(5, 2), 0.2 * Eigen::Matrix2d::Identity()}}}};
  spec.n = 600;
  spec.seed = 6;
  const SimResult sim = simulate(spec);
  const auto m = init_k_components(sim.data, 2, 6);
  std::vector<Eigen::Vector2d> got{m.states[0].components[0].mean, m.states[1].components[0].mean};
  if (got[0](0) > got[1](0)) std::swap(got[0], got[1]);
  CHECK((got[0] - Eigen::Vector2d(-5, 0)).norm() < 0.1);
  CHECK((got[1] - Eigen::Vector2d(5, 2)).norm() < 0.1);
}

TEST_CASE("initial fit is reproducible and validates its size") {
  const SimResult sim = simulate(benchmark_design(0.9, 3.0, 300, 7));
  const auto a = init_k_components(sim.data, 5, 42);
  const auto b = init_k_components(sim.data, 5, 42);
  CHECK(a.trans.matrix() == b.trans.matrix());
  for (int d = 0; d < 5; ++d) {
    CHECK(a.states[d].components[0].mean == b.states[d].components[0].mean);
    CHECK(a.states[d].components[0].covariance == b.states[d].components[0].covariance);
  }
  Dataset tiny = as_data(Eigen::MatrixXd::Random(3, 2));
  CHECK_THROWS_AS(init_k_components(tiny, 4, 1), SizeError);
}

TEST_CASE("independent chains keep identical transition rows") {
  const SimResult sim = simulate(benchmark_design(0.25, 1.0, 400, 8));
  InitOptions init;
  init.chain = ChainStructure::independent;
  const auto m = init_k_components(sim.data, 4, 8, init);
  CHECK(m.chain == ChainStructure::independent);
  for (int d = 1; d < 4; ++d) CHECK(m.trans.matrix().row(d) == m.trans.matrix().row(0));
}

TEST_CASE("model validation") {
  MixtureHMM m = two_state_model(0.7);
  CHECK_NOTHROW(m.validate());
  m.states[1].weights = Eigen::Vector2d(0.5, 0.6);
  m.states[1].components.push_back(unit(0, 0));
  CHECK_THROWS_AS(m.validate(), ParameterError);
}
