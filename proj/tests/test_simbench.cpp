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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hmmmix/errors.hpp"
#include "hmmmix/matching.hpp"
#include "hmmmix/simbench.hpp"
#include "oracles.hpp"

using namespace hmmmix;

namespace {

double brute_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<int> p(static_cast<std::size_t>(a.cols()));
  std::iota(p.begin(), p.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (Eigen::Index t = 0; t < a.rows(); ++t) {
      double sq = 0;
      for (Eigen::Index j = 0; j < a.cols(); ++j) sq += std::pow(a(t, p[j]) - b(t, j), 2);
      s += std::sqrt(sq);
    }
    best = std::min(best, s / static_cast<double>(a.rows()));
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

Eigen::MatrixXd random_tau(std::mt19937_64& rng, int n, int d) {
  Eigen::MatrixXd t(n, d);
  for (int i = 0; i < n; ++i) t.row(i) = oracle::random_simplex(rng, d).transpose();
  return t;
}

}  // namespace

TEST_CASE("benchmark design parameters") {
  const auto s = benchmark_design(0.25, 1.0);
  CHECK((s.trans.matrix().array() == 0.25).all());
  CHECK(s.num_states() == 4);
  const auto& g1 = std::get<GaussianParams>(s.states[0].emitters[0]);
  CHECK(g1.covariance == (Eigen::Matrix2d() << 0.1, 0.0, 0.0, 1.0).finished());
  CHECK(g1.mean == Eigen::Vector2d(1, 5));
  CHECK(std::get<GaussianParams>(s.states[0].emitters[1]).mean == Eigen::Vector2d(1, 5));
  CHECK(std::get<GaussianParams>(s.states[1].emitters[0]).mean == Eigen::Vector2d(8, 0));
  CHECK(std::get<GaussianParams>(s.states[2].emitters[0]).mean == Eigen::Vector2d(0, 0));
  CHECK(std::get<GaussianParams>(s.states[3].emitters[0]).mean == Eigen::Vector2d(8, 5));
  CHECK(s.states[0].weights == Eigen::Vector2d(0.5, 0.5));
  const auto s7 = benchmark_design(0.9, 7.0);
  CHECK(std::get<GaussianParams>(s7.states[0].emitters[0]).covariance.isApprox(7.0 * g1.covariance));
  for (double a : {0.25, 0.5, 0.75, 0.9}) {
    const auto q = stationary_distribution(benchmark_design(a, 1.0).trans);
    CHECK((q.array() - 0.25).abs().maxCoeff() < 1e-14);
    CHECK(benchmark_design(a, 1.0).trans(0, 1) == doctest::Approx((1 - a) / 3));
  }
  CHECK_THROWS_AS(benchmark_design(1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(benchmark_design(0.5, 0.0), ConfigError);
}

TEST_CASE("nested squares design") {
  const auto s = nested_squares_design(0.2, 10000, 3);
  const auto& ann = std::get<UniformSquareAnnulus>(s.states[1].emitters[0]);
  CHECK(ann.inner_half_side == doctest::Approx(0.7));
  CHECK(2 * ann.outer_half_side == doctest::Approx(1.8));
  CHECK(std::get<UniformSquare>(s.states[0].emitters[0]).half_side == 0.5);
  CHECK(s.trans(0, 0) == doctest::Approx(2.0 / 3));
  const SimResult sim = simulate(s);
  int in_state0 = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto x = sim.data.observations.row(t);
    if (sim.states[t] == 0) {
      ++in_state0;
      CHECK(x.cwiseAbs().maxCoeff() <= 0.5);
    } else {
      CHECK(x.cwiseAbs().maxCoeff() >= 0.7);
      CHECK(x.cwiseAbs().maxCoeff() <= 0.9);
    }
  }
  CHECK(std::abs(in_state0 / 10000.0 - 0.5) < 0.02);
  CHECK_THROWS_AS(nested_squares_design(0.3), ConfigError);
  CHECK_FALSE(s.true_model().has_value());
}

TEST_CASE("uniform emitter densities") {
  Eigen::MatrixXd pts(3, 2);
  pts << 0.1, 0.2, 0.8, 0.0, 2.0, 0.0;
  const auto sq = emitter_log_density_rows(UniformSquare{0.5}, pts);
  CHECK(sq(0) == doctest::Approx(0.0));
  CHECK(sq(1) == -INFINITY);
  const auto an = emitter_log_density_rows(UniformSquareAnnulus{0.7, 0.9}, pts);
  CHECK(an(0) == -INFINITY);
  CHECK(an(1) == doctest::Approx(-std::log(1.8 * 1.8 - 1.4 * 1.4)));
  CHECK(an(2) == -INFINITY);
}

TEST_CASE("persistent chains have long runs") {
  double same = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SimResult sim = simulate(benchmark_design(0.999, 1.0, 100, seed));
    for (int t = 1; t < 100; ++t) same += sim.states[t] == sim.states[t - 1];
  }
  CHECK(same / 50 >= 95);
}

TEST_CASE("empirical transition frequencies") {
  const SimResult sim = simulate(benchmark_design(0.5, 1.0, 100000, 9));
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(4, 4);
  for (int t = 1; t < 100000; ++t) counts(sim.states[t - 1], sim.states[t]) += 1;
  for (int d = 0; d < 4; ++d) {
    counts.row(d) /= counts.row(d).sum();
    for (int e = 0; e < 4; ++e) CHECK(std::abs(counts(d, e) - (d == e ? 0.5 : 0.5 / 3)) < 0.01);
  }
  // Components stay within their state.
  for (int t = 0; t < 1000; ++t) CHECK(sim.components[t] < static_cast<int>(benchmark_design(0.5, 1.0).states[sim.states[t]].emitters.size()));
}

TEST_CASE("simulation is reproducible") {
  const SimResult a = simulate(benchmark_design(0.75, 3.0, 500, 77));
  const SimResult b = simulate(benchmark_design(0.75, 3.0, 500, 77));
  const SimResult c = simulate(benchmark_design(0.75, 3.0, 500, 78));
  CHECK(a.data.observations == b.data.observations);
  CHECK(a.states == b.states);
  CHECK(a.true_tau == b.true_tau);
  CHECK(a.data.observations != c.data.observations);
}

TEST_CASE("true posteriors are forward-backward under the true model") {
  const auto spec = benchmark_design(0.75, 5.0, 300, 5);
  const SimResult sim = simulate(spec);
  const auto post = e_step(*spec.true_model(), sim.data);
  CHECK((post.chain.tau - sim.true_tau).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sim.true_tau.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);

  const auto nested = nested_squares_design(0.05, 300, 5);
  const SimResult ns = simulate(nested);
  Eigen::MatrixXd le(300, 2);
  for (int d = 0; d < 2; ++d) le.col(d) = emitter_log_density_rows(nested.states[d].emitters[0], ns.data.observations);
  const auto fb = forward_backward(le, nested.trans, stationary_distribution(nested.trans));
  CHECK((fb.tau - ns.true_tau).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("MSE examples") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd tau = random_tau(rng, 50, 3);
  CHECK(mse(tau, tau) == 0.0);
  Eigen::MatrixXd swapped = tau;
  swapped.col(0).swap(swapped.col(2));
  CHECK(mse(swapped, tau) == 0.0);

  Eigen::MatrixXd a(3, 2), b(3, 2);
  a << 0.9, 0.1, 0.2, 0.8, 0.6, 0.4;
  b << 0.3, 0.7, 0.7, 0.3, 0.5, 0.5;
  const double id = (std::sqrt(0.72) + std::sqrt(0.5) + std::sqrt(0.02)) / 3;
  const double sw = (std::sqrt(0.08) + std::sqrt(0.02) + std::sqrt(0.02)) / 3;
  CHECK(mse(a, b) == doctest::Approx(std::min(id, sw)).epsilon(1e-14));
  CHECK_THROWS_AS(mse(a, Eigen::MatrixXd::Zero(3, 3)), ShapeError);
}

TEST_CASE("MSE matches exhaustive relabelling and ignores joint permutations") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 2 + rep % 5;
    const Eigen::MatrixXd a = random_tau(rng, 30, d), b = random_tau(rng, 30, d);
    CHECK(mse(a, b) == doctest::Approx(brute_mse(a, b)).epsilon(1e-12));
    std::vector<int> p(static_cast<std::size_t>(d));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    Eigen::MatrixXd pa(30, d), pb(30, d);
    for (int j = 0; j < d; ++j) {
      pa.col(j) = a.col(p[j]);
      pb.col(j) = b.col(p[j]);
    }
    CHECK(mse(pa, pb) == doctest::Approx(mse(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("MSE with many states uses an assignment") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd tau = random_tau(rng, 40, 7);
  std::vector<int> p{3, 6, 0, 1, 5, 2, 4};
  Eigen::MatrixXd est(40, 7);
  std::normal_distribution<double> z(0.0, 0.01);
  for (int j = 0; j < 7; ++j) {
    for (int t = 0; t < 40; ++t) est(t, p[j]) = tau(t, j) + z(rng);
  }
  CHECK(mse(est, tau) == doctest::Approx(brute_mse(est, tau)).epsilon(1e-12));
}

TEST_CASE("assignment solver agrees with enumeration") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 10);
  for (int rep = 0; rep < 30; ++rep) {
    const int rows = 1 + rep % 5, cols = rows + rep % 3;
    Eigen::MatrixXd c(rows, cols);
    for (int i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
    const auto a = min_cost_assignment(c);
    double got = 0;
    for (int r = 0; r < rows; ++r) got += c(r, a[r]);
    std::vector<int> cols_idx(static_cast<std::size_t>(cols));
    std::iota(cols_idx.begin(), cols_idx.end(), 0);
    double best = INFINITY;
    do {
      double s = 0;
      for (int r = 0; r < rows; ++r) s += c(r, cols_idx[r]);
      best = std::min(best, s);
    } while (std::next_permutation(cols_idx.begin(), cols_idx.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
    std::vector<int> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
}

TEST_CASE("correct classification rate") {
  const std::vector<int> truth{0, 1, 1, 0, 1};
  CHECK(correct_rate(truth, truth) == 1.0);
  CHECK(correct_rate({1, 0, 0, 1, 0}, truth) == 1.0);
  CHECK(correct_rate({0, 0, 0, 0, 1}, truth) == doctest::Approx(0.6));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<int> a(10000), b(10000);
  for (int i = 0; i < 10000; ++i) {
    a[i] = pick(rng);
    b[i] = pick(rng);
  }
  CHECK(std::abs(correct_rate(a, b) - 0.25) < 0.02);
  CHECK_THROWS_AS(correct_rate({0, 1}, {0}), ShapeError);
}

TEST_CASE("standard methods") {
  const auto m = standard_methods({MergeCriterion::X, MergeCriterion::XZ}, true, 6);
  REQUIRE(m.size() == 3);
  CHECK(m[0].criterion == MergeCriterion::X);
  CHECK(m[1].criterion == MergeCriterion::XZ);
  CHECK(m[2].chain == ChainStructure::independent);
  CHECK(m[2].criterion == MergeCriterion::XS);
  for (const auto& x : m) CHECK(x.structure == CovStructure::spherical);
}

TEST_CASE("benchmark report shape and determinism") {
  BenchmarkConfig cfg;
  cfg.cells = full_grid();
  REQUIRE(cfg.cells.size() == 16);
  cfg.replicates = 1;
  cfg.n = 150;
  cfg.init.restarts = 1;
  const auto a = run_benchmark(cfg);
  CHECK(a.rows.size() == 48);
  CHECK(a.replicates.size() == 48);
  CHECK(a.seeds.size() == 16);
  cfg.jobs = 3;
  const auto b = run_benchmark(cfg);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].method == b.rows[i].method);
    CHECK(a.rows[i].mean_rate == b.rows[i].mean_rate);
    CHECK(a.rows[i].mean_mse == b.rows[i].mean_mse);
  }
  CHECK(replicate_seed(1, 0, 0) != replicate_seed(1, 0, 1));
  CHECK(replicate_seed(1, 1, 0) != replicate_seed(1, 0, 1));
}

TEST_CASE("replicate failures are counted, not fatal") {
  BenchmarkConfig cfg;
  cfg.cells = {{0.9, 1.0, 0.0}};
  cfg.replicates = 2;
  cfg.n = 5;
  cfg.k_init = 6;  // more clusters than observations
  cfg.criteria = {MergeCriterion::X};
  const auto r = run_benchmark(cfg);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].failures == 2);
  CHECK(r.rows[0].successes == 0);
  CHECK(std::isnan(r.rows[0].mean_rate));
  CHECK_THROWS_AS(run_benchmark(BenchmarkConfig{}), ConfigError);
}

TEST_CASE("sample standard deviation") {
  const auto [m, s] = mean_sd({1.0, 2.0, 3.0, 4.0});
  CHECK(m == 2.5);
  CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_sd({2.0}).second == 0.0);
}

TEST_CASE("higher persistence does not lower the classification rate") {
  BenchmarkConfig cfg;
  cfg.cells = {{0.5, 1.0, 0.0}, {0.9, 1.0, 0.0}};
  cfg.criteria = {MergeCriterion::X};
  cfg.replicates = 20;
  const auto r = run_benchmark(cfg);
  CHECK(r.rows[1].mean_rate >= r.rows[0].mean_rate - 0.02);
}
