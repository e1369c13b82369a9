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

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "hmmmix/dataset.hpp"
#include "hmmmix/merge_engine.hpp"
#include "hmmmix/mixture_hmm.hpp"
#include "hmmmix/selection.hpp"

namespace hmmmix {

/// Uniform law on the square [-h, h]^2.
struct UniformSquare {
  double half_side = 0.5;
};

/// Uniform law on [-outer, outer]^2 minus [-inner, inner]^2.
struct UniformSquareAnnulus {
  double inner_half_side = 0.7;
  double outer_half_side = 0.9;
};

using Emitter = std::variant<GaussianParams, UniformSquare, UniformSquareAnnulus>;

/// ln density of `emitter` on every row of `points` (-inf outside the support).
Eigen::VectorXd emitter_log_density_rows(const Emitter& emitter, const Eigen::MatrixXd& points);

struct GenerativeState {
  Eigen::VectorXd weights;
  std::vector<Emitter> emitters;
};

/// Generative description of a simulated scenario.
struct SimSpec {
  std::string design;
  TransitionMatrix trans;
  std::vector<GenerativeState> states;
  Eigen::Index n = 800;
  std::uint64_t seed = 0;
  /// Free-form provenance, e.g. how components were assigned to states.
  std::vector<std::string> notes;

  int num_states() const { return static_cast<int>(states.size()); }
  /// The generative truth as a MixtureHMM when every emitter is Gaussian.
  std::optional<MixtureHMM> true_model() const;
};

/// Four-state design with six Gaussian components: states {1,2}, {3,4}, {5}
/// and {6} (components numbered as in the parameter table), diagonal
/// transition probability a, off-diagonal (1-a)/3, covariances scaled by b and
/// within-state weights 1/2.
SimSpec benchmark_design(double a, double b, Eigen::Index n = 800, std::uint64_t seed = 0);

/// Means and unscaled covariances of the six benchmark components.
std::vector<GaussianParams> benchmark_components(double b = 1.0);

/// Two nested uniform clusters: state 0 on [-1/2, 1/2]^2, state 1 on the
/// square annulus between half-sides 0.5 + gap and 0.7 + gap; transitions
/// [[2/3, 1/3], [1/3, 2/3]].
SimSpec nested_squares_design(double gap, Eigen::Index n = 2000, std::uint64_t seed = 0);

struct SimResult {
  Dataset data;
  std::vector<int> states;
  std::vector<int> components;  ///< index within the state's component list
  Eigen::MatrixXd true_tau;     ///< exact P(S_t = d | X) under the generative truth
};

/// S_1 from the stationary law, then the chain, Z | S and X | Z. Deterministic
/// given spec.seed.
SimResult simulate(const SimSpec& spec);

/// Smoothing posteriors of the generative model.
Eigen::MatrixXd true_posterior(const SimSpec& spec, const Eigen::MatrixXd& points);

/// (1/n) sum_t || tau_hat_t - tau_t ||_2 after the best relabelling of the
/// columns of tau_hat (exhaustive up to 6 states, assignment on squared
/// distances beyond).
double mse(const Eigen::MatrixXd& tau_hat, const Eigen::MatrixXd& true_tau);

/// Fraction of matching labels under the best one-to-one relabelling.
double correct_rate(const std::vector<int>& labels_hat, const std::vector<int>& truth);

/// How a replicate is fitted.
struct MethodConfig {
  std::string name;  ///< report label
  MergeCriterion criterion = MergeCriterion::X;
  ChainStructure chain = ChainStructure::markov;
  CovStructure structure = CovStructure::spherical;
  int k_init = 6;
  InitOptions init{};
  EmOptions refine{.tol = 1e-6, .max_iter = 10};
  int jobs = 1;
};

/// Default method list: one markov method per merge criterion plus, optionally,
/// the independent-mixture baseline merged by the state-entropy criterion.
std::vector<MethodConfig> standard_methods(const std::vector<MergeCriterion>& criteria,
                                           bool independence, int k_init);

struct ReplicateOutcome {
  std::size_t cell = 0;
  int replicate = 0;
  std::string method;
  bool failed = false;
  std::string error;
  double mse = 0.0;   ///< at the true number of states
  double rate = 0.0;  ///< MAP correct-classification rate at the true number of states
  int selected_bic = 0;
  int selected_icl = 0;
  int selected_icl_s = 0;
  std::vector<CriteriaRecord> criteria;  ///< along the merge path
};

/// Fits one replicate with one method and scores it against the truth.
/// `fitted_initial` can carry a precomputed initial model shared between methods.
ReplicateOutcome evaluate_replicate(const SimResult& sim, int true_states, const MethodConfig& method,
                                    std::uint64_t seed,
                                    const std::optional<MixtureHMM>& fitted_initial = std::nullopt);

enum class Design { benchmark, nested };

struct BenchmarkCell {
  double a = 0.0;
  double b = 0.0;
  double gap = 0.0;  ///< nested design only
};

struct BenchmarkConfig {
  Design design = Design::benchmark;
  std::vector<BenchmarkCell> cells;
  int replicates = 20;
  Eigen::Index n = 800;
  int k_init = 6;
  std::vector<MergeCriterion> criteria{MergeCriterion::X, MergeCriterion::XS, MergeCriterion::XZ};
  bool independence = false;
  SelectionCriterion selection = SelectionCriterion::ICL_S;
  std::uint64_t seed = 1;
  int jobs = 1;
  InitOptions init{};
  EmOptions refine{.tol = 1e-6, .max_iter = 10};
};

/// The 16 (a, b) cells of the benchmark grid.
std::vector<BenchmarkCell> full_grid();

struct CellSummary {
  BenchmarkCell cell;
  std::string method;
  double mean_mse = 0.0;
  double sd_mse = 0.0;
  double mean_rate = 0.0;
  double sd_rate = 0.0;
  double cluster_hit_rate = 0.0;  ///< under BenchmarkConfig::selection
  double hit_rate_bic = 0.0;
  double hit_rate_icl = 0.0;
  double hit_rate_icl_s = 0.0;
  int successes = 0;
  int failures = 0;
};

struct BenchmarkReport {
  std::vector<CellSummary> rows;
  std::vector<ReplicateOutcome> replicates;
  std::vector<std::uint64_t> seeds;  ///< per (cell, replicate), row-major
};

/// Seed of replicate r in cell c.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t cell, int replicate);

BenchmarkReport run_benchmark(const BenchmarkConfig& config);

/// Mean and sample standard deviation.
std::pair<double, double> mean_sd(const std::vector<double>& values);

}  // namespace hmmmix
