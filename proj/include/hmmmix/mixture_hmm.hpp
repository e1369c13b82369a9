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
#include <string_view>
#include <vector>

#include "hmmmix/dataset.hpp"
#include "hmmmix/gaussian.hpp"
#include "hmmmix/hmm_engine.hpp"

namespace hmmmix {

/// How the hidden chain is parameterised.
enum class ChainStructure {
  markov,       ///< free D x D transition matrix
  independent,  ///< identical rows: an independent mixture of the states
};

std::string_view to_string(ChainStructure s);
ChainStructure parse_chain_structure(std::string_view text);

/// One hidden state: a K_d-component Gaussian mixture.
struct MixtureState {
  Eigen::VectorXd weights;
  std::vector<GaussianParams> components;

  Eigen::Index size() const { return weights.size(); }
};

/// HMM whose emission law in each state is a Gaussian mixture.
struct MixtureHMM {
  TransitionMatrix trans;
  std::vector<MixtureState> states;
  CovStructure cov_structure = CovStructure::full;
  ChainStructure chain = ChainStructure::markov;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_components() const;
  std::vector<int> component_counts() const;
  Eigen::Index dim() const;

  /// Initial law of the hidden chain: the stationary distribution of `trans`.
  Eigen::VectorXd initial() const { return stationary_distribution(trans); }

  /// Throws ParameterError when an invariant is broken.
  void validate() const;
};

/// Posterior over both latent layers.
struct FullPosterior {
  ChainPosterior chain;
  /// Per state, an n x K_d matrix of P(Z_t = dk | S_t = d, X).
  std::vector<Eigen::MatrixXd> delta;
  /// sum_t tau_td H(delta_td.), i.e. E_X[H_{X,S}(Z)]. Filled with the chain entropy.
  std::optional<double> component_entropy;
};

/// ln psi_d(x).
double emission_log_density(const MixtureHMM& model, const Eigen::VectorXd& x, int state);

/// n x K_d matrices of ln lambda_dk + ln phi(x_t; gamma_dk).
std::vector<Eigen::MatrixXd> weighted_component_log_densities(const MixtureHMM& model,
                                                              const Eigen::MatrixXd& points);

/// n x D matrix of ln psi_d(x_t).
Eigen::MatrixXd state_log_emissions(const MixtureHMM& model, const Eigen::MatrixXd& points);

/// The lumped chain over components: omega_(dk),(d'k') = pi_dd' lambda_d'k'.
struct ComponentChain {
  TransitionMatrix omega;
  std::vector<GaussianParams> components;
  Eigen::VectorXd init;                   ///< q_d lambda_dk, stationary for omega
  std::vector<std::pair<int, int>> index;  ///< (state, component) of each lumped state
};

ComponentChain expand_to_component_chain(const MixtureHMM& model);

struct EStepOptions {
  bool keep_eta = false;
  bool compute_entropy = false;  ///< fills H_X(S) and E_X[H_{X,S}(Z)]
};

FullPosterior e_step(const MixtureHMM& model, const Dataset& data, EStepOptions options = {});

/// Transition probabilities are kept at or above this value by the M-step so
/// the chain stays primitive.
inline constexpr double kTransitionFloor = 1e-10;
/// Mixing weights are kept at or above this value.
inline constexpr double kWeightFloor = 1e-12;
/// States with less total posterior mass than this are reported empty.
inline constexpr double kEmptyStateMass = 1e-8;

/// One M-step. Throws EmptyStateError for a state with (almost) no mass.
MixtureHMM m_step(const Dataset& data, const FullPosterior& post, const MixtureHMM& model);

struct EmOptions {
  double tol = 1e-6;  ///< stop when the relative log-likelihood gain drops below this
  int max_iter = 500;
};

struct EmResult {
  MixtureHMM model;
  std::vector<double> trace;  ///< log-likelihood of every E-step, first entry = input model
  FullPosterior posterior;    ///< posterior of `model`
  int iterations = 0;         ///< M-steps performed
  bool converged = false;
};

/// Alternates E and M steps. The returned model is the last one evaluated, so
/// `trace.back()` is its log-likelihood.
EmResult run_em(MixtureHMM model, const Dataset& data, EmOptions options = {});

struct InitOptions {
  CovStructure structure = CovStructure::spherical;
  ChainStructure chain = ChainStructure::markov;
  int kmeans_sweeps = 10;
  int restarts = 3;  ///< best final log-likelihood wins
  EmOptions em{};
};

/// D = K model (one component per state) seeded by k-means++ and fitted by EM.
/// Deterministic given `seed`.
MixtureHMM init_k_components(const Dataset& data, int k, std::uint64_t seed,
                             const InitOptions& options = {});

}  // namespace hmmmix
