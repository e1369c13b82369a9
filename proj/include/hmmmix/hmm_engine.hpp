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

#include <optional>
#include <vector>

namespace hmmmix {

/// Row-stochastic matrix of a homogeneous finite Markov chain.
class TransitionMatrix {
 public:
  TransitionMatrix() : entries_(Eigen::MatrixXd::Ones(1, 1)) {}

  /// Throws ParameterError unless square, entries in [0,1] and rows summing to
  /// one within 1e-12.
  explicit TransitionMatrix(Eigen::MatrixXd entries);

  /// Normalises each row of non-negative `weights` to sum to one.
  static TransitionMatrix from_weights(Eigen::MatrixXd weights);

  /// Every row equal to the probability vector `row`.
  static TransitionMatrix independent(const Eigen::VectorXd& row);

  const Eigen::MatrixXd& matrix() const { return entries_; }
  Eigen::Index size() const { return entries_.rows(); }
  double operator()(Eigen::Index from, Eigen::Index to) const { return entries_(from, to); }

 private:
  Eigen::MatrixXd entries_;
};

struct ForwardBackwardOptions {
  bool keep_eta = true;          ///< store the n-1 pairwise posterior matrices
  bool compute_entropy = false;  ///< fill ChainPosterior::entropy with H(S | X)
};

/// Smoothing posteriors of a hidden chain.
struct ChainPosterior {
  Eigen::MatrixXd tau;               ///< n x D, P(S_t = d | X)
  std::vector<Eigen::MatrixXd> eta;  ///< n-1 matrices, P(S_t = d, S_t+1 = d' | X)
  Eigen::MatrixXd eta_sum;           ///< sum of eta over t
  double loglik = 0.0;               ///< ln P(X)
  std::optional<double> entropy;     ///< H(S | X) when requested

  Eigen::Index size() const { return tau.rows(); }
  Eigen::Index states() const { return tau.cols(); }
};

/// Scaled forward-backward recursion.
///
/// `log_emission` is n x D; entries may be -inf as long as every row keeps at
/// least one finite value. Throws ParameterError when the sequence has zero
/// probability under the chain.
ChainPosterior forward_backward(const Eigen::MatrixXd& log_emission, const TransitionMatrix& trans,
                                const Eigen::VectorXd& init, ForwardBackwardOptions options = {});

/// ln P(X) from the forward sweep alone.
double forward_loglik(const Eigen::MatrixXd& log_emission, const TransitionMatrix& trans,
                      const Eigen::VectorXd& init);

/// True when some power of the matrix is entrywise positive.
bool is_primitive(const TransitionMatrix& trans);

/// q with q Pi = q. Throws StructureError for reducible or periodic chains.
Eigen::VectorXd stationary_distribution(const TransitionMatrix& trans);

/// argmax_d tau_td per row, lowest index on ties.
std::vector<int> map_classify(const Eigen::MatrixXd& tau);

/// Most probable state path.
std::vector<int> viterbi(const Eigen::MatrixXd& log_emission, const TransitionMatrix& trans,
                         const Eigen::VectorXd& init);

/// H(S | X) from stored posteriors, using the Markov property of S given X:
/// H(S_1 | X) + sum_t sum_d tau_td H(S_t+1 | S_t = d, X).
/// Requires the eta matrices (ForwardBackwardOptions::keep_eta).
double posterior_entropy(const ChainPosterior& post);

/// -sum p ln p with 0 ln 0 = 0.
double entropy_of(const Eigen::Ref<const Eigen::VectorXd>& p);

/// ln sum exp(v), -inf for an all -inf vector.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace hmmmix
