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

#include <concepts>
#include <string_view>

namespace hmmmix {

/// Shape constraint placed on estimated covariance matrices.
enum class CovStructure { full, spherical };

std::string_view to_string(CovStructure structure);
CovStructure parse_cov_structure(std::string_view text);

/// Covariance eigenvalues are clamped at this multiple of the data variance scale.
inline constexpr double kRelativeVarianceFloor = 1e-6;

struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index dim() const { return mean.size(); }

  /// Throws ParameterError unless the covariance is square, symmetric, positive
  /// definite and matches the mean dimension.
  void validate() const;
};

/// ln phi(x; mean, covariance).
double log_density(const Eigen::VectorXd& x, const GaussianParams& params);

/// ln phi evaluated on every row of `points`.
Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& points, const GaussianParams& params);

/// Weighted maximum-likelihood estimate under the given covariance structure.
///
/// The mean is the weighted average and the covariance the weighted scatter
/// normalised by the total weight. For the spherical structure the scatter is
/// replaced by sigma^2 I where sigma^2 averages the per-coordinate variances.
/// Eigenvalues below `variance_floor` are raised to it, which is the exact
/// constrained maximiser for both structures.
GaussianParams weighted_mle(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                            CovStructure structure, double variance_floor);

/// Clamps the eigenvalues of `covariance` at `floor`; returns it untouched when
/// nothing needs clamping.
Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& covariance, double floor);

/// Parametric family usable as a mixture component.
template <class F>
concept DensityFamily = requires(const typename F::Params& p, const Eigen::VectorXd& x,
                                 const Eigen::MatrixXd& pts, const Eigen::VectorXd& w,
                                 CovStructure s) {
  { F::log_density(x, p) } -> std::convertible_to<double>;
  { F::log_density_rows(pts, p) } -> std::convertible_to<Eigen::VectorXd>;
  { F::fit(pts, w, s, 1.0) } -> std::same_as<typename F::Params>;
};

struct GaussianFamily {
  using Params = GaussianParams;
  static double log_density(const Eigen::VectorXd& x, const Params& p) {
    return hmmmix::log_density(x, p);
  }
  static Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& pts, const Params& p) {
    return hmmmix::log_density_rows(pts, p);
  }
  static Params fit(const Eigen::MatrixXd& pts, const Eigen::VectorXd& w, CovStructure s,
                    double floor) {
    return weighted_mle(pts, w, s, floor);
  }
};

static_assert(DensityFamily<GaussianFamily>);

}  // namespace hmmmix
