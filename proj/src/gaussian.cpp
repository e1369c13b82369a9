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

#include "hmmmix/gaussian.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hmmmix/errors.hpp"

namespace hmmmix {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const GaussianParams& params) {
  params.validate();
  Eigen::LLT<Eigen::MatrixXd> llt(params.covariance);
  if (llt.info() != Eigen::Success) {
    throw ParameterError("covariance matrix is not positive definite");
  }
  return llt;
}

double log_normaliser(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index q) {
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) log_det_half += std::log(l(i, i));
  return -0.5 * static_cast<double>(q) * kLogTwoPi - log_det_half;
}

}  // namespace

std::string_view to_string(CovStructure structure) {
  return structure == CovStructure::full ? "full" : "spherical";
}

CovStructure parse_cov_structure(std::string_view text) {
  if (text == "full") return CovStructure::full;
  if (text == "spherical") return CovStructure::spherical;
  throw ConfigError("unknown covariance structure '" + std::string(text) + "'");
}

void GaussianParams::validate() const {
  const Eigen::Index q = mean.size();
  if (q == 0) throw ParameterError("Gaussian has zero dimension");
  if (covariance.rows() != q || covariance.cols() != q) {
    throw ParameterError("covariance order does not match mean dimension");
  }
  if (!mean.allFinite() || !covariance.allFinite()) {
    throw ParameterError("Gaussian parameters are not finite");
  }
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ParameterError("covariance matrix is not symmetric");
  }
}

double log_density(const Eigen::VectorXd& x, const GaussianParams& params) {
  const auto llt = checked_cholesky(params);
  if (x.size() != params.dim()) throw ShapeError("point dimension does not match Gaussian");
  const Eigen::VectorXd z = llt.matrixL().solve(x - params.mean);
  return log_normaliser(llt, params.dim()) - 0.5 * z.squaredNorm();
}

Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& points, const GaussianParams& params) {
  const auto llt = checked_cholesky(params);
  if (points.cols() != params.dim()) throw ShapeError("point dimension does not match Gaussian");
  Eigen::MatrixXd centred = (points.rowwise() - params.mean.transpose()).transpose();
  llt.matrixL().solveInPlace(centred);
  const double c = log_normaliser(llt, params.dim());
  return (c - 0.5 * centred.colwise().squaredNorm().array()).matrix().transpose();
}

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& covariance, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  const Eigen::VectorXd& values = eig.eigenvalues();
  if (values.minCoeff() >= floor) return covariance;
  // Small margin so that the reconstructed matrix still clears the floor
  // after rounding in the eigenvector products.
  const double margin = 64.0 * std::numeric_limits<double>::epsilon() * std::max(values.cwiseAbs().maxCoeff(), floor);
  const Eigen::VectorXd clamped = values.cwiseMax(floor + margin);
  Eigen::MatrixXd out = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

GaussianParams weighted_mle(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                            CovStructure structure, double variance_floor) {
  if (points.rows() != weights.size()) throw ShapeError("weights length does not match points");
  if (points.cols() == 0) throw ShapeError("points have zero dimension");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw ParameterError("weights must be finite and non-negative");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw DegenerateWeightsError("weighted MLE with zero total weight");

  GaussianParams out;
  out.mean = (points.transpose() * weights) / total;
  const Eigen::MatrixXd centred = points.rowwise() - out.mean.transpose();
  const Eigen::Index q = points.cols();

  if (structure == CovStructure::spherical) {
    const double ss = (centred.array().square().colwise() * weights.array()).sum();
    const double sigma2 = std::max(ss / (total * static_cast<double>(q)), variance_floor);
    out.covariance = sigma2 * Eigen::MatrixXd::Identity(q, q);
    return out;
  }

  Eigen::MatrixXd scatter = centred.transpose() * weights.asDiagonal() * centred / total;
  scatter = 0.5 * (scatter + scatter.transpose());
  out.covariance = floor_eigenvalues(scatter, variance_floor);
  return out;
}

}  // namespace hmmmix
