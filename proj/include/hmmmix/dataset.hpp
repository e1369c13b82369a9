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
#include <string>
#include <vector>

namespace hmmmix {

/// n observations in R^Q, one per row, with optional ground-truth labels.
struct Dataset {
  Eigen::MatrixXd observations;
  std::optional<std::vector<int>> true_states;
  std::optional<std::vector<int>> true_components;
  std::string source;

  Eigen::Index size() const { return observations.rows(); }
  Eigen::Index dim() const { return observations.cols(); }

  /// Throws ShapeError / ParameterError when the invariants do not hold.
  void validate() const;
};

/// Mean of the per-coordinate (population) variances; 1 when the data is constant.
double variance_scale(const Eigen::MatrixXd& points);

}  // namespace hmmmix
