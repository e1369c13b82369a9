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

#include "hmmmix/dataset.hpp"

#include "hmmmix/errors.hpp"

namespace hmmmix {

void Dataset::validate() const {
  if (observations.cols() < 1) throw ShapeError("dataset has no coordinates");
  if (observations.rows() < 2) throw SizeError("dataset needs at least two observations");
  if (!observations.allFinite()) throw ParameterError("dataset contains non-finite values");
  const auto n = static_cast<std::size_t>(observations.rows());
  if (true_states && true_states->size() != n) throw ShapeError("true_states length mismatch");
  if (true_components && true_components->size() != n) {
    throw ShapeError("true_components length mismatch");
  }
}

double variance_scale(const Eigen::MatrixXd& points) {
  if (points.rows() == 0) return 1.0;
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const double v =
      (points.rowwise() - mean).array().square().sum() / static_cast<double>(points.size());
  return v > 0.0 ? v : 1.0;
}

}  // namespace hmmmix
