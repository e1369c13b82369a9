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

#include <iosfwd>
#include <string_view>
#include <vector>

#include "hmmmix/dataset.hpp"
#include "hmmmix/merge_engine.hpp"
#include "hmmmix/mixture_hmm.hpp"

namespace hmmmix {

/// Criterion used to pick the number of clusters along a merge path.
enum class SelectionCriterion { BIC, ICL, ICL_S };

std::string_view to_string(SelectionCriterion c);
SelectionCriterion parse_selection_criterion(std::string_view text);

/// nu_m = D(D-1) + (K-D) + K p_gamma, with p_gamma = Q(Q+3)/2 (full) or Q+1
/// (spherical). The initial law is tied to the stationary distribution and
/// adds nothing. An independent chain has D-1 free state proportions instead
/// of D(D-1) transitions.
int count_free_parameters(const MixtureHMM& model);

double bic(const MixtureHMM& model, const Dataset& data);
double icl(const MixtureHMM& model, const Dataset& data);
double icl_s(const MixtureHMM& model, const Dataset& data);

struct CriteriaRecord {
  int clusters = 0;
  double loglik = 0.0;
  int nu = 0;
  double bic = 0.0;
  double icl = 0.0;
  double icl_s = 0.0;
  double entropy_s = 0.0;
  double entropy_z_given_s = 0.0;

  double value(SelectionCriterion c) const;
};

/// All three criteria from one scored model.
CriteriaRecord evaluate_criteria(const MixtureHMM& model, const Dataset& data);
CriteriaRecord make_record(int clusters, const ModelScore& score, int nu, Eigen::Index n);

struct CriteriaReport {
  std::vector<CriteriaRecord> records;  ///< in path order (G decreasing)
};

struct Selection {
  int clusters = 0;
  CriteriaReport report;
};

/// Evaluates every refined model of the path and returns the argmax of
/// `criterion` (ties go to fewer clusters) with the full report.
Selection select_clusters(const MergePath& path, const Dataset& data,
                          SelectionCriterion criterion = SelectionCriterion::ICL_S);

/// Argmax over the records of a report, ties going to fewer clusters.
int argmax_clusters(const CriteriaReport& report, SelectionCriterion criterion);

/// CSV with columns G, loglik, nu, BIC, ICL, ICL_S, H_S, H_Z_given_S.
void write_criteria_csv(std::ostream& out, const CriteriaReport& report);

}  // namespace hmmmix
