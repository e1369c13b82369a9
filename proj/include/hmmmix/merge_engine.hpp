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

#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "hmmmix/dataset.hpp"
#include "hmmmix/mixture_hmm.hpp"

namespace hmmmix {

/// Score used to choose which two clusters to merge.
enum class MergeCriterion {
  X,   ///< E_X[ln P(X)], the observed log-likelihood
  XS,  ///< E_X[ln P(X, S)] = ln P(X) - H_X(S)
  XZ,  ///< E_X[ln P(X, Z)] = ln P(X) - H_X(S, Z)
};

std::string_view to_string(MergeCriterion c);
MergeCriterion parse_merge_criterion(std::string_view text);

/// Merges clusters k and l into one state holding the union of their
/// components. The merged state sits at index min(k, l) and the other index is
/// removed. Within-state weights are scaled by the stationary shares q_k, q_l;
/// incoming transitions add up and outgoing rows are pooled with weights q.
MixtureHMM merge_pair(const MixtureHMM& model, int k, int l);

/// Log-likelihood together with the two posterior entropies of a model.
struct ModelScore {
  double loglik = 0.0;
  double entropy_s = 0.0;            ///< H_X(S)
  double entropy_z_given_s = 0.0;    ///< E_X[H_{X,S}(Z)]

  double criterion(MergeCriterion c) const;
};

ModelScore score_model(const MixtureHMM& model, const Dataset& data);

/// Criterion of an already-merged model, from a full E-step.
double criterion_value(const MixtureHMM& model_after_merge, const Dataset& data, MergeCriterion kind);

struct PairChoice {
  int k = 0;
  int l = 0;
  double value = 0.0;
  int evaluated = 0;  ///< number of candidate pairs scored
};

/// Optional restriction of the candidate pairs, (k, l) with k < l.
using PairScreen = std::function<bool(int, int)>;

struct PairSearchOptions {
  PairScreen screen;  ///< candidates for which it returns false are skipped
  int jobs = 1;       ///< worker threads for candidate scoring
};

/// Plug-in scoring of every unordered pair (no refit); ties go to the
/// lexicographically smallest pair. Requires at least two clusters.
PairChoice best_pair(const MixtureHMM& model, const Dataset& data, MergeCriterion kind,
                     const PairSearchOptions& options = {});

/// Scores of every candidate pair (k < l) in lexicographic order, via the same
/// plug-in route as best_pair.
std::vector<std::pair<std::pair<int, int>, double>> score_all_pairs(const MixtureHMM& model,
                                                                    const Dataset& data,
                                                                    MergeCriterion kind,
                                                                    const PairSearchOptions& options = {});

struct MergeStep {
  int clusters = 0;  ///< G
  MixtureHMM model;  ///< refined model with G clusters
  std::optional<std::pair<int, int>> merged_pair;  ///< absent for the starting model
  double criterion_value = 0.0;  ///< plug-in criterion of the chosen merge
  double plugin_loglik = 0.0;    ///< log-likelihood before refinement
  double loglik = 0.0;           ///< log-likelihood after refinement
  double entropy_s = 0.0;
  double entropy_z_given_s = 0.0;
  int nu = 0;
  bool refined = true;           ///< false when refinement hit an empty state
};

struct MergePath {
  MergeCriterion criterion = MergeCriterion::X;
  std::vector<MergeStep> steps;  ///< G = K first, decreasing by one

  int total_components() const;
  /// Step holding `g` clusters, or nullptr.
  const MergeStep* at(int g) const;
};

struct MergeOptions {
  MergeCriterion criterion = MergeCriterion::X;
  EmOptions refine{.tol = 1e-6, .max_iter = 10};
  int min_clusters = 1;  ///< stop once this many clusters remain
  PairSearchOptions search{};
};

/// Greedy merging from the K clusters of `initial` down to `min_clusters`,
/// with a short EM refinement after each merge. A state that empties during
/// refinement is kept unrefined and forced into the next merge.
MergePath hierarchical_merge(const MixtureHMM& initial, const Dataset& data,
                             const MergeOptions& options = {});

}  // namespace hmmmix
