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

#include "hmmmix/selection.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "hmmmix/errors.hpp"
#include "hmmmix/format.hpp"

namespace hmmmix {

std::string_view to_string(SelectionCriterion c) {
  switch (c) {
    case SelectionCriterion::BIC: return "BIC";
    case SelectionCriterion::ICL: return "ICL";
    case SelectionCriterion::ICL_S: return "ICL_S";
  }
  return "?";
}

SelectionCriterion parse_selection_criterion(std::string_view text) {
  if (text == "BIC") return SelectionCriterion::BIC;
  if (text == "ICL") return SelectionCriterion::ICL;
  if (text == "ICL_S") return SelectionCriterion::ICL_S;
  throw ConfigError("unknown selection criterion '" + std::string(text) + "'");
}

int count_free_parameters(const MixtureHMM& model) {
  const int d = model.num_states();
  const int k = model.num_components();
  const int q = static_cast<int>(model.dim());
  const int per_component = model.cov_structure == CovStructure::full ? q * (q + 3) / 2 : q + 1;
  const int chain = model.chain == ChainStructure::markov ? d * (d - 1) : d - 1;
  return chain + (k - d) + k * per_component;
}

CriteriaRecord make_record(int clusters, const ModelScore& score, int nu, Eigen::Index n) {
  CriteriaRecord r;
  r.clusters = clusters;
  r.loglik = score.loglik;
  r.nu = nu;
  r.entropy_s = score.entropy_s;
  r.entropy_z_given_s = score.entropy_z_given_s;
  const double penalty = 0.5 * nu * std::log(static_cast<double>(n));
  r.bic = score.loglik - penalty;
  r.icl_s = r.bic - score.entropy_s;
  r.icl = r.icl_s - score.entropy_z_given_s;
  return r;
}

CriteriaRecord evaluate_criteria(const MixtureHMM& model, const Dataset& data) {
  return make_record(model.num_states(), score_model(model, data), count_free_parameters(model),
                     data.size());
}

double bic(const MixtureHMM& model, const Dataset& data) {
  const double ll = e_step(model, data).chain.loglik;
  return ll - 0.5 * count_free_parameters(model) * std::log(static_cast<double>(data.size()));
}

double icl(const MixtureHMM& model, const Dataset& data) { return evaluate_criteria(model, data).icl; }

double icl_s(const MixtureHMM& model, const Dataset& data) {
  return evaluate_criteria(model, data).icl_s;
}

double CriteriaRecord::value(SelectionCriterion c) const {
  switch (c) {
    case SelectionCriterion::BIC: return bic;
    case SelectionCriterion::ICL: return icl;
    case SelectionCriterion::ICL_S: return icl_s;
  }
  return icl_s;
}

int argmax_clusters(const CriteriaReport& report, SelectionCriterion criterion) {
  if (report.records.empty()) throw ParameterError("empty criteria report");
  const CriteriaRecord* best = nullptr;
  for (const auto& r : report.records) {
    const double v = r.value(criterion);
    if (!best || v > best->value(criterion) ||
        (v == best->value(criterion) && r.clusters < best->clusters)) {
      best = &r;
    }
  }
  return best->clusters;
}

Selection select_clusters(const MergePath& path, const Dataset& data, SelectionCriterion criterion) {
  if (path.steps.empty()) throw ParameterError("empty merge path");
  Selection out;
  out.report.records.reserve(path.steps.size());
  for (const auto& step : path.steps) out.report.records.push_back(evaluate_criteria(step.model, data));
  out.clusters = argmax_clusters(out.report, criterion);
  return out;
}

void write_criteria_csv(std::ostream& out, const CriteriaReport& report) {
  out << "G,loglik,nu,BIC,ICL,ICL_S,H_S,H_Z_given_S\n";
  for (const auto& r : report.records) {
    out << r.clusters << ',' << format_double(r.loglik) << ',' << r.nu << ',' << format_double(r.bic)
        << ',' << format_double(r.icl) << ',' << format_double(r.icl_s) << ','
        << format_double(r.entropy_s) << ',' << format_double(r.entropy_z_given_s) << '\n';
  }
}

}  // namespace hmmmix
