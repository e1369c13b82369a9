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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmmmix/dataset.hpp"
#include "hmmmix/merge_engine.hpp"
#include "hmmmix/mixture_hmm.hpp"
#include "hmmmix/simbench.hpp"
#include "json.hpp"

namespace hmmmix {

enum class TableFormat { csv, tsv };
enum class HeaderMode { detect, present, absent };

TableFormat parse_table_format(std::string_view text);

struct IngestOptions {
  TableFormat format = TableFormat::csv;
  HeaderMode header = HeaderMode::detect;
  std::string state_column = "state";          ///< optional ground-truth columns,
  std::string component_column = "component";  ///< recognised by header name
};

/// Reads a delimited numeric table; every non-label column is a coordinate.
/// Label columns hold 1-based integers and are stored 0-based.
/// Throws ParseError (with the 1-based line) on ragged rows, empty or
/// non-numeric cells.
Dataset ingest(std::istream& in, const IngestOptions& options = {}, std::string source = "<stream>");
Dataset ingest(const std::filesystem::path& path, const IngestOptions& options = {});

/// Canonical CSV: header x1..xQ (plus 1-based state/component when present)
/// and shortest round-trip decimal values.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Rows tau_1..tau_D followed by the 1-based MAP state.
void write_posterior_csv(std::ostream& out, const Eigen::MatrixXd& tau);

/// Rows state, component (1-based), tau_1..tau_D of a simulation.
void write_truth_csv(std::ostream& out, const SimResult& sim);

nlohmann::json model_to_json(const MixtureHMM& model, std::optional<double> loglik = std::nullopt);
MixtureHMM model_from_json(const nlohmann::json& j);

nlohmann::json path_to_json(const MergePath& path);
MergePath path_from_json(const nlohmann::json& j);

/// a, b, gap, criterion, mean_mse, sd_mse, mean_rate, sd_rate, cluster_hit_rate,
/// then per-criterion hit rates and success / failure counts.
void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report);
void write_replicates_csv(std::ostream& out, const BenchmarkReport& report,
                          const BenchmarkConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace hmmmix
