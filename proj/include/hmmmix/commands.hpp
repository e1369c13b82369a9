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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmmmix/io.hpp"
#include "hmmmix/selection.hpp"
#include "hmmmix/simbench.hpp"
#include "json.hpp"

namespace hmmmix {

/// Name of the environment variable holding the default output directory.
inline constexpr const char* kOutDirEnv = "HMMMIX_OUT_DIR";

/// `--out` if given, else $HMMMIX_OUT_DIR, else the working directory.
std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag);

struct SimulateConfig {
  Design design = Design::benchmark;
  double a = 0.9;
  double b = 1.0;
  double gap = 0.2;
  Eigen::Index n = 800;
  std::uint64_t seed = 1;
};

struct FitConfig {
  std::string data;  ///< input path
  IngestOptions ingest{};
  int k_init = 10;
  MergeCriterion criterion = MergeCriterion::X;
  SelectionCriterion selection = SelectionCriterion::ICL_S;
  CovStructure cov_structure = CovStructure::spherical;
  ChainStructure chain = ChainStructure::markov;
  double tol = 1e-6;
  int max_iter = 500;     ///< initial EM
  int refine_iters = 10;  ///< EM after each merge
  int kmeans_sweeps = 10;
  int restarts = 3;
  std::uint64_t seed = 1;
  std::optional<int> fixed_d;

  void validate() const;
};

struct CriteriaConfig {
  std::string data;
  std::string path;  ///< merge_path.json written by fit
  IngestOptions ingest{};
  SelectionCriterion selection = SelectionCriterion::ICL_S;
};

nlohmann::json to_json(const SimulateConfig& c);
nlohmann::json to_json(const FitConfig& c);
nlohmann::json to_json(const BenchmarkConfig& c);
nlohmann::json to_json(const CriteriaConfig& c);
SimulateConfig simulate_config_from_json(const nlohmann::json& j);
FitConfig fit_config_from_json(const nlohmann::json& j);
BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j);
CriteriaConfig criteria_config_from_json(const nlohmann::json& j);

/// What a command wrote, relative to its output directory.
struct CommandResult {
  std::vector<std::string> files;  ///< manifest.json last
  nlohmann::json summary;          ///< also stored in the manifest
};

/// Every command writes its artifacts and a manifest.json holding the
/// command, the config, its FNV-1a hash, the seed, the library version and a
/// hash of every artifact. Nothing time- or host-dependent is recorded, so a
/// re-run reproduces every file byte for byte.
CommandResult cmd_simulate(const SimulateConfig& config, const std::filesystem::path& out_dir);
CommandResult cmd_fit(const FitConfig& config, const std::filesystem::path& out_dir, int jobs = 1);
CommandResult cmd_benchmark(const BenchmarkConfig& config, const std::filesystem::path& out_dir);
CommandResult cmd_criteria(const CriteriaConfig& config, const std::filesystem::path& out_dir);

/// Re-runs the command recorded in a manifest into `out_dir`.
CommandResult rerun_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                             int jobs = 1);

}  // namespace hmmmix
