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

// hmmmix command-line front end.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hmmmix/commands.hpp"
#include "hmmmix/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kParse = 2, kInference = 3, kConfig = 4 };

struct Common {
  std::optional<std::string> out;
  std::optional<std::string> manifest;
  std::uint64_t seed = 1;
  int jobs = 1;
};

void add_common(CLI::App* cmd, Common& c, bool seeded = true) {
  cmd->add_option("--out,-o", c.out, std::string("Output directory (default: $") + hmmmix::kOutDirEnv + " or .)");
  cmd->add_option("--from-manifest", c.manifest, "Re-run the command recorded in a manifest.json")
      ->check(CLI::ExistingFile);
  if (seeded) cmd->add_option("--seed", c.seed, "Master random seed");
  cmd->add_option("--jobs,-j", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

void add_ingest(CLI::App* cmd, std::string& format, std::string& header) {
  cmd->add_option("--format", format, "Input table format")->check(CLI::IsMember({"csv", "tsv"}));
  cmd->add_option("--header", header, "Header row")->check(CLI::IsMember({"auto", "yes", "no"}));
}

hmmmix::IngestOptions ingest_options(const std::string& format, const std::string& header) {
  hmmmix::IngestOptions o;
  o.format = hmmmix::parse_table_format(format);
  o.header = header == "yes" ? hmmmix::HeaderMode::present
             : header == "no" ? hmmmix::HeaderMode::absent
                              : hmmmix::HeaderMode::detect;
  return o;
}

std::string absolute(const std::string& p) { return std::filesystem::absolute(p).lexically_normal().string(); }

void report(const hmmmix::CommandResult& r, const std::filesystem::path& dir) {
  for (const auto& f : r.files) std::cout << "wrote " << (dir / f).string() << '\n';
  std::cout << r.summary.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering with HMMs whose states emit Gaussian mixtures"};
  app.set_version_flag("--version", std::string(HMMMIX_VERSION));
  app.require_subcommand(1);

  // simulate
  Common sim_common;
  hmmmix::SimulateConfig sim;
  std::string sim_design = "benchmark";
  std::optional<Eigen::Index> sim_n;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw a data set from a simulation design");
  add_common(sim_cmd, sim_common);
  sim_cmd->add_option("--design", sim_design)->check(CLI::IsMember({"benchmark", "nested"}));
  sim_cmd->add_option("--a", sim.a, "Diagonal transition probability");
  sim_cmd->add_option("--b", sim.b, "Covariance scale");
  sim_cmd->add_option("--gap", sim.gap, "Gap between the nested squares");
  sim_cmd->add_option("--n", sim_n, "Sequence length (800 benchmark, 2000 nested)");

  // fit
  Common fit_common;
  hmmmix::FitConfig fit;
  std::string fit_format = "csv", fit_header = "auto";
  std::string fit_criterion = "X", fit_selection = "ICL_S", fit_cov = "spherical", fit_chain = "markov";
  auto* fit_cmd = app.add_subcommand("fit", "Fit, merge and select the number of clusters");
  add_common(fit_cmd, fit_common);
  fit_cmd->add_option("data", fit.data, "Input table");
  add_ingest(fit_cmd, fit_format, fit_header);
  fit_cmd->add_option("--k-init,-K", fit.k_init, "Number of components of the initial fit");
  fit_cmd->add_option("--criterion", fit_criterion, "Merge criterion")->check(CLI::IsMember({"X", "XS", "XZ"}));
  fit_cmd->add_option("--selection", fit_selection)->check(CLI::IsMember({"BIC", "ICL", "ICL_S"}));
  fit_cmd->add_option("--cov", fit_cov)->check(CLI::IsMember({"full", "spherical"}));
  fit_cmd->add_option("--chain", fit_chain)->check(CLI::IsMember({"markov", "independent"}));
  fit_cmd->add_option("--tol", fit.tol);
  fit_cmd->add_option("--max-iter", fit.max_iter, "EM iterations of the initial fit");
  fit_cmd->add_option("--refine-iters", fit.refine_iters, "EM iterations after each merge");
  fit_cmd->add_option("--kmeans-sweeps", fit.kmeans_sweeps);
  fit_cmd->add_option("--restarts", fit.restarts);
  fit_cmd->add_option("--fixed-d", fit.fixed_d, "Stop merging at this many clusters");

  // benchmark
  Common bench_common;
  hmmmix::BenchmarkConfig bench;
  std::string bench_design = "benchmark", bench_selection = "ICL_S";
  std::vector<double> bench_a, bench_b, bench_gap;
  std::vector<std::string> bench_criteria{"X", "XS", "XZ"};
  std::optional<Eigen::Index> bench_n;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run the simulation study");
  add_common(bench_cmd, bench_common);
  bench_cmd->add_option("--design", bench_design)->check(CLI::IsMember({"benchmark", "nested"}));
  bench_cmd->add_option("--a", bench_a, "Diagonal transition values (default: full grid)");
  bench_cmd->add_option("--b", bench_b, "Covariance scales (default: full grid)");
  bench_cmd->add_option("--gap", bench_gap, "Nested design gaps (default 0.2 0.05 0.02)");
  bench_cmd->add_option("--replicates,-C", bench.replicates);
  bench_cmd->add_option("--n", bench_n);
  bench_cmd->add_option("--k-init,-K", bench.k_init);
  bench_cmd->add_option("--criteria", bench_criteria)->check(CLI::IsMember({"X", "XS", "XZ"}));
  bench_cmd->add_flag("--independence", bench.independence, "Add the independent-mixture baseline");
  bench_cmd->add_option("--selection", bench_selection)->check(CLI::IsMember({"BIC", "ICL", "ICL_S"}));
  bench_cmd->add_option("--restarts", bench.init.restarts);

  // criteria
  Common crit_common;
  hmmmix::CriteriaConfig crit;
  std::string crit_format = "csv", crit_header = "auto", crit_selection = "ICL_S";
  auto* crit_cmd = app.add_subcommand("criteria", "Re-score a saved merge path");
  add_common(crit_cmd, crit_common, false);
  crit_cmd->add_option("data", crit.data, "Input table");
  crit_cmd->add_option("--path", crit.path, "merge_path.json written by fit");
  add_ingest(crit_cmd, crit_format, crit_header);
  crit_cmd->add_option("--selection", crit_selection)->check(CLI::IsMember({"BIC", "ICL", "ICL_S"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    auto run = [](const Common& c, auto&& direct) {
      const auto dir = hmmmix::resolve_out_dir(c.out);
      const auto result = c.manifest ? hmmmix::rerun_manifest(*c.manifest, dir, c.jobs) : direct(dir);
      report(result, dir);
    };
    if (*sim_cmd) {
      run(sim_common, [&](const std::filesystem::path& dir) {
        sim.design = sim_design == "nested" ? hmmmix::Design::nested : hmmmix::Design::benchmark;
        sim.n = sim_n.value_or(sim.design == hmmmix::Design::nested ? 2000 : 800);
        sim.seed = sim_common.seed;
        return hmmmix::cmd_simulate(sim, dir);
      });
    } else if (*fit_cmd) {
      run(fit_common, [&](const std::filesystem::path& dir) {
        if (fit.data.empty()) throw hmmmix::ConfigError("fit needs an input table");
        fit.data = absolute(fit.data);
        fit.ingest = ingest_options(fit_format, fit_header);
        fit.criterion = hmmmix::parse_merge_criterion(fit_criterion);
        fit.selection = hmmmix::parse_selection_criterion(fit_selection);
        fit.cov_structure = hmmmix::parse_cov_structure(fit_cov);
        fit.chain = hmmmix::parse_chain_structure(fit_chain);
        fit.seed = fit_common.seed;
        return hmmmix::cmd_fit(fit, dir, fit_common.jobs);
      });
    } else if (*bench_cmd) {
      run(bench_common, [&](const std::filesystem::path& dir) {
        bench.design = bench_design == "nested" ? hmmmix::Design::nested : hmmmix::Design::benchmark;
        if (bench.design == hmmmix::Design::benchmark) {
          if (bench_a.empty() && bench_b.empty()) {
            bench.cells = hmmmix::full_grid();
          } else {
            if (bench_a.empty()) bench_a = {0.25, 0.5, 0.75, 0.9};
            if (bench_b.empty()) bench_b = {1.0, 3.0, 5.0, 7.0};
            for (double a : bench_a) {
              for (double b : bench_b) bench.cells.push_back({a, b, 0.0});
            }
          }
        } else {
          if (bench_gap.empty()) bench_gap = {0.2, 0.05, 0.02};
          for (double g : bench_gap) bench.cells.push_back({0.0, 0.0, g});
        }
        bench.n = bench_n.value_or(bench.design == hmmmix::Design::nested ? 2000 : 800);
        bench.criteria.clear();
        for (const auto& k : bench_criteria) bench.criteria.push_back(hmmmix::parse_merge_criterion(k));
        bench.selection = hmmmix::parse_selection_criterion(bench_selection);
        bench.seed = bench_common.seed;
        bench.jobs = bench_common.jobs;
        return hmmmix::cmd_benchmark(bench, dir);
      });
    } else if (*crit_cmd) {
      run(crit_common, [&](const std::filesystem::path& dir) {
        if (crit.data.empty() || crit.path.empty()) throw hmmmix::ConfigError("criteria needs data and --path");
        crit.data = absolute(crit.data);
        crit.path = absolute(crit.path);
        crit.ingest = ingest_options(crit_format, crit_header);
        crit.selection = hmmmix::parse_selection_criterion(crit_selection);
        return hmmmix::cmd_criteria(crit, dir);
      });
    }
  } catch (const hmmmix::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const hmmmix::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "inference error: " << e.what() << '\n';
    return kInference;
  }
  return kOk;
}
