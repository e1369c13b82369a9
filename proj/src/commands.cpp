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

#include "hmmmix/commands.hpp"

#include <cstdlib>
#include <sstream>

#include "hmmmix/errors.hpp"
#include "hmmmix/rng.hpp"

namespace hmmmix {

using nlohmann::json;

std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return std::filesystem::current_path();
}

void FitConfig::validate() const {
  if (data.empty()) throw ConfigError("no input data given");
  if (k_init < 1) throw ConfigError("K_init must be at least 1");
  if (fixed_d && (*fixed_d < 1 || *fixed_d > k_init)) {
    throw ConfigError("fixed D must lie between 1 and K_init");
  }
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iter < 1 || refine_iters < 0) throw ConfigError("iteration limits must be positive");
  if (kmeans_sweeps < 1 || restarts < 1) throw ConfigError("k-means sweeps and restarts must be positive");
}

namespace {

std::string_view design_name(Design d) { return d == Design::benchmark ? "benchmark" : "nested"; }

Design parse_design(std::string_view s) {
  if (s == "benchmark") return Design::benchmark;
  if (s == "nested") return Design::nested;
  throw ConfigError("unknown design '" + std::string(s) + "'");
}

std::string_view header_name(HeaderMode h) {
  switch (h) {
    case HeaderMode::detect: return "auto";
    case HeaderMode::present: return "yes";
    case HeaderMode::absent: return "no";
  }
  return "auto";
}

HeaderMode parse_header(std::string_view s) {
  if (s == "auto") return HeaderMode::detect;
  if (s == "yes") return HeaderMode::present;
  if (s == "no") return HeaderMode::absent;
  throw ConfigError("unknown header mode '" + std::string(s) + "'");
}

json ingest_json(const IngestOptions& o) {
  return {{"format", o.format == TableFormat::csv ? "csv" : "tsv"},
          {"header", header_name(o.header)},
          {"state_column", o.state_column},
          {"component_column", o.component_column}};
}

IngestOptions ingest_from(const json& j) {
  IngestOptions o;
  o.format = parse_table_format(j.at("format").get<std::string>());
  o.header = parse_header(j.at("header").get<std::string>());
  o.state_column = j.at("state_column").get<std::string>();
  o.component_column = j.at("component_column").get<std::string>();
  return o;
}

// Config errors from JSON access are reported as such rather than as a crash.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
  }
}

// Runs one pipeline stage, attaching the stage name to inference failures.
template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const InferenceError&) {
    throw;
  } catch (const Error& e) {
    throw InferenceError(name, e.what());
  }
}

struct Artifacts {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents

  void add(std::string name, std::string contents) { files.emplace_back(std::move(name), std::move(contents)); }

  CommandResult finish(std::string_view command, const json& config, std::uint64_t seed, json summary,
                       json inputs = json::array()) {
    json m;
    m["tool"] = "hmmmix";
    m["version"] = HMMMIX_VERSION;
    m["command"] = std::string(command);
    m["config"] = config;
    m["config_hash"] = hex64(fnv1a(config.dump()));
    m["seed"] = seed;
    m["inputs"] = std::move(inputs);
    json outs = json::array();
    CommandResult result;
    for (const auto& [name, contents] : files) {
      outs.push_back({{"file", name}, {"bytes", contents.size()}, {"fnv1a", hex64(fnv1a(contents))}});
      write_file(dir / name, contents);
      result.files.push_back(name);
    }
    m["outputs"] = std::move(outs);
    m["summary"] = summary;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
    result.files.push_back("manifest.json");
    result.summary = std::move(summary);
    return result;
  }
};

json input_entry(const std::string& path) {
  const std::string bytes = read_file(path);
  return {{"file", path}, {"bytes", bytes.size()}, {"fnv1a", hex64(fnv1a(bytes))}};
}

template <class W>
std::string render(W&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

}  // namespace

json to_json(const SimulateConfig& c) {
  return {{"design", design_name(c.design)}, {"a", c.a}, {"b", c.b}, {"gap", c.gap}, {"n", c.n}, {"seed", c.seed}};
}

SimulateConfig simulate_config_from_json(const json& j) {
  return guarded("simulate config", [&] {
    SimulateConfig c;
    c.design = parse_design(j.at("design").get<std::string>());
    c.a = j.at("a").get<double>();
    c.b = j.at("b").get<double>();
    c.gap = j.at("gap").get<double>();
    c.n = j.at("n").get<Eigen::Index>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  });
}

json to_json(const FitConfig& c) {
  return {{"data", c.data},
          {"ingest", ingest_json(c.ingest)},
          {"K_init", c.k_init},
          {"criterion", to_string(c.criterion)},
          {"selection", to_string(c.selection)},
          {"cov_structure", to_string(c.cov_structure)},
          {"chain", to_string(c.chain)},
          {"tol", c.tol},
          {"max_iter", c.max_iter},
          {"refine_iters", c.refine_iters},
          {"kmeans_sweeps", c.kmeans_sweeps},
          {"restarts", c.restarts},
          {"seed", c.seed},
          {"fixed_D", c.fixed_d ? json(*c.fixed_d) : json(nullptr)}};
}

FitConfig fit_config_from_json(const json& j) {
  return guarded("fit config", [&] {
    FitConfig c;
    c.data = j.at("data").get<std::string>();
    c.ingest = ingest_from(j.at("ingest"));
    c.k_init = j.at("K_init").get<int>();
    c.criterion = parse_merge_criterion(j.at("criterion").get<std::string>());
    c.selection = parse_selection_criterion(j.at("selection").get<std::string>());
    c.cov_structure = parse_cov_structure(j.at("cov_structure").get<std::string>());
    c.chain = parse_chain_structure(j.at("chain").get<std::string>());
    c.tol = j.at("tol").get<double>();
    c.max_iter = j.at("max_iter").get<int>();
    c.refine_iters = j.at("refine_iters").get<int>();
    c.kmeans_sweeps = j.at("kmeans_sweeps").get<int>();
    c.restarts = j.at("restarts").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("fixed_D").is_null()) c.fixed_d = j.at("fixed_D").get<int>();
    return c;
  });
}

json to_json(const BenchmarkConfig& c) {
  json cells = json::array();
  for (const auto& cell : c.cells) cells.push_back({{"a", cell.a}, {"b", cell.b}, {"gap", cell.gap}});
  json criteria = json::array();
  for (auto k : c.criteria) criteria.push_back(to_string(k));
  return {{"design", design_name(c.design)},
          {"cells", std::move(cells)},
          {"replicates", c.replicates},
          {"n", c.n},
          {"K_init", c.k_init},
          {"criteria", std::move(criteria)},
          {"independence", c.independence},
          {"selection", to_string(c.selection)},
          {"seed", c.seed},
          {"init",
           {{"cov_structure", to_string(c.init.structure)},
            {"kmeans_sweeps", c.init.kmeans_sweeps},
            {"restarts", c.init.restarts},
            {"tol", c.init.em.tol},
            {"max_iter", c.init.em.max_iter}}},
          {"refine", {{"tol", c.refine.tol}, {"max_iter", c.refine.max_iter}}}};
}

BenchmarkConfig benchmark_config_from_json(const json& j) {
  return guarded("benchmark config", [&] {
    BenchmarkConfig c;
    c.design = parse_design(j.at("design").get<std::string>());
    for (const auto& cell : j.at("cells")) {
      c.cells.push_back({cell.at("a").get<double>(), cell.at("b").get<double>(), cell.at("gap").get<double>()});
    }
    c.replicates = j.at("replicates").get<int>();
    c.n = j.at("n").get<Eigen::Index>();
    c.k_init = j.at("K_init").get<int>();
    c.criteria.clear();
    for (const auto& k : j.at("criteria")) c.criteria.push_back(parse_merge_criterion(k.get<std::string>()));
    c.independence = j.at("independence").get<bool>();
    c.selection = parse_selection_criterion(j.at("selection").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& init = j.at("init");
    c.init.structure = parse_cov_structure(init.at("cov_structure").get<std::string>());
    c.init.kmeans_sweeps = init.at("kmeans_sweeps").get<int>();
    c.init.restarts = init.at("restarts").get<int>();
    c.init.em.tol = init.at("tol").get<double>();
    c.init.em.max_iter = init.at("max_iter").get<int>();
    c.refine.tol = j.at("refine").at("tol").get<double>();
    c.refine.max_iter = j.at("refine").at("max_iter").get<int>();
    return c;
  });
}

json to_json(const CriteriaConfig& c) {
  return {{"data", c.data}, {"path", c.path}, {"ingest", ingest_json(c.ingest)}, {"selection", to_string(c.selection)}};
}

CriteriaConfig criteria_config_from_json(const json& j) {
  return guarded("criteria config", [&] {
    CriteriaConfig c;
    c.data = j.at("data").get<std::string>();
    c.path = j.at("path").get<std::string>();
    c.ingest = ingest_from(j.at("ingest"));
    c.selection = parse_selection_criterion(j.at("selection").get<std::string>());
    return c;
  });
}

CommandResult cmd_simulate(const SimulateConfig& config, const std::filesystem::path& out_dir) {
  if (config.n < 2) throw ConfigError("n must be at least 2");
  SimSpec spec = [&] {
    try {
      return config.design == Design::benchmark ? benchmark_design(config.a, config.b, config.n, config.seed)
                                                : nested_squares_design(config.gap, config.n, config.seed);
    } catch (const Error& e) {
      throw ConfigError(std::string("invalid design parameters: ") + e.what());
    }
  }();
  const SimResult sim = stage("simulate", [&] { return simulate(spec); });

  Artifacts art{out_dir, {}};
  art.add("data.csv", render([&](std::ostream& o) { write_dataset_csv(o, sim.data); }));
  art.add("truth.csv", render([&](std::ostream& o) { write_truth_csv(o, sim); }));
  json summary = {{"n", sim.data.size()}, {"Q", sim.data.dim()}, {"D", spec.num_states()}, {"notes", spec.notes}};
  return art.finish("simulate", to_json(config), config.seed, std::move(summary));
}

CommandResult cmd_fit(const FitConfig& config, const std::filesystem::path& out_dir, int jobs) {
  config.validate();
  const Dataset data = ingest(std::filesystem::path(config.data), config.ingest);
  if (data.size() < config.k_init) throw ConfigError("K_init exceeds the number of observations");

  InitOptions init;
  init.structure = config.cov_structure;
  init.chain = config.chain;
  init.kmeans_sweeps = config.kmeans_sweeps;
  init.restarts = config.restarts;
  init.em = {.tol = config.tol, .max_iter = config.max_iter};
  const MixtureHMM initial =
      stage("init", [&] { return init_k_components(data, config.k_init, derive_seed(config.seed, 1), init); });

  MergeOptions merge;
  merge.criterion = config.criterion;
  merge.refine = {.tol = config.tol, .max_iter = config.refine_iters};
  merge.min_clusters = config.fixed_d.value_or(1);
  merge.search.jobs = jobs;
  const MergePath path = stage("merge", [&] { return hierarchical_merge(initial, data, merge); });

  const Selection sel = stage("selection", [&] { return select_clusters(path, data, config.selection); });
  const int chosen = config.fixed_d.value_or(sel.clusters);
  const MergeStep* step = path.at(chosen);
  if (!step) throw InferenceError("selection", "merge path has no model with " + std::to_string(chosen) + " clusters");
  const FullPosterior post = stage("posterior", [&] { return e_step(step->model, data); });

  Artifacts art{out_dir, {}};
  art.add("model.json", model_to_json(step->model, post.chain.loglik).dump(2) + "\n");
  art.add("posterior.csv", render([&](std::ostream& o) { write_posterior_csv(o, post.chain.tau); }));
  art.add("merge_path.json", path_to_json(path).dump(2) + "\n");
  art.add("criteria.csv", render([&](std::ostream& o) { write_criteria_csv(o, sel.report); }));
  json summary = {{"n", data.size()},
                  {"Q", data.dim()},
                  {"selected_D", chosen},
                  {"fixed_D", config.fixed_d.has_value()},
                  {"loglik", post.chain.loglik}};
  json inputs = json::array({input_entry(config.data)});
  return art.finish("fit", to_json(config), config.seed, std::move(summary), std::move(inputs));
}

CommandResult cmd_benchmark(const BenchmarkConfig& config, const std::filesystem::path& out_dir) {
  if (config.jobs < 1) throw ConfigError("--jobs must be at least 1");
  const BenchmarkReport report = run_benchmark(config);
  int failures = 0;
  for (const auto& r : report.rows) failures += r.failures;

  Artifacts art{out_dir, {}};
  art.add("benchmark.csv", render([&](std::ostream& o) { write_benchmark_csv(o, report); }));
  art.add("replicates.csv", render([&](std::ostream& o) { write_replicates_csv(o, report, config); }));
  json failed = json::array();
  for (const auto& o : report.replicates) {
    if (!o.failed) continue;
    const auto& c = config.cells[o.cell];
    failed.push_back({{"a", c.a}, {"b", c.b}, {"gap", c.gap}, {"replicate", o.replicate}, {"criterion", o.method},
                      {"error", o.error}});
  }
  json summary = {{"rows", report.rows.size()},
                  {"replicates", config.replicates},
                  {"failures", failures},
                  {"failed_runs", std::move(failed)},
                  {"replicate_seeds", report.seeds}};
  return art.finish("benchmark", to_json(config), config.seed, std::move(summary));
}

CommandResult cmd_criteria(const CriteriaConfig& config, const std::filesystem::path& out_dir) {
  const Dataset data = ingest(std::filesystem::path(config.data), config.ingest);
  const MergePath path = [&] {
    try {
      return path_from_json(json::parse(read_file(config.path)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("merge path is not valid JSON: ") + e.what(), 0);
    }
  }();
  if (path.steps.empty()) throw ParseError("merge path has no steps", 0);
  if (path.steps.front().model.dim() != data.dim()) throw ConfigError("merge path and data differ in dimension");
  const Selection sel = stage("selection", [&] { return select_clusters(path, data, config.selection); });

  Artifacts art{out_dir, {}};
  art.add("criteria.csv", render([&](std::ostream& o) { write_criteria_csv(o, sel.report); }));
  json summary = {{"selected_D", sel.clusters}, {"selection", to_string(config.selection)}};
  json inputs = json::array({input_entry(config.data), input_entry(config.path)});
  return art.finish("criteria", to_json(config), 0, std::move(summary), std::move(inputs));
}

CommandResult rerun_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out_dir, int jobs) {
  const json m = [&] {
    try {
      return json::parse(read_file(manifest));
    } catch (const json::exception& e) {
      throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), 0);
    }
  }();
  const std::string command = guarded("manifest", [&] { return m.at("command").get<std::string>(); });
  const json& config = guarded("manifest", [&]() -> const json& { return m.at("config"); });
  if (hex64(fnv1a(config.dump())) != m.value("config_hash", "")) {
    throw ConfigError("manifest config does not match its recorded hash");
  }
  for (const auto& in : m.value("inputs", json::array())) {
    const auto file = in.at("file").get<std::string>();
    if (hex64(fnv1a(read_file(file))) != in.at("fnv1a").get<std::string>()) {
      throw ConfigError("input " + file + " changed since the manifest was written");
    }
  }
  if (command == "simulate") return cmd_simulate(simulate_config_from_json(config), out_dir);
  if (command == "fit") return cmd_fit(fit_config_from_json(config), out_dir, jobs);
  if (command == "criteria") return cmd_criteria(criteria_config_from_json(config), out_dir);
  if (command == "benchmark") {
    BenchmarkConfig c = benchmark_config_from_json(config);
    c.jobs = jobs;
    return cmd_benchmark(c, out_dir);
  }
  throw ConfigError("unknown command '" + command + "' in manifest");
}

}  // namespace hmmmix
