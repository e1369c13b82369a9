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

#include "hmmmix/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hmmmix/errors.hpp"
#include "hmmmix/format.hpp"

namespace hmmmix {

using nlohmann::json;

TableFormat parse_table_format(std::string_view text) {
  if (text == "csv") return TableFormat::csv;
  if (text == "tsv") return TableFormat::tsv;
  throw ConfigError("unknown table format '" + std::string(text) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// RFC 4180 field splitting for a single physical line.
std::vector<std::string> split_fields(const std::string& line, char delim, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && trim(field).empty()) {
      quoted = true;
      was_quoted = true;
      field.clear();
    } else if (c == delim) {
      out.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line_no);
  out.push_back(was_quoted ? field : std::string(trim(field)));
  return out;
}

bool parse_number(std::string_view text, double& value) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size() && std::isfinite(value);
}

}  // namespace

Dataset ingest(std::istream& in, const IngestOptions& options, std::string source) {
  const char delim = options.format == TableFormat::csv ? ',' : '\t';
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  std::size_t blank_at = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      if (!blank_at) blank_at = line_no;
      continue;
    }
    if (blank_at) throw ParseError("empty line inside the table", blank_at);
    rows.push_back(split_fields(line, delim, line_no));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw ParseError("no data rows", 0);

  bool has_header = options.header == HeaderMode::present;
  if (options.header == HeaderMode::detect) {
    double v;
    for (const auto& cell : rows.front()) {
      if (!parse_number(cell, v)) has_header = true;
    }
  }
  const std::size_t width = rows.front().size();
  std::vector<std::string> names;
  if (has_header) {
    names = rows.front();
  } else {
    for (std::size_t c = 0; c < width; ++c) names.push_back("x" + std::to_string(c + 1));
  }
  int state_col = -1, comp_col = -1;
  if (has_header) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (names[c] == options.state_column) state_col = static_cast<int>(c);
      if (names[c] == options.component_column) comp_col = static_cast<int>(c);
    }
  }
  std::vector<std::size_t> coord_cols;
  for (std::size_t c = 0; c < width; ++c) {
    if (static_cast<int>(c) != state_col && static_cast<int>(c) != comp_col) coord_cols.push_back(c);
  }
  if (coord_cols.empty()) throw ParseError("no coordinate columns", line_numbers.front());

  const std::size_t first = has_header ? 1 : 0;
  const auto n = static_cast<Eigen::Index>(rows.size() - first);
  Dataset data;
  data.source = std::move(source);
  data.observations.resize(n, static_cast<Eigen::Index>(coord_cols.size()));
  std::vector<int> states, comps;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t ln = line_numbers[r];
    if (row.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(row.size()), ln);
    }
    const auto t = static_cast<Eigen::Index>(r - first);
    for (std::size_t j = 0; j < coord_cols.size(); ++j) {
      const std::string& cell = row[coord_cols[j]];
      double v;
      if (trim(cell).empty()) throw ParseError("missing value in column " + names[coord_cols[j]], ln);
      if (!parse_number(cell, v)) throw ParseError("non-numeric value '" + cell + "'", ln);
      data.observations(t, static_cast<Eigen::Index>(j)) = v;
    }
    auto label = [&](int col, std::vector<int>& into) {
      if (col < 0) return;
      int v = 0;
      const std::string_view cell = trim(row[static_cast<std::size_t>(col)]);
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || v < 1) {
        throw ParseError("invalid label '" + std::string(cell) + "' (labels are 1-based)", ln);
      }
      into.push_back(v - 1);
    };
    label(state_col, states);
    label(comp_col, comps);
  }
  if (state_col >= 0) data.true_states = std::move(states);
  if (comp_col >= 0) data.true_components = std::move(comps);
  try {
    data.validate();
  } catch (const Error& e) {
    throw ParseError(data.source + ": " + e.what(), 0);
  }
  return data;
}

Dataset ingest(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return ingest(in, options, path.string());
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
  if (data.true_states) out << ",state";
  if (data.true_components) out << ",component";
  out << '\n';
  for (Eigen::Index t = 0; t < data.size(); ++t) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << (j ? "," : "") << format_double(data.observations(t, j));
    if (data.true_states) out << ',' << (*data.true_states)[static_cast<std::size_t>(t)] + 1;
    if (data.true_components) out << ',' << (*data.true_components)[static_cast<std::size_t>(t)] + 1;
    out << '\n';
  }
}

void write_posterior_csv(std::ostream& out, const Eigen::MatrixXd& tau) {
  for (Eigen::Index d = 0; d < tau.cols(); ++d) out << "tau_" << (d + 1) << ',';
  out << "map_state\n";
  const auto labels = map_classify(tau);
  for (Eigen::Index t = 0; t < tau.rows(); ++t) {
    for (Eigen::Index d = 0; d < tau.cols(); ++d) out << format_double(tau(t, d)) << ',';
    out << (labels[static_cast<std::size_t>(t)] + 1) << '\n';
  }
}

void write_truth_csv(std::ostream& out, const SimResult& sim) {
  out << "state,component";
  for (Eigen::Index d = 0; d < sim.true_tau.cols(); ++d) out << ",tau_" << (d + 1);
  out << '\n';
  for (std::size_t t = 0; t < sim.states.size(); ++t) {
    out << sim.states[t] + 1 << ',' << sim.components[t] + 1;
    for (Eigen::Index d = 0; d < sim.true_tau.cols(); ++d) {
      out << ',' << format_double(sim.true_tau(static_cast<Eigen::Index>(t), d));
    }
    out << '\n';
  }
}

namespace {

std::vector<double> flatten(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

Eigen::MatrixXd unflatten(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) throw ParseError("matrix has the wrong size", 0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
  }
  return m;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json model_to_json(const MixtureHMM& model, std::optional<double> loglik) {
  json j;
  j["D"] = model.num_states();
  j["Q"] = model.dim();
  j["component_counts"] = model.component_counts();
  j["trans"] = flatten(model.trans.matrix());
  json weights = json::array(), means = json::array(), covs = json::array();
  for (const auto& s : model.states) {
    weights.push_back(to_std(s.weights));
    json m = json::array(), c = json::array();
    for (const auto& g : s.components) {
      m.push_back(to_std(g.mean));
      c.push_back(flatten(g.covariance));
    }
    means.push_back(std::move(m));
    covs.push_back(std::move(c));
  }
  j["weights"] = std::move(weights);
  j["means"] = std::move(means);
  j["covariances"] = std::move(covs);
  j["cov_structure"] = std::string(to_string(model.cov_structure));
  j["chain"] = std::string(to_string(model.chain));
  j["loglik"] = loglik ? json(*loglik) : json(nullptr);
  return j;
}

MixtureHMM model_from_json(const json& j) {
  try {
    MixtureHMM model;
    const int d = j.at("D").get<int>();
    const Eigen::Index q = j.at("Q").get<Eigen::Index>();
    model.trans = TransitionMatrix(unflatten(j.at("trans").get<std::vector<double>>(), d, d));
    model.cov_structure = parse_cov_structure(j.at("cov_structure").get<std::string>());
    model.chain = j.contains("chain") ? parse_chain_structure(j.at("chain").get<std::string>())
                                      : ChainStructure::markov;
    const auto counts = j.at("component_counts").get<std::vector<int>>();
    if (static_cast<int>(counts.size()) != d) throw ParseError("component_counts length differs from D", 0);
    for (int s = 0; s < d; ++s) {
      MixtureState st;
      st.weights = from_std(j.at("weights").at(s).get<std::vector<double>>());
      for (int k = 0; k < counts[static_cast<std::size_t>(s)]; ++k) {
        GaussianParams g;
        g.mean = from_std(j.at("means").at(s).at(k).get<std::vector<double>>());
        g.covariance = unflatten(j.at("covariances").at(s).at(k).get<std::vector<double>>(), q, q);
        st.components.push_back(std::move(g));
      }
      model.states.push_back(std::move(st));
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what(), 0);
  }
}

json path_to_json(const MergePath& path) {
  json j;
  j["criterion"] = std::string(to_string(path.criterion));
  j["total_components"] = path.total_components();
  j["nu_convention"] = "D(D-1) transitions + (K-D) weights + K per-component parameters; initial law tied to stationary";
  json steps = json::array();
  for (const auto& s : path.steps) {
    json e;
    e["G"] = s.clusters;
    e["merged_pair"] = s.merged_pair ? json::array({s.merged_pair->first, s.merged_pair->second}) : json(nullptr);
    e["criterion"] = std::string(to_string(path.criterion));
    e["criterion_value"] = s.merged_pair ? json(s.criterion_value) : json(nullptr);
    e["plugin_loglik"] = s.plugin_loglik;
    e["loglik"] = s.loglik;
    e["entropy_S"] = s.entropy_s;
    e["entropy_Z_given_S"] = s.entropy_z_given_s;
    e["nu"] = s.nu;
    e["refined"] = s.refined;
    e["model"] = model_to_json(s.model, s.loglik);
    steps.push_back(std::move(e));
  }
  j["steps"] = std::move(steps);
  return j;
}

MergePath path_from_json(const json& j) {
  try {
    MergePath path;
    path.criterion = parse_merge_criterion(j.at("criterion").get<std::string>());
    for (const auto& e : j.at("steps")) {
      MergeStep s;
      s.clusters = e.at("G").get<int>();
      if (!e.at("merged_pair").is_null()) {
        s.merged_pair = std::pair{e.at("merged_pair").at(0).get<int>(), e.at("merged_pair").at(1).get<int>()};
        s.criterion_value = e.at("criterion_value").get<double>();
      }
      s.plugin_loglik = e.at("plugin_loglik").get<double>();
      s.loglik = e.at("loglik").get<double>();
      s.entropy_s = e.at("entropy_S").get<double>();
      s.entropy_z_given_s = e.at("entropy_Z_given_S").get<double>();
      s.nu = e.at("nu").get<int>();
      s.refined = e.value("refined", true);
      s.model = model_from_json(e.at("model"));
      path.steps.push_back(std::move(s));
    }
    return path;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed merge path JSON: ") + e.what(), 0);
  }
}

void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report) {
  out << "a,b,gap,criterion,mean_mse,sd_mse,mean_rate,sd_rate,cluster_hit_rate,"
         "hit_rate_BIC,hit_rate_ICL,hit_rate_ICL_S,successes,failures\n";
  for (const auto& r : report.rows) {
    out << format_double(r.cell.a) << ',' << format_double(r.cell.b) << ',' << format_double(r.cell.gap) << ','
        << r.method << ',' << format_double(r.mean_mse) << ',' << format_double(r.sd_mse) << ','
        << format_double(r.mean_rate) << ',' << format_double(r.sd_rate) << ','
        << format_double(r.cluster_hit_rate) << ',' << format_double(r.hit_rate_bic) << ','
        << format_double(r.hit_rate_icl) << ',' << format_double(r.hit_rate_icl_s) << ',' << r.successes << ','
        << r.failures << '\n';
  }
}

void write_replicates_csv(std::ostream& out, const BenchmarkReport& report, const BenchmarkConfig& config) {
  out << "a,b,gap,replicate,seed,criterion,failed,mse,rate,D_BIC,D_ICL,D_ICL_S,error\n";
  for (const auto& o : report.replicates) {
    const auto& c = config.cells[o.cell];
    const std::size_t task = o.cell * static_cast<std::size_t>(config.replicates) + static_cast<std::size_t>(o.replicate);
    std::string err = o.error;
    for (auto& ch : err) {
      if (ch == '"') ch = '\'';
    }
    out << format_double(c.a) << ',' << format_double(c.b) << ',' << format_double(c.gap) << ',' << o.replicate
        << ',' << report.seeds[task] << ',' << o.method << ',' << (o.failed ? 1 : 0) << ','
        << format_double(o.mse) << ',' << format_double(o.rate) << ',' << o.selected_bic << ','
        << o.selected_icl << ',' << o.selected_icl_s << ",\"" << err << "\"\n";
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace hmmmix
