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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmmmix/commands.hpp"
#include "hmmmix/errors.hpp"
#include "hmmmix/hmm_engine.hpp"
#include "hmmmix/io.hpp"
#include "hmmmix/merge_engine.hpp"
#include "hmmmix/rng.hpp"
#include "hmmmix/selection.hpp"
#include "hmmmix/simbench.hpp"

namespace py = pybind11;
using namespace hmmmix;

namespace {

Dataset as_dataset(const Eigen::MatrixXd& x) {
  Dataset d;
  d.observations = x;
  d.source = "<python>";
  d.validate();
  return d;
}

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

MixtureHMM model_from_py(const py::object& model) {
  const std::string text = py::module_::import("json").attr("dumps")(model).cast<std::string>();
  return model_from_json(nlohmann::json::parse(text));
}

py::dict criteria_dict(const CriteriaReport& report) {
  std::vector<int> g, nu;
  std::vector<double> ll, b, i, is, hs, hz;
  for (const auto& r : report.records) {
    g.push_back(r.clusters);
    nu.push_back(r.nu);
    ll.push_back(r.loglik);
    b.push_back(r.bic);
    i.push_back(r.icl);
    is.push_back(r.icl_s);
    hs.push_back(r.entropy_s);
    hz.push_back(r.entropy_z_given_s);
  }
  py::dict d;
  d["G"] = g;
  d["loglik"] = ll;
  d["nu"] = nu;
  d["BIC"] = b;
  d["ICL"] = i;
  d["ICL_S"] = is;
  d["H_S"] = hs;
  d["H_Z_given_S"] = hz;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HMMs with Gaussian-mixture emissions: fitting, merging and model selection";
  m.attr("__version__") = HMMMIX_VERSION;

  static py::exception<Error> base(m, "HmmmixError");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<EmptyStateError>(m, "EmptyStateError", base.ptr());
  py::register_exception<InferenceError>(m, "InferenceError", base.ptr());

  m.def(
      "forward_backward",
      [](const Eigen::MatrixXd& log_emissions, const Eigen::MatrixXd& trans, bool entropy) {
        ForwardBackwardOptions opt;
        opt.compute_entropy = entropy;
        const TransitionMatrix p(trans);
        const auto post = forward_backward(log_emissions, p, stationary_distribution(p), opt);
        py::dict d;
        d["tau"] = post.tau;
        d["eta_sum"] = post.eta_sum;
        d["loglik"] = post.loglik;
        if (post.entropy) d["entropy"] = *post.entropy;
        return d;
      },
      py::arg("log_emissions"), py::arg("trans"), py::arg("entropy") = false,
      "Scaled forward-backward with the stationary initial law. log_emissions is n x D.");

  m.def(
      "stationary_distribution",
      [](const Eigen::MatrixXd& trans) -> Eigen::VectorXd { return stationary_distribution(TransitionMatrix(trans)); },
      py::arg("trans"));

  m.def(
      "simulate",
      [](const std::string& design, double a, double b, double gap, Eigen::Index n, std::uint64_t seed) {
        const SimSpec spec = design == "nested" ? nested_squares_design(gap, n, seed)
                                                : benchmark_design(a, b, n, seed);
        if (design != "nested" && design != "benchmark") throw ConfigError("unknown design '" + design + "'");
        const SimResult sim = simulate(spec);
        py::dict d;
        d["X"] = sim.data.observations;
        d["states"] = sim.states;
        d["components"] = sim.components;
        d["tau"] = sim.true_tau;
        if (auto truth = spec.true_model()) d["model"] = to_py(model_to_json(*truth));
        return d;
      },
      py::arg("design") = "benchmark", py::arg("a") = 0.9, py::arg("b") = 1.0, py::arg("gap") = 0.2,
      py::arg("n") = 800, py::arg("seed") = 1);

  m.def(
      "fit",
      [](const Eigen::MatrixXd& x, int k_init, const std::string& criterion, const std::string& selection,
         const std::string& cov, const std::string& chain, std::optional<int> fixed_d, std::uint64_t seed,
         int refine_iters, int jobs) {
        const Dataset data = as_dataset(x);
        if (fixed_d && (*fixed_d < 1 || *fixed_d > k_init)) throw ConfigError("fixed D must lie between 1 and K_init");
        InitOptions init;
        init.structure = parse_cov_structure(cov);
        init.chain = parse_chain_structure(chain);
        MergeOptions merge;
        merge.criterion = parse_merge_criterion(criterion);
        merge.refine.max_iter = refine_iters;
        merge.min_clusters = fixed_d.value_or(1);
        merge.search.jobs = jobs;
        const auto sel_kind = parse_selection_criterion(selection);

        py::gil_scoped_release release;
        const MixtureHMM initial = init_k_components(data, k_init, derive_seed(seed, 1), init);
        const MergePath path = hierarchical_merge(initial, data, merge);
        const Selection sel = select_clusters(path, data, sel_kind);
        const int chosen = fixed_d.value_or(sel.clusters);
        const MergeStep* step = path.at(chosen);
        const FullPosterior post = e_step(step->model, data);
        py::gil_scoped_acquire acquire;

        py::dict d;
        d["D"] = chosen;
        d["model"] = to_py(model_to_json(step->model, post.chain.loglik));
        d["tau"] = post.chain.tau;
        d["labels"] = map_classify(post.chain.tau);
        d["loglik"] = post.chain.loglik;
        d["criteria"] = criteria_dict(sel.report);
        d["path"] = to_py(path_to_json(path));
        return d;
      },
      py::arg("X"), py::arg("k_init") = 10, py::arg("criterion") = "X", py::arg("selection") = "ICL_S",
      py::arg("cov") = "spherical", py::arg("chain") = "markov", py::arg("fixed_d") = py::none(),
      py::arg("seed") = 1, py::arg("refine_iters") = 10, py::arg("jobs") = 1,
      "Fit K_init components, merge greedily and select the number of clusters.");

  m.def(
      "posterior",
      [](const py::object& model, const Eigen::MatrixXd& x) {
        const MixtureHMM hmm = model_from_py(model);
        const Dataset data = as_dataset(x);
        const auto post = e_step(hmm, data, {.keep_eta = true, .compute_entropy = true});
        const ModelScore score = score_model(hmm, data);
        py::dict d;
        d["tau"] = post.chain.tau;
        d["loglik"] = post.chain.loglik;
        d["entropy_S"] = score.entropy_s;
        d["entropy_Z_given_S"] = score.entropy_z_given_s;
        return d;
      },
      py::arg("model"), py::arg("X"), "State posteriors and entropies of a model dict.");

  m.def(
      "merge",
      [](const py::object& model, int k, int l) { return to_py(model_to_json(merge_pair(model_from_py(model), k, l))); },
      py::arg("model"), py::arg("k"), py::arg("l"), "Merge clusters k and l (0-based) of a model dict.");

  m.def(
      "criteria",
      [](const py::object& model, const Eigen::MatrixXd& x) {
        const MixtureHMM hmm = model_from_py(model);
        const auto r = evaluate_criteria(hmm, as_dataset(x));
        py::dict d;
        d["loglik"] = r.loglik;
        d["nu"] = r.nu;
        d["BIC"] = r.bic;
        d["ICL"] = r.icl;
        d["ICL_S"] = r.icl_s;
        d["H_S"] = r.entropy_s;
        d["H_Z_given_S"] = r.entropy_z_given_s;
        return d;
      },
      py::arg("model"), py::arg("X"));

  m.def(
      "read_table",
      [](const std::string& path, const std::string& format, const std::string& header) {
        IngestOptions o;
        o.format = parse_table_format(format);
        o.header = header == "yes" ? HeaderMode::present : header == "no" ? HeaderMode::absent : HeaderMode::detect;
        const Dataset d = ingest(std::filesystem::path(path), o);
        py::dict out;
        out["X"] = d.observations;
        if (d.true_states) out["states"] = *d.true_states;
        if (d.true_components) out["components"] = *d.true_components;
        return out;
      },
      py::arg("path"), py::arg("format") = "csv", py::arg("header") = "auto");

  m.def(
      "mse", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return mse(a, b); }, py::arg("tau_hat"),
      py::arg("tau"));
  m.def(
      "correct_rate", [](const std::vector<int>& a, const std::vector<int>& b) { return correct_rate(a, b); },
      py::arg("labels"), py::arg("truth"));
}
