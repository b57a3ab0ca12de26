// Copyright 2026 The Blockmodel Authors
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

#include <algorithm>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blockmodel/cgm.hpp"
#include "blockmodel/degree_corrected.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/exact.hpp"
#include "blockmodel/inference.hpp"
#include "blockmodel/io.hpp"
#include "blockmodel/modularity.hpp"
#include "blockmodel/variational.hpp"

namespace py = pybind11;
namespace bm = blockmodel;

namespace {

bm::Labels to_labels(const std::vector<int>& z, int K) {
  int k = K;
  for (int a : z) k = std::max(k, a + 1);
  return bm::Labels(z, k);
}

py::dict var_fit_dict(const bm::VarFit& f) {
  py::dict d;
  d["params"] = f.params;
  d["q"] = f.q.q();
  d["elbo"] = f.elbo;
  d["iterations"] = f.iterations;
  d["converged"] = f.converged;
  d["restarts_used"] = f.restarts_used;
  d["labels"] = f.q.argmax().values();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic blockmodel estimation";

  py::register_exception<bm::DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<bm::FitError>(m, "FitError", PyExc_RuntimeError);
  py::register_exception<bm::BudgetError>(m, "BudgetError", PyExc_RuntimeError);
  py::register_exception<bm::ReplicateFailureError>(m, "ReplicateFailureError",
                                                    PyExc_RuntimeError);

  py::class_<bm::ModelParams>(m, "ModelParams")
      .def(py::init<double, bm::Vector, bm::Matrix>(), py::arg("rho"), py::arg("pi"),
           py::arg("S"))
      .def_static("from_pi_H", &bm::ModelParams::from_pi_H, py::arg("pi"), py::arg("H"))
      .def_property_readonly("K", &bm::ModelParams::K)
      .def_property_readonly("rho", &bm::ModelParams::rho)
      .def_property_readonly("pi", &bm::ModelParams::pi)
      .def_property_readonly("S", &bm::ModelParams::S)
      .def_property_readonly("H", &bm::ModelParams::H)
      .def("to_json", [](const bm::ModelParams& p) { return bm::io::params_to_json(p).dump(); })
      .def_static("from_json", [](const std::string& s) {
        return bm::io::params_from_json(nlohmann::json::parse(s));
      })
      .def("__repr__", [](const bm::ModelParams& p) {
        return "<ModelParams K=" + std::to_string(p.K()) + " rho=" + bm::io::format_double(p.rho()) + ">";
      });

  py::class_<bm::Graph>(m, "Graph")
      .def(py::init([](int n, const std::vector<std::pair<int, int>>& edges) {
             return bm::Graph(n, edges);
           }),
           py::arg("n"), py::arg("edges"))
      .def_static("from_adjacency", &bm::Graph::from_adjacency)
      .def_property_readonly("n", &bm::Graph::n)
      .def_property_readonly("num_edges", &bm::Graph::num_edges)
      .def("edges", &bm::Graph::edges)
      .def("adjacency", &bm::Graph::adjacency)
      .def("average_degree", &bm::Graph::average_degree);

  m.def("sample_graph", [](const bm::ModelParams& p, int n, std::uint64_t seed) {
    const bm::GraphSample s = bm::sample_graph(p, n, seed);
    return py::make_tuple(s.graph, s.labels.values());
  }, py::arg("params"), py::arg("n"), py::arg("seed"));

  m.def("complete_loglik", [](const bm::Graph& g, const std::vector<int>& z, const bm::ModelParams& p) {
    return bm::complete_loglik(g, to_labels(z, p.K()), p);
  }, py::arg("graph"), py::arg("labels"), py::arg("params"));

  m.def("cgm_mle", [](const bm::Graph& g, const std::vector<int>& z, int K) {
    const bm::CgmFit f = bm::cgm_mle(g, to_labels(z, K));
    py::dict d;
    d["pi"] = f.pi_hat;
    d["H"] = f.H_hat;
    d["loglik"] = f.loglik;
    d["empty_block"] = f.empty_block;
    return d;
  }, py::arg("graph"), py::arg("labels"), py::arg("K") = 0);

  m.def("marginal_loglik", [](const bm::Graph& g, const bm::ModelParams& p, int threads) {
    return bm::marginal_loglik(g, p, threads);
  }, py::arg("graph"), py::arg("params"), py::arg("threads") = 1);

  m.def("exact_gm_mle", [](const bm::Graph& g, int K, std::uint64_t seed, int restarts) {
    bm::ExactMleConfig c;
    c.seed = seed;
    c.restarts = restarts;
    const bm::ExactMleResult r = bm::exact_gm_mle(g, K, c);
    py::dict d;
    d["params"] = r.params;
    d["log_g"] = r.log_g;
    d["converged"] = r.converged;
    d["iterations"] = r.iterations;
    return d;
  }, py::arg("graph"), py::arg("K"), py::arg("seed") = 0, py::arg("restarts") = 5);

  m.def("elbo", [](const bm::Matrix& q, const bm::ModelParams& p, const bm::Graph& g) {
    return bm::elbo(bm::MeanFieldPosterior(q), p, g);
  }, py::arg("q"), py::arg("params"), py::arg("graph"));

  m.def("fit_variational", [](const bm::Graph& g, int K, int restarts, std::uint64_t seed,
                              double tol, int max_iters, int threads) {
    bm::VarConfig c;
    c.restarts = restarts;
    c.seed = seed;
    c.tol = tol;
    c.max_iters = max_iters;
    c.threads = threads;
    return var_fit_dict(bm::fit_variational(g, K, c));
  }, py::arg("graph"), py::arg("K"), py::arg("restarts") = 1, py::arg("seed") = 0,
     py::arg("tol") = 1e-8, py::arg("max_iters") = 500, py::arg("threads") = 1);

  m.def("modularity_Qn", [](const bm::Graph& g, const std::vector<int>& z, int K) {
    return bm::modularity_Qn(g, to_labels(z, K));
  }, py::arg("graph"), py::arg("labels"), py::arg("K") = 0);

  m.def("profile_label_search", [](const bm::Graph& g, int K, int restarts, std::uint64_t seed) {
    bm::ProfileSearchConfig c;
    c.restarts = restarts;
    c.seed = seed;
    const bm::ProfileSearchResult r = bm::profile_label_search(g, K, c);
    return py::make_tuple(r.labels.values(), r.Qn);
  }, py::arg("graph"), py::arg("K"), py::arg("restarts") = 5, py::arg("seed") = 0);

  m.def("wilks_degrees_of_freedom", &bm::wilks_degrees_of_freedom);
  m.def("wilks_cgm", [](const bm::Graph& g, const std::vector<int>& z, const bm::ModelParams& p) {
    return bm::wilks_cgm(g, to_labels(z, p.K()), p);
  }, py::arg("graph"), py::arg("labels"), py::arg("theta0"));
  m.def("wilks_variational", [](const bm::Graph& g, int K, const bm::ModelParams& p, std::uint64_t seed) {
    bm::VarConfig c;
    c.seed = seed;
    return bm::wilks_variational(g, K, p, c);
  }, py::arg("graph"), py::arg("K"), py::arg("theta0"), py::arg("seed") = 0);

  m.def("asymptotic_cov", [](const bm::ModelParams& p, int n) {
    const bm::AsymptoticCov c = bm::asymptotic_cov(p, n);
    return py::make_tuple(c.sigma1, c.sigma2);
  }, py::arg("params"), py::arg("n"));

  m.def("parametric_bootstrap", [](const bm::Graph& g, int K, int B, std::uint64_t seed, int threads) {
    bm::BootstrapConfig c;
    c.seed = seed;
    c.threads = threads;
    const bm::BootstrapResult r = bm::parametric_bootstrap(g, K, B, c);
    py::dict d;
    d["fitted"] = r.fitted;
    d["failures"] = r.failures;
    d["lambda_hat"] = r.lambda_hat;
    d["estimates"] = r.summary.estimates;
    d["cov_varpi"] = r.summary.cov_varpi;
    d["cov_nu"] = r.summary.cov_nu;
    return d;
  }, py::arg("graph"), py::arg("K"), py::arg("B"), py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("dc_param_count", &bm::dc_param_count);
  m.def("dc_to_blockmodel", [](const std::string& json) {
    return bm::dc_to_blockmodel(bm::dc_from_json(nlohmann::json::parse(json)));
  }, py::arg("json"));
  m.def("fit_submodel", [](const bm::Graph& g, int U, int V, std::uint64_t seed) {
    bm::DcFitConfig c;
    c.seed = seed;
    const bm::DcFit f = bm::fit_submodel(g, U, V, c);
    py::dict d = var_fit_dict(f.fit);
    d["dc"] = bm::dc_to_json(f.dc).dump();
    return d;
  }, py::arg("graph"), py::arg("U"), py::arg("V"), py::arg("seed") = 0);
}
