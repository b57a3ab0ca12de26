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

// blockmodel: generate graphs, fit blockmodels, bootstrap, run experiments.
//
// Exit codes: 0 ok, 2 usage or parse error, 3 non-convergence, 4 enumeration
// budget exceeded, 5 too many failed replicates.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "blockmodel/cgm.hpp"
#include "blockmodel/degree_corrected.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/exact.hpp"
#include "blockmodel/experiments.hpp"
#include "blockmodel/inference.hpp"
#include "blockmodel/io.hpp"
#include "blockmodel/model.hpp"
#include "blockmodel/modularity.hpp"
#include "blockmodel/variational.hpp"

namespace bm = blockmodel;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitBudget = 4;
constexpr int kExitReplicates = 5;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 1;

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("BLOCKMODEL_SEED")) {
      try {
        std::size_t pos = 0;
        const auto v = std::stoull(env, &pos);
        if (pos == std::string(env).size()) return v;
      } catch (const std::exception&) {
      }
      throw UsageError("BLOCKMODEL_SEED is not an unsigned integer");
    }
    return 0;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "master seed (default: $BLOCKMODEL_SEED or 0)");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

void emit_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw bm::io::ParseError("cannot write " + path);
  out << j.dump(2) << '\n';
}

// Reads plain or degree-corrected parameters.
bm::ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bm::io::ParseError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw bm::io::ParseError(path + ": " + e.what());
  }
  if (j.contains("U")) return bm::dc_to_blockmodel(bm::dc_from_json(j));
  return bm::io::params_from_json(j);
}

// ---- generate ----

struct GenerateArgs {
  Common common;
  std::string params;
  int n = 0;
  std::string out;
  std::string labels_out;
};

int run_generate(const GenerateArgs& a) {
  const bm::ModelParams params = load_params(a.params);
  const bm::GraphSample s = bm::sample_graph(params, a.n, a.common.resolved_seed());
  bm::io::write_graph(a.out, s.graph);
  if (!a.labels_out.empty()) bm::io::write_labels(a.labels_out, s.labels);
  const double pairs = 0.5 * static_cast<double>(a.n) * (a.n - 1);
  std::cout << "n " << a.n << "\nedges " << s.graph.num_edges() << "\ndensity "
            << bm::io::format_double(pairs > 0 ? s.graph.num_edges() / pairs : 0.0) << '\n';
  return 0;
}

// ---- fit ----

struct FitArgs {
  Common common;
  std::string method;
  std::string graph;
  std::string labels;
  std::string labels_out;
  std::string out;
  int K = 0;
  int U = 0;
  int V = 0;
  int restarts = 1;
  double tol = 1e-8;
  int max_iters = 500;
  std::string init = "spectral";
  std::vector<double> known_alpha;
  bool free_class_probs = false;
};

bm::VarInit parse_init(const std::string& s) {
  if (s == "spectral") return bm::VarInit::kSpectral;
  if (s == "random") return bm::VarInit::kRandom;
  throw UsageError("--init must be spectral or random");
}

bm::VarConfig var_config(const Common& c, int restarts, double tol, int max_iters,
                         const std::string& init) {
  bm::VarConfig vc;
  vc.seed = c.resolved_seed();
  vc.threads = c.threads;
  vc.restarts = restarts;
  vc.tol = tol;
  vc.max_iters = max_iters;
  vc.init = parse_init(init);
  return vc;
}

int run_fit(const FitArgs& a) {
  const bm::Graph graph = bm::io::read_graph(a.graph);
  json out{{"method", a.method}, {"n", graph.n()}, {"edges", graph.num_edges()}};
  bool converged = true;
  if (a.method == "cgm") {
    if (a.labels.empty()) throw UsageError("--method cgm requires --labels");
    if (a.K < 1) throw UsageError("--K is required");
    const bm::Labels labels = bm::io::read_labels(a.labels, a.K);
    const bm::CgmFit fit = bm::cgm_mle(graph, labels);
    out["params"] = bm::io::params_to_json(fit.params());
    out["loglik"] = fit.loglik;
    out["iterations"] = 0;
  } else if (a.method == "exact-ml") {
    if (a.K < 1) throw UsageError("--K is required");
    bm::ExactMleConfig cfg;
    cfg.seed = a.common.resolved_seed();
    cfg.threads = a.common.threads;
    cfg.restarts = a.restarts;
    cfg.max_iters = std::max(a.max_iters, 1);
    const bm::ExactMleResult r = bm::exact_gm_mle(graph, a.K, cfg);
    out["params"] = bm::io::params_to_json(r.params);
    out["log_marginal"] = r.log_g;
    out["iterations"] = r.iterations;
    converged = r.converged;
  } else if (a.method == "variational") {
    if (a.K < 1) throw UsageError("--K is required");
    const bm::VarFit fit = bm::fit_variational(
        graph, a.K, var_config(a.common, a.restarts, a.tol, a.max_iters, a.init));
    out["params"] = bm::io::params_to_json(fit.params);
    out["elbo"] = fit.elbo;
    out["iterations"] = fit.iterations;
    out["best_restart"] = fit.best_restart;
    converged = fit.converged;
    if (!a.labels_out.empty()) bm::io::write_labels(a.labels_out, fit.q.argmax());
  } else if (a.method == "profile") {
    if (a.K < 1) throw UsageError("--K is required");
    bm::ProfileSearchConfig pc;
    pc.seed = a.common.resolved_seed();
    pc.restarts = a.restarts;
    const bm::ProfileSearchResult r = bm::profile_label_search(graph, a.K, pc);
    const bm::CgmFit fit = bm::cgm_mle(graph, r.labels);
    if (!fit.empty_block) out["params"] = bm::io::params_to_json(fit.params());
    out["Qn"] = r.Qn;
    out["loglik"] = fit.loglik;
    out["iterations"] = r.sweeps;
    if (!a.labels_out.empty()) bm::io::write_labels(a.labels_out, r.labels);
  } else if (a.method == "dc") {
    if (a.U < 1 || a.V < 1) throw UsageError("--method dc requires --U and --V");
    bm::DcFitConfig cfg;
    cfg.seed = a.common.resolved_seed();
    cfg.threads = a.common.threads;
    cfg.restarts = a.restarts;
    cfg.tol = a.tol;
    cfg.max_iters = a.max_iters;
    cfg.init = parse_init(a.init);
    cfg.free_class_probs = a.free_class_probs;
    if (!a.known_alpha.empty()) {
      cfg.known_alpha = true;
      cfg.alpha = Eigen::Map<const bm::Vector>(a.known_alpha.data(),
                                               static_cast<Eigen::Index>(a.known_alpha.size()));
    }
    const bm::DcFit fit = bm::fit_submodel(graph, a.U, a.V, cfg);
    out["dc"] = bm::dc_to_json(fit.dc);
    out["params"] = bm::io::params_to_json(fit.fit.params);
    out["elbo"] = fit.fit.elbo;
    out["iterations"] = fit.fit.iterations;
    out["stalled"] = fit.stalled;
    converged = fit.fit.converged;
  } else {
    throw UsageError("unknown method: " + a.method);
  }
  out["converged"] = converged;
  emit_json(out, a.out);
  return converged ? 0 : kExitNotConverged;
}

// ---- bootstrap ----

struct BootstrapArgs {
  Common common;
  std::string graph;
  int K = 0;
  int B = 0;
  int restarts = 1;
  double tol = 1e-8;
  int max_iters = 500;
  std::string out;
  std::string summary;
};

int run_bootstrap(const BootstrapArgs& a) {
  const bm::Graph graph = bm::io::read_graph(a.graph);
  bm::BootstrapConfig cfg;
  cfg.seed = a.common.resolved_seed();
  cfg.threads = a.common.threads;
  cfg.var = var_config(a.common, a.restarts, a.tol, a.max_iters, "spectral");
  const bm::BootstrapResult r = bm::parametric_bootstrap(graph, a.K, a.B, cfg);

  bm::Table table;
  table.header = {"replicate", "ok", "converged"};
  const int d = bm::LogitParams::num_free(a.K);
  std::vector<std::string> coords;
  for (int j = 1; j < a.K; ++j) coords.push_back("varpi_" + std::to_string(j));
  for (int i = 1; i <= a.K; ++i) {
    for (int j = i; j <= a.K; ++j) {
      coords.push_back("nu_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  table.header.insert(table.header.end(), coords.begin(), coords.end());
  table.header.push_back("error");
  for (const auto& rep : r.replicates) {
    std::vector<std::string> row{std::to_string(rep.index), rep.estimate ? "1" : "0",
                                 rep.converged ? "1" : "0"};
    if (rep.estimate) {
      const bm::Vector v = bm::to_logits(*rep.estimate).to_vector();
      for (int j = 0; j < d; ++j) row.push_back(bm::io::format_double(v(j)));
    } else {
      row.insert(row.end(), d, "");
    }
    row.push_back(rep.error);
    table.rows.push_back(std::move(row));
  }
  if (a.out.empty() || a.out == "-") {
    table.write_csv(std::cout);
  } else {
    table.write_csv(a.out);
  }
  const json summary{{"B", r.B},
                     {"n", r.n},
                     {"failures", r.failures},
                     {"lambda_hat", r.lambda_hat},
                     {"fitted", bm::io::params_to_json(r.fitted)},
                     {"fitted_elbo", r.fitted_elbo},
                     {"cov_varpi", bm::io::matrix_to_json(r.summary.cov_varpi)},
                     {"cov_nu", bm::io::matrix_to_json(r.summary.cov_nu)}};
  if (!a.summary.empty()) emit_json(summary, a.summary);
  return 0;
}

// ---- experiment ----

struct ExperimentArgs {
  Common common;
  std::string name;
  std::string params;
  int n = 0;
  std::vector<int> ns;
  int reps = 0;
  int K = 2;
  double lambda = 0.0;
  double exponent = 0.3;
  std::string estimator = "cgm";
  std::vector<double> s;
  std::vector<double> t;
  int restarts = 1;
  double tol = 1e-8;
  std::string out;
  std::string summary;
};

bm::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const bm::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int run_experiment(const ExperimentArgs& a) {
  const std::uint64_t seed = a.common.resolved_seed();
  const int threads = a.common.threads;
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("experiment ") + a.name + " requires " + what);
  };
  auto theta_at = [&](int n) {
    need(!a.params.empty(), "--params");
    const bm::ModelParams p = load_params(a.params);
    return a.lambda > 0.0 ? bm::at_expected_degree(p, n, a.lambda) : p;
  };
  auto sizes = [&](std::vector<int> defaults) {
    if (!a.ns.empty()) return a.ns;
    if (a.n > 0) return std::vector<int>{a.n};
    return defaults;
  };
  bm::VarConfig vc = var_config(a.common, a.restarts, a.tol, 500, "spectral");

  bm::ExperimentOutput o;
  int code = 0;
  if (a.name == "normality") {
    need(a.n > 0, "--n");
    bm::MonteCarloConfig cfg;
    cfg.reps = a.reps > 0 ? a.reps : 100;
    cfg.estimator = bm::estimator_from_string(a.estimator);
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.var = vc;
    o = bm::normality_output(bm::monte_carlo_normality(theta_at(a.n), a.n, cfg));
  } else if (a.name == "wilks") {
    need(a.n > 0, "--n");
    o = bm::wilks_output(bm::wilks_experiment(theta_at(a.n), a.n,
                                              a.reps > 0 ? a.reps : 100, seed, threads, vc));
  } else if (a.name == "lan") {
    need(!a.params.empty(), "--params");
    const bm::ModelParams base = load_params(a.params);
    const std::vector<int> ns = sizes({200, 400, 800, 1600});
    const int K = base.K();
    const bm::Vector s = a.s.empty() ? bm::Vector::Ones(K - 1) : to_vector(a.s);
    const bm::Vector t = a.t.empty() ? bm::Vector::Ones(K * (K + 1) / 2) : to_vector(a.t);
    const double lambda0 = a.lambda > 0.0 ? a.lambda : base.expected_degree(ns[0]);
    o = bm::lan_output(bm::lan_experiment(base, ns, lambda0, a.exponent, s, t,
                                          a.reps > 0 ? a.reps : 500, seed, threads));
  } else if (a.name == "sandwich") {
    const int n = a.n > 0 ? a.n : 10;
    o = bm::sandwich_output(
        bm::sandwich_experiment(a.K, n, a.reps > 0 ? a.reps : 100, seed, threads));
    if (o.summary["ok"] != o.summary["reps"]) code = 1;
  } else if (a.name == "identity") {
    const int n = a.n > 0 ? a.n : 6;
    o = bm::identity_output(
        bm::identity_experiment(a.K, n, a.reps > 0 ? a.reps : 50, seed, threads));
  } else if (a.name == "equivalence-trend") {
    need(!a.params.empty(), "--params");
    const bm::ModelParams base = load_params(a.params);
    const std::vector<int> ns = sizes({400, 800, 1600});
    const double lambda0 = a.lambda > 0.0 ? a.lambda : base.expected_degree(ns[0]);
    o = bm::equivalence_output(bm::equivalence_trend(
        base, ns, lambda0, a.exponent, a.reps > 0 ? a.reps : 30, seed, threads, vc));
  } else if (a.name == "concentration") {
    const int n = a.n > 0 ? a.n : 12;
    o = bm::concentration_output(bm::concentration_experiment(
        theta_at(n), n, a.reps > 0 ? a.reps : 200, seed, threads));
  } else {
    throw UsageError("unknown experiment: " + a.name);
  }
  if (a.out.empty() || a.out == "-") {
    o.table.write_csv(std::cout);
  } else {
    o.table.write_csv(a.out);
  }
  if (!a.summary.empty()) {
    emit_json(o.summary, a.summary);
  } else if (!a.out.empty() && a.out != "-") {
    std::cout << o.summary.dump(2) << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic blockmodel estimation and inference"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "sample a graph and labels from parameters");
  add_common(g, gen.common);
  g->add_option("--params", gen.params, "parameter JSON")->required();
  g->add_option("--n", gen.n, "number of nodes")->required()->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "edge list output")->required();
  g->add_option("--labels-out", gen.labels_out, "label file output");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "fit a blockmodel to a graph");
  add_common(f, fit.common);
  f->add_option("--method", fit.method, "cgm | exact-ml | variational | profile | dc")
      ->required()
      ->check(CLI::IsMember({"cgm", "exact-ml", "variational", "profile", "dc"}));
  f->add_option("--graph", fit.graph, "edge list")->required();
  f->add_option("--labels", fit.labels, "labels (cgm)");
  f->add_option("--labels-out", fit.labels_out, "write fitted labels");
  f->add_option("--K", fit.K, "number of classes");
  f->add_option("--U", fit.U, "communities (dc)");
  f->add_option("--V", fit.V, "degree levels (dc)");
  f->add_option("--restarts", fit.restarts, "restarts")->check(CLI::PositiveNumber);
  f->add_option("--tol", fit.tol, "relative convergence tolerance");
  f->add_option("--max-iters", fit.max_iters, "iteration cap");
  f->add_option("--init", fit.init, "spectral | random");
  f->add_option("--known-alpha", fit.known_alpha, "fixed alpha (dc)")->delimiter(',');
  f->add_flag("--free-class-probs", fit.free_class_probs, "free (u,v) probabilities (dc)");
  f->add_option("--out", fit.out, "JSON output (default stdout)");

  BootstrapArgs boot;
  auto* b = app.add_subcommand("bootstrap", "parametric bootstrap of the variational fit");
  add_common(b, boot.common);
  b->add_option("--graph", boot.graph, "edge list")->required();
  b->add_option("--K", boot.K, "number of classes")->required()->check(CLI::PositiveNumber);
  b->add_option("--B", boot.B, "replicates")->required()->check(CLI::Range(2, 1 << 30));
  b->add_option("--restarts", boot.restarts, "restarts per fit")->check(CLI::PositiveNumber);
  b->add_option("--tol", boot.tol, "relative convergence tolerance");
  b->add_option("--max-iters", boot.max_iters, "iteration cap");
  b->add_option("--out", boot.out, "replicate CSV (default stdout)");
  b->add_option("--summary", boot.summary, "summary JSON");

  ExperimentArgs ex;
  auto* e = app.add_subcommand("experiment", "Monte Carlo experiments");
  add_common(e, ex.common);
  e->add_option("name", ex.name,
                "normality | wilks | lan | sandwich | identity | equivalence-trend | "
                "concentration")
      ->required();
  e->add_option("--params", ex.params, "parameter JSON");
  e->add_option("--n", ex.n, "number of nodes");
  e->add_option("--ns", ex.ns, "comma-separated node counts")->delimiter(',');
  e->add_option("--reps", ex.reps, "replicates (seeds)");
  e->add_option("--K", ex.K, "classes for random-parameter experiments");
  e->add_option("--lambda", ex.lambda, "expected degree (at the first n)");
  e->add_option("--exponent", ex.exponent, "expected degree grows as n^exponent");
  e->add_option("--estimator", ex.estimator, "cgm | variational | profile-then-cgm");
  e->add_option("--s", ex.s, "local varpi direction (lan)")->delimiter(',');
  e->add_option("--t", ex.t, "local nu direction (lan)")->delimiter(',');
  e->add_option("--restarts", ex.restarts, "variational restarts");
  e->add_option("--tol", ex.tol, "variational tolerance");
  e->add_option("--out", ex.out, "per-replicate CSV (default stdout)");
  e->add_option("--summary", ex.summary, "summary JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*f) return run_fit(fit);
    if (*b) return run_bootstrap(boot);
    if (*e) return run_experiment(ex);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const bm::io::ParseError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const bm::DomainError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const bm::BudgetError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitBudget;
  } catch (const bm::ReplicateFailureError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitReplicates;
  } catch (const bm::FitError& err) {
    std::cerr << "error: fit failed: " << err.what() << '\n';
    return kExitNotConverged;
  }
  return kExitUsage;
}
