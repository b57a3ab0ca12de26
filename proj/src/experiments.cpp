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

#include "blockmodel/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "blockmodel/cgm.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/exact.hpp"
#include "blockmodel/io.hpp"
#include "blockmodel/modularity.hpp"
#include "blockmodel/parallel.hpp"
#include "blockmodel/stats.hpp"

namespace blockmodel {

namespace {

using io::format_double;

nlohmann::json to_json(const Vector& v) { return io::vector_to_json(v); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> free_coordinate_names(int K) {
  std::vector<std::string> names;
  for (int a = 1; a < K; ++a) names.push_back("varpi_" + std::to_string(a));
  for (int a = 1; a <= K; ++a) {
    for (int b = a; b <= K; ++b) {
      names.push_back("nu_" + std::to_string(a) + "_" + std::to_string(b));
    }
  }
  return names;
}

}  // namespace

ModelParams planted_partition(int K, double rho, double ratio) {
  if (K < 1) throw DomainError("K must be positive");
  if (!(ratio > 0.0)) throw DomainError("separation ratio must be positive");
  const double off = K / (ratio + K - 1.0);
  Matrix S = Matrix::Constant(K, K, off);
  S.diagonal().setConstant(ratio * off);
  return ModelParams(rho, Vector::Constant(K, 1.0 / K), S);
}

ModelParams at_expected_degree(const ModelParams& base, int n, double lambda) {
  return ModelParams(lambda / n, base.pi(), base.S());
}

ModelParams random_interior_params(int K, Rng& rng) {
  Vector pi(K);
  for (int a = 0; a < K; ++a) pi(a) = rng.exponential() + 0.05;
  pi /= pi.sum();
  Matrix H(K, K);
  for (int a = 0; a < K; ++a) {
    for (int b = a; b < K; ++b) H(a, b) = H(b, a) = 0.05 + 0.9 * rng.uniform();
  }
  return ModelParams::from_pi_H(pi, H);
}

void Table::write_csv(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(cells[i]);
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void Table::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw io::ParseError("cannot write " + path);
  write_csv(out);
}

ExperimentOutput normality_output(const MonteCarloReport& report) {
  ExperimentOutput o;
  const int K = static_cast<int>(report.coverage_varpi.size()) + 1;
  const auto names = free_coordinate_names(K);
  o.table.header = {"replicate", "estimator", "ok"};
  for (const auto& nm : names) o.table.header.push_back(nm);
  for (const auto& nm : names) o.table.header.push_back("std_" + nm);
  for (const char* h : {"wilks", "lambda_hat", "converged", "error"}) o.table.header.push_back(h);
  const std::size_t d = names.size();
  for (const auto& rec : report.records) {
    std::vector<std::string> row{std::to_string(rec.index), to_string(report.estimator),
                                 rec.ok ? "1" : "0"};
    for (std::size_t j = 0; j < d; ++j) {
      row.push_back(rec.ok ? format_double(rec.estimate(j)) : "");
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (!rec.ok) {
        row.emplace_back();
      } else if (j < static_cast<std::size_t>(K - 1)) {
        row.push_back(format_double(rec.std_varpi(j)));
      } else {
        row.push_back(format_double(rec.std_nu(j - (K - 1))));
      }
    }
    row.push_back(rec.ok ? format_double(rec.wilks) : "");
    row.push_back(rec.ok ? format_double(rec.lambda_hat) : "");
    row.push_back(rec.converged ? "1" : "0");
    row.push_back(rec.error);
    o.table.rows.push_back(std::move(row));
  }
  o.summary = {{"experiment", "normality"},
               {"estimator", to_string(report.estimator)},
               {"n", report.n},
               {"reps", report.reps},
               {"failures", report.failures},
               {"coverage_varpi", to_json(report.coverage_varpi)},
               {"coverage_nu", to_json(report.coverage_nu)},
               {"ks_varpi", to_json(report.ks_varpi)},
               {"ks_nu", to_json(report.ks_nu)},
               {"wilks_df", report.wilks_df},
               {"wilks_ks", report.wilks_ks}};
  return o;
}

WilksExperiment wilks_experiment(const ModelParams& theta0, int n, int reps,
                                 std::uint64_t seed, int threads, const VarConfig& var) {
  if (reps < 1) throw DomainError("reps must be positive");
  const int K = theta0.K();
  WilksExperiment w;
  w.n = n;
  w.df = wilks_degrees_of_freedom(K);
  w.cgm.assign(reps, std::numeric_limits<double>::quiet_NaN());
  w.variational.assign(reps, std::numeric_limits<double>::quiet_NaN());
  w.ok.assign(reps, 0);
  parallel_for(reps, threads, [&](std::int64_t r) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(r));
    try {
      const GraphSample sample = sample_graph(theta0, n, derive_seed(s, 1));
      VarConfig vc = var;
      vc.seed = derive_seed(s, 2);
      vc.threads = 1;
      const VarFit fit = fit_variational(sample.graph, K, vc);
      w.cgm[r] = wilks_cgm(sample.graph, sample.labels, theta0);
      w.variational[r] = wilks_variational(sample.graph, theta0, fit, vc);
      w.ok[r] = std::isfinite(w.cgm[r]) && std::isfinite(w.variational[r]);
    } catch (const FitError&) {
    } catch (const DomainError&) {
    }
  });
  std::vector<double> a, b;
  for (int r = 0; r < reps; ++r) {
    if (!w.ok[r]) {
      ++w.failures;
      continue;
    }
    a.push_back(w.cgm[r]);
    b.push_back(w.variational[r]);
  }
  if (w.failures > 0.05 * reps) {
    throw ReplicateFailureError("wilks: " + std::to_string(w.failures) + " of " +
                                std::to_string(reps) + " replicates failed");
  }
  const double df = w.df;
  auto cdf = [df](double x) { return stats::chi_squared_cdf(x, df); };
  w.ks_cgm = stats::ks_distance(a, cdf);
  w.ks_variational = stats::ks_distance(b, cdf);
  return w;
}

ExperimentOutput wilks_output(const WilksExperiment& w) {
  ExperimentOutput o;
  o.table.header = {"replicate", "ok", "wilks_cgm", "wilks_variational"};
  for (std::size_t r = 0; r < w.cgm.size(); ++r) {
    o.table.rows.push_back({std::to_string(r), w.ok[r] ? "1" : "0",
                            w.ok[r] ? format_double(w.cgm[r]) : "",
                            w.ok[r] ? format_double(w.variational[r]) : ""});
  }
  o.summary = {{"experiment", "wilks"},     {"n", w.n},
               {"reps", w.cgm.size()},      {"failures", w.failures},
               {"df", w.df},                {"ks_cgm", w.ks_cgm},
               {"ks_variational", w.ks_variational}};
  return o;
}

std::vector<LanReport> lan_experiment(const ModelParams& base, const std::vector<int>& ns,
                                      double lambda0, double exponent, const Vector& s,
                                      const Vector& t, int reps, std::uint64_t seed,
                                      int threads) {
  if (ns.empty()) throw DomainError("no sample sizes given");
  std::vector<LanReport> out;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const double lambda = lambda0 * std::pow(static_cast<double>(ns[k]) / ns[0], exponent);
    const ModelParams theta0 = at_expected_degree(base, ns[k], lambda);
    out.push_back(lan_check(theta0, ns[k], s, t, reps, derive_seed(seed, k), threads));
  }
  return out;
}

ExperimentOutput lan_output(const std::vector<LanReport>& reports) {
  ExperimentOutput o;
  o.table.header = {"n", "replicate", "lhs", "quadratic", "remainder"};
  nlohmann::json medians = nlohmann::json::array();
  nlohmann::json ns = nlohmann::json::array();
  for (const auto& rep : reports) {
    for (std::size_t r = 0; r < rep.lhs.size(); ++r) {
      o.table.rows.push_back({std::to_string(rep.n), std::to_string(r),
                              format_double(rep.lhs[r]), format_double(rep.quadratic[r]),
                              format_double(rep.remainder[r])});
    }
    ns.push_back(rep.n);
    medians.push_back(rep.median_abs_remainder);
  }
  o.summary = {{"experiment", "lan"}, {"n", ns}, {"median_abs_remainder", medians}};
  return o;
}

std::vector<SandwichRow> sandwich_experiment(int K, int n, int reps, std::uint64_t seed,
                                             int threads) {
  std::vector<std::optional<SandwichRow>> rows(reps);
  parallel_for(reps, threads, [&](std::int64_t r) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(r));
    Rng rng(derive_seed(s, 0));
    const ModelParams theta = random_interior_params(K, rng);
    const GraphSample sample = sample_graph(theta, n, derive_seed(s, 1));
    rows[r] = SandwichRow{check_sandwich(sample.labels, theta, sample.graph), n};
  });
  std::vector<SandwichRow> out;
  for (auto& r : rows) out.push_back(*r);
  return out;
}

ExperimentOutput sandwich_output(const std::vector<SandwichRow>& rows) {
  ExperimentOutput o;
  o.table.header = {"replicate", "n", "lower", "mid", "upper", "ok"};
  int ok = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& c = rows[r].check;
    ok += c.ok;
    o.table.rows.push_back({std::to_string(r), std::to_string(rows[r].n),
                            format_double(c.lower), format_double(c.mid),
                            format_double(c.upper), c.ok ? "1" : "0"});
  }
  o.summary = {{"experiment", "sandwich"}, {"reps", rows.size()}, {"ok", ok}};
  return o;
}

std::vector<IdentityCheck> identity_experiment(int K, int n, int reps, std::uint64_t seed,
                                               int threads) {
  std::vector<std::optional<IdentityCheck>> rows(reps);
  parallel_for(reps, threads, [&](std::int64_t r) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(r));
    Rng rng(derive_seed(s, 0));
    const ModelParams theta = random_interior_params(K, rng);
    const ModelParams theta0 = random_interior_params(K, rng);
    const GraphSample sample = sample_graph(theta0, n, derive_seed(s, 1));
    rows[r] = verify_marginal_identity(sample.graph, theta, theta0);
  });
  std::vector<IdentityCheck> out;
  for (auto& r : rows) out.push_back(*r);
  return out;
}

ExperimentOutput identity_output(const std::vector<IdentityCheck>& rows) {
  ExperimentOutput o;
  o.table.header = {"replicate", "lhs", "rhs", "abs_diff"};
  double worst = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    worst = std::max(worst, rows[r].abs_diff);
    o.table.rows.push_back({std::to_string(r), format_double(rows[r].lhs),
                            format_double(rows[r].rhs), format_double(rows[r].abs_diff)});
  }
  o.summary = {{"experiment", "identity"}, {"reps", rows.size()}, {"max_abs_diff", worst}};
  return o;
}

EquivalenceTrend equivalence_trend(const ModelParams& base, const std::vector<int>& ns,
                                   double lambda0, double exponent, int seeds,
                                   std::uint64_t seed, int threads, const VarConfig& var) {
  if (ns.empty() || seeds < 1) throw DomainError("need sample sizes and seeds");
  const int K = base.K();
  EquivalenceTrend tr;
  tr.ns = ns;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const int n = ns[k];
    const double lambda = lambda0 * std::pow(static_cast<double>(n) / ns[0], exponent);
    const ModelParams theta0 = at_expected_degree(base, n, lambda);
    std::vector<double> dist(seeds, std::numeric_limits<double>::quiet_NaN());
    const std::uint64_t root = derive_seed(seed, k);
    parallel_for(seeds, threads, [&](std::int64_t r) {
      const std::uint64_t s = derive_seed(root, static_cast<std::uint64_t>(r));
      try {
        const GraphSample sample = sample_graph(theta0, n, derive_seed(s, 1));
        const ModelParams cgm = cgm_mle(sample.graph, sample.labels).params();
        VarConfig vc = var;
        vc.seed = derive_seed(s, 2);
        vc.threads = 1;
        const VarFit fit = fit_variational(sample.graph, K, vc);
        const ModelParams aligned = align_params(fit.params, cgm).aligned;
        const Vector diff = to_logits(aligned).to_vector() - to_logits(cgm).to_vector();
        dist[r] = std::sqrt(static_cast<double>(n)) * diff.norm();
      } catch (const FitError&) {
      } catch (const DomainError&) {
      }
    });
    std::vector<double> finite;
    for (double x : dist) {
      if (std::isfinite(x)) finite.push_back(x);
    }
    if (finite.size() * 2 < dist.size()) {
      throw ReplicateFailureError("equivalence trend: most fits failed at n = " +
                                  std::to_string(n));
    }
    tr.medians.push_back(stats::median(finite));
    tr.distances.push_back(std::move(dist));
  }
  tr.decreasing = true;
  for (std::size_t k = 1; k < tr.medians.size(); ++k) {
    if (!(tr.medians[k] < tr.medians[k - 1])) tr.decreasing = false;
  }
  return tr;
}

ExperimentOutput equivalence_output(const EquivalenceTrend& trend) {
  ExperimentOutput o;
  o.table.header = {"n", "seed", "scaled_distance"};
  for (std::size_t k = 0; k < trend.ns.size(); ++k) {
    for (std::size_t s = 0; s < trend.distances[k].size(); ++s) {
      const double d = trend.distances[k][s];
      o.table.rows.push_back({std::to_string(trend.ns[k]), std::to_string(s),
                              std::isfinite(d) ? format_double(d) : ""});
    }
  }
  o.summary = {{"experiment", "equivalence-trend"},
               {"n", trend.ns},
               {"median_scaled_distance", trend.medians},
               {"decreasing", trend.decreasing}};
  return o;
}

ConcentrationResult concentration_experiment(const ModelParams& theta0, int n, int reps,
                                             std::uint64_t seed, int threads) {
  const int K = theta0.K();
  const std::int64_t total = enumeration_size(n, K);
  ConcentrationResult c;
  c.n = n;
  c.mu = static_cast<double>(n) * n * theta0.rho();
  c.max_abs.assign(reps, 0.0);
  parallel_for(reps, threads, [&](std::int64_t r) {
    const GraphSample sample = sample_graph(theta0, n, derive_seed(seed, r));
    double worst = 0.0;
    for (std::int64_t idx = 0; idx < total; ++idx) {
      const Labels e = labeling_at(idx, n, K);
      const Matrix X = concentration_X(sample.graph, e, sample.labels, theta0);
      worst = std::max(worst, X.cwiseAbs().maxCoeff());
    }
    c.max_abs[r] = worst;
  });
  const double log_front = std::log(2.0) + (n + 2) * std::log(static_cast<double>(K));
  for (int k = 1; k <= 200; ++k) {
    const double eps = 0.02 * k;
    const double tail =
        static_cast<double>(std::count_if(c.max_abs.begin(), c.max_abs.end(),
                                          [eps](double x) { return x >= eps; })) /
        reps;
    const double bound = std::exp(log_front - eps * eps * c.mu / 4.0);
    c.eps.push_back(eps);
    c.empirical_tail.push_back(tail);
    c.bound.push_back(bound);
    if (bound < 1.0 && tail > bound) c.holds = false;
  }
  return c;
}

ExperimentOutput concentration_output(const ConcentrationResult& c) {
  ExperimentOutput o;
  o.table.header = {"eps", "empirical_tail", "bound"};
  int informative = 0;
  for (std::size_t k = 0; k < c.eps.size(); ++k) {
    informative += c.bound[k] < 1.0;
    o.table.rows.push_back({format_double(c.eps[k]), format_double(c.empirical_tail[k]),
                            format_double(c.bound[k])});
  }
  o.summary = {{"experiment", "concentration"},
               {"n", c.n},
               {"reps", c.max_abs.size()},
               {"mu", c.mu},
               {"informative_points", informative},
               {"max_of_max_abs", *std::max_element(c.max_abs.begin(), c.max_abs.end())},
               {"holds", c.holds}};
  return o;
}

}  // namespace blockmodel
