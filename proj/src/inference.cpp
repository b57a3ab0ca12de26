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

#include "blockmodel/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "blockmodel/errors.hpp"
#include "blockmodel/numeric.hpp"
#include "blockmodel/parallel.hpp"
#include "blockmodel/rng.hpp"
#include "blockmodel/stats.hpp"

namespace blockmodel {

namespace {

Matrix permute_columns(const Matrix& q, const Permutation& perm) {
  Matrix out(q.rows(), q.cols());
  for (Eigen::Index a = 0; a < q.cols(); ++a) out.col(perm[a]) = q.col(a);
  return out;
}

void check_failures(int failures, int total, double max_fraction, const char* what) {
  if (failures > max_fraction * total) {
    throw ReplicateFailureError(std::string(what) + ": " + std::to_string(failures) +
                                " of " + std::to_string(total) + " replicates failed");
  }
}

}  // namespace

Vector upper_triangle(const Matrix& m) {
  const auto K = m.rows();
  Vector v(K * (K + 1) / 2);
  Eigen::Index idx = 0;
  for (Eigen::Index a = 0; a < K; ++a) {
    for (Eigen::Index b = a; b < K; ++b) v(idx++) = m(a, b);
  }
  return v;
}

double wilks_variational(const Graph& graph, const ModelParams& theta0,
                         const VarFit& fit, const VarConfig& config) {
  const std::uint64_t sweep_seed = derive_seed(config.seed, 0x77);
  const QOptimum at_fit = maximize_q(fit.q, fit.params, graph, 1e-12, 1000, sweep_seed);
  double best = std::max(fit.elbo, at_fit.elbo);

  const ParamAlignment al = align_params(fit.params, theta0);
  const MeanFieldPosterior q_start(permute_columns(fit.q.q(), al.perm));
  const QOptimum at_null = maximize_q(q_start, theta0, graph, 1e-12, 1000, sweep_seed);
  if (at_null.elbo > best) {
    const VarFit refit = fit_variational_from(graph, at_null.q, config, sweep_seed);
    const QOptimum polished =
        maximize_q(refit.q, refit.params, graph, 1e-12, 1000, sweep_seed);
    best = std::max({best, refit.elbo, polished.elbo});
  }
  return 2.0 * (best - at_null.elbo);
}

double wilks_variational(const Graph& graph, int K, const ModelParams& theta0,
                         const VarConfig& config) {
  if (theta0.K() != K) throw DomainError("theta0 has the wrong number of classes");
  const VarFit fit = fit_variational(graph, K, config);
  return wilks_variational(graph, theta0, fit, config);
}

double wilks_gm_exact(const Graph& graph, int K, const ModelParams& theta0,
                      ExactMleConfig config) {
  if (theta0.K() != K) throw DomainError("theta0 has the wrong number of classes");
  config.extra_start = theta0;
  const ExactMleResult mle = exact_gm_mle(graph, K, config);
  return 2.0 * (mle.log_g - marginal_loglik(graph, theta0, config.threads));
}

bool Ellipsoid::contains(const Vector& x) const {
  if (x.size() != center.size()) throw DomainError("dimension mismatch");
  if (x.size() == 0) return true;
  const Vector w = scale * (whitening * (x - center));
  return w.squaredNorm() <= radius2;
}

ConfidenceRegion confidence_region(const ModelParams& estimate, double level,
                                   const Graph& graph) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  const int n = graph.n();
  const int K = estimate.K();
  ConfidenceRegion cr;
  cr.level = level;
  cr.n = n;
  cr.lambda_hat = graph.average_degree();
  if (cr.lambda_hat <= 0.0) throw DomainError("graph has no edges");
  cr.estimate = to_logits(estimate);
  cr.cov = asymptotic_cov(estimate, n);

  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  const double s1 = std::sqrt(static_cast<double>(n));
  const double s2 = std::sqrt(n * cr.lambda_hat);
  for (int j = 0; j < K - 1; ++j) {
    const double c = cr.estimate.varpi(j);
    const double h = z * std::sqrt(cr.cov.sigma1(j, j)) / s1;
    cr.varpi.push_back({c - h, c, c + h});
  }
  const Vector nu = upper_triangle(cr.estimate.nu);
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    const double h = z * std::sqrt(cr.cov.sigma2(j, j)) / s2;
    cr.nu.push_back({nu(j) - h, nu(j), nu(j) + h});
  }

  cr.varpi_region.center = cr.estimate.varpi;
  cr.varpi_region.whitening = sym_power(cr.cov.sigma1, -0.5);
  cr.varpi_region.scale = s1;
  cr.varpi_region.radius2 = K > 1 ? stats::chi_squared_quantile(level, K - 1) : 0.0;
  cr.nu_region.center = nu;
  cr.nu_region.whitening = sym_power(cr.cov.sigma2, -0.5);
  cr.nu_region.scale = s2;
  cr.nu_region.radius2 =
      stats::chi_squared_quantile(level, static_cast<double>(nu.size()));
  return cr;
}

ConfidenceRegion confidence_region(const VarFit& fit, double level, const Graph& graph) {
  return confidence_region(fit.params, level, graph);
}

ConfidenceRegion confidence_region(const CgmFit& fit, double level, const Graph& graph) {
  return confidence_region(fit.params(), level, graph);
}

BootstrapSummary summarize_replicates(const ModelParams& reference,
                                      std::span<const ModelParams> replicates, int n,
                                      double lambda_hat) {
  const int K = reference.K();
  const int d = LogitParams::num_free(K);
  const Vector ref = to_logits(reference).to_vector();
  BootstrapSummary out;
  out.estimates.resize(static_cast<Eigen::Index>(replicates.size()), d);
  for (std::size_t b = 0; b < replicates.size(); ++b) {
    out.estimates.row(static_cast<Eigen::Index>(b)) =
        to_logits(replicates[b]).to_vector().transpose();
  }
  Matrix diff = out.estimates.rowwise() - ref.transpose();
  const Matrix w = diff.leftCols(K - 1) * std::sqrt(static_cast<double>(n));
  const Matrix v = diff.rightCols(d - (K - 1)) * std::sqrt(n * lambda_hat);
  out.cov_varpi = K > 1 ? stats::sample_covariance(w) : Matrix(0, 0);
  out.cov_nu = stats::sample_covariance(v);
  return out;
}

BootstrapResult parametric_bootstrap(const Graph& graph, int K, int B,
                                     const BootstrapConfig& config) {
  if (B < 2) throw DomainError("bootstrap needs B >= 2");
  VarConfig top = config.var;
  top.seed = derive_seed(config.seed, 0);
  top.threads = config.threads;
  const VarFit fit = fit_variational(graph, K, top);
  const double lambda_hat = graph.average_degree();
  const int n = graph.n();

  std::vector<BootstrapReplicate> reps(B);
  const std::uint64_t sample_root = derive_seed(config.seed, 1);
  const std::uint64_t fit_root = derive_seed(config.seed, 2);
  parallel_for(B, config.threads, [&](std::int64_t b) {
    BootstrapReplicate& rep = reps[b];
    rep.index = static_cast<int>(b);
    try {
      const GraphSample s = sample_graph(fit.params, n, derive_seed(sample_root, b));
      VarConfig vc = config.var;
      vc.seed = derive_seed(fit_root, b);
      vc.threads = 1;
      const VarFit refit = fit_variational(s.graph, K, vc);
      const Permutation perm = align_labels(refit.q.argmax(), s.labels).perm;
      ModelParams aligned = permute(refit.params, perm);
      to_logits(aligned);
      rep.estimate = std::move(aligned);
      rep.converged = refit.converged;
    } catch (const std::exception& e) {
      rep.error = e.what();
    }
  });

  std::vector<ModelParams> ok;
  int failures = 0;
  for (const auto& r : reps) {
    if (r.estimate) {
      ok.push_back(*r.estimate);
    } else {
      ++failures;
    }
  }
  check_failures(failures, B, config.max_failure_fraction, "bootstrap");
  if (ok.size() < 2) throw ReplicateFailureError("bootstrap: fewer than 2 usable replicates");

  BootstrapResult result{B,        n,         failures,
                         lambda_hat, fit.params, fit.elbo,
                         std::move(reps), {}};
  result.summary = summarize_replicates(fit.params, ok, n, lambda_hat);
  return result;
}

LanReport lan_check(const ModelParams& theta0, int n, const Vector& s, const Vector& t,
                    int reps, std::uint64_t seed, int threads) {
  const int K = theta0.K();
  if (s.size() != K - 1 || t.size() != K * (K + 1) / 2) {
    throw DomainError("local direction has the wrong dimension");
  }
  if (reps < 1) throw DomainError("reps must be positive");
  const LogitParams lp0 = to_logits(theta0);
  const AsymptoticCov cov = asymptotic_cov(theta0, n);
  const double r1 = std::sqrt(static_cast<double>(n));
  const double r2 = std::sqrt(static_cast<double>(n) * n * theta0.rho());

  Vector alt_vec = lp0.to_vector();
  alt_vec.head(K - 1) += s / r1;
  alt_vec.tail(t.size()) += t / r2;
  const LogitParams alt = LogitParams::from_vector(K, alt_vec);
  const double drift = 0.5 * s.dot(cov.info1 * s) + 0.5 * t.dot(cov.info2 * t);

  LanReport report;
  report.n = n;
  report.lhs.resize(reps);
  report.quadratic.resize(reps);
  report.remainder.resize(reps);
  parallel_for(reps, threads, [&](std::int64_t r) {
    const GraphSample sample = sample_graph(theta0, n, derive_seed(seed, r));
    const SufficientStats st = sufficient_stats(sample.graph, sample.labels);
    const Vector g = gradient(lp0, st);
    const double quad =
        s.dot(g.head(K - 1)) / r1 + t.dot(g.tail(t.size())) / r2 - drift;
    const double lhs = loglik_ratio(alt, lp0, st);
    report.lhs[r] = lhs;
    report.quadratic[r] = quad;
    report.remainder[r] = lhs - quad;
  });
  std::vector<double> abs_rem(reps);
  std::transform(report.remainder.begin(), report.remainder.end(), abs_rem.begin(),
                 [](double x) { return std::abs(x); });
  report.median_abs_remainder = stats::median(abs_rem);
  return report;
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::kCgm: return "cgm";
    case Estimator::kVariational: return "variational";
    case Estimator::kProfileCgm: return "profile-then-cgm";
  }
  return "unknown";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "cgm") return Estimator::kCgm;
  if (s == "variational") return Estimator::kVariational;
  if (s == "profile-then-cgm" || s == "profile") return Estimator::kProfileCgm;
  throw DomainError("unknown estimator: " + s);
}

MonteCarloReport monte_carlo_normality(const ModelParams& theta0, int n,
                                       const MonteCarloConfig& config) {
  if (config.reps < 1) throw DomainError("reps must be positive");
  const int K = theta0.K();
  const LogitParams lp0 = to_logits(theta0);
  const Vector varpi0 = lp0.varpi;
  const Vector nu0 = upper_triangle(lp0.nu);
  const AsymptoticCov cov = asymptotic_cov(theta0, n);
  const Matrix w1 = sym_power(cov.sigma1, -0.5);
  const Matrix w2 = sym_power(cov.sigma2, -0.5);

  MonteCarloReport report;
  report.n = n;
  report.reps = config.reps;
  report.estimator = config.estimator;
  report.wilks_df = wilks_degrees_of_freedom(K);
  report.records.resize(config.reps);
  // Per replicate, which interval covered the truth (varpi then nu).
  std::vector<std::vector<char>> covered(config.reps);

  const std::uint64_t sample_root = derive_seed(config.seed, 1);
  const std::uint64_t fit_root = derive_seed(config.seed, 2);
  parallel_for(config.reps, config.threads, [&](std::int64_t r) {
    ReplicateRecord& rec = report.records[r];
    rec.index = static_cast<int>(r);
    try {
      const GraphSample sample = sample_graph(theta0, n, derive_seed(sample_root, r));
      const Graph& g = sample.graph;
      const std::uint64_t fit_seed = derive_seed(fit_root, r);
      std::optional<ModelParams> est;
      switch (config.estimator) {
        case Estimator::kCgm: {
          est = cgm_mle(g, Labels(sample.labels.values(), K)).params();
          if (config.compute_wilks) rec.wilks = wilks_cgm(g, sample.labels, theta0);
          break;
        }
        case Estimator::kVariational: {
          VarConfig vc = config.var;
          vc.seed = fit_seed;
          vc.threads = 1;
          const VarFit fit = fit_variational(g, K, vc);
          rec.converged = fit.converged;
          est = permute(fit.params, align_labels(fit.q.argmax(), sample.labels).perm);
          if (config.compute_wilks) rec.wilks = wilks_variational(g, theta0, fit, vc);
          break;
        }
        case Estimator::kProfileCgm: {
          ProfileSearchConfig pc = config.profile;
          pc.seed = fit_seed;
          const ProfileSearchResult prof = profile_label_search(g, K, pc);
          const ModelParams raw = cgm_mle(g, prof.labels).params();
          const LabelAlignment al = align_labels(prof.labels, sample.labels);
          est = permute(raw, al.perm);
          if (config.compute_wilks) {
            rec.wilks = wilks_cgm(g, al.aligned, theta0);
          }
          break;
        }
      }
      const LogitParams lp = to_logits(*est);
      rec.estimate = lp.to_vector();
      rec.lambda_hat = g.average_degree();
      rec.std_varpi = std::sqrt(static_cast<double>(n)) * (w1 * (lp.varpi - varpi0));
      rec.std_nu = std::sqrt(n * rec.lambda_hat) * (w2 * (upper_triangle(lp.nu) - nu0));
      if (!rec.std_varpi.allFinite() || !rec.std_nu.allFinite() ||
          !std::isfinite(rec.wilks)) {
        throw FitError("non-finite standardized error");
      }
      const ConfidenceRegion cr = confidence_region(*est, config.level, g);
      auto& cov_r = covered[r];
      for (int j = 0; j < K - 1; ++j) cov_r.push_back(cr.varpi[j].contains(varpi0(j)));
      for (Eigen::Index j = 0; j < nu0.size(); ++j) {
        cov_r.push_back(cr.nu[j].contains(nu0(j)));
      }
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  for (const auto& rec : report.records) {
    if (!rec.ok) ++report.failures;
  }
  check_failures(report.failures, config.reps, config.max_failure_fraction,
                 "monte carlo");

  const int d1 = K - 1;
  const auto d2 = static_cast<int>(nu0.size());
  report.coverage_varpi = Vector::Zero(d1);
  report.coverage_nu = Vector::Zero(d2);
  report.ks_varpi = Vector::Zero(d1);
  report.ks_nu = Vector::Zero(d2);
  std::vector<std::vector<double>> e1(d1), e2(d2);
  int ok = 0;
  for (int r = 0; r < config.reps; ++r) {
    const auto& rec = report.records[r];
    if (!rec.ok) continue;
    ++ok;
    for (int j = 0; j < d1; ++j) {
      e1[j].push_back(rec.std_varpi(j));
      report.coverage_varpi(j) += covered[r][j];
    }
    for (int j = 0; j < d2; ++j) {
      e2[j].push_back(rec.std_nu(j));
      report.coverage_nu(j) += covered[r][d1 + j];
    }
    if (config.compute_wilks) report.wilks.push_back(rec.wilks);
  }
  report.coverage_varpi /= ok;
  report.coverage_nu /= ok;
  for (int j = 0; j < d1; ++j) report.ks_varpi(j) = stats::ks_distance(e1[j], stats::normal_cdf);
  for (int j = 0; j < d2; ++j) report.ks_nu(j) = stats::ks_distance(e2[j], stats::normal_cdf);
  if (config.compute_wilks) {
    const double df = report.wilks_df;
    report.wilks_ks = stats::ks_distance(
        report.wilks, [df](double x) { return stats::chi_squared_cdf(x, df); });
  }
  return report;
}

}  // namespace blockmodel
