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

#ifndef BLOCKMODEL_INFERENCE_HPP_
#define BLOCKMODEL_INFERENCE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockmodel/cgm.hpp"
#include "blockmodel/exact.hpp"
#include "blockmodel/model.hpp"
#include "blockmodel/modularity.hpp"
#include "blockmodel/variational.hpp"

namespace blockmodel {

// Lambda_V = 2 [log J(theta_hat) - log J(theta0)], where
// log J(theta) = max_q J(q, theta; A). Both maxima are taken by e_step sweeps
// from the fitted q, and the fit is also restarted from the theta0 optimum,
// so the statistic is never negative.
double wilks_variational(const Graph& graph, const ModelParams& theta0,
                         const VarFit& fit, const VarConfig& config);
double wilks_variational(const Graph& graph, int K, const ModelParams& theta0,
                         const VarConfig& config = {});

// Lambda_G = 2 [log g(theta_ML) - log g(theta0)] by exhaustive enumeration.
// theta0 is one of the EM starts, so Lambda_G >= 0.
double wilks_gm_exact(const Graph& graph, int K, const ModelParams& theta0,
                      ExactMleConfig config = {});

struct Interval {
  double lower;
  double center;
  double upper;
  bool contains(double x) const { return lower <= x && x <= upper; }
};

// {x : scale^2 (x - center)^T inverse_cov (x - center) <= radius2}.
struct Ellipsoid {
  Vector center;
  Matrix whitening;  // Sigma^{-1/2}
  double scale;      // sqrt(n) or sqrt(n lambda_hat)
  double radius2;    // chi-squared quantile at the level
  bool contains(const Vector& x) const;
};

// Plug-in confidence sets in logit coordinates: covariances from
// asymptotic_cov at the estimate, lambda_hat = average degree of the graph.
struct ConfidenceRegion {
  double level;
  int n;
  double lambda_hat;
  LogitParams estimate;
  AsymptoticCov cov;
  std::vector<Interval> varpi;  // K - 1 intervals
  std::vector<Interval> nu;     // K (K + 1) / 2 intervals, a <= b row-major
  Ellipsoid varpi_region;
  Ellipsoid nu_region;
};

ConfidenceRegion confidence_region(const ModelParams& estimate, double level,
                                   const Graph& graph);
ConfidenceRegion confidence_region(const VarFit& fit, double level, const Graph& graph);
ConfidenceRegion confidence_region(const CgmFit& fit, double level, const Graph& graph);

// Free nu coordinates (a <= b, row-major) of a K x K matrix.
Vector upper_triangle(const Matrix& m);

struct BootstrapConfig {
  VarConfig var;
  std::uint64_t seed = 0;
  int threads = 1;
  double max_failure_fraction = 0.10;
};

struct BootstrapReplicate {
  int index;
  std::optional<ModelParams> estimate;  // classes aligned to the simulated labels
  std::string error;
  bool converged = false;
};

// Covariances of the replicates about the reference on the sqrt(n) (varpi)
// and sqrt(n lambda_hat) (nu) scales. Replicates must already share the
// reference's class order.
struct BootstrapSummary {
  Matrix estimates;  // one row per usable replicate: free logit coordinates
  Matrix cov_varpi;
  Matrix cov_nu;
};

BootstrapSummary summarize_replicates(const ModelParams& reference,
                                      std::span<const ModelParams> replicates, int n,
                                      double lambda_hat);

struct BootstrapResult {
  int B;
  int n;
  int failures;
  double lambda_hat;
  ModelParams fitted;
  double fitted_elbo;
  std::vector<BootstrapReplicate> replicates;
  BootstrapSummary summary;
};

// Fit theta_VAR, simulate B (Z*, A*) from it, refit each, relabel each refit's
// classes by matching its argmax labels to Z* and form the covariances.
// Replicates that fail are recorded and excluded; more than
// max_failure_fraction failing throws ReplicateFailureError.
BootstrapResult parametric_bootstrap(const Graph& graph, int K, int B,
                                     const BootstrapConfig& config = {});

struct LanReport {
  int n;
  std::vector<double> lhs;        // Lambda at the local alternative
  std::vector<double> quadratic;  // s^T Y1 + t^T Y2 - s^T I1 s / 2 - t^T I2 t / 2
  std::vector<double> remainder;  // lhs - quadratic
  double median_abs_remainder;
};

// Local expansion of Lambda at theta0 + (s / sqrt(n), t / sqrt(n^2 rho)) over
// `reps` simulated (Z, A). I1 and I2 are the normalized expected information
// matrices (the inverses of the limiting covariances).
LanReport lan_check(const ModelParams& theta0, int n, const Vector& s, const Vector& t,
                    int reps, std::uint64_t seed, int threads = 1);

enum class Estimator { kCgm, kVariational, kProfileCgm };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct MonteCarloConfig {
  int reps = 100;
  Estimator estimator = Estimator::kCgm;
  std::uint64_t seed = 0;
  int threads = 1;
  VarConfig var;
  ProfileSearchConfig profile;
  bool compute_wilks = true;
  double level = 0.95;
  double max_failure_fraction = 0.05;
};

struct ReplicateRecord {
  int index = 0;
  bool ok = false;
  std::string error;
  Vector estimate;  // free logit coordinates, classes matched to the true labels
  Vector std_varpi;
  Vector std_nu;
  double wilks = 0.0;
  double lambda_hat = 0.0;
  bool converged = true;
};

struct MonteCarloReport {
  int n = 0;
  int reps = 0;
  int failures = 0;
  Estimator estimator = Estimator::kCgm;
  int wilks_df = 0;
  std::vector<ReplicateRecord> records;
  Vector coverage_varpi;
  Vector coverage_nu;
  Vector ks_varpi;
  Vector ks_nu;
  std::vector<double> wilks;
  double wilks_ks = 0.0;
};

// Simulates, fits, matches the fitted classes to the simulated labels and
// standardizes: sqrt(n) (varpi_hat - varpi0) whitened by Sigma1^{-1/2}, sqrt(n lambda_hat) (nu_hat - nu0)
// whitened by Sigma2^{-1/2}, both covariances analytic at theta0.
MonteCarloReport monte_carlo_normality(const ModelParams& theta0, int n,
                                       const MonteCarloConfig& config);

}  // namespace blockmodel

#endif  // BLOCKMODEL_INFERENCE_HPP_
