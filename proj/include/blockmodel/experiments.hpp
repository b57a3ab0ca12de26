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

#ifndef BLOCKMODEL_EXPERIMENTS_HPP_
#define BLOCKMODEL_EXPERIMENTS_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockmodel/inference.hpp"
#include "blockmodel/model.hpp"
#include "blockmodel/rng.hpp"
#include "blockmodel/variational.hpp"

namespace blockmodel {

// Uniform class probabilities, S(a,a) = ratio * S(a,b), normalized.
ModelParams planted_partition(int K, double rho, double ratio);

// Same pi and S with rho chosen so the expected degree at n is `lambda`.
ModelParams at_expected_degree(const ModelParams& base, int n, double lambda);

// pi ~ Dirichlet(1) shifted away from 0, H(a,b) ~ U(0.05, 0.95).
ModelParams random_interior_params(int K, Rng& rng);

// Plot-ready rows plus a summary object.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
};

struct ExperimentOutput {
  Table table;
  nlohmann::json summary;
};

ExperimentOutput normality_output(const MonteCarloReport& report);

struct WilksExperiment {
  int n = 0;
  int df = 0;
  int failures = 0;
  std::vector<double> cgm;          // true labels
  std::vector<double> variational;  // Lambda_V
  std::vector<char> ok;
  double ks_cgm = 0.0;
  double ks_variational = 0.0;
};

WilksExperiment wilks_experiment(const ModelParams& theta0, int n, int reps,
                                 std::uint64_t seed, int threads, const VarConfig& var);
ExperimentOutput wilks_output(const WilksExperiment& w);

// One LanReport per n; theta0 at each n keeps pi, S from `base` and sets the
// expected degree to lambda0 (n / ns[0])^exponent.
std::vector<LanReport> lan_experiment(const ModelParams& base, const std::vector<int>& ns,
                                      double lambda0, double exponent, const Vector& s,
                                      const Vector& t, int reps, std::uint64_t seed,
                                      int threads);
ExperimentOutput lan_output(const std::vector<LanReport>& reports);

struct SandwichRow {
  SandwichCheck check;
  int n;
};
std::vector<SandwichRow> sandwich_experiment(int K, int n, int reps, std::uint64_t seed,
                                             int threads);
ExperimentOutput sandwich_output(const std::vector<SandwichRow>& rows);

std::vector<IdentityCheck> identity_experiment(int K, int n, int reps, std::uint64_t seed,
                                               int threads);
ExperimentOutput identity_output(const std::vector<IdentityCheck>& rows);

struct EquivalenceTrend {
  std::vector<int> ns;
  // distances[k][s]: sqrt(n) times the logit distance between the aligned
  // variational and CGM estimates, seed s at ns[k]; NaN when a fit failed.
  std::vector<std::vector<double>> distances;
  std::vector<double> medians;
  bool decreasing = false;
};

EquivalenceTrend equivalence_trend(const ModelParams& base, const std::vector<int>& ns,
                                   double lambda0, double exponent, int seeds,
                                   std::uint64_t seed, int threads, const VarConfig& var);
ExperimentOutput equivalence_output(const EquivalenceTrend& trend);

struct ConcentrationResult {
  int n = 0;
  double mu = 0.0;              // n^2 rho
  std::vector<double> max_abs;  // max over e of ||X(e)||_inf, per draw
  std::vector<double> eps;
  std::vector<double> empirical_tail;
  std::vector<double> bound;  // 2 K^(n+2) exp(-eps^2 mu / 4)
  bool holds = true;          // tail <= bound wherever bound < 1
};

ConcentrationResult concentration_experiment(const ModelParams& theta0, int n, int reps,
                                             std::uint64_t seed, int threads);
ExperimentOutput concentration_output(const ConcentrationResult& c);

}  // namespace blockmodel

#endif  // BLOCKMODEL_EXPERIMENTS_HPP_
