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

#include "blockmodel/cgm.hpp"

#include <cmath>
#include <limits>

#include "blockmodel/errors.hpp"
#include "blockmodel/numeric.hpp"

namespace blockmodel {

namespace {

// log(1 + sum_a exp(varpi(a))), the varpi log-partition per node.
double varpi_log_partition(const Vector& varpi) {
  double m = 0.0;
  for (Eigen::Index a = 0; a < varpi.size(); ++a) m = std::max(m, varpi(a));
  double s = std::exp(-m);
  for (Eigen::Index a = 0; a < varpi.size(); ++a) s += std::exp(varpi(a) - m);
  return m + std::log(s);
}

}  // namespace

double loglik_from_stats(const SufficientStats& stats, const Vector& pi,
                         const Matrix& H) {
  const int K = stats.K();
  double ll = 0.0;
  for (int a = 0; a < K; ++a) ll += xlogy(static_cast<double>(stats.n_a(a)), pi(a));
  double edges = 0.0;
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      const auto o = static_cast<double>(stats.O(a, b));
      const auto m = static_cast<double>(stats.n_ab(a, b));
      edges += xlogy(o, H(a, b)) + xlogy(m - o, 1.0 - H(a, b));
    }
  }
  ll += 0.5 * edges;
  return std::isnan(ll) ? -std::numeric_limits<double>::infinity() : ll;
}

double complete_loglik(const Graph& graph, const Labels& labels,
                       const ModelParams& params) {
  if (labels.K() > params.K()) throw DomainError("labels exceed K");
  const Labels widened(labels.values(), params.K());
  return loglik_from_stats(sufficient_stats(graph, widened), params.pi(),
                           params.H());
}

double loglik_ratio(const LogitParams& theta, const LogitParams& theta0,
                    const SufficientStats& stats) {
  const int K = stats.K();
  double lam = 0.0;
  for (int a = 0; a < K - 1; ++a) {
    lam += (theta.varpi(a) - theta0.varpi(a)) * static_cast<double>(stats.n_a(a));
  }
  lam -= stats.n * (varpi_log_partition(theta.varpi) -
                    varpi_log_partition(theta0.varpi));
  double block = 0.0;
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      block += (theta.nu(a, b) - theta0.nu(a, b)) * static_cast<double>(stats.O(a, b)) -
               static_cast<double>(stats.n_ab(a, b)) *
                   (softplus(theta.nu(a, b)) - softplus(theta0.nu(a, b)));
    }
  }
  return lam + 0.5 * block;
}

ModelParams CgmFit::params() const {
  if (empty_block) throw FitError("CGM fit has an empty block");
  if (H_hat.hasNaN()) throw FitError("CGM fit has a block pair without node pairs");
  return ModelParams::from_pi_H(pi_hat, H_hat);
}

CgmFit cgm_mle(const Graph& graph, const Labels& labels) {
  CgmFit fit;
  fit.stats = sufficient_stats(graph, labels);
  const int K = labels.K();
  const auto n = static_cast<double>(graph.n());
  fit.pi_hat = fit.stats.n_a.cast<double>() / n;
  fit.H_hat.resize(K, K);
  for (int a = 0; a < K; ++a) {
    if (fit.stats.n_a(a) == 0) fit.empty_block = true;
    for (int b = 0; b < K; ++b) {
      const auto m = fit.stats.n_ab(a, b);
      fit.H_hat(a, b) = m > 0 ? static_cast<double>(fit.stats.O(a, b)) / static_cast<double>(m)
                              : std::numeric_limits<double>::quiet_NaN();
    }
  }
  // Zero-count blocks contribute nothing, so NaN entries are harmless here.
  Matrix H = fit.H_hat.unaryExpr([](double h) { return std::isnan(h) ? 0.0 : h; });
  fit.loglik = loglik_from_stats(fit.stats, fit.pi_hat, H);
  return fit;
}

Vector gradient(const LogitParams& theta, const SufficientStats& stats) {
  const int K = stats.K();
  const PiH ph = from_logits(theta);
  Vector g(LogitParams::num_free(K));
  int idx = 0;
  for (int a = 0; a < K - 1; ++a) {
    g(idx++) = static_cast<double>(stats.n_a(a)) - stats.n * ph.pi(a);
  }
  for (int a = 0; a < K; ++a) {
    for (int b = a; b < K; ++b) {
      const double r = static_cast<double>(stats.O(a, b)) -
                       static_cast<double>(stats.n_ab(a, b)) * ph.H(a, b);
      g(idx++) = a == b ? 0.5 * r : r;
    }
  }
  return g;
}

Matrix hessian(const LogitParams& theta, const SufficientStats& stats) {
  const int K = stats.K();
  const PiH ph = from_logits(theta);
  const int d = LogitParams::num_free(K);
  Matrix h = Matrix::Zero(d, d);
  for (int a = 0; a < K - 1; ++a) {
    for (int b = 0; b < K - 1; ++b) {
      h(a, b) = stats.n * ((a == b ? ph.pi(a) : 0.0) - ph.pi(a) * ph.pi(b));
    }
  }
  int idx = K - 1;
  for (int a = 0; a < K; ++a) {
    for (int b = a; b < K; ++b) {
      const double v = static_cast<double>(stats.n_ab(a, b)) * ph.H(a, b) * (1.0 - ph.H(a, b));
      h(idx, idx) = a == b ? 0.5 * v : v;
      ++idx;
    }
  }
  return h;
}

AsymptoticCov asymptotic_cov(const ModelParams& params, int n) {
  const int K = params.K();
  const Vector& pi = params.pi();
  const Matrix H = params.H();
  const Matrix& S = params.S();
  if (K > 1 && (pi.array() >= 1.0).any()) throw DomainError("pi on the boundary");
  if ((H.array() <= 0.0).any() || (H.array() >= 1.0).any()) {
    throw DomainError("H must lie strictly inside (0, 1)");
  }
  if (n < 2) throw DomainError("n must be at least 2");
  AsymptoticCov cov;
  cov.info1 = Matrix::Zero(K - 1, K - 1);
  for (int a = 0; a < K - 1; ++a) {
    for (int b = 0; b < K - 1; ++b) {
      cov.info1(a, b) = (a == b ? pi(a) : 0.0) - pi(a) * pi(b);
    }
  }
  const int d = K * (K + 1) / 2;
  const double pairs = static_cast<double>(n - 1) / n;
  cov.info2 = Matrix::Zero(d, d);
  int idx = 0;
  for (int a = 0; a < K; ++a) {
    for (int b = a; b < K; ++b) {
      const double v = pairs * pi(a) * pi(b) * S(a, b) * (1.0 - H(a, b));
      cov.info2(idx, idx) = a == b ? 0.5 * v : v;
      ++idx;
    }
  }
  cov.sigma1 = spd_inverse(cov.info1);
  cov.sigma2 = spd_inverse(cov.info2);
  return cov;
}

double wilks_cgm(const Graph& graph, const Labels& labels,
                 const ModelParams& theta0) {
  const CgmFit fit = cgm_mle(graph, Labels(labels.values(), theta0.K()));
  if (fit.empty_block) throw FitError("Wilks statistic undefined: empty block");
  return 2.0 * (fit.loglik - complete_loglik(graph, labels, theta0));
}

}  // namespace blockmodel
