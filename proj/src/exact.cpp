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

#include "blockmodel/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "blockmodel/cgm.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/numeric.hpp"
#include "blockmodel/parallel.hpp"
#include "blockmodel/rng.hpp"

namespace blockmodel {

namespace {

constexpr std::int64_t kChunk = 1 << 14;

// Evaluates log f(z, A) for labelings visited in mixed-radix order, keeping
// the per-labeling block counts for expectation passes.
class LabelingWalker {
 public:
  LabelingWalker(const Graph& graph, int K, const Vector& pi, const Matrix& H)
      : n_(graph.n()), K_(K), edges_(graph.edges()), z_(static_cast<std::size_t>(n_), 0),
        n_a_(static_cast<std::size_t>(K), 0), O_(static_cast<std::size_t>(K * K), 0),
        log_pi_(static_cast<std::size_t>(K)), log_h_(static_cast<std::size_t>(K * K)),
        log_1mh_(static_cast<std::size_t>(K * K)) {
    for (int a = 0; a < K; ++a) {
      log_pi_[a] = pi(a) > 0.0 ? std::log(pi(a)) : kNegInf;
      for (int b = 0; b < K; ++b) {
        log_h_[a * K + b] = H(a, b) > 0.0 ? std::log(H(a, b)) : kNegInf;
        log_1mh_[a * K + b] = H(a, b) < 1.0 ? std::log1p(-H(a, b)) : kNegInf;
      }
    }
  }

  void seek(std::int64_t index) {
    for (int i = 0; i < n_; ++i) {
      z_[i] = static_cast<int>(index % K_);
      index /= K_;
    }
  }

  void advance() {
    for (int i = 0; i < n_; ++i) {
      if (++z_[i] < K_) return;
      z_[i] = 0;
    }
  }

  // Refreshes the counts for the current labeling and returns log f.
  double evaluate() {
    std::fill(n_a_.begin(), n_a_.end(), 0);
    std::fill(O_.begin(), O_.end(), 0);
    for (int v : z_) ++n_a_[v];
    for (const auto& [i, j] : edges_) {
      ++O_[z_[i] * K_ + z_[j]];
      ++O_[z_[j] * K_ + z_[i]];
    }
    double ll = 0.0;
    for (int a = 0; a < K_; ++a) {
      if (n_a_[a] > 0) ll += n_a_[a] * log_pi_[a];
    }
    double block = 0.0;
    for (int a = 0; a < K_; ++a) {
      for (int b = 0; b < K_; ++b) {
        const std::int64_t pairs = pair_count(a, b);
        const std::int64_t o = O_[a * K_ + b];
        if (o > 0) block += static_cast<double>(o) * log_h_[a * K_ + b];
        if (pairs - o > 0) block += static_cast<double>(pairs - o) * log_1mh_[a * K_ + b];
      }
    }
    return ll + 0.5 * block;
  }

  std::int64_t pair_count(int a, int b) const {
    return a == b ? n_a_[a] * (n_a_[a] - 1) : n_a_[a] * n_a_[b];
  }
  std::int64_t block_size(int a) const { return n_a_[a]; }
  std::int64_t edge_count(int a, int b) const { return O_[a * K_ + b]; }
  const std::vector<int>& labels() const { return z_; }

 private:
  int n_;
  int K_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> z_;
  std::vector<std::int64_t> n_a_;
  std::vector<std::int64_t> O_;
  std::vector<double> log_pi_;
  std::vector<double> log_h_;
  std::vector<double> log_1mh_;
};

struct ChunkSum {
  double max = kNegInf;
  double sum = 0.0;
};

double combine(const std::vector<ChunkSum>& chunks) {
  double m = kNegInf;
  for (const auto& c : chunks) m = std::max(m, c.max);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (const auto& c : chunks) {
    if (c.max > kNegInf) s += c.sum * std::exp(c.max - m);
  }
  return m + std::log(s);
}

std::int64_t chunk_count(std::int64_t total) { return (total + kChunk - 1) / kChunk; }

// Expected block counts under the exact posterior.
struct ExpectedCounts {
  Vector n_a;
  Matrix O;
  Matrix pairs;
};

ExpectedCounts expected_counts(const Graph& graph, int K, const Vector& pi,
                               const Matrix& H, double log_g, int threads) {
  const std::int64_t total = enumeration_size(graph.n(), K);
  const std::int64_t chunks = chunk_count(total);
  std::vector<ExpectedCounts> partial(static_cast<std::size_t>(chunks));
  parallel_for(chunks, threads, [&](std::int64_t c) {
    LabelingWalker walker(graph, K, pi, H);
    ExpectedCounts acc{Vector::Zero(K), Matrix::Zero(K, K), Matrix::Zero(K, K)};
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(total, begin + kChunk);
    walker.seek(begin);
    for (std::int64_t idx = begin; idx < end; ++idx, walker.advance()) {
      const double ll = walker.evaluate();
      if (ll == kNegInf) continue;
      const double w = std::exp(ll - log_g);
      for (int a = 0; a < K; ++a) {
        acc.n_a(a) += w * static_cast<double>(walker.block_size(a));
        for (int b = 0; b < K; ++b) {
          acc.O(a, b) += w * static_cast<double>(walker.edge_count(a, b));
          acc.pairs(a, b) += w * static_cast<double>(walker.pair_count(a, b));
        }
      }
    }
    partial[static_cast<std::size_t>(c)] = std::move(acc);
  });
  ExpectedCounts total_counts{Vector::Zero(K), Matrix::Zero(K, K), Matrix::Zero(K, K)};
  for (const auto& p : partial) {
    total_counts.n_a += p.n_a;
    total_counts.O += p.O;
    total_counts.pairs += p.pairs;
  }
  return total_counts;
}

struct EmRun {
  Vector pi;
  Matrix H;
  double log_g;
  bool converged;
  bool monotone;
  int iterations;
  std::vector<double> trace;
};

EmRun run_exact_em(const Graph& graph, int K, Vector pi, Matrix H,
                   const ExactMleConfig& config) {
  EmRun run{std::move(pi), std::move(H), 0.0, false, true, 0, {}};
  run.log_g = marginal_loglik(graph, run.pi, run.H, config.threads);
  run.trace.push_back(run.log_g);
  const double n = graph.n();
  for (int it = 0; it < config.max_iters; ++it) {
    const ExpectedCounts e =
        expected_counts(graph, K, run.pi, run.H, run.log_g, config.threads);
    Vector pi_new = e.n_a / n;
    pi_new /= pi_new.sum();
    Matrix H_new = run.H;
    for (int a = 0; a < K; ++a) {
      for (int b = 0; b < K; ++b) {
        if (e.pairs(a, b) > 0.0) H_new(a, b) = std::clamp(e.O(a, b) / e.pairs(a, b), 0.0, 1.0);
      }
    }
    H_new = 0.5 * (H_new + H_new.transpose()).eval();
    const double log_g_new = marginal_loglik(graph, pi_new, H_new, config.threads);
    ++run.iterations;
    if (log_g_new < run.log_g - 1e-9 * std::max(1.0, std::abs(run.log_g))) {
      run.monotone = false;
    }
    const double delta = log_g_new - run.log_g;
    run.pi = std::move(pi_new);
    run.H = std::move(H_new);
    run.log_g = log_g_new;
    run.trace.push_back(log_g_new);
    if (std::abs(delta) < config.tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace

std::int64_t enumeration_size(int n, int K) {
  if (n < 0 || K < 1) throw DomainError("invalid enumeration size");
  std::int64_t total = 1;
  for (int i = 0; i < n; ++i) {
    total *= K;
    if (total > kEnumerationBudget) {
      throw BudgetError("exhaustive enumeration needs K^n = " + std::to_string(K) +
                        "^" + std::to_string(n) + " labelings, over the K^n <= " +
                        std::to_string(kEnumerationBudget) + " budget");
    }
  }
  return total;
}

Labels labeling_at(std::int64_t index, int n, int K) {
  std::vector<int> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    z[i] = static_cast<int>(index % K);
    index /= K;
  }
  return Labels(std::move(z), K);
}

double marginal_loglik(const Graph& graph, const Vector& pi, const Matrix& H,
                       int threads) {
  const int K = static_cast<int>(pi.size());
  const std::int64_t total = enumeration_size(graph.n(), K);
  const std::int64_t chunks = chunk_count(total);
  std::vector<ChunkSum> sums(static_cast<std::size_t>(chunks));
  parallel_for(chunks, threads, [&](std::int64_t c) {
    LabelingWalker walker(graph, K, pi, H);
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(total, begin + kChunk);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(end - begin));
    walker.seek(begin);
    for (std::int64_t idx = begin; idx < end; ++idx, walker.advance()) {
      values.push_back(walker.evaluate());
    }
    ChunkSum cs;
    for (double v : values) cs.max = std::max(cs.max, v);
    if (cs.max > kNegInf) {
      for (double v : values) cs.sum += std::exp(v - cs.max);
    }
    sums[static_cast<std::size_t>(c)] = cs;
  });
  return combine(sums);
}

double marginal_loglik(const Graph& graph, const ModelParams& params, int threads) {
  return marginal_loglik(graph, params.pi(), params.H(), threads);
}

ExactPosterior exact_posterior(const Graph& graph, const ModelParams& params,
                               int threads) {
  const int K = params.K();
  const std::int64_t total = enumeration_size(graph.n(), K);
  ExactPosterior post{graph.n(), K, 0.0, std::vector<double>(static_cast<std::size_t>(total))};
  const Vector& pi = params.pi();
  const Matrix H = params.H();
  const std::int64_t chunks = chunk_count(total);
  parallel_for(chunks, threads, [&](std::int64_t c) {
    LabelingWalker walker(graph, K, pi, H);
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(total, begin + kChunk);
    walker.seek(begin);
    for (std::int64_t idx = begin; idx < end; ++idx, walker.advance()) {
      post.prob[static_cast<std::size_t>(idx)] = walker.evaluate();
    }
  });
  std::vector<ChunkSum> sums(static_cast<std::size_t>(chunks));
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(total, begin + kChunk);
    ChunkSum cs;
    for (std::int64_t i = begin; i < end; ++i) cs.max = std::max(cs.max, post.prob[i]);
    if (cs.max > kNegInf) {
      for (std::int64_t i = begin; i < end; ++i) cs.sum += std::exp(post.prob[i] - cs.max);
    }
    sums[static_cast<std::size_t>(c)] = cs;
  }
  post.log_g = combine(sums);
  for (double& p : post.prob) p = std::exp(p - post.log_g);
  return post;
}

ExactMleResult exact_gm_mle(const Graph& graph, int K, const ExactMleConfig& config) {
  const int n = graph.n();
  const std::int64_t total = enumeration_size(n, K);
  if (n < 2) throw DomainError("exact MLE needs at least two nodes");

  std::vector<std::pair<Vector, Matrix>> starts;

  // Profile start: CGM MLE at the labeling maximizing sup_theta log f.
  std::optional<ModelParams> reference;
  {
    double best_q = kNegInf;
    std::int64_t best_idx = -1;
    for (std::int64_t idx = 0; idx < total; ++idx) {
      const CgmFit fit = cgm_mle(graph, labeling_at(idx, n, K));
      if (fit.empty_block) continue;
      if (fit.loglik > best_q) {
        best_q = fit.loglik;
        best_idx = idx;
      }
    }
    if (best_idx >= 0) {
      const CgmFit fit = cgm_mle(graph, labeling_at(best_idx, n, K));
      // A singleton class leaves its diagonal entry undefined; any value
      // gives the same likelihood at this labeling.
      const Matrix H = fit.H_hat.unaryExpr([](double h) { return std::isnan(h) ? 0.5 : h; });
      starts.emplace_back(fit.pi_hat, H);
      try {
        reference = ModelParams::from_pi_H(fit.pi_hat, H);
      } catch (const DomainError&) {
      }
    }
  }
  Rng rng(config.seed);
  for (int r = 0; r < config.restarts; ++r) {
    Vector pi(K);
    for (int a = 0; a < K; ++a) pi(a) = 0.05 + rng.exponential();
    pi /= pi.sum();
    Matrix H(K, K);
    for (int a = 0; a < K; ++a) {
      for (int b = a; b < K; ++b) {
        H(a, b) = H(b, a) = 0.05 + 0.9 * rng.uniform();
      }
    }
    starts.emplace_back(std::move(pi), std::move(H));
  }
  if (config.extra_start) {
    starts.emplace_back(config.extra_start->pi(), config.extra_start->H());
  }

  std::optional<EmRun> best;
  bool monotone = true;
  for (auto& [pi, H] : starts) {
    EmRun run = run_exact_em(graph, K, pi, H, config);
    monotone = monotone && run.monotone;
    if ((run.pi.array() <= 0.0).any()) continue;
    if (!best || run.log_g > best->log_g) best = std::move(run);
  }
  if (!best) throw FitError("exact EM: every start collapsed onto an empty class");
  ModelParams params = ModelParams::from_pi_H(best->pi, best->H);
  if (reference && K <= kMaxAlignClasses) {
    params = align_params(params, *reference).aligned;
  }
  return {std::move(params), best->log_g, best->converged, best->iterations,
          std::move(best->trace), monotone};
}

IdentityCheck verify_marginal_identity(const Graph& graph, const ModelParams& theta,
                                       const ModelParams& theta0) {
  const double log_g = marginal_loglik(graph, theta);
  const ExactPosterior post0 = exact_posterior(graph, theta0);
  const double lhs = std::exp(log_g - post0.log_g);
  const int K = theta0.K();
  const Vector& pi = theta.pi();
  const Matrix H = theta.H();
  const Vector& pi0 = theta0.pi();
  const Matrix H0 = theta0.H();
  LabelingWalker walker(graph, K, pi, H);
  LabelingWalker walker0(graph, K, pi0, H0);
  double rhs = 0.0;
  for (std::size_t idx = 0; idx < post0.prob.size(); ++idx) {
    const double p = post0.prob[idx];
    if (p > 0.0) rhs += p * std::exp(walker.evaluate() - walker0.evaluate());
    walker.advance();
    walker0.advance();
  }
  return {lhs, rhs, std::abs(lhs - rhs)};
}

}  // namespace blockmodel
