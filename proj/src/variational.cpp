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

#include "blockmodel/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "blockmodel/cgm.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/exact.hpp"
#include "blockmodel/numeric.hpp"
#include "blockmodel/parallel.hpp"
#include "blockmodel/rng.hpp"
#include "blockmodel/spectral.hpp"

namespace blockmodel {

namespace {

constexpr double kHClamp = 1e-12;
constexpr double kQFloor = 1e-300;

struct LogTables {
  Vector log_pi;
  Matrix log_h;    // log H
  Matrix log_1mh;  // log (1 - H)
};

LogTables log_tables(const ModelParams& params) {
  const Matrix H = params.H().cwiseMax(kHClamp).cwiseMin(1.0 - kHClamp);
  return {params.pi().cwiseMax(kQFloor).array().log().matrix(), H.array().log().matrix(),
          (1.0 - H.array()).log().matrix()};
}

}  // namespace

MeanFieldPosterior::MeanFieldPosterior(Matrix q) : q_(std::move(q)) {
  if (q_.cols() < 1) throw DomainError("q needs at least one class");
  for (Eigen::Index i = 0; i < q_.rows(); ++i) {
    if ((q_.row(i).array() < 0.0).any() || !q_.row(i).allFinite()) {
      throw DomainError("q entries must be finite and nonnegative");
    }
    if (std::abs(q_.row(i).sum() - 1.0) > 1e-12) {
      throw DomainError("q rows must sum to 1");
    }
  }
}

MeanFieldPosterior MeanFieldPosterior::point_mass(const Labels& labels) {
  Matrix q = Matrix::Zero(labels.size(), labels.K());
  for (int i = 0; i < labels.size(); ++i) q(i, labels[i]) = 1.0;
  return MeanFieldPosterior(std::move(q));
}

MeanFieldPosterior MeanFieldPosterior::uniform(int n, int K) {
  return MeanFieldPosterior(Matrix::Constant(n, K, 1.0 / K));
}

Labels MeanFieldPosterior::argmax() const {
  std::vector<int> z(static_cast<std::size_t>(n()));
  for (int i = 0; i < n(); ++i) {
    int best = 0;
    for (int a = 1; a < K(); ++a) {
      if (q_(i, a) > q_(i, best)) best = a;
    }
    z[i] = best;
  }
  return Labels(std::move(z), K());
}

double elbo(const MeanFieldPosterior& q, const ModelParams& params, const Graph& graph) {
  if (q.n() != graph.n() || q.K() != params.K()) throw DomainError("shape mismatch");
  const LogTables t = log_tables(params);
  const Matrix& m = q.q();
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index a = 0; a < m.cols(); ++a) entropy -= xlogy(m(i, a), m(i, a));
  }
  const Vector total = m.colwise().sum().transpose();
  const double prior = total.dot(t.log_pi);
  // sum_{i<j} q_i^T L0 q_j = (T^T L0 T - sum_i q_i^T L0 q_i) / 2.
  double non_edge = total.dot(t.log_1mh * total);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    non_edge -= m.row(i) * t.log_1mh * m.row(i).transpose();
  }
  non_edge *= 0.5;
  const Matrix diff = t.log_h - t.log_1mh;
  double edge = 0.0;
  for (int i = 0; i < graph.n(); ++i) {
    for (int j : graph.neighbors(i)) {
      if (j > i) edge += m.row(i) * diff * m.row(j).transpose();
    }
  }
  return entropy + prior + non_edge + edge;
}

MeanFieldPosterior e_step(const MeanFieldPosterior& q, const ModelParams& params,
                          const Graph& graph, std::span<const int> order) {
  const int K = q.K();
  const LogTables t = log_tables(params);
  const Matrix diff = t.log_h - t.log_1mh;
  Matrix m = q.q();
  Eigen::RowVectorXd total = m.colwise().sum();
  Eigen::RowVectorXd nb_sum(K);
  Eigen::RowVectorXd score(K);
  for (int i : order) {
    nb_sum.setZero();
    for (int j : graph.neighbors(i)) nb_sum += m.row(j);
    const Eigen::RowVectorXd others = total - m.row(i);
    // score(a) = log pi(a) + sum_b nb(b) D(a,b) + others(b) L0(a,b); D, L0 symmetric.
    score = t.log_pi.transpose() + nb_sum * diff + others * t.log_1mh;
    const double mx = score.maxCoeff();
    Eigen::RowVectorXd w = (score.array() - mx).exp().matrix();
    w /= w.sum();
    total += w - m.row(i);
    m.row(i) = w;
  }
  return MeanFieldPosterior(std::move(m));
}

MStepResult m_step(const MeanFieldPosterior& q, const Graph& graph) {
  const int n = q.n();
  const int K = q.K();
  const Matrix& m = q.q();
  const Vector total = m.colwise().sum().transpose();
  Vector pi = total / n;
  for (int a = 0; a < K; ++a) {
    if (!(pi(a) * n > 1e-9)) {
      throw FitError("class " + std::to_string(a + 1) + " has no mass");
    }
  }
  pi /= pi.sum();
  Matrix num = Matrix::Zero(K, K);
  for (int i = 0; i < n; ++i) {
    for (int j : graph.neighbors(i)) {
      if (j > i) {
        const Matrix outer = m.row(i).transpose() * m.row(j);
        num += outer + outer.transpose();
      }
    }
  }
  const Matrix den = total * total.transpose() - m.transpose() * m;
  Matrix H(K, K);
  bool zero_den = false;
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      if (den(a, b) > 1e-12 * std::max(1.0, total(a) * total(b))) {
        H(a, b) = std::clamp(num(a, b) / den(a, b), 0.0, 1.0);
      } else {
        H(a, b) = 0.0;
        zero_den = true;
      }
    }
  }
  H = (0.5 * (H + H.transpose())).eval();
  return {ModelParams::from_pi_H(pi, H), zero_den};
}

MeanFieldPosterior spectral_init(const Graph& graph, int K, std::uint64_t seed) {
  const Labels labels = spectral_clustering(graph, K, seed);
  if (K == 1) return MeanFieldPosterior::uniform(graph.n(), 1);
  Matrix q = Matrix::Constant(graph.n(), K, 0.1 / (K - 1));
  for (int i = 0; i < graph.n(); ++i) q(i, labels[i]) = 0.9;
  return MeanFieldPosterior(std::move(q));
}

MeanFieldPosterior random_init(int n, int K, std::uint64_t seed) {
  Rng rng(seed);
  Matrix q(n, K);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < K; ++a) q(i, a) = rng.exponential();
    q.row(i) /= q.row(i).sum();
  }
  return MeanFieldPosterior(std::move(q));
}

VarFit fit_variational_from(const Graph& graph, const MeanFieldPosterior& q0,
                            const VarConfig& config, std::uint64_t sweep_seed) {
  Rng rng(sweep_seed);
  MeanFieldPosterior q = q0;
  MStepResult ms = m_step(q, graph);
  double J = elbo(q, ms.params, graph);
  std::vector<double> trace{J};
  bool converged = false;
  int it = 0;
  while (it < config.max_iters) {
    ++it;
    const std::vector<int> order = rng.permutation(graph.n());
    q = e_step(q, ms.params, graph, order);
    ms = m_step(q, graph);
    const double J_new = elbo(q, ms.params, graph);
    trace.push_back(J_new);
    const double delta = std::abs(J_new - J);
    J = J_new;
    if (delta <= config.tol * std::abs(J_new)) {
      converged = true;
      break;
    }
  }
  return {std::move(ms.params), std::move(q), J, it, converged, 1, 0, std::move(trace)};
}

VarFit fit_variational(const Graph& graph, int K, const VarConfig& config) {
  if (graph.n() < K) throw DomainError("need n >= K");
  const int restarts = std::max(1, config.restarts);
  std::vector<std::optional<VarFit>> fits(static_cast<std::size_t>(restarts));
  std::vector<std::string> failures(static_cast<std::size_t>(restarts));
  parallel_for(restarts, config.threads, [&](std::int64_t r) {
    const std::uint64_t s = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    try {
      const MeanFieldPosterior q0 = (r == 0 && config.init == VarInit::kSpectral)
                                        ? spectral_init(graph, K, derive_seed(s, 1))
                                        : random_init(graph.n(), K, derive_seed(s, 1));
      fits[r] = fit_variational_from(graph, q0, config, derive_seed(s, 2));
    } catch (const FitError& e) {
      failures[r] = e.what();
    } catch (const DomainError& e) {
      failures[r] = e.what();
    }
  });
  std::optional<VarFit> best;
  for (int r = 0; r < restarts; ++r) {
    if (!fits[r]) continue;
    if (!best || fits[r]->elbo > best->elbo) {
      best = std::move(fits[r]);
      best->best_restart = r;
    }
  }
  if (!best) {
    std::ostringstream msg;
    msg << "variational EM: all " << restarts << " restarts degenerated;";
    for (int r = 0; r < restarts; ++r) msg << " [" << r << "] " << failures[r];
    throw FitError(msg.str());
  }
  best->restarts_used = restarts;
  return std::move(*best);
}

QOptimum maximize_q(const MeanFieldPosterior& q0, const ModelParams& params,
                    const Graph& graph, double tol, int max_sweeps, std::uint64_t seed) {
  Rng rng(seed);
  MeanFieldPosterior q = q0;
  double J = elbo(q, params, graph);
  int sweeps = 0;
  while (sweeps < max_sweeps) {
    ++sweeps;
    q = e_step(q, params, graph, rng.permutation(graph.n()));
    const double J_new = elbo(q, params, graph);
    if (J_new == J) break;
    const double delta = J_new - J;
    J = J_new;
    if (std::abs(delta) <= tol * std::max(1.0, std::abs(J_new))) break;
  }
  return {std::move(q), J, sweeps};
}

SandwichCheck check_sandwich(const Labels& labels, const ModelParams& params,
                             const Graph& graph) {
  const Labels widened(labels.values(), params.K());
  SandwichCheck c{};
  c.lower = complete_loglik(graph, widened, params);
  c.upper = marginal_loglik(graph, params);
  c.mid = maximize_q(MeanFieldPosterior::point_mass(widened), params, graph).elbo;
  c.ok = c.lower <= c.mid + 1e-9 && c.mid <= c.upper + 1e-9;
  return c;
}

}  // namespace blockmodel
