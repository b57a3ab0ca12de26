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

#include "blockmodel/degree_corrected.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "blockmodel/errors.hpp"
#include "blockmodel/io.hpp"
#include "blockmodel/numeric.hpp"
#include "blockmodel/parallel.hpp"
#include "blockmodel/rng.hpp"

namespace blockmodel {

namespace {

constexpr double kLogFloor = -30.0;
const double kLogCeilG = std::log1p(-1e-10);

bool on_simplex(const Vector& v) {
  return (v.array() >= 0.0).all() && std::abs(v.sum() - 1.0) <= 1e-10;
}

// Edge-probability part of J at fixed q, in ordered-pair form.
struct PairStats {
  Matrix num;  // sum_{i != j} A_ij q_ik q_jl
  Matrix den;  // sum_{i != j} q_ik q_jl
  Vector mass;
};

PairStats pair_stats(const MeanFieldPosterior& q, const Graph& graph) {
  const Matrix& m = q.q();
  const int K = q.K();
  PairStats ps;
  ps.mass = m.colwise().sum().transpose();
  ps.num = Matrix::Zero(K, K);
  for (int i = 0; i < graph.n(); ++i) {
    for (int j : graph.neighbors(i)) {
      if (j > i) {
        const Matrix outer = m.row(i).transpose() * m.row(j);
        ps.num += outer + outer.transpose();
      }
    }
  }
  ps.den = ps.mass * ps.mass.transpose() - m.transpose() * m;
  ps.den = ps.den.cwiseMax(ps.num);
  return ps;
}

// Log coordinates x = (log gamma(0..V-1), log G upper triangle).
struct LogCoords {
  int U;
  int V;

  int size() const { return V + U * (U + 1) / 2; }

  int g_index(int u, int w) const {
    if (u > w) std::swap(u, w);
    return V + u * U - u * (u - 1) / 2 + (w - u);
  }

  Matrix H(const Vector& x) const {
    const int K = U * V;
    Matrix h(K, K);
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) {
        h(k, l) = std::exp(x(k % V) + x(l % V) + x(g_index(k / V, l / V)));
      }
    }
    return h;
  }

  double value(const Vector& x, const PairStats& ps) const {
    const Matrix h = H(x);
    double f = 0.0;
    for (int k = 0; k < h.rows(); ++k) {
      for (int l = 0; l < h.cols(); ++l) {
        f += xlogy(ps.num(k, l), h(k, l)) + xlogy(ps.den(k, l) - ps.num(k, l), 1.0 - h(k, l));
      }
    }
    return 0.5 * f;
  }

  // Gradient and a positive diagonal curvature estimate.
  void gradient(const Vector& x, const PairStats& ps, Vector& g, Vector& curv) const {
    const Matrix h = H(x);
    g = Vector::Zero(size());
    curv = Vector::Ones(size());
    for (int k = 0; k < h.rows(); ++k) {
      for (int l = 0; l < h.cols(); ++l) {
        const double hk = h(k, l);
        const double rest = ps.den(k, l) - ps.num(k, l);
        const double d = 0.5 * (ps.num(k, l) - rest * hk / (1.0 - hk));
        const double c = 0.5 * rest * hk / ((1.0 - hk) * (1.0 - hk)) + 0.5 * ps.num(k, l);
        g(k % V) += d;
        g(l % V) += d;
        g(g_index(k / V, l / V)) += d;
        curv(k % V) += c;
        curv(l % V) += c;
        curv(g_index(k / V, l / V)) += c;
      }
    }
  }

  Vector project(Vector x) const {
    for (int j = 0; j < size(); ++j) {
      const double hi = j < V ? 0.0 : kLogCeilG;
      x(j) = std::clamp(x(j), kLogFloor, hi);
    }
    return x;
  }
};

Vector to_log_coords(const DcParams& dc) {
  const LogCoords lc{dc.U, dc.V};
  Vector x(lc.size());
  for (int v = 0; v < dc.V; ++v) x(v) = std::log(std::max(dc.gamma(v), 1e-13));
  for (int u = 0; u < dc.U; ++u) {
    for (int w = u; w < dc.U; ++w) {
      x(lc.g_index(u, w)) = std::log(std::max(dc.G(u, w), 1e-13));
    }
  }
  return lc.project(x);
}

void from_log_coords(const Vector& x, DcParams& dc) {
  const LogCoords lc{dc.U, dc.V};
  for (int v = 0; v < dc.V; ++v) dc.gamma(v) = std::exp(x(v));
  for (int u = 0; u < dc.U; ++u) {
    for (int w = u; w < dc.U; ++w) dc.G(u, w) = dc.G(w, u) = std::exp(x(lc.g_index(u, w)));
  }
}

struct MStepOutcome {
  bool stalled = false;
};

MStepOutcome constrained_m_step(const MeanFieldPosterior& q, const Graph& graph,
                                const DcFitConfig& config, DcParams& dc,
                                Vector& class_probs) {
  const int U = dc.U;
  const int V = dc.V;
  const PairStats ps = pair_stats(q, graph);
  const double n = graph.n();
  Vector row(U), col(V);
  for (int u = 0; u < U; ++u) row(u) = ps.mass.segment(u * V, V).sum();
  for (int v = 0; v < V; ++v) {
    col(v) = 0.0;
    for (int u = 0; u < U; ++u) col(v) += ps.mass(u * V + v);
  }
  if (config.free_class_probs) {
    if ((ps.mass.array() <= 1e-9).any()) throw FitError("a (u, v) class has no mass");
    class_probs = ps.mass / ps.mass.sum();
  }
  if ((row.array() <= 1e-9).any() || (col.array() <= 1e-9).any()) {
    throw FitError("a community or degree level has no mass");
  }
  dc.alpha = config.known_alpha ? config.alpha : Vector(row / n);
  dc.alpha /= dc.alpha.sum();
  dc.beta = col / col.sum();
  if (!config.free_class_probs) {
    class_probs.resize(U * V);
    for (int u = 0; u < U; ++u) {
      for (int v = 0; v < V; ++v) class_probs(u * V + v) = dc.alpha(u) * dc.beta(v);
    }
  }

  const LogCoords lc{U, V};
  Vector x = to_log_coords(dc);
  double f = lc.value(x, ps);
  double step = 1.0;
  MStepOutcome out;
  Vector g, curv;
  for (int it = 0; it < config.max_inner; ++it) {
    lc.gradient(x, ps, g, curv);
    const Vector dir = g.cwiseQuotient(curv);
    const double pg = (lc.project(x + dir) - x).norm();
    if (pg < 1e-10) break;
    bool accepted = false;
    double t = std::min(1.0, 2.0 * step);
    for (int bt = 0; bt < config.max_backtracks; ++bt, t *= 0.5) {
      const Vector cand = lc.project(x + t * dir);
      const double fc = lc.value(cand, ps);
      if (fc >= f + 1e-4 * g.dot(cand - x) && fc >= f) {
        const double gain = fc - f;
        x = cand;
        f = fc;
        step = t;
        accepted = true;
        if (gain <= 1e-15 * std::abs(f)) it = config.max_inner;
        break;
      }
    }
    if (!accepted) {
      out.stalled = pg > 1e-6;
      break;
    }
  }
  from_log_coords(x, dc);
  return out;
}

ModelParams mapped(const DcParams& dc, const Vector& class_probs) {
  const ModelParams base = dc_to_blockmodel(dc);
  return ModelParams::from_pi_H(class_probs, base.H());
}

Matrix permute_columns(const Matrix& q, const Permutation& perm) {
  Matrix out(q.rows(), q.cols());
  for (Eigen::Index a = 0; a < q.cols(); ++a) out.col(perm[a]) = q.col(a);
  return out;
}

// Level permutation that dc_canonical applies: level v moves to slot[v].
std::vector<int> level_order(const DcParams& dc) {
  std::vector<int> idx(dc.V);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (dc.gamma(a) != dc.gamma(b)) return dc.gamma(a) > dc.gamma(b);
    return dc.beta(a) > dc.beta(b);
  });
  std::vector<int> slot(dc.V);
  for (int s = 0; s < dc.V; ++s) slot[idx[s]] = s;
  return slot;
}

struct RunResult {
  DcParams dc;
  Vector class_probs;
  VarFit fit;
  bool stalled;
};

RunResult run_from(const Graph& graph, int U, int V, MeanFieldPosterior q,
                   const DcFitConfig& config, std::uint64_t sweep_seed) {
  DcParams dc;
  dc.U = U;
  dc.V = V;
  dc.gamma = Vector::Ones(V);
  const MStepResult plain = m_step(q, graph);
  const Matrix Hp = plain.params.H();
  dc.G = Matrix::Zero(U, U);
  for (int u = 0; u < U; ++u) {
    for (int w = 0; w < U; ++w) {
      double s = 0.0;
      for (int v = 0; v < V; ++v) {
        for (int v2 = 0; v2 < V; ++v2) s += Hp(u * V + v, w * V + v2);
      }
      dc.G(u, w) = std::clamp(s / (V * V), 1e-6, 1.0 - 1e-6);
    }
  }
  Vector class_probs;
  bool stalled = constrained_m_step(q, graph, config, dc, class_probs).stalled;
  ModelParams params = mapped(dc, class_probs);
  double J = elbo(q, params, graph);
  std::vector<double> trace{J};
  Rng rng(sweep_seed);
  bool converged = false;
  int it = 0;
  while (it < config.max_iters) {
    ++it;
    const std::vector<int> order = rng.permutation(graph.n());
    q = e_step(q, params, graph, order);
    stalled = constrained_m_step(q, graph, config, dc, class_probs).stalled || stalled;
    params = mapped(dc, class_probs);
    const double J_new = elbo(q, params, graph);
    trace.push_back(J_new);
    const double delta = std::abs(J_new - J);
    J = J_new;
    if (delta <= config.tol * std::abs(J_new)) {
      converged = true;
      break;
    }
  }
  VarFit fit{std::move(params), std::move(q), J, it, converged, 1, 0, std::move(trace)};
  return {std::move(dc), std::move(class_probs), std::move(fit), stalled};
}

}  // namespace

void DcParams::validate() const {
  if (U < 1 || V < 1) throw DomainError("U and V must be at least 1");
  if (alpha.size() != U || beta.size() != V || gamma.size() != V || G.rows() != U ||
      G.cols() != U) {
    throw DomainError("degree-corrected parameter dimensions do not match U, V");
  }
  if (!on_simplex(alpha)) throw DomainError("alpha must lie on the simplex");
  if (!on_simplex(beta)) throw DomainError("beta must lie on the simplex");
  if ((gamma.array() < 0.0).any() || (gamma.array() > 1.0).any()) {
    throw DomainError("gamma entries must lie in [0, 1]");
  }
  if ((G.array() < 0.0).any() || (G.array() > 1.0).any()) {
    throw DomainError("G entries must lie in [0, 1]");
  }
  if (G != G.transpose()) throw DomainError("G must be symmetric");
}

ModelParams dc_to_blockmodel(const DcParams& dc) {
  dc.validate();
  const int K = dc.U * dc.V;
  Vector pi(K);
  Matrix H(K, K);
  for (int k = 0; k < K; ++k) {
    pi(k) = dc.alpha(k / dc.V) * dc.beta(k % dc.V);
    for (int l = 0; l < K; ++l) {
      H(k, l) = dc.gamma(k % dc.V) * dc.gamma(l % dc.V) * dc.G(k / dc.V, l / dc.V);
    }
  }
  pi /= pi.sum();
  return ModelParams::from_pi_H(pi, H);
}

Vector dc_to_vector(const DcParams& dc) {
  Vector v(dc_param_count(dc.U, dc.V));
  int idx = 0;
  for (int u = 0; u < dc.U - 1; ++u) v(idx++) = dc.alpha(u);
  for (int w = 0; w < dc.V - 1; ++w) v(idx++) = dc.beta(w);
  for (int w = 0; w < dc.V; ++w) v(idx++) = dc.gamma(w);
  for (int u = 0; u < dc.U; ++u) {
    for (int w = u; w < dc.U; ++w) v(idx++) = dc.G(u, w);
  }
  return v;
}

DcParams dc_from_vector(int U, int V, const Vector& v) {
  if (v.size() != dc_param_count(U, V)) throw DomainError("wrong vector length");
  DcParams dc;
  dc.U = U;
  dc.V = V;
  dc.alpha.resize(U);
  dc.beta.resize(V);
  dc.gamma.resize(V);
  dc.G.resize(U, U);
  int idx = 0;
  for (int u = 0; u < U - 1; ++u) dc.alpha(u) = v(idx++);
  dc.alpha(U - 1) = 1.0 - dc.alpha.head(U - 1).sum();
  for (int w = 0; w < V - 1; ++w) dc.beta(w) = v(idx++);
  dc.beta(V - 1) = 1.0 - dc.beta.head(V - 1).sum();
  for (int w = 0; w < V; ++w) dc.gamma(w) = v(idx++);
  for (int u = 0; u < U; ++u) {
    for (int w = u; w < U; ++w) dc.G(u, w) = dc.G(w, u) = v(idx++);
  }
  return dc;
}

DcParams dc_canonical(const DcParams& dc) {
  DcParams out = dc;
  const double c = dc.gamma.maxCoeff();
  if (c > 0.0) {
    out.gamma = dc.gamma / c;
    out.G = (dc.G * (c * c)).cwiseMin(1.0);
  }
  const std::vector<int> slot = level_order(out);
  const Vector beta = out.beta;
  const Vector gamma = out.gamma;
  for (int v = 0; v < dc.V; ++v) {
    out.beta(slot[v]) = beta(v);
    out.gamma(slot[v]) = gamma(v);
  }
  return out;
}

nlohmann::json dc_to_json(const DcParams& dc) {
  return {{"U", dc.U},
          {"V", dc.V},
          {"alpha", io::vector_to_json(dc.alpha)},
          {"beta", io::vector_to_json(dc.beta)},
          {"gamma", io::vector_to_json(dc.gamma)},
          {"G", io::matrix_to_json(dc.G)}};
}

DcParams dc_from_json(const nlohmann::json& j) {
  try {
    DcParams dc;
    dc.U = j.at("U").get<int>();
    dc.V = j.at("V").get<int>();
    dc.alpha = io::vector_from_json(j.at("alpha"));
    dc.beta = io::vector_from_json(j.at("beta"));
    dc.gamma = io::vector_from_json(j.at("gamma"));
    dc.G = io::matrix_from_json(j.at("G"));
    dc.validate();
    return dc;
  } catch (const nlohmann::json::exception& e) {
    throw io::ParseError(std::string("degree-corrected parameters: ") + e.what());
  }
}

DcParams read_dc_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io::ParseError("cannot open " + path);
  try {
    return dc_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw io::ParseError(path + ": " + e.what());
  }
}

DcFit fit_submodel(const Graph& graph, int U, int V, const DcFitConfig& config) {
  if (U < 1 || V < 1) throw DomainError("U and V must be at least 1");
  const int K = U * V;
  if (graph.n() < K) throw DomainError("need n >= U V");
  if (config.known_alpha && (config.alpha.size() != U || !on_simplex(config.alpha))) {
    throw DomainError("known alpha must be a length-U probability vector");
  }
  const int restarts = std::max(1, config.restarts);
  std::vector<std::optional<RunResult>> runs(restarts);
  std::vector<std::string> failures(restarts);
  parallel_for(restarts, config.threads, [&](std::int64_t r) {
    const std::uint64_t s = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    try {
      MeanFieldPosterior q0 = (r == 0 && config.init == VarInit::kSpectral)
                                  ? spectral_init(graph, K, derive_seed(s, 1))
                                  : random_init(graph.n(), K, derive_seed(s, 1));
      runs[r] = run_from(graph, U, V, std::move(q0), config, derive_seed(s, 2));
    } catch (const FitError& e) {
      failures[r] = e.what();
    } catch (const DomainError& e) {
      failures[r] = e.what();
    }
  });
  std::optional<RunResult> best;
  int best_r = 0;
  for (int r = 0; r < restarts; ++r) {
    if (runs[r] && (!best || runs[r]->fit.elbo > best->fit.elbo)) {
      best = std::move(runs[r]);
      best_r = r;
    }
  }
  if (!best) {
    std::ostringstream msg;
    msg << "degree-corrected EM: all " << restarts << " restarts degenerated;";
    for (int r = 0; r < restarts; ++r) msg << " [" << r << "] " << failures[r];
    throw FitError(msg.str());
  }

  const std::vector<int> slot = level_order(best->dc);
  Permutation perm(K);
  for (int k = 0; k < K; ++k) perm[k] = (k / V) * V + slot[k % V];
  const DcParams dc = dc_canonical(best->dc);
  Vector class_probs = permute(best->class_probs, perm);
  ModelParams params = mapped(dc, class_probs);
  MeanFieldPosterior q(permute_columns(best->fit.q.q(), perm));
  const double J = elbo(q, params, graph);
  DcFit out{dc, std::move(class_probs),
            VarFit{std::move(params), std::move(q), J, best->fit.iterations,
                   best->fit.converged, restarts, best_r, std::move(best->fit.trace)},
            best->stalled};
  return out;
}

}  // namespace blockmodel
