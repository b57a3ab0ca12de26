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

#include "blockmodel/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "blockmodel/errors.hpp"
#include "blockmodel/rng.hpp"

namespace blockmodel {

namespace {

void check_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DomainError(std::string(what) + " must be square");
  }
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < m.cols(); ++b) {
      if (m(a, b) != m(b, a)) {
        throw DomainError(std::string(what) + " must be symmetric");
      }
    }
  }
}

}  // namespace

ModelParams::ModelParams(double rho, Vector pi, Matrix S)
    : rho_(rho), pi_(std::move(pi)), S_(std::move(S)) {
  const auto K = pi_.size();
  if (K < 1) throw DomainError("K must be at least 1");
  if (!(rho_ > 0.0 && rho_ <= 1.0)) throw DomainError("rho must lie in (0, 1]");
  if (S_.rows() != K || S_.cols() != K) {
    throw DomainError("S must be K x K");
  }
  if ((pi_.array() <= 0.0).any() || !pi_.allFinite()) {
    throw DomainError("pi entries must be positive");
  }
  if (std::abs(pi_.sum() - 1.0) > 1e-12) {
    throw DomainError("pi must sum to 1");
  }
  check_symmetric(S_, "S");
  if ((S_.array() < 0.0).any() || !S_.allFinite()) {
    throw DomainError("S must be nonnegative");
  }
  const double norm = pi_.dot(S_ * pi_);
  if (std::abs(norm - 1.0) > 1e-10) {
    throw DomainError("S is not normalized: sum pi(a) pi(b) S(a,b) = " +
                      std::to_string(norm));
  }
  if ((rho_ * S_).maxCoeff() > 1.0) {
    throw DomainError("H = rho * S has entries above 1");
  }
}

ModelParams ModelParams::from_pi_H(const Vector& pi, const Matrix& H) {
  auto [rho, S] = split_rho(pi, H);
  return ModelParams(rho, pi, std::move(S));
}

Vector LogitParams::to_vector() const {
  const int k = K();
  Vector v(num_free(k));
  int idx = 0;
  for (int a = 0; a < k - 1; ++a) v(idx++) = varpi(a);
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) v(idx++) = nu(a, b);
  }
  return v;
}

LogitParams LogitParams::from_vector(int K, const Vector& v) {
  if (v.size() != num_free(K)) {
    throw DomainError("logit vector has wrong length");
  }
  LogitParams lp{Vector(K - 1), Matrix(K, K)};
  int idx = 0;
  for (int a = 0; a < K - 1; ++a) lp.varpi(a) = v(idx++);
  for (int a = 0; a < K; ++a) {
    for (int b = a; b < K; ++b) {
      lp.nu(a, b) = v(idx);
      lp.nu(b, a) = v(idx);
      ++idx;
    }
  }
  return lp;
}

Graph::Graph(int n, std::span<const std::pair<int, int>> edges)
    : n_(n), adj_(static_cast<std::size_t>(std::max(n, 0))) {
  if (n < 0) throw DomainError("node count must be nonnegative");
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw DomainError("edge endpoint out of range");
    }
    if (i == j) throw DomainError("self-loops are not allowed");
    adj_[i].push_back(j);
    adj_[j].push_back(i);
  }
  for (auto& nb : adj_) {
    std::sort(nb.begin(), nb.end());
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
      throw DomainError("duplicate edge");
    }
  }
  num_edges_ = static_cast<std::int64_t>(edges.size());
}

Graph Graph::from_adjacency(const Eigen::MatrixXi& adjacency) {
  const auto n = static_cast<int>(adjacency.rows());
  if (adjacency.cols() != n) throw DomainError("adjacency must be square");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0) throw DomainError("adjacency diagonal must be 0");
    for (int j = i + 1; j < n; ++j) {
      const int v = adjacency(i, j);
      if (v != adjacency(j, i)) throw DomainError("adjacency must be symmetric");
      if (v != 0 && v != 1) throw DomainError("adjacency entries must be 0/1");
      if (v == 1) edges.emplace_back(i, j);
    }
  }
  return Graph(n, edges);
}

bool Graph::has_edge(int i, int j) const {
  const auto& nb = adj_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(num_edges_));
  for (int i = 0; i < n_; ++i) {
    for (int j : adj_[i]) {
      if (j > i) out.emplace_back(i, j);
    }
  }
  return out;
}

Eigen::MatrixXi Graph::adjacency() const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j : adj_[i]) a(i, j) = 1;
  }
  return a;
}

Labels::Labels(std::vector<int> z, int K) : z_(std::move(z)), K_(K) {
  if (K < 1) throw DomainError("K must be at least 1");
  for (int v : z_) {
    if (v < 0 || v >= K) throw DomainError("label out of range");
  }
}

Labels Labels::from_one_based(std::span<const int> z, int K) {
  std::vector<int> zero(z.begin(), z.end());
  for (int& v : zero) --v;
  return Labels(std::move(zero), K);
}

std::vector<int> Labels::to_one_based() const {
  std::vector<int> out(z_);
  for (int& v : out) ++v;
  return out;
}

GraphSample sample_graph(const ModelParams& params, int n, std::uint64_t seed) {
  if (n < 1) throw DomainError("n must be at least 1");
  const Matrix H = params.H();
  if ((H.array() < 0.0).any() || (H.array() > 1.0).any()) {
    throw DomainError("H entries must lie in [0, 1]");
  }
  Rng rng(seed);
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.categorical(params.pi());
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.bernoulli(H(z[i], z[j]))) edges.emplace_back(i, j);
    }
  }
  return {Labels(std::move(z), params.K()), Graph(n, edges)};
}

LogitParams to_logits(const Vector& pi, const Matrix& H) {
  const auto K = pi.size();
  if ((pi.array() <= 0.0).any() || (K > 1 && (pi.array() >= 1.0).any())) {
    throw DomainError("pi must lie strictly inside (0, 1) for logits");
  }
  if ((H.array() <= 0.0).any() || (H.array() >= 1.0).any()) {
    throw DomainError("H must lie strictly inside (0, 1) for logits");
  }
  LogitParams lp{Vector(K - 1), Matrix(K, K)};
  const double last = pi(K - 1);
  for (Eigen::Index a = 0; a < K - 1; ++a) lp.varpi(a) = std::log(pi(a) / last);
  lp.nu = (H.array() / (1.0 - H.array())).log().matrix();
  return lp;
}

LogitParams to_logits(const ModelParams& params) {
  return to_logits(params.pi(), params.H());
}

PiH from_logits(const LogitParams& lp) {
  const int K = lp.K();
  PiH out{Vector(K), Matrix(K, K)};
  const double shift = K > 1 ? std::max(0.0, lp.varpi.maxCoeff()) : 0.0;
  double denom = std::exp(-shift);
  for (int a = 0; a < K - 1; ++a) denom += std::exp(lp.varpi(a) - shift);
  for (int a = 0; a < K - 1; ++a) {
    out.pi(a) = std::exp(lp.varpi(a) - shift) / denom;
  }
  out.pi(K - 1) = std::exp(-shift) / denom;
  out.H = (1.0 / (1.0 + (-lp.nu.array()).exp())).matrix();
  return out;
}

RhoS split_rho(const Vector& pi, const Matrix& H) {
  if (H.rows() != pi.size() || H.cols() != pi.size()) {
    throw DomainError("H must be K x K");
  }
  if ((H.array() < 0.0).any()) throw DomainError("H must be nonnegative");
  const double rho = pi.dot(H * pi);
  if (!(rho > 0.0)) throw DomainError("H is zero on the support of pi");
  return {rho, H / rho};
}

SufficientStats sufficient_stats(const Graph& graph, const Labels& labels) {
  const int n = graph.n();
  if (labels.size() != n) throw DomainError("labels length must equal n");
  const int K = labels.K();
  SufficientStats s{n, CountVector::Zero(K), CountMatrix::Zero(K, K),
                    CountMatrix::Zero(K, K)};
  for (int i = 0; i < n; ++i) ++s.n_a(labels[i]);
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      s.n_ab(a, b) = a == b ? s.n_a(a) * (s.n_a(a) - 1) : s.n_a(a) * s.n_a(b);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j : graph.neighbors(i)) ++s.O(labels[i], labels[j]);
  }
  return s;
}

Labels permute(const Labels& labels, const Permutation& perm) {
  std::vector<int> z(labels.values());
  for (int& v : z) v = perm[v];
  return Labels(std::move(z), labels.K());
}

Vector permute(const Vector& v, const Permutation& perm) {
  Vector out(v.size());
  for (Eigen::Index a = 0; a < v.size(); ++a) out(perm[a]) = v(a);
  return out;
}

Matrix permute(const Matrix& m, const Permutation& perm) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    for (Eigen::Index b = 0; b < m.cols(); ++b) out(perm[a], perm[b]) = m(a, b);
  }
  return out;
}

ModelParams permute(const ModelParams& params, const Permutation& perm) {
  return ModelParams(params.rho(), permute(params.pi(), perm),
                     permute(params.S(), perm));
}

std::vector<Permutation> all_permutations(int K) {
  if (K < 1) throw DomainError("K must be at least 1");
  if (K > kMaxAlignClasses) {
    throw DomainError("permutation search is limited to K <= 8");
  }
  Permutation p(K);
  std::iota(p.begin(), p.end(), 0);
  std::vector<Permutation> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

LabelAlignment align_labels(const Labels& candidate, const Labels& reference) {
  if (candidate.size() != reference.size()) {
    throw DomainError("label vectors differ in length");
  }
  const int K = std::max(candidate.K(), reference.K());
  // Confusion counts make each permutation O(K).
  std::vector<int> counts(static_cast<std::size_t>(K * K), 0);
  for (int i = 0; i < candidate.size(); ++i) {
    ++counts[static_cast<std::size_t>(candidate[i] * K + reference[i])];
  }
  Permutation best;
  int best_agree = -1;
  for (const auto& p : all_permutations(K)) {
    int agree = 0;
    for (int a = 0; a < K; ++a) agree += counts[static_cast<std::size_t>(a * K + p[a])];
    if (agree > best_agree) {
      best_agree = agree;
      best = p;
    }
  }
  std::vector<int> z(candidate.values());
  for (int& v : z) v = best[v];
  return {best, Labels(std::move(z), K), candidate.size() - best_agree};
}

double param_distance(const ModelParams& a, const ModelParams& b) {
  return (a.H() - b.H()).norm() + (a.pi() - b.pi()).norm();
}

ParamAlignment align_params(const ModelParams& candidate,
                            const ModelParams& reference) {
  if (candidate.K() != reference.K()) throw DomainError("K mismatch");
  const Matrix H = candidate.H();
  const Matrix H_ref = reference.H();
  Permutation best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& p : all_permutations(candidate.K())) {
    const double d = (permute(H, p) - H_ref).norm() +
                     (permute(candidate.pi(), p) - reference.pi()).norm();
    if (d < best_dist) {
      best_dist = d;
      best = p;
    }
  }
  return {best, permute(candidate, best)};
}

}  // namespace blockmodel
