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

#include <doctest.h>

#include <cmath>
#include <random>

#include "blockmodel/cgm.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/model.hpp"
#include "oracles.hpp"

using namespace blockmodel;

namespace {

ModelParams two_block(double rho = 0.05) {
  Matrix S(2, 2);
  S << 1.6, 0.4, 0.4, 1.6;
  return ModelParams(rho, Vector::Constant(2, 0.5), S);
}

}  // namespace

TEST_CASE("model params validation") {
  Matrix S(2, 2);
  S << 1.6, 0.4, 0.4, 1.6;
  CHECK_NOTHROW(ModelParams(0.05, Vector::Constant(2, 0.5), S));
  CHECK_THROWS_AS(ModelParams(0.05, Vector::Constant(2, 0.4), S), DomainError);
  Matrix asym = S;
  asym(0, 1) = 0.41;
  CHECK_THROWS_AS(ModelParams(0.05, Vector::Constant(2, 0.5), asym), DomainError);
  CHECK_THROWS_AS(ModelParams(0.05, Vector::Constant(2, 0.5), 2.0 * S), DomainError);
  CHECK_THROWS_AS(ModelParams(0.9, Vector::Constant(2, 0.5), S), DomainError);
  Vector pi(2);
  pi << 1.0, 0.0;
  CHECK_THROWS_AS(ModelParams(0.05, pi, S), DomainError);
}

TEST_CASE("graph construction") {
  std::vector<std::pair<int, int>> e{{0, 1}, {2, 1}};
  const Graph g(3, e);
  CHECK(g.num_edges() == 2);
  CHECK(g.has_edge(1, 2));
  CHECK(g.ordered_edge_count() == 4);
  std::vector<std::pair<int, int>> loop{{1, 1}};
  CHECK_THROWS(Graph(3, loop));
  std::vector<std::pair<int, int>> dup{{0, 1}, {1, 0}};
  CHECK_THROWS(Graph(3, dup));
  CHECK(Graph::from_adjacency(g.adjacency()) == g);
}

TEST_CASE("sample_graph degenerate cases") {
  const ModelParams full(1.0, Vector::Ones(1), Matrix::Ones(1, 1));
  const GraphSample s = sample_graph(full, 4, 3);
  CHECK(s.graph.num_edges() == 6);
  for (int i = 0; i < 4; ++i) CHECK(s.labels[i] == 0);

  const ModelParams empty(1e-12, Vector::Ones(1), Matrix::Ones(1, 1));
  CHECK(sample_graph(empty, 4, 3).graph.num_edges() == 0);
}

TEST_CASE("sample_graph is deterministic per seed") {
  const ModelParams p = two_block();
  CHECK(sample_graph(p, 300, 9).graph == sample_graph(p, 300, 9).graph);
  CHECK_FALSE(sample_graph(p, 300, 9).graph == sample_graph(p, 300, 10).graph);
}

TEST_CASE("sample_graph edge density matches the analytic mean") {
  const ModelParams p = two_block();
  const int n = 2000;
  const Vector& pi = p.pi();
  const Matrix H = p.H();
  const double N = 0.5 * n * (n - 1.0);
  // Var(E) = N E[H(1-H)] + N Var(h) + N 2 (n-2) Cov(h(z1,z2), h(z1,z3)).
  double eh1h = 0.0, eh2 = 0.0, cov = 0.0;
  for (int a = 0; a < 2; ++a) {
    double row = 0.0;
    for (int b = 0; b < 2; ++b) {
      eh1h += pi(a) * pi(b) * H(a, b) * (1.0 - H(a, b));
      eh2 += pi(a) * pi(b) * H(a, b) * H(a, b);
      row += pi(b) * H(a, b);
    }
    cov += pi(a) * row * row;
  }
  const double rho = p.rho();
  const double var_e = N * eh1h + N * (eh2 - rho * rho) + N * 2.0 * (n - 2) * (cov - rho * rho);
  const double sd_density = std::sqrt(var_e) / N;
  double mean = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) mean += sample_graph(p, n, 1000 + s).graph.num_edges() / N;
  mean /= seeds;
  CHECK(std::abs(mean - 0.05) < 4.0 * sd_density / std::sqrt(seeds));
}

TEST_CASE("logit conversions") {
  Vector pi = Vector::Constant(2, 0.5);
  Matrix H = Matrix::Constant(2, 2, 0.5);
  LogitParams lp = to_logits(pi, H);
  CHECK(lp.varpi(0) == doctest::Approx(0.0));
  CHECK(lp.nu.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const double e = std::exp(1.0);
  pi << e / (1 + e), 1 / (1 + e);
  CHECK(to_logits(pi, H).varpi(0) == doctest::Approx(1.0).epsilon(1e-14));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = oracle::random_instance(1, 3, seed, 0.001, 0.999);
    const PiH back = from_logits(to_logits(in.pi, in.H));
    CHECK((back.pi - in.pi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.H - in.H).cwiseAbs().maxCoeff() < 1e-10);
    const LogitParams lq = to_logits(in.pi, in.H);
    CHECK((LogitParams::from_vector(3, lq.to_vector()).nu - lq.nu).norm() == 0.0);
  }

  H(0, 1) = H(1, 0) = 1.0;
  CHECK_THROWS_AS(to_logits(pi, H), DomainError);
  H(0, 1) = H(1, 0) = 0.0;
  CHECK_THROWS_AS(to_logits(pi, H), DomainError);
}

TEST_CASE("split_rho") {
  Matrix H(2, 2);
  H << 0.08, 0.02, 0.02, 0.08;
  const RhoS rs = split_rho(Vector::Constant(2, 0.5), H);
  CHECK(rs.rho == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(rs.S(0, 0) == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(rs.S(0, 1) == doctest::Approx(0.4).epsilon(1e-14));

  const RhoS one = split_rho(Vector::Ones(1), Matrix::Constant(1, 1, 0.3));
  CHECK(one.rho == doctest::Approx(0.3));
  CHECK(one.S(0, 0) == doctest::Approx(1.0));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = oracle::random_instance(1, 4, seed);
    const RhoS r = split_rho(in.pi, in.H);
    CHECK(((r.rho * r.S) - in.H).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS(split_rho(Vector::Constant(2, 0.5), Matrix::Zero(2, 2)));
}

TEST_CASE("sufficient stats hand example") {
  std::vector<std::pair<int, int>> e{{0, 1}, {0, 2}};
  const Graph g(4, e);
  const Labels z = Labels::from_one_based(std::vector<int>{1, 1, 2, 2}, 2);
  const SufficientStats st = sufficient_stats(g, z);
  CHECK(st.n_a(0) == 2);
  CHECK(st.n_a(1) == 2);
  CHECK(st.n_ab(0, 0) == 2);
  CHECK(st.n_ab(0, 1) == 4);
  CHECK(st.n_ab(1, 0) == 4);
  CHECK(st.n_ab(1, 1) == 2);
  CHECK(st.O(0, 0) == 2);
  CHECK(st.O(0, 1) == 1);
  CHECK(st.O(1, 0) == 1);
  CHECK(st.O(1, 1) == 0);
}

TEST_CASE("sufficient stats invariants") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = oracle::random_instance(15, 3, seed);
    const Graph g = oracle::graph_of(in);
    const Labels z = oracle::labels_of(in);
    const SufficientStats st = sufficient_stats(g, z);
    CHECK(st.n_a.sum() == 15);
    CHECK(st.O.sum() == g.ordered_edge_count());
    CHECK(st.O == st.O.transpose());
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        CHECK(st.n_ab(a, b) == (a == b ? st.n_a(a) * (st.n_a(a) - 1) : st.n_a(a) * st.n_a(b)));
        CHECK(st.O(a, b) <= st.n_ab(a, b));
      }
    }
    const Permutation perm{2, 0, 1};
    const SufficientStats ps = sufficient_stats(g, permute(z, perm));
    for (int a = 0; a < 3; ++a) {
      CHECK(ps.n_a(perm[a]) == st.n_a(a));
      for (int b = 0; b < 3; ++b) CHECK(ps.O(perm[a], perm[b]) == st.O(a, b));
    }
  }
  const Graph empty(5, std::span<const std::pair<int, int>>{});
  CHECK(sufficient_stats(empty, Labels({0, 1, 0, 1, 1}, 2)).O.sum() == 0);
  const Graph complete = Graph::from_adjacency(
      Eigen::MatrixXi::Ones(5, 5) - Eigen::MatrixXi::Identity(5, 5));
  const SufficientStats cs = sufficient_stats(complete, Labels({0, 1, 0, 1, 1}, 2));
  CHECK(cs.O == cs.n_ab);
}

TEST_CASE("align_labels") {
  const Labels z({0, 0, 1, 1, 0, 1, 1, 0}, 2);
  auto same = align_labels(z, z);
  CHECK(same.perm == Permutation{0, 1});
  CHECK(same.hamming == 0);
  std::vector<int> swapped = z.values();
  for (int& v : swapped) v = 1 - v;
  auto sw = align_labels(Labels(swapped, 2), z);
  CHECK(sw.perm == Permutation{1, 0});
  CHECK(sw.hamming == 0);
  CHECK(sw.aligned == z);

  std::mt19937_64 gen(5);
  std::vector<int> big(40);
  for (int& v : big) v = static_cast<int>(gen() % 2);
  std::vector<int> flipped = big;
  for (int i : {3, 17, 29}) flipped[i] = 1 - flipped[i];
  CHECK(align_labels(Labels(flipped, 2), Labels(big, 2)).hamming == 3);

  CHECK_THROWS_AS(all_permutations(9), DomainError);
  CHECK(all_permutations(3).size() == 6);
}

TEST_CASE("align_params") {
  const auto in = oracle::random_instance(1, 3, 11);
  const ModelParams ref = oracle::params_of(in);
  for (const auto& perm : all_permutations(3)) {
    const ParamAlignment al = align_params(permute(ref, perm), ref);
    CHECK((al.aligned.pi() - ref.pi()).norm() == 0.0);
    CHECK((al.aligned.H() - ref.H()).norm() == 0.0);
  }
  Vector pi(3);
  pi << 0.2, 0.3, 0.5;
  Matrix H(3, 3);
  H << 0.5, 0.1, 0.2, 0.1, 0.6, 0.3, 0.2, 0.3, 0.9;
  Matrix Hn = H;
  Hn(0, 0) += 0.001;
  Hn(1, 2) -= 0.001;
  Hn(2, 1) -= 0.001;
  const ParamAlignment noisy =
      align_params(ModelParams::from_pi_H(pi, Hn), ModelParams::from_pi_H(pi, H));
  CHECK(noisy.perm == Permutation{0, 1, 2});

  const ModelParams one(0.3, Vector::Ones(1), Matrix::Ones(1, 1));
  CHECK(align_params(one, one).perm == Permutation{0});
}

TEST_CASE("complete loglik is permutation invariant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = oracle::random_instance(12, 3, seed);
    const Graph g = oracle::graph_of(in);
    const Labels z = oracle::labels_of(in);
    const ModelParams p = oracle::params_of(in);
    const Permutation perm{1, 2, 0};
    CHECK(complete_loglik(g, permute(z, perm), permute(p, perm)) ==
          doctest::Approx(complete_loglik(g, z, p)).epsilon(1e-13));
  }
}

TEST_CASE("labels one-based round trip") {
  const Labels z = Labels::from_one_based(std::vector<int>{1, 3, 2}, 3);
  CHECK(z[1] == 2);
  CHECK(z.to_one_based() == std::vector<int>{1, 3, 2});
  CHECK_THROWS(Labels::from_one_based(std::vector<int>{0, 1}, 2));
  CHECK_THROWS(Labels({0, 2}, 2));
}
