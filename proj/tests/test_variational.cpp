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
#include <numeric>
#include <random>

#include "blockmodel/cgm.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/exact.hpp"
#include "blockmodel/stats.hpp"
#include "blockmodel/variational.hpp"
#include "oracles.hpp"

using namespace blockmodel;

namespace {

Matrix random_q(int n, int K, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> e(1.0);
  Matrix q(n, K);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < K; ++a) q(i, a) = e(gen);
    q.row(i) /= q.row(i).sum();
  }
  return q;
}

Graph two_cliques(int m) {
  std::vector<std::pair<int, int>> e;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) e.emplace_back(c * m + i, c * m + j);
    }
  }
  return Graph(2 * m, e);
}

std::vector<int> iota(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("elbo matches the dense formula") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto in = oracle::random_instance(9, 1 + seed % 3, seed);
    const int K = static_cast<int>(in.pi.size());
    const Matrix q = random_q(9, K, seed + 50);
    const double got = elbo(MeanFieldPosterior(q), oracle::params_of(in), oracle::graph_of(in));
    CHECK(got == doctest::Approx(oracle::elbo(in.A, q, in.pi, in.H)).epsilon(1e-12));
  }
}

TEST_CASE("elbo at a point mass is the complete loglik") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = oracle::random_instance(10, 3, seed);
    const Labels z = oracle::labels_of(in);
    const double got = elbo(MeanFieldPosterior::point_mass(z), oracle::params_of(in),
                            oracle::graph_of(in));
    CHECK(got == doctest::Approx(oracle::complete_loglik(in.A, in.z, in.pi, in.H)).epsilon(1e-12));
  }
}

TEST_CASE("elbo never exceeds the marginal loglik") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = oracle::random_instance(8, 2, 100 + seed);
    const double J = elbo(MeanFieldPosterior(random_q(8, 2, seed)), oracle::params_of(in),
                          oracle::graph_of(in));
    CHECK(J <= oracle::marginal_loglik(in.A, 2, in.pi, in.H) + 1e-12);
  }
}

TEST_CASE("uniform q under an uninformative model attains log g") {
  const auto in = oracle::random_instance(9, 2, 3);
  Vector pi(2);
  pi << 0.5, 0.5;
  const ModelParams p = ModelParams::from_pi_H(pi, Matrix::Constant(2, 2, 0.3));
  const Graph g = oracle::graph_of(in);
  CHECK(elbo(MeanFieldPosterior::uniform(9, 2), p, g) ==
        doctest::Approx(marginal_loglik(g, p)).epsilon(1e-12));
}

TEST_CASE("elbo clamps boundary entries of H") {
  const Graph g = two_cliques(3);
  Vector pi(1);
  pi << 1.0;
  const ModelParams p = ModelParams::from_pi_H(pi, Matrix::Ones(1, 1));
  const double clamped = 6.0 * std::log1p(-1e-12) + 9.0 * std::log(1.0 - (1.0 - 1e-12));
  CHECK(elbo(MeanFieldPosterior::uniform(6, 1), p, g) == doctest::Approx(clamped).epsilon(1e-9));
}

TEST_CASE("e_step leaves the separated optimum in place") {
  const Graph g = two_cliques(5);
  std::vector<int> z(10, 0);
  for (int i = 5; i < 10; ++i) z[i] = 1;
  Vector pi(2);
  pi << 0.5, 0.5;
  const ModelParams p = ModelParams::from_pi_H(pi, Matrix::Identity(2, 2));
  const MeanFieldPosterior q0 = MeanFieldPosterior::point_mass(Labels(z, 2));
  const auto order = iota(10);
  const MeanFieldPosterior q1 = e_step(q0, p, g, order);
  CHECK((q1.q() - q0.q()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("every single-site update increases J") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = oracle::random_instance(12, 3, 200 + seed);
    const Graph g = oracle::graph_of(in);
    const ModelParams p = oracle::params_of(in);
    MeanFieldPosterior q(random_q(12, 3, seed));
    double J = elbo(q, p, g);
    for (int i = 0; i < 12; ++i) {
      const int one[1] = {(i * 5) % 12};
      q = e_step(q, p, g, one);
      const double next = elbo(q, p, g);
      CHECK(J <= next + 1e-12);
      J = next;
    }
  }
}

TEST_CASE("e_step under a uniform H returns pi in every row") {
  const auto in = oracle::random_instance(10, 3, 8);
  Vector pi(3);
  pi << 0.2, 0.3, 0.5;
  const ModelParams p = ModelParams::from_pi_H(pi, Matrix::Constant(3, 3, 0.4));
  const auto order = iota(10);
  const MeanFieldPosterior q = e_step(MeanFieldPosterior(random_q(10, 3, 1)), p,
                                      oracle::graph_of(in), order);
  for (int i = 0; i < 10; ++i) {
    for (int a = 0; a < 3; ++a) CHECK(q(i, a) == doctest::Approx(pi(a)).epsilon(1e-12));
  }
}

TEST_CASE("m_step at a point mass reproduces the CGM MLE") {
  const auto in = oracle::random_instance(15, 3, 9);
  const Graph g = oracle::graph_of(in);
  const Labels z = oracle::labels_of(in);
  const MStepResult m = m_step(MeanFieldPosterior::point_mass(z), g);
  const CgmFit c = cgm_mle(g, z);
  CHECK(!m.zero_denominator);
  CHECK((m.params.pi() - c.pi_hat).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.params.H() - c.H_hat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("m_step does not decrease J at fixed q") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = oracle::random_instance(11, 2, 300 + seed);
    const Graph g = oracle::graph_of(in);
    const MeanFieldPosterior q(random_q(11, 2, seed));
    const double before = elbo(q, oracle::params_of(in), g);
    CHECK(elbo(q, m_step(q, g).params, g) >= before - 1e-12);
  }
}

TEST_CASE("m_step at uniform q gives the overall density") {
  const auto in = oracle::random_instance(13, 2, 10);
  const Graph g = oracle::graph_of(in);
  const MStepResult m = m_step(MeanFieldPosterior::uniform(13, 2), g);
  const double density = 2.0 * static_cast<double>(g.num_edges()) / (13.0 * 12.0);
  CHECK(m.params.pi()(0) == doctest::Approx(0.5));
  CHECK((m.params.H().array() - density).abs().maxCoeff() < 1e-12);
}

TEST_CASE("m_step flags a class pair without weight") {
  const auto in = oracle::random_instance(6, 2, 11);
  std::vector<int> z{0, 0, 0, 0, 0, 1};
  const MStepResult m = m_step(MeanFieldPosterior::point_mass(Labels(z, 2)), oracle::graph_of(in));
  CHECK(m.zero_denominator);
  CHECK(m.params.H()(1, 1) == 0.0);
  std::vector<int> all0(6, 0);
  CHECK_THROWS_AS(m_step(MeanFieldPosterior::point_mass(Labels(all0, 2)), oracle::graph_of(in)),
                  FitError);
}

TEST_CASE("variational fit separates two cliques") {
  const Graph g = two_cliques(10);
  const VarFit fit = fit_variational(g, 2);
  const Labels z = fit.q.argmax();
  for (int i = 1; i < 10; ++i) CHECK(z[i] == z[0]);
  for (int i = 11; i < 20; ++i) CHECK(z[i] == z[10]);
  CHECK(z[0] != z[10]);
  const Matrix H = fit.params.H();
  CHECK(H(z[0], z[0]) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(H(z[0], z[10]) < 1e-6);
}

TEST_CASE("variational fit trace is monotone and elbo is consistent") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = oracle::random_instance(40, 3, 400 + seed);
    const Graph g = oracle::graph_of(in);
    VarConfig cfg;
    cfg.restarts = 3;
    cfg.seed = seed;
    const VarFit fit = fit_variational(g, 3, cfg);
    for (std::size_t t = 1; t < fit.trace.size(); ++t) {
      CHECK(fit.trace[t] >= fit.trace[t - 1] - 1e-10);
    }
    CHECK(std::abs(fit.elbo - elbo(fit.q, fit.params, g)) < 1e-8);
    CHECK(fit.restarts_used == 3);
  }
}

TEST_CASE("variational fit is close to the exact MLE at n = 12") {
  // Within/between ratio 8:1 at the largest feasible density.
  Matrix S(2, 2);
  S << 8.0, 1.0, 1.0, 8.0;
  S /= 4.5;
  Vector pi(2);
  pi << 0.5, 0.5;
  const ModelParams truth(0.5, pi, S);
  std::vector<double> dist;
  for (int s = 0; s < 20; ++s) {
    const GraphSample smp = sample_graph(truth, 12, 900 + s);
    VarConfig cfg;
    cfg.restarts = 5;
    cfg.seed = s;
    const VarFit v = fit_variational(smp.graph, 2, cfg);
    ExactMleConfig ec;
    ec.seed = s;
    const ExactMleResult ml = exact_gm_mle(smp.graph, 2, ec);
    dist.push_back(param_distance(align_params(v.params, ml.params).aligned, ml.params));
  }
  CHECK(stats::median(dist) < 0.05);
}

TEST_CASE("sandwich bound on small instances") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto in = oracle::random_instance(4 + seed % 7, 2, 500 + seed);
    const SandwichCheck c =
        check_sandwich(oracle::labels_of(in), oracle::params_of(in), oracle::graph_of(in));
    ok += c.ok;
    CHECK(c.lower <= c.mid + 1e-9);
    CHECK(c.mid <= c.upper + 1e-9);
  }
  CHECK(ok == 100);
}

TEST_CASE("sandwich collapses without latent freedom") {
  const auto in = oracle::random_instance(9, 1, 12);
  const SandwichCheck one =
      check_sandwich(oracle::labels_of(in), oracle::params_of(in), oracle::graph_of(in));
  CHECK(one.mid == doctest::Approx(one.lower).epsilon(1e-12));
  CHECK(one.upper == doctest::Approx(one.lower).epsilon(1e-12));

  const auto in2 = oracle::random_instance(9, 2, 13);
  Vector pi(2);
  pi << 0.4, 0.6;
  const SandwichCheck flat =
      check_sandwich(oracle::labels_of(in2), ModelParams::from_pi_H(pi, Matrix::Constant(2, 2, 0.25)),
                     oracle::graph_of(in2));
  CHECK(flat.mid == doctest::Approx(flat.upper).epsilon(1e-12));
}

TEST_CASE("variational EM is equivariant under class relabeling") {
  const auto in = oracle::random_instance(30, 3, 14);
  const Graph g = oracle::graph_of(in);
  const Matrix q0 = random_q(30, 3, 15);
  const Permutation perm{2, 0, 1};
  Matrix q0p(30, 3);
  for (int a = 0; a < 3; ++a) q0p.col(perm[a]) = q0.col(a);
  VarConfig cfg;
  const VarFit a = fit_variational_from(g, MeanFieldPosterior(q0), cfg, 16);
  const VarFit b = fit_variational_from(g, MeanFieldPosterior(q0p), cfg, 16);
  const ModelParams ap = permute(a.params, perm);
  CHECK((ap.pi() - b.params.pi()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((ap.H() - b.params.H()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(a.elbo == doctest::Approx(b.elbo).epsilon(1e-10));
}

TEST_CASE("variational fit is identical across thread counts") {
  const auto in = oracle::random_instance(50, 3, 17);
  const Graph g = oracle::graph_of(in);
  VarConfig cfg;
  cfg.restarts = 4;
  cfg.seed = 99;
  cfg.threads = 1;
  const VarFit a = fit_variational(g, 3, cfg);
  cfg.threads = 3;
  const VarFit b = fit_variational(g, 3, cfg);
  CHECK(a.elbo == b.elbo);
  CHECK(a.best_restart == b.best_restart);
  CHECK(a.q.q() == b.q.q());
  CHECK(a.params.H() == b.params.H());
}
