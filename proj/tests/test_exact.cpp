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

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "blockmodel/cgm.hpp"
#include "blockmodel/errors.hpp"
#include "blockmodel/exact.hpp"
#include "blockmodel/stats.hpp"
#include "oracles.hpp"

using namespace blockmodel;

namespace {

Matrix sym2(double h11, double h12, double h22) {
  Matrix H(2, 2);
  H << h11, h12, h12, h22;
  return H;
}

Vector pi2(double p) {
  Vector pi(2);
  pi << p, 1.0 - p;
  return pi;
}

// log g for K = 2 from labelings grouped by (n_1, e_11, e_12, e_22).
struct GroupedMarginal {
  int n;
  std::vector<std::array<double, 5>> groups;  // n1, e11, e12, e22, log count

  explicit GroupedMarginal(const Eigen::MatrixXi& A) : n(static_cast<int>(A.rows())) {
    std::map<std::tuple<int, int, int, int>, double> counts;
    oracle::for_each_labeling(n, 2, [&](const std::vector<int>& z) {
      int n1 = 0, e[3] = {0, 0, 0};
      for (int i = 0; i < n; ++i) {
        n1 += z[i] == 0;
        for (int j = i + 1; j < n; ++j) {
          if (A(i, j)) e[z[i] + z[j]] += 1;
        }
      }
      counts[{n1, e[0], e[1], e[2]}] += 1.0;
    });
    for (const auto& [k, c] : counts) {
      groups.push_back({double(std::get<0>(k)), double(std::get<1>(k)), double(std::get<2>(k)),
                        double(std::get<3>(k)), std::log(c)});
    }
  }

  // Edge part of log g restricted to labelings with n_1 = m, for each m.
  std::vector<double> by_block_size(double h11, double h12, double h22) const {
    std::vector<std::vector<double>> parts(n + 1);
    for (const auto& g : groups) {
      const double n1 = g[0], n2 = n - n1;
      const double p11 = n1 * (n1 - 1) / 2, p12 = n1 * n2, p22 = n2 * (n2 - 1) / 2;
      parts[static_cast<std::size_t>(n1)].push_back(
          g[4] + oracle::term(g[1], h11) + oracle::term(p11 - g[1], 1 - h11) +
          oracle::term(g[2], h12) + oracle::term(p12 - g[2], 1 - h12) +
          oracle::term(g[3], h22) + oracle::term(p22 - g[3], 1 - h22));
    }
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(oracle::log_sum(p));
    return out;
  }

  double operator()(double p1, double h11, double h12, double h22) const {
    double best = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.resize(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const auto& g = groups[k];
      const double n1 = g[0], n2 = n - n1;
      const double p11 = n1 * (n1 - 1) / 2, p12 = n1 * n2, p22 = n2 * (n2 - 1) / 2;
      terms[k] = g[4] + oracle::term(n1, p1) + oracle::term(n2, 1 - p1) +
                 oracle::term(g[1], h11) + oracle::term(p11 - g[1], 1 - h11) +
                 oracle::term(g[2], h12) + oracle::term(p12 - g[2], 1 - h12) +
                 oracle::term(g[3], h22) + oracle::term(p22 - g[3], 1 - h22);
      best = std::max(best, terms[k]);
    }
    if (!std::isfinite(best)) return best;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - best);
    return best + std::log(s);
  }
};

}  // namespace

TEST_CASE("enumeration budget guard") {
  CHECK(enumeration_size(10, 2) == 1024);
  CHECK_THROWS_AS(enumeration_size(30, 2), BudgetError);
  try {
    enumeration_size(30, 2);
  } catch (const BudgetError& e) {
    CHECK(std::string(e.what()).find("K^n") != std::string::npos);
  }
  CHECK(labeling_at(5, 4, 2).values() == std::vector<int>{1, 0, 1, 0});
}

TEST_CASE("marginal loglik small closed forms") {
  const auto in = oracle::random_instance(7, 1, 2);
  const ModelParams one(0.37, Vector::Ones(1), Matrix::Ones(1, 1));
  const Graph g = oracle::graph_of(in);
  CHECK(marginal_loglik(g, one) ==
        doctest::Approx(complete_loglik(g, Labels(std::vector<int>(7, 0), 1), one)));

  Eigen::MatrixXi A = Eigen::MatrixXi::Zero(2, 2);
  A(0, 1) = A(1, 0) = 1;
  const Matrix H = sym2(0.7, 0.2, 0.4);
  CHECK(marginal_loglik(Graph::from_adjacency(A), pi2(0.5), H) ==
        doctest::Approx(std::log((0.7 + 2 * 0.2 + 0.4) / 4)).epsilon(1e-14));
}

TEST_CASE("marginal loglik matches direct enumeration") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = oracle::random_instance(seed < 5 ? 3 : 7, seed < 5 ? 2 : 3, seed);
    const double got = marginal_loglik(oracle::graph_of(in), in.pi, in.H);
    CHECK(std::abs(got - oracle::marginal_loglik(in.A, static_cast<int>(in.pi.size()), in.pi,
                                                 in.H)) < 1e-12);
  }
}

TEST_CASE("marginal loglik is invariant under class permutation") {
  const auto in = oracle::random_instance(9, 3, 4);
  const ModelParams p = oracle::params_of(in);
  const Graph g = oracle::graph_of(in);
  const double base = marginal_loglik(g, p);
  for (const auto& perm : all_permutations(3)) {
    CHECK(std::abs(marginal_loglik(g, permute(p, perm)) - base) < 1e-12);
  }
}

TEST_CASE("marginal loglik is bit-identical across thread counts") {
  const auto in = oracle::random_instance(16, 2, 5);
  const Graph g = oracle::graph_of(in);
  const double a = marginal_loglik(g, in.pi, in.H, 1);
  const double b = marginal_loglik(g, in.pi, in.H, 3);
  CHECK(a == b);
}

TEST_CASE("exact posterior") {
  const auto in = oracle::random_instance(8, 2, 6);
  const Graph g = oracle::graph_of(in);
  const ExactPosterior post = exact_posterior(g, oracle::params_of(in));
  double total = 0.0;
  for (double p : post.prob) total += p;
  CHECK(std::abs(total - 1.0) < 1e-12);

  const ExactPosterior flat =
      exact_posterior(g, ModelParams::from_pi_H(pi2(0.5), Matrix::Constant(2, 2, 0.3)));
  for (double p : flat.prob) CHECK(p == doctest::Approx(1.0 / 256).epsilon(1e-10));

  std::vector<std::pair<int, int>> e{{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}};
  const Graph cliques(6, e);
  const ExactPosterior sep =
      exact_posterior(cliques, ModelParams::from_pi_H(pi2(0.5), sym2(1.0, 0.0, 1.0)));
  int support = 0;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(sep.prob.size()); ++i) {
    if (sep.prob[i] > 0.0) {
      ++support;
      const Labels z = sep.labels(i);
      CHECK(z[0] == z[1]);
      CHECK(z[1] == z[2]);
      CHECK(z[3] == z[4]);
      CHECK(z[4] == z[5]);
      CHECK(z[0] != z[3]);
    }
  }
  CHECK(support == 2);
}

TEST_CASE("posterior mass concentrates on the true equivalence class") {
  // Growing separation at n = 12: the median mass of {z, swap(z)} increases.
  const int n = 12;
  std::vector<double> medians;
  for (double lambda : {2.0, 4.0, 6.0}) {
    const double rho = lambda / n;
    const Matrix H = rho * sym2(1.6, 0.4, 1.6);
    const ModelParams p = ModelParams::from_pi_H(pi2(0.5), H);
    std::vector<double> mass;
    for (int s = 0; s < 30; ++s) {
      const GraphSample smp = sample_graph(p, n, 400 + s);
      const ExactPosterior post = exact_posterior(smp.graph, p);
      std::int64_t idx = 0, swapped = 0, w = 1;
      for (int i = 0; i < n; ++i, w *= 2) {
        idx += smp.labels[i] * w;
        swapped += (1 - smp.labels[i]) * w;
      }
      mass.push_back(post.prob[idx] + post.prob[swapped]);
    }
    medians.push_back(stats::median(mass));
  }
  CHECK(medians[1] > medians[0]);
  CHECK(medians[2] > medians[1]);
}

TEST_CASE("marginal identity") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = oracle::random_instance(6, 2, seed);
    const auto in0 = oracle::random_instance(6, 2, seed + 1000);
    const IdentityCheck c =
        verify_marginal_identity(oracle::graph_of(in0), oracle::params_of(in),
                                 oracle::params_of(in0));
    CHECK(c.abs_diff < 1e-10);
  }
  const auto in = oracle::random_instance(6, 2, 7);
  const ModelParams p = oracle::params_of(in);
  const IdentityCheck same = verify_marginal_identity(oracle::graph_of(in), p, p);
  CHECK(same.lhs == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(same.rhs == doctest::Approx(1.0).epsilon(1e-14));
  const IdentityCheck perm =
      verify_marginal_identity(oracle::graph_of(in), permute(p, Permutation{1, 0}), p);
  CHECK(perm.lhs == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact MLE for K = 1 is the Bernoulli MLE") {
  const auto in = oracle::random_instance(9, 1, 12, 0.4, 0.6);
  const Graph g = oracle::graph_of(in);
  const ExactMleResult r = exact_gm_mle(g, 1);
  const double pairs = 9.0 * 8.0 / 2.0;
  CHECK(r.params.H()(0, 0) == doctest::Approx(g.num_edges() / pairs).epsilon(1e-12));
}

TEST_CASE("exact EM is monotone") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = oracle::random_instance(9, 2, seed);
    ExactMleConfig cfg;
    cfg.seed = seed;
    const ExactMleResult r = exact_gm_mle(oracle::graph_of(in), 2, cfg);
    CHECK(r.monotone);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      CHECK(r.trace[i] >= r.trace[i - 1] - 1e-9 * std::abs(r.trace[i - 1]));
    }
    CHECK(r.log_g == doctest::Approx(marginal_loglik(oracle::graph_of(in), r.params)));
  }
}

TEST_CASE("exact MLE agrees with a dense grid search") {
  const ModelParams truth = ModelParams::from_pi_H(pi2(0.5), sym2(0.8, 0.15, 0.7));
  for (std::uint64_t seed = 0; seed < 1; ++seed) {
    const GraphSample s = sample_graph(truth, 10, 900 + seed);
    const GroupedMarginal lg(s.graph.adjacency());
    const ExactMleResult mle = exact_gm_mle(s.graph, 2);
    CHECK(lg(mle.params.pi()(0), mle.params.H()(0, 0), mle.params.H()(0, 1),
             mle.params.H()(1, 1)) == doctest::Approx(mle.log_g).epsilon(1e-12));

    double best = -1e300;
    std::array<double, 4> arg{};
    for (int b = 1; b < 50; ++b) {
      for (int c = 1; c < 50; ++c) {
        for (int d = 1; d < 50; ++d) {
          const std::vector<double> by_n1 = lg.by_block_size(0.02 * b, 0.02 * c, 0.02 * d);
          for (int a = 1; a <= 25; ++a) {  // pi_1 <= 1/2: one member of each swap pair
            const double p1 = 0.02 * a;
            std::vector<double> t(by_n1.size());
            for (std::size_t m = 0; m < by_n1.size(); ++m) {
              t[m] = oracle::term(double(m), p1) + oracle::term(double(lg.n - m), 1 - p1) + by_n1[m];
            }
            const double v = oracle::log_sum(t);
            if (v > best) {
              best = v;
              arg = {p1, 0.02 * b, 0.02 * c, 0.02 * d};
            }
          }
        }
      }
    }
    CHECK(best <= mle.log_g + 1e-9);
    Vector gp = pi2(arg[0]);
    const ModelParams grid = ModelParams::from_pi_H(gp, sym2(arg[1], arg[2], arg[3]));
    const ModelParams al = align_params(mle.params, grid).aligned;
    CHECK(std::abs(al.pi()(0) - arg[0]) <= 0.02 + 1e-12);
    CHECK(std::abs(al.H()(0, 0) - arg[1]) <= 0.02 + 1e-12);
    CHECK(std::abs(al.H()(0, 1) - arg[2]) <= 0.02 + 1e-12);
    CHECK(std::abs(al.H()(1, 1) - arg[3]) <= 0.02 + 1e-12);
  }
}

TEST_CASE("marginal and complete likelihood ratios agree more closely as n grows") {
  // Local alternatives theta0 + (s / sqrt(n), t / sqrt(n^2 rho)) in logit
  // coordinates keep both ratios of order one; compare them on that scale.
  const ModelParams theta0 = ModelParams::from_pi_H(pi2(0.5), sym2(0.9, 0.05, 0.9));
  const LogitParams lp0 = to_logits(theta0);
  Vector dir(4);
  dir << 0.5, 0.5, -0.5, 0.5;
  std::vector<double> medians;
  for (int n : {6, 8, 10, 12}) {
    Vector v = lp0.to_vector();
    v(0) += dir(0) / std::sqrt(double(n));
    v.tail(3) += dir.tail(3) / std::sqrt(double(n) * n * theta0.rho());
    const PiH ph = from_logits(LogitParams::from_vector(2, v));
    const ModelParams theta = ModelParams::from_pi_H(ph.pi, ph.H);
    std::vector<double> gaps;
    for (int s = 0; s < 400; ++s) {
      const GraphSample smp = sample_graph(theta0, n, 7000 + 100 * n + s);
      const double lg = marginal_loglik(smp.graph, theta) - marginal_loglik(smp.graph, theta0);
      const double f0 = complete_loglik(smp.graph, smp.labels, theta0);
      double best = -1e300;
      for (const auto& perm : all_permutations(2)) {
        best = std::max(best, complete_loglik(smp.graph, smp.labels, permute(theta, perm)) - f0);
      }
      gaps.push_back(std::abs(std::exp(lg) - std::exp(best)));
    }
    medians.push_back(stats::median(gaps));
  }
  for (std::size_t k = 1; k < medians.size(); ++k) CHECK(medians[k] <= medians[k - 1]);
}
