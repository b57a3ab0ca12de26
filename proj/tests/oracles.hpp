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

// Independent reference implementations used by the unit tests. They work
// from the dense adjacency matrix with plain loops and share no code with the
// library beyond the data types.

#ifndef BLOCKMODEL_TESTS_ORACLES_HPP_
#define BLOCKMODEL_TESTS_ORACLES_HPP_

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "blockmodel/model.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

inline double term(double x, double p) { return x == 0.0 ? 0.0 : x * std::log(p); }

// log pi(z_i) summed, plus a Bernoulli factor for every unordered pair.
inline double complete_loglik(const MatrixXi& A, const std::vector<int>& z,
                              const VectorXd& pi, const MatrixXd& H) {
  const auto n = static_cast<int>(z.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::log(pi(z[i]));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double h = H(z[i], z[j]);
      const double p = A(i, j) ? h : 1.0 - h;
      if (p == 0.0) return -std::numeric_limits<double>::infinity();
      s += std::log(p);
    }
  }
  return s;
}

// Visits every labeling in [K]^n (last node fastest).
inline void for_each_labeling(int n, int K, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> z(n, 0);
  for (;;) {
    fn(z);
    int i = n - 1;
    while (i >= 0 && ++z[i] == K) z[i--] = 0;
    if (i < 0) return;
  }
}

inline double log_sum(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  long double s = 0.0L;
  for (double x : v) s += std::exp(static_cast<long double>(x - m));
  return m + static_cast<double>(std::log(s));
}

inline double marginal_loglik(const MatrixXi& A, int K, const VectorXd& pi, const MatrixXd& H) {
  std::vector<double> terms;
  for_each_labeling(static_cast<int>(A.rows()), K, [&](const std::vector<int>& z) {
    terms.push_back(complete_loglik(A, z, pi, H));
  });
  return log_sum(terms);
}

// sup over (pi, H) of the complete log-likelihood, from counts taken directly
// off the adjacency matrix.
inline double profile_loglik(const MatrixXi& A, const std::vector<int>& z, int K) {
  const auto n = static_cast<int>(z.size());
  std::vector<double> cnt(K, 0.0);
  for (int a : z) cnt[a] += 1.0;
  MatrixXd pairs = MatrixXd::Zero(K, K), edges = MatrixXd::Zero(K, K);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int a = std::min(z[i], z[j]), b = std::max(z[i], z[j]);
      pairs(a, b) += 1.0;
      edges(a, b) += A(i, j);
    }
  }
  double s = 0.0;
  for (int a = 0; a < K; ++a) s += term(cnt[a], cnt[a] / n);
  for (int a = 0; a < K; ++a) {
    for (int b = a; b < K; ++b) {
      if (pairs(a, b) == 0.0) continue;
      const double h = edges(a, b) / pairs(a, b);
      s += term(edges(a, b), h) + term(pairs(a, b) - edges(a, b), 1.0 - h);
    }
  }
  return s;
}

// J(q, theta) written out over all unordered pairs, no clamping of H.
inline double elbo(const MatrixXi& A, const MatrixXd& q, const VectorXd& pi, const MatrixXd& H) {
  const auto n = static_cast<int>(q.rows());
  const auto K = static_cast<int>(q.cols());
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < K; ++a) {
      if (q(i, a) > 0.0) s += q(i, a) * (std::log(pi(a)) - std::log(q(i, a)));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
          const double w = q(i, a) * q(j, b);
          if (w == 0.0) continue;
          s += w * std::log(A(i, j) ? H(a, b) : 1.0 - H(a, b));
        }
      }
    }
  }
  return s;
}

inline VectorXd central_gradient(const std::function<double(const VectorXd&)>& f,
                                 const VectorXd& x, double h) {
  VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    VectorXd p = x, m = x;
    p(j) += h;
    m(j) -= h;
    g(j) = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

inline MatrixXd central_hessian(const std::function<double(const VectorXd&)>& f,
                                const VectorXd& x, double h) {
  const auto d = x.size();
  MatrixXd out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      auto at = [&](double si, double sj) {
        VectorXd y = x;
        y(i) += si * h;
        y(j) += sj * h;
        return f(y);
      };
      out(i, j) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
    }
  }
  return out;
}

struct Instance {
  VectorXd pi;
  MatrixXd H;
  std::vector<int> z;
  MatrixXi A;
};

// Random interior (pi, H), labels and graph from std::mt19937_64.
inline Instance random_instance(int n, int K, std::uint64_t seed, double hmin = 0.05,
                                double hmax = 0.95) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.pi.resize(K);
  for (int a = 0; a < K; ++a) in.pi(a) = 0.2 + u(gen);
  in.pi /= in.pi.sum();
  in.H.resize(K, K);
  for (int a = 0; a < K; ++a) {
    for (int b = a; b < K; ++b) in.H(a, b) = in.H(b, a) = hmin + (hmax - hmin) * u(gen);
  }
  std::discrete_distribution<int> cat(in.pi.data(), in.pi.data() + K);
  for (int i = 0; i < n; ++i) in.z.push_back(cat(gen));
  in.A = MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      in.A(i, j) = in.A(j, i) = u(gen) < in.H(in.z[i], in.z[j]) ? 1 : 0;
    }
  }
  return in;
}

inline blockmodel::Graph graph_of(const Instance& in) {
  return blockmodel::Graph::from_adjacency(in.A);
}

inline blockmodel::Labels labels_of(const Instance& in) {
  return blockmodel::Labels(in.z, static_cast<int>(in.pi.size()));
}

inline blockmodel::ModelParams params_of(const Instance& in) {
  return blockmodel::ModelParams::from_pi_H(in.pi, in.H);
}

}  // namespace oracle

#endif  // BLOCKMODEL_TESTS_ORACLES_HPP_
