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

#ifndef BLOCKMODEL_NUMERIC_HPP_
#define BLOCKMODEL_NUMERIC_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "blockmodel/errors.hpp"

namespace blockmodel {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// x log y with 0 log y = 0 for every y >= 0.
inline double xlogy(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y <= 0.0) return kNegInf;
  return x * std::log(y);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Inverse of a symmetric positive-definite matrix; throws DomainError when the
// matrix is singular or indefinite.
inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return m;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw DomainError("matrix is not positive definite");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

// Symmetric square root of a symmetric PSD matrix (power = 0.5) or of its
// inverse (power = -0.5), eigenvalues floored at 1e-12.
inline Eigen::MatrixXd sym_power(const Eigen::MatrixXd& m, double power) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
  ev = ev.array().pow(power).matrix();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace blockmodel

#endif  // BLOCKMODEL_NUMERIC_HPP_
