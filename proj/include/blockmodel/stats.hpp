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

#ifndef BLOCKMODEL_STATS_HPP_
#define BLOCKMODEL_STATS_HPP_

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace blockmodel::stats {

double normal_cdf(double x);
double normal_quantile(double p);
double chi_squared_cdf(double x, double df);
double chi_squared_quantile(double p, double df);

// Two-sided Kolmogorov-Smirnov distance between the empirical distribution of
// the sample and a continuous CDF.
double ks_distance(std::span<const double> sample,
                   const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::span<const double> a,
                              std::span<const double> b);

double mean(std::span<const double> v);
double median(std::span<const double> v);

// Sample covariance (denominator rows - 1) of the rows of x.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x);

// ||a - b||_F / ||b||_F.
double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace blockmodel::stats

#endif  // BLOCKMODEL_STATS_HPP_
