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

#include "blockmodel/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace blockmodel::io {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("expected a JSON array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError("expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("expected a nonempty array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ParseError("ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r]).transpose();
  }
  return m;
}

ModelParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("pi_H")) {
      const auto& ph = j.at("pi_H");
      return ModelParams::from_pi_H(vector_from_json(ph.at("pi")),
                                    matrix_from_json(ph.at("H")));
    }
    ModelParams p(j.at("rho").get<double>(), vector_from_json(j.at("pi")),
                  matrix_from_json(j.at("S")));
    if (j.contains("K") && j.at("K").get<int>() != p.K()) {
      throw ParseError("K does not match the length of pi");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad parameter JSON: ") + e.what());
  }
}

nlohmann::json params_to_json(const ModelParams& params) {
  return {{"K", params.K()},
          {"rho", params.rho()},
          {"pi", vector_to_json(params.pi())},
          {"S", matrix_to_json(params.S())}};
}

ModelParams read_params(const std::string& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return params_from_json(j);
}

Graph parse_graph(std::istream& in) {
  std::string line;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::istringstream ls(line);
    if (n < 0) {
      std::string tag;
      if (!(ls >> tag >> n) || tag != "n" || n < 0) {
        throw ParseError("graph line " + std::to_string(lineno) + ": expected 'n <int>'");
      }
      continue;
    }
    int i = 0;
    int k = 0;
    std::string rest;
    if (!(ls >> i >> k) || (ls >> rest)) {
      throw ParseError("graph line " + std::to_string(lineno) + ": expected 'i j'");
    }
    if (i >= k) throw ParseError("graph line " + std::to_string(lineno) + ": need i < j");
    edges.emplace_back(i, k);
  }
  if (n < 0) throw ParseError("graph file has no 'n <int>' header");
  try {
    return Graph(n, edges);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid graph: ") + e.what());
  }
}

void write_graph(std::ostream& out, const Graph& graph) {
  out << "n " << graph.n() << '\n';
  for (const auto& [i, j] : graph.edges()) out << i << ' ' << j << '\n';
}

Graph read_graph(const std::string& path) {
  auto in = open_in(path);
  return parse_graph(in);
}

void write_graph(const std::string& path, const Graph& graph) {
  auto out = open_out(path);
  write_graph(out, graph);
}

Labels parse_labels(std::istream& in, int K) {
  std::vector<int> z;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    std::istringstream ls(line);
    int v = 0;
    std::string rest;
    if (!(ls >> v) || (ls >> rest) || v < 1) throw ParseError("bad label line: " + line);
    z.push_back(v);
  }
  if (K == 0) K = z.empty() ? 1 : *std::max_element(z.begin(), z.end());
  try {
    return Labels::from_one_based(z, K);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid labels: ") + e.what());
  }
}

void write_labels(std::ostream& out, const Labels& labels) {
  for (int v : labels.to_one_based()) out << v << '\n';
}

Labels read_labels(const std::string& path, int K) {
  auto in = open_in(path);
  return parse_labels(in, K);
}

void write_labels(const std::string& path, const Labels& labels) {
  auto out = open_out(path);
  write_labels(out, labels);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace blockmodel::io
