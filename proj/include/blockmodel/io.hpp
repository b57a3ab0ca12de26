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

#ifndef BLOCKMODEL_IO_HPP_
#define BLOCKMODEL_IO_HPP_

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "blockmodel/model.hpp"

namespace blockmodel::io {

// Malformed input files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// {"K": int, "rho": float, "pi": [...], "S": [[...]]}, or
// {"pi_H": {"pi": [...], "H": [[...]]}} which is split into (rho, S).
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ModelParams& params);
ModelParams read_params(const std::string& path);

nlohmann::json vector_to_json(const Vector& v);
nlohmann::json matrix_to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);

// Line 1 "n <int>", then one "i j" line per edge (0-based, i < j). Blank
// lines are ignored.
Graph parse_graph(std::istream& in);
void write_graph(std::ostream& out, const Graph& graph);
Graph read_graph(const std::string& path);
void write_graph(const std::string& path, const Graph& graph);

// One 1-based label per line. K = 0 infers K from the largest label.
Labels parse_labels(std::istream& in, int K = 0);
void write_labels(std::ostream& out, const Labels& labels);
Labels read_labels(const std::string& path, int K = 0);
void write_labels(const std::string& path, const Labels& labels);

// Floats printed with 17 significant digits.
std::string format_double(double x);

}  // namespace blockmodel::io

#endif  // BLOCKMODEL_IO_HPP_
