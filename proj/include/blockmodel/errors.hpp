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

#ifndef BLOCKMODEL_ERRORS_HPP_
#define BLOCKMODEL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace blockmodel {

// Argument outside the domain of a function (boundary probabilities, negative
// inputs to tau, and so on).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Exhaustive enumeration over [K]^n refused because K^n exceeds the budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A fitting routine could not produce a usable estimate (for example every
// restart collapsed onto an empty class).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too many Monte Carlo or bootstrap replicates failed.
class ReplicateFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blockmodel

#endif  // BLOCKMODEL_ERRORS_HPP_
