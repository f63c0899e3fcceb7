/*
 Copyright 2026 The ileg Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ileg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the solver stack.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed problem definition or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf surfaced during integration or differentiation.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t knot)
      : Error(what), knot_(knot) {}
  std::ptrdiff_t knot() const noexcept { return knot_; }

 private:
  std::ptrdiff_t knot_;
};

/// B R^-1 B' - sigma C Sigma C' is not positive semidefinite at some knot.
class ExistenceViolation : public Error {
 public:
  ExistenceViolation(std::size_t knot, double min_eigenvalue)
      : Error("existence condition violated: B R^-1 B' - sigma C Sigma C' is not "
              "positive semidefinite at knot " +
              std::to_string(knot) + " (min eigenvalue " + std::to_string(min_eigenvalue) + ")"),
        knot_(knot),
        min_eigenvalue_(min_eigenvalue) {}
  std::size_t knot() const noexcept { return knot_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  std::size_t knot_;
  double min_eigenvalue_;
};

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace ileg
