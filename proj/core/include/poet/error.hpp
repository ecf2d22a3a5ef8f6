// Copyright 2026 The POET Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POET_ERROR_HPP_
#define POET_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poet {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or length mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (out-of-range scalar, malformed index set, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A dense solve met a pivot that is zero to working precision.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// The rotation factorizer ran out of primitives before the target was
/// triangularized.
class BudgetExhaustedError : public Error {
 public:
  BudgetExhaustedError(const std::string& what, double remaining_mass,
                       std::size_t primitives_used)
      : Error(what),
        remaining_mass_(remaining_mass),
        primitives_used_(primitives_used) {}
  double remaining_mass() const { return remaining_mass_; }
  std::size_t primitives_used() const { return primitives_used_; }

 private:
  double remaining_mass_;
  std::size_t primitives_used_;
};

/// Experiment configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or corrupted file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace poet

#endif  // POET_ERROR_HPP_
