// Copyright 2026 The she2d Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace she2d {

/// Invalid input: bad configuration, out-of-domain argument, mismatched
/// shapes. The CLI maps every ValidationError to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Lipschitz constant at or above the critical value sqrt(2*pi).
class SupercriticalError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Two grids (or sample vectors) that should share a shape do not.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Bad configuration value (grid resolution, time step, file content).
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure at run time: CFL violation, blow-up, singular
/// denominators. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace she2d
