// Copyright 2026 The grbmamp Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace grbmamp {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters, inconsistent dimensions, malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Tilted integral diverges (untruncated slab with non-positive precision).
class NonNormalizable : public Error {
 public:
  using Error::Error;
};

// Log-domain quantity left the representable range even after shifting.
class NumericalOverflow : public Error {
 public:
  using Error::Error;
};

// An iterate became NaN or infinite. `iteration()` is the offending step
// (outer iteration, inner sweep, or epoch depending on the thrower).
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, int iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

// File format errors.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFile : public FormatError {
 public:
  using FormatError::FormatError;
};

class DimensionMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace grbmamp
