// Copyright 2026 The rlclass Authors
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

#ifndef RLCLASS_ERRORS_HPP_
#define RLCLASS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace rlclass {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A configuration value is out of its valid range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (e.g. backward on a non-scalar).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Bad user input such as an out-of-range class index.
class InputError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by a forward or backward computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace rlclass

#endif  // RLCLASS_ERRORS_HPP_
