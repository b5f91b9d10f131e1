// Copyright 2026 the vifidel authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vifidel {

/// Base class of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed input line. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A file whose overall structure is wrong (bad header, truncation, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the callee's documented domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A token that could not be resolved to an embedding vector.
class LookupError : public Error {
 public:
  explicit LookupError(const std::string& token)
      : Error("no embedding for token '" + token + "'"), token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

/// An operation that requires a nonempty word distribution received an empty one.
class EmptyDistributionError : public Error {
 public:
  using Error::Error;
};

/// No usable reference descriptions remain after filtering.
class NoReferencesError : public Error {
 public:
  using Error::Error;
};

/// Two record streams that must be id-aligned are not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// A transport problem whose marginals cannot be satisfied.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace vifidel
