// Copyright 2026 The amrplan Authors
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

#ifndef AMRPLAN_ERRORS_HPP_
#define AMRPLAN_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace amrplan {

// Error classes map onto CLI exit codes (see tools/amrplan_main.cpp).
enum class ErrorKind {
  kDomain,      // argument outside a model's physical domain
  kConfig,      // inconsistent or invalid configuration / input file
  kFit,         // degenerate regression data
  kParse,       // malformed input file
  kNumeric,     // solver numerical failure
  kIo,          // file system failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::kDomain, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(ErrorKind::kFit, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorKind::kParse, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::kNumeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

// Raised by scenario validation; carries every failing field, not just the
// first one.
class ValidationError : public ConfigError {
 public:
  explicit ValidationError(std::vector<std::string> fields);
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

}  // namespace amrplan

#endif  // AMRPLAN_ERRORS_HPP_
