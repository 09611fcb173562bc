// Copyright 2026 The Scramble Authors.
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

namespace scramble {

// Root of every error the library throws. The CLI maps the subclasses onto
// exit codes: DomainError/ParseError/RangeError/IoError -> 1,
// ConfigError -> 2, TransportError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or message. The message names the line or offset.
class ParseError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpusError : public Error {
 public:
  EmptyCorpusError() : Error("empty corpus") {}
  explicit EmptyCorpusError(const std::string& source)
      : Error("empty corpus: " + source) {}
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Network failure that survived the retry budget, or a non-retryable HTTP
// status from a service.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration or command-line usage. `field` names the
// offending config key or flag.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scramble
