// Copyright 2026 The hmmmix Authors
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

namespace hmmmix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model or distribution parameters (non-PD covariance, bad shapes).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Weighted estimation asked to fit a distribution with zero total weight.
class DegenerateWeightsError : public Error {
 public:
  using Error::Error;
};

/// Markov chain is reducible or periodic where a unique stationary law is needed.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Not enough observations for the requested number of clusters.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Arrays with incompatible shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A hidden state lost (numerically) all its posterior mass during EM.
class EmptyStateError : public Error {
 public:
  explicit EmptyStateError(int state)
      : Error("hidden state " + std::to_string(state) + " received no posterior mass"),
        state_(state) {}

  int state() const noexcept { return state_; }

 private:
  int state_;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Inference failure in a pipeline stage ("init", "merge", ...).
class InferenceError : public Error {
 public:
  InferenceError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmmmix
