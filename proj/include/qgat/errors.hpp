// Copyright 2026 The qgat Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Exception types shared across the library. The CLI maps ConfigError and
 * UsageError to exit code 2 and every other Error to exit code 1.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace qgat {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Vector/matrix shapes that do not line up.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Malformed numeric input (NaN, Inf, negative where forbidden).
class InputError : public Error {
  public:
    using Error::Error;
};

class IndexError : public Error {
  public:
    using Error::Error;
};

/// Invalid model / layout / experiment configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

class UsageError : public Error {
  public:
    using Error::Error;
};

/// File contents that do not parse; message carries line/field context.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// A random-sampling request that cannot be satisfied (e.g. too few non-edges).
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

/// Non-finite loss or gradient during optimization.
class DivergenceError : public Error {
  public:
    using Error::Error;
};

/// A tape handle used after its tape was reset.
class StaleTapeError : public Error {
  public:
    using Error::Error;
};

} // namespace qgat
