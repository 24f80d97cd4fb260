// Copyright 2026 The proknow Authors.
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

namespace proknow {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or invariant-violating resource files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad engine configuration or run layout.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A candidate source (bridge, model) failed to deliver.
class SourceError : public Error {
 public:
  using Error::Error;
};

// Statistic undefined for the given input (zero variance, no pairable values).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace proknow
