/*
 *  Copyright 2026 The sgfnoma Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace sgf {

// Invalid or inconsistent configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector or matrix shapes that do not line up.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure during learning (non-finite gradient or loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or incompatible file on disk.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgf
