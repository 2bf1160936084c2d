// Copyright 2026 The purcellnet Authors
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

namespace purcell {

/// Malformed netlist, geometry, data file or argument. Maps to CLI exit code 2.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The network matrix is singular (or numerically so) at the requested frequency.
struct SingularNetworkError : std::runtime_error {
    SingularNetworkError(const std::string &what, double frequency_hz)
        : std::runtime_error(what), frequency_hz(frequency_hz) {
    }
    double frequency_hz;
};

/// A requested target (threshold, convergence) cannot be reached. Maps to CLI exit code 3.
struct UnreachableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace purcell
