// Copyright 2026 The DeSCA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
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

namespace desca {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition (size mismatch, bad parameter...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Input data cannot produce a result (e.g. nothing to evaluate).
class DataError : public Error {
public:
    using Error::Error;
};

#define DESCA_REQUIRE(cond, msg)                                                  \
    do {                                                                          \
        if (!(cond)) throw ::desca::ContractViolation(std::string(msg));          \
    } while (0)

} // namespace desca
