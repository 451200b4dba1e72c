/*
 * Copyright 2026 The aiesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file common.hpp
 * @brief Error hierarchy and small shared vocabulary types.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace aiesim {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define AIESIM_DEFINE_ERROR(Name)                 \
    class Name : public Error {                   \
    public:                                       \
        explicit Name(const std::string& what)    \
            : Error(std::string(#Name ": ") + what) {} \
    };

AIESIM_DEFINE_ERROR(ConfigurationError)
AIESIM_DEFINE_ERROR(CapacityExceeded)
AIESIM_DEFINE_ERROR(CascadeOrderingError)
AIESIM_DEFINE_ERROR(DeadlockSuspected)
AIESIM_DEFINE_ERROR(DivisionByZeroError)
AIESIM_DEFINE_ERROR(InvalidTileError)
AIESIM_DEFINE_ERROR(CapacityError)
AIESIM_DEFINE_ERROR(NumericalRangeError)
AIESIM_DEFINE_ERROR(DegenerateMomentsError)
AIESIM_DEFINE_ERROR(OverflowError)
AIESIM_DEFINE_ERROR(PortBudgetExceeded)
AIESIM_DEFINE_ERROR(DependencyViolationError)
AIESIM_DEFINE_ERROR(AXIBudgetExceeded)
AIESIM_DEFINE_ERROR(ValidationFailure)
AIESIM_DEFINE_ERROR(FormatError)
AIESIM_DEFINE_ERROR(ShapeError)

#undef AIESIM_DEFINE_ERROR

/// Width of one single-precision vector register.
inline constexpr int kLanes = 8;
inline constexpr int kWordBits = 32;
inline constexpr int kVectorBits = kLanes * kWordBits;

/// Logical operations per element of the variance stage.
inline constexpr int kOpsPerElement = 36;
inline constexpr int kVectorOpsPerElement = 24;
inline constexpr int kScalarOpsPerElement = 12;

using Cycle = std::uint64_t;

/// Smallest multiple of the vector width that holds @p n elements.
constexpr std::uint64_t pad_to_vector(std::uint64_t n) noexcept {
    return (n + kLanes - 1) / kLanes * kLanes;
}

}  // namespace aiesim
