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
 * @file problem.hpp
 * @brief Benchmark problem sizes (assets x timesteps x paths) and their
 *        element / datapoint / byte arithmetic.
 */

#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "aiesim/common.hpp"

namespace aiesim {

struct ProblemSize {
    std::uint64_t assets = 1;     ///< A: options analysed
    std::uint64_t timesteps = 1;  ///< T: trading days simulated
    std::uint64_t paths = 1;      ///< P: Monte-Carlo paths
    std::string name = "custom";

    void validate() const {
        if (assets < 1 || timesteps < 1 || paths < 1) {
            throw ConfigurationError("problem counts must all be >= 1");
        }
    }

    bool operator==(const ProblemSize& o) const {
        return assets == o.assets && timesteps == o.timesteps && paths == o.paths;
    }
};

struct SizeReport {
    std::uint64_t elements = 0;
    std::uint64_t datapoints = 0;
    std::uint64_t bytes = 0;
    double megabytes = 0.0;  ///< bytes / 1e6
};

namespace presets {
inline ProblemSize tiny() { return {5, 126, 25000, "tiny"}; }
inline ProblemSize small() { return {10, 126, 25000, "small"}; }
inline ProblemSize medium() { return {20, 252, 25000, "medium"}; }
inline ProblemSize large() { return {30, 504, 25000, "large"}; }
inline std::array<ProblemSize, 4> all() { return {tiny(), small(), medium(), large()}; }
}  // namespace presets

/// Case-insensitive preset lookup.
inline std::optional<ProblemSize> find_preset(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (const auto& p : presets::all()) {
        if (p.name == lower) return p;
    }
    return std::nullopt;
}

/// Exact element, datapoint and byte counts. Each element is two 32-bit
/// datapoints (v and z).
inline SizeReport size_arithmetic(const ProblemSize& problem) {
    problem.validate();
    SizeReport r;
    std::uint64_t at = 0;
    if (__builtin_mul_overflow(problem.assets, problem.timesteps, &at) ||
        __builtin_mul_overflow(at, problem.paths, &r.elements) ||
        __builtin_mul_overflow(r.elements, std::uint64_t{2}, &r.datapoints) ||
        __builtin_mul_overflow(r.datapoints, std::uint64_t{4}, &r.bytes)) {
        throw OverflowError("A*T*P does not fit in 64-bit byte count");
    }
    r.megabytes = static_cast<double>(r.bytes) / 1e6;
    return r;
}

}  // namespace aiesim
