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
 * @file oracle.hpp
 * @brief Sequential reference run of the variance recursion over
 *        asset -> timestep -> path loops, plus a stable output digest.
 */

#pragma once

#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "aiesim/problem.hpp"
#include "aiesim/qe.hpp"

namespace aiesim {

/// Outputs in (asset, timestep, path) row-major order: entry
/// (a, t, p) is the variance after step t, i.e. v_{t+1}.
struct OracleResult {
    std::vector<float> values;
    std::uint64_t saturated = 0;
};

inline std::uint64_t element_index(const ProblemSize& pr, std::uint64_t asset, std::uint64_t t, std::uint64_t path) {
    return (asset * pr.timesteps + t) * pr.paths + path;
}

inline OracleResult oracle_run(const ProblemSize& problem, const QEParams& params, std::uint64_t seed) {
    const auto sizes = size_arithmetic(problem);
    const QEConstants c = precompute_constants(params);
    OracleResult out;
    out.values.resize(sizes.elements);
    std::vector<float> v(problem.paths);
    for (std::uint64_t a = 0; a < problem.assets; ++a) {
        std::fill(v.begin(), v.end(), static_cast<float>(params.v0));
        for (std::uint64_t t = 0; t < problem.timesteps; ++t) {
            for (std::uint64_t p = 0; p < problem.paths; ++p) {
                QEStepInfo info;
                v[p] = qe_update_scalar(v[p], normal_draw(seed, a, t, p), c, &info);
                out.saturated += info.saturated ? 1 : 0;
                out.values[element_index(problem, a, t, p)] = v[p];
            }
        }
    }
    return out;
}

/// FNV-1a over the little-endian bit patterns, printed as 16 hex digits.
inline std::string digest(const std::vector<float>& values) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (float f : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xFFu;
            h *= 0x100000001b3ull;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace aiesim
