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
 * @file pl.hpp
 * @brief Programmable-logic side: interface bundling, the loopback adaptor
 *        that closes the timestep recursion outside the tile graph,
 *        compute-unit budgets and input dumps.
 */

#pragma once

#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aiesim/common.hpp"
#include "aiesim/executor.hpp"
#include "aiesim/oracle.hpp"
#include "aiesim/problem.hpp"

namespace aiesim {

// ---------------------------------------------------------------------------
// Interface bundling
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kPlToAieClockRatio = 4;

/// Bits delivered to one kernel per PL cycle (= 4 tile cycles). A split
/// input arrives over two physical streams and doubles the rate.
inline std::uint32_t bundle_and_split(std::uint32_t elements_per_pl_cycle, bool split, int inputs_per_kernel = 1) {
    if (elements_per_pl_cycle == 0) throw ConfigurationError("elements_per_pl_cycle must be >= 1");
    if (inputs_per_kernel < 1) throw ConfigurationError("inputs_per_kernel must be >= 1");
    const int physical = inputs_per_kernel * (split ? 2 : 1);
    if (physical > kMaxPortsPerDirection) {
        throw PortBudgetExceeded(std::to_string(physical) + " physical inputs on one kernel");
    }
    return elements_per_pl_cycle * static_cast<std::uint32_t>(kWordBits) * (split ? 2u : 1u);
}

struct StreamPlan {
    int physical_streams = 0;
    int load_kernels = 0;  ///< kernels merging split halves
};

/// Physical streams for @p logical_inputs; each split input gets its own
/// two-port load kernel.
inline StreamPlan plan_input_streams(int logical_inputs, bool split) {
    if (logical_inputs < 1) throw ConfigurationError("need at least one input");
    if (!split && logical_inputs > kMaxPortsPerDirection) {
        throw PortBudgetExceeded(std::to_string(logical_inputs) + " unsplit inputs on one kernel");
    }
    return {logical_inputs * (split ? 2 : 1), split ? logical_inputs : 0};
}

// ---------------------------------------------------------------------------
// Loopback cache
// ---------------------------------------------------------------------------

/// One on-chip buffer of P results, reused for every asset.
struct LoopbackCache {
    std::vector<float> storage;
    std::vector<std::uint64_t> written_asset;
    std::vector<std::int64_t> written_timestep;  ///< -1: nothing written yet
    std::uint64_t current_asset = 0;
    std::uint64_t current_timestep = 0;

    explicit LoopbackCache(std::uint64_t paths)
        : storage(paths, 0.0f), written_asset(paths, 0), written_timestep(paths, -1) {
        if (paths == 0) throw ConfigurationError("loopback cache needs at least one path");
    }

    std::uint64_t paths() const { return storage.size(); }
    std::uint64_t footprint_bytes() const { return storage.size() * sizeof(float); }

    void write(std::uint64_t asset, std::uint64_t timestep, std::uint64_t path, float value) {
        check_path(path);
        storage[path] = value;
        written_asset[path] = asset;
        written_timestep[path] = static_cast<std::int64_t>(timestep);
    }

    void check_path(std::uint64_t path) const {
        if (path >= storage.size()) {
            throw ConfigurationError("path " + std::to_string(path) + " outside a cache of " +
                                     std::to_string(storage.size()));
        }
    }
};

/// Value fed to the tiles for (asset, timestep, path). An @p incoming_result
/// is the result for (asset, timestep - 1, path) arriving with the request
/// and is stored first.
inline float loopback_serve(LoopbackCache& cache, std::uint64_t asset, std::uint64_t timestep, std::uint64_t path,
                            float v0, std::optional<float> incoming_result = std::nullopt) {
    cache.check_path(path);
    cache.current_asset = asset;
    cache.current_timestep = timestep;
    if (timestep == 0) return v0;
    if (incoming_result) cache.write(asset, timestep - 1, path, *incoming_result);
    if (cache.written_asset[path] != asset || cache.written_timestep[path] != static_cast<std::int64_t>(timestep - 1)) {
        std::ostringstream os;
        os << "request for (asset " << asset << ", t " << timestep << ", path " << path << ") but the cache holds ";
        if (cache.written_timestep[path] < 0) {
            os << "nothing";
        } else {
            os << "(asset " << cache.written_asset[path] << ", t " << cache.written_timestep[path] << ")";
        }
        throw DependencyViolationError(os.str());
    }
    return cache.storage[path];
}

// ---------------------------------------------------------------------------
// Two-stage loopback adaptor
// ---------------------------------------------------------------------------

enum class IssueOrder : std::uint8_t {
    PathInner,      ///< asset -> timestep -> path
    TimestepInner,  ///< asset -> path -> timestep (breaks the recursion)
};

struct LoopbackConfig {
    std::uint32_t elements_per_pl_cycle = 4;  ///< issue and return width
    std::uint32_t tile_latency = 8;           ///< PL cycles from issue to returned result
    std::uint32_t max_in_flight = 32;         ///< elements issued but not yet cached
    std::uint32_t channel_depth = 8;          ///< internal channel between the two stages
    IssueOrder order = IssueOrder::PathInner;
};

struct LoopbackRun {
    OracleResult result;
    std::uint64_t pl_cycles = 0;
    std::uint64_t issue_stalls = 0;
    std::uint64_t cache_bytes = 0;
};

/// Drives a tile graph through the adaptor at PL-cycle resolution. The
/// "handle return" stage takes results off the tile output and forwards
/// them through an internal channel to the "loopback function" stage, which
/// owns the cache and issues the next inputs.
inline LoopbackRun run_loopback(const GraphSpec& g, const ProblemSize& problem, const QEParams& params,
                                std::uint64_t seed, const LoopbackConfig& cfg = {}) {
    if (cfg.elements_per_pl_cycle == 0 || cfg.max_in_flight == 0 || cfg.channel_depth == 0) {
        throw ConfigurationError("loopback widths and depths must be positive");
    }
    const auto sizes = size_arithmetic(problem);
    const QEConstants c = precompute_constants(params);
    GraphExecutor ex(g, c);
    LoopbackCache cache(problem.paths);

    struct Key {
        std::uint64_t a, t, p;
    };
    struct InFlight {
        Key k;
        float value;
        std::uint64_t ready;
    };
    auto key_at = [&](std::uint64_t n) {
        const std::uint64_t per_asset = problem.timesteps * problem.paths;
        const std::uint64_t a = n / per_asset, r = n % per_asset;
        if (cfg.order == IssueOrder::PathInner) return Key{a, r / problem.paths, r % problem.paths};
        return Key{a, r % problem.timesteps, r / problem.timesteps};
    };

    LoopbackRun run;
    run.result.values.assign(sizes.elements, 0.0f);
    run.cache_bytes = cache.footprint_bytes();
    std::deque<InFlight> tiles;     // results travelling through the graph
    std::deque<InFlight> channel;   // handle-return -> loopback-function
    std::uint64_t issued = 0, cached = 0;
    std::vector<float> v, z;
    std::vector<Key> keys;

    for (std::uint64_t cyc = 0; cached < sizes.elements; ++cyc) {
        // Loopback function: absorb returned results, then issue.
        for (std::uint32_t i = 0; i < cfg.elements_per_pl_cycle && !channel.empty(); ++i) {
            const auto r = channel.front();
            channel.pop_front();
            cache.write(r.k.a, r.k.t, r.k.p, r.value);
            run.result.values[element_index(problem, r.k.a, r.k.t, r.k.p)] = r.value;
            ++cached;
        }
        v.clear();
        z.clear();
        keys.clear();
        while (issued < sizes.elements && keys.size() < cfg.elements_per_pl_cycle) {
            if (issued - cached >= cfg.max_in_flight) {
                ++run.issue_stalls;
                break;
            }
            const Key k = key_at(issued);
            if (!keys.empty() && (k.a != keys.front().a || k.t != keys.front().t)) break;
            v.push_back(loopback_serve(cache, k.a, k.t, k.p, static_cast<float>(params.v0)));
            z.push_back(normal_draw(seed, k.a, k.t, k.p));
            keys.push_back(k);
            ++issued;
        }
        if (!keys.empty()) {
            const auto out = ex.step(v, z, element_index(problem, keys.front().a, keys.front().t, keys.front().p));
            run.result.saturated += out.saturated;
            for (std::size_t i = 0; i < keys.size(); ++i) tiles.push_back({keys[i], out.values[i], cyc + cfg.tile_latency});
        }
        // Handle return: move arrived results into the internal channel.
        for (std::uint32_t i = 0; i < cfg.elements_per_pl_cycle && !tiles.empty(); ++i) {
            if (tiles.front().ready > cyc || channel.size() >= cfg.channel_depth) break;
            channel.push_back(tiles.front());
            tiles.pop_front();
        }
        run.pl_cycles = cyc + 1;
    }
    return run;
}

// ---------------------------------------------------------------------------
// Compute units
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kAxiPortsPerCu = 14;
inline constexpr std::uint32_t kAxiPortBudget = 84;
inline constexpr std::uint32_t kArrayTiles = 400;

struct CUPlan {
    std::uint32_t cu_count = 0;
    std::uint32_t kernels_per_graph = 0;
    std::uint32_t axi_ports_used = 0;
    std::uint32_t axi_ports_budget = kAxiPortBudget;
    std::uint32_t tiles_used = 0;
    std::uint32_t tiles_available = kArrayTiles;

    double tile_utilisation_pct() const { return 100.0 * tiles_used / tiles_available; }

    /// Round-robin asset ownership: CU i gets assets i, i + n, i + 2n, ...
    std::vector<std::vector<std::uint64_t>> assign_assets(std::uint64_t assets) const {
        std::vector<std::vector<std::uint64_t>> out(cu_count);
        for (std::uint64_t a = 0; a < assets; ++a) out[a % cu_count].push_back(a);
        return out;
    }
};

inline CUPlan cu_plan(std::uint32_t cu_count, std::uint32_t kernels_per_graph) {
    if (cu_count < 1) throw ConfigurationError("cu_count must be >= 1");
    if (kernels_per_graph < 1) throw ConfigurationError("kernels_per_graph must be >= 1");
    CUPlan p;
    p.cu_count = cu_count;
    p.kernels_per_graph = kernels_per_graph;
    p.axi_ports_used = kAxiPortsPerCu * cu_count;
    p.tiles_used = kernels_per_graph * cu_count;
    if (p.axi_ports_used > p.axi_ports_budget) {
        throw AXIBudgetExceeded(std::to_string(cu_count) + " CUs need " + std::to_string(p.axi_ports_used) +
                                " AXI ports, budget " + std::to_string(p.axi_ports_budget));
    }
    if (p.tiles_used > p.tiles_available) {
        throw CapacityExceeded(std::to_string(p.tiles_used) + " tiles exceed " + std::to_string(p.tiles_available));
    }
    return p;
}

// ---------------------------------------------------------------------------
// Input dump
// ---------------------------------------------------------------------------

/// Writes the (v, z) pair of every element in (asset, timestep, path)
/// order as little-endian float32. v is the value the loopback serves.
inline std::uint64_t dump_inputs(const std::string& path, const ProblemSize& problem, const QEParams& params,
                                 std::uint64_t seed) {
    const auto o = oracle_run(problem, params, seed);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigurationError("cannot open '" + path + "' for writing");
    auto put = [&](float x) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        const char b[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                           static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
        f.write(b, 4);
    };
    std::uint64_t n = 0;
    for (std::uint64_t a = 0; a < problem.assets; ++a) {
        for (std::uint64_t t = 0; t < problem.timesteps; ++t) {
            for (std::uint64_t p = 0; p < problem.paths; ++p) {
                const float v = t == 0 ? static_cast<float>(params.v0) : o.values[element_index(problem, a, t - 1, p)];
                put(v);
                put(normal_draw(seed, a, t, p));
                n += 2;
            }
        }
    }
    if (!f) throw ConfigurationError("write to '" + path + "' failed");
    return n;
}

}  // namespace aiesim
