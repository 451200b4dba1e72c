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
 * @file executor.hpp
 * @brief Functional execution of a kernel graph: every batch flows through
 *        the kernels in topological order and each kernel sees only the
 *        values its incoming connections carry.
 */

#pragma once

#include <exception>
#include <span>
#include <thread>
#include <vector>

#include "aiesim/graph.hpp"
#include "aiesim/oracle.hpp"
#include "aiesim/program.hpp"
#include "aiesim/qe.hpp"

namespace aiesim {

struct ExecResult {
    std::vector<float> values;
    std::uint64_t saturated = 0;
};

/// Pads @p x with @p fill up to a multiple of @p lanes.
inline std::vector<float> pad_lanes(std::span<const float> x, int lanes, float fill) {
    if (lanes < 1) throw ConfigurationError("lane count must be positive");
    std::vector<float> out(x.begin(), x.end());
    const auto l = static_cast<std::size_t>(lanes);
    out.resize((x.size() + l - 1) / l * l, fill);
    return out;
}

inline std::vector<float> strip_padding(std::span<const float> x, std::size_t n) {
    if (n > x.size()) throw ShapeError("cannot strip to more elements than present");
    return {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)};
}

class GraphExecutor {
public:
    GraphExecutor(const GraphSpec& g, const QEConstants& c) : g_(g), c_(c) {
        require_valid(g_);
        order_ = topological_order(g_);
        lanes_ = g_.kernels.front().lanes;
        rf_.resize(g_.kernels.size());
        for (std::size_t k = 0; k < g_.kernels.size(); ++k) {
            for (auto i : g_.kernels[k].ops) {
                if (kProgram[i].code == OpCode::Move && kProgram[i].dst == Slot::Status) checks_status_.push_back(static_cast<int>(k));
            }
        }
        in_edges_.resize(g_.kernels.size());
        for (std::size_t e = 0; e < g_.edges.size(); ++e) {
            in_edges_[static_cast<std::size_t>(g_.edges[e].to.kernel)].push_back(e);
        }
        if (g_.outputs.size() != 1) throw ConfigurationError("executor expects exactly one graph output");
    }

    int lanes() const { return lanes_; }

    /// One step for @p v.size() independent elements; @p base_index labels
    /// the first element in error messages.
    ExecResult step(std::span<const float> v, std::span<const float> z, std::uint64_t base_index = 0) {
        if (v.size() != z.size()) throw ShapeError("v and z lengths differ");
        ExecResult r;
        r.values.resize(v.size());
        const std::size_t n = v.size();
        const auto lanes = static_cast<std::size_t>(lanes_);
        for (std::size_t b = 0; b < n; b += lanes) {
            const int valid = static_cast<int>(std::min(lanes, n - b));
            // Padding lanes carry the long-run variance and a zero draw so
            // they stay finite; their status is marked and never raised.
            Lane8 vin = Lane8::broadcast(c_.theta), zin = Lane8::broadcast(0.0f);
            for (int i = 0; i < valid; ++i) {
                vin[i] = v[b + static_cast<std::size_t>(i)];
                zin[i] = z[b + static_cast<std::size_t>(i)];
            }
            for (int k : order_) {
                auto& rf = rf_[static_cast<std::size_t>(k)];
                rf.present = 0;
                rf.saturated = 0;
                rf.valid_lanes = valid;
                for (const auto& in : g_.inputs) {
                    if (in.to.kernel != k) continue;
                    for (Slot s : in.payload) rf.put(s, s == Slot::VIn ? vin : zin);
                }
                for (auto e : in_edges_[static_cast<std::size_t>(k)]) {
                    const auto& ed = g_.edges[e];
                    rf.receive(rf_[static_cast<std::size_t>(ed.from.kernel)], ed.payload);
                    rf.valid_lanes = valid;
                }
                for (auto i : g_.kernels[static_cast<std::size_t>(k)].ops) execute_op(kProgram[i], rf, c_);
                r.saturated += rf.saturated;
                if (std::find(checks_status_.begin(), checks_status_.end(), k) != checks_status_.end()) {
                    raise_on_fatal_status(rf, base_index + b);
                }
            }
            const auto& out_rf = rf_[static_cast<std::size_t>(g_.outputs.front().from.kernel)];
            const Lane8& out = out_rf.get(Slot::Out);
            for (int i = 0; i < valid; ++i) r.values[b + static_cast<std::size_t>(i)] = out[i];
        }
        return r;
    }

private:
    const GraphSpec& g_;
    QEConstants c_;
    std::vector<int> order_;
    int lanes_ = kLanes;
    std::vector<RegFile> rf_;
    std::vector<int> checks_status_;
    std::vector<std::vector<std::size_t>> in_edges_;
};

/// Runs the full (asset, timestep, path) recursion through @p g; output
/// layout matches oracle_run. Assets are independent and may be spread
/// over @p threads workers (0 = hardware concurrency); results do not
/// depend on the thread count.
inline OracleResult execute_workload(const GraphSpec& g, const ProblemSize& problem, const QEParams& params,
                                     std::uint64_t seed, unsigned threads = 1) {
    const auto sizes = size_arithmetic(problem);
    const QEConstants c = precompute_constants(params);
    require_valid(g);
    OracleResult out;
    out.values.resize(sizes.elements);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, problem.assets));

    std::vector<std::uint64_t> saturated(threads, 0);
    std::vector<std::exception_ptr> errors(threads);
    auto worker = [&](unsigned w) {
        try {
            GraphExecutor ex(g, c);
            const std::size_t paths = problem.paths;
            std::vector<float> v(paths), z(paths);
            for (std::uint64_t a = w; a < problem.assets; a += threads) {
                std::fill(v.begin(), v.end(), static_cast<float>(params.v0));
                for (std::uint64_t t = 0; t < problem.timesteps; ++t) {
                    for (std::size_t p = 0; p < paths; ++p) z[p] = normal_draw(seed, a, t, p);
                    const auto base = element_index(problem, a, t, 0);
                    auto r = ex.step(v, z, base);
                    saturated[w] += r.saturated;
                    std::copy(r.values.begin(), r.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(base));
                    v.swap(r.values);
                }
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (auto s : saturated) out.saturated += s;
    return out;
}

}  // namespace aiesim
