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
 * @file engine.hpp
 * @brief Synchronous tick engine: one tick per tile-clock cycle, PL actors
 *        every pl_to_aie_clock_ratio ticks.
 *
 * Each kernel loops READ -> COMPUTE -> WRITE over 8-element batches (single
 * elements for scalar kernels). Ports of one phase transfer in parallel at
 * the rate of their connection kind. Streams are bounded FIFOs; windows are
 * ping-pong buffers guarded by locks. All decisions of a tick see the
 * channel state from the start of that tick, so results do not depend on
 * actor evaluation order except for memory-port arbitration, which is fixed.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aiesim/common.hpp"
#include "aiesim/graph.hpp"

namespace aiesim {

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

struct CostModel {
    double vector_op_issue_cycles = 1.0;
    double scalar_op_cycles = 35.4;          ///< per op, kernels without vector lanes
    double lane_scalar_op_cycles = 0.6;      ///< per op and lane inside vectorised kernels
    double vector_loop_overhead_cycles = 180.0;  ///< per batch, kernels issuing vector ops
    std::uint32_t stream_rw_bits_per_cycle = 32;
    std::uint32_t window_rw_bits_per_cycle = 256;
    std::uint32_t cascade_bits_per_cycle = 384;
    double window_fill_latency = -1.0;       ///< < 0: window bits / window rate
    std::uint32_t pl_to_aie_clock_ratio = 4;
    std::uint32_t pl_bits_per_cycle = 128;   ///< per interface bundle
    std::uint32_t stream_fifo_bits = 256;
    std::uint32_t lock_acquire_cycles = 5;
    std::uint32_t memory_ports_per_module = 2;
    std::uint64_t max_simulated_elements = 4096;
    double aie_clock_ghz = 1.2;

    void validate() const {
        auto pos = [](double x, const char* what) {
            if (!(x > 0.0) || !std::isfinite(x)) throw ConfigurationError(std::string(what) + " must be > 0");
        };
        pos(vector_op_issue_cycles, "vector_op_issue_cycles");
        pos(scalar_op_cycles, "scalar_op_cycles");
        pos(lane_scalar_op_cycles, "lane_scalar_op_cycles");
        if (!(vector_loop_overhead_cycles >= 0.0) || !std::isfinite(vector_loop_overhead_cycles)) {
            throw ConfigurationError("vector_loop_overhead_cycles must be >= 0");
        }
        pos(stream_rw_bits_per_cycle, "stream_rw_bits_per_cycle");
        pos(window_rw_bits_per_cycle, "window_rw_bits_per_cycle");
        pos(cascade_bits_per_cycle, "cascade_bits_per_cycle");
        if (pl_to_aie_clock_ratio < 1) throw ConfigurationError("pl_to_aie_clock_ratio must be >= 1");
        pos(pl_bits_per_cycle, "pl_bits_per_cycle");
        pos(stream_fifo_bits, "stream_fifo_bits");
        pos(memory_ports_per_module, "memory_ports_per_module");
        if (max_simulated_elements < 2 * static_cast<std::uint64_t>(kLanes)) {
            throw ConfigurationError("max_simulated_elements must be >= 16");
        }
        pos(aie_clock_ghz, "aie_clock_ghz");
    }

    std::uint32_t rate_bits(PortKind k) const {
        switch (k) {
            case PortKind::Stream32: return stream_rw_bits_per_cycle;
            case PortKind::Window: return window_rw_bits_per_cycle;
            case PortKind::Cascade: return cascade_bits_per_cycle;
        }
        return stream_rw_bits_per_cycle;
    }

    Cycle fill_latency(std::uint32_t window_bytes) const {
        if (window_fill_latency >= 0.0) return static_cast<Cycle>(std::ceil(window_fill_latency));
        return (static_cast<Cycle>(window_bytes) * 8 + window_rw_bits_per_cycle - 1) / window_rw_bits_per_cycle;
    }

    /// Compute cycles of one kernel iteration.
    Cycle compute_cycles(const KernelSpec& k) const {
        double c = 0.0;
        if (k.lanes <= 1) {
            c = static_cast<double>(k.vector_op_count + k.scalar_op_count) * scalar_op_cycles;
        } else {
            c = static_cast<double>(k.vector_issue_count) * vector_op_issue_cycles +
                static_cast<double>(k.scalar_op_count) * k.lanes * lane_scalar_op_cycles;
            if (k.vector_op_count > 0) c += vector_loop_overhead_cycles;
        }
        return std::max<Cycle>(1, static_cast<Cycle>(std::ceil(c - 1e-9)));
    }
};

inline void to_json(nlohmann::json& j, const CostModel& c) {
    j = nlohmann::json{
        {"vector_op_issue_cycles", c.vector_op_issue_cycles},
        {"scalar_op_cycles", c.scalar_op_cycles},
        {"lane_scalar_op_cycles", c.lane_scalar_op_cycles},
        {"vector_loop_overhead_cycles", c.vector_loop_overhead_cycles},
        {"stream_rw_bits_per_cycle", c.stream_rw_bits_per_cycle},
        {"window_rw_bits_per_cycle", c.window_rw_bits_per_cycle},
        {"cascade_bits_per_cycle", c.cascade_bits_per_cycle},
        {"window_fill_latency", c.window_fill_latency},
        {"pl_to_aie_clock_ratio", c.pl_to_aie_clock_ratio},
        {"pl_bits_per_cycle", c.pl_bits_per_cycle},
        {"stream_fifo_bits", c.stream_fifo_bits},
        {"lock_acquire_cycles", c.lock_acquire_cycles},
        {"memory_ports_per_module", c.memory_ports_per_module},
        {"max_simulated_elements", c.max_simulated_elements},
        {"aie_clock_ghz", c.aie_clock_ghz},
    };
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, CostModel& c) {
    if (!j.is_object()) throw ConfigurationError("cost model must be a JSON object");
    const nlohmann::json defaults = CostModel{};
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key)) throw ConfigurationError("unknown cost-model key '" + key + "'");
        if (!value.is_number()) throw ConfigurationError("cost-model key '" + key + "' must be numeric");
    }
    nlohmann::json merged = defaults;
    merged.update(j);
    try {
        c.vector_op_issue_cycles = merged.at("vector_op_issue_cycles").get<double>();
        c.scalar_op_cycles = merged.at("scalar_op_cycles").get<double>();
        c.lane_scalar_op_cycles = merged.at("lane_scalar_op_cycles").get<double>();
        c.vector_loop_overhead_cycles = merged.at("vector_loop_overhead_cycles").get<double>();
        c.stream_rw_bits_per_cycle = merged.at("stream_rw_bits_per_cycle").get<std::uint32_t>();
        c.window_rw_bits_per_cycle = merged.at("window_rw_bits_per_cycle").get<std::uint32_t>();
        c.cascade_bits_per_cycle = merged.at("cascade_bits_per_cycle").get<std::uint32_t>();
        c.window_fill_latency = merged.at("window_fill_latency").get<double>();
        c.pl_to_aie_clock_ratio = merged.at("pl_to_aie_clock_ratio").get<std::uint32_t>();
        c.pl_bits_per_cycle = merged.at("pl_bits_per_cycle").get<std::uint32_t>();
        c.stream_fifo_bits = merged.at("stream_fifo_bits").get<std::uint32_t>();
        c.lock_acquire_cycles = merged.at("lock_acquire_cycles").get<std::uint32_t>();
        c.memory_ports_per_module = merged.at("memory_ports_per_module").get<std::uint32_t>();
        c.max_simulated_elements = merged.at("max_simulated_elements").get<std::uint64_t>();
        c.aie_clock_ghz = merged.at("aie_clock_ghz").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("cost model: ") + e.what());
    }
    c.validate();
}

inline CostModel load_cost_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open cost model '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("cost model '" + path + "': " + e.what());
    }
    return j.get<CostModel>();
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

struct WindowPhase {
    std::uint64_t produced = 0;
    std::uint64_t consumed = 0;
    bool ready = false;      ///< released by the producer
    Cycle visible_at = 0;    ///< first tick at which the last state change is observable
};

struct ChannelState {
    PortKind kind = PortKind::Stream32;
    std::uint64_t capacity_bits = 0;   ///< FIFO depth, or one window phase
    std::uint64_t occupancy_bits = 0;  ///< FIFO fill, or fill of the producer's phase
    int phase = 0;                     ///< producer phase: 0 ping, 1 pong
    int read_phase = 0;
    std::array<WindowPhase, 2> phases{};
    std::uint64_t produced_bits = 0;
    std::uint64_t consumed_bits = 0;

    static ChannelState make(const PortSpec& p, const CostModel& c) {
        ChannelState s;
        s.kind = p.kind;
        switch (p.kind) {
            case PortKind::Window: s.capacity_bits = static_cast<std::uint64_t>(p.window_bytes) * 8; break;
            case PortKind::Stream32: s.capacity_bits = c.stream_fifo_bits; break;
            case PortKind::Cascade: s.capacity_bits = c.cascade_bits_per_cycle; break;
        }
        return s;
    }
};

/// Cycles to move @p bits through @p ch. Window transfers land in the
/// producer phase; a phase that becomes full is released and the producer
/// moves to the other phase once that one has been drained.
inline Cycle channel_transfer(ChannelState& ch, std::uint64_t bits, const CostModel& cost) {
    if (bits == 0) throw ConfigurationError("channel_transfer needs a positive bit count");
    const std::uint64_t rate = cost.rate_bits(ch.kind);
    if (ch.kind == PortKind::Window) {
        auto& cur = ch.phases[static_cast<std::size_t>(ch.phase)];
        if (cur.ready) {
            auto& other = ch.phases[static_cast<std::size_t>(ch.phase ^ 1)];
            if (other.ready || other.produced != 0) throw CapacityError("both window phases are full");
            ch.phase ^= 1;
            ch.occupancy_bits = 0;
        }
        auto& ph = ch.phases[static_cast<std::size_t>(ch.phase)];
        if (ch.occupancy_bits + bits > ch.capacity_bits) {
            std::ostringstream os;
            os << bits << " bits into a window phase holding " << ch.occupancy_bits << " of " << ch.capacity_bits;
            throw CapacityError(os.str());
        }
        ch.occupancy_bits += bits;
        ph.produced += bits;
        if (ch.occupancy_bits == ch.capacity_bits) {
            ph.ready = true;
            auto& other = ch.phases[static_cast<std::size_t>(ch.phase ^ 1)];
            if (!other.ready && other.produced == 0) {
                ch.phase ^= 1;
                ch.occupancy_bits = 0;
            }
        }
    }
    ch.produced_bits += bits;
    return (bits + rate - 1) / rate;
}

/// Consumer side of a window: drains @p bits from the read phase and frees
/// the phase once it is fully consumed. Returns cycles at the window rate.
inline Cycle channel_consume(ChannelState& ch, std::uint64_t bits, const CostModel& cost) {
    if (bits == 0) throw ConfigurationError("channel_consume needs a positive bit count");
    if (ch.kind == PortKind::Window) {
        auto& ph = ch.phases[static_cast<std::size_t>(ch.read_phase)];
        if (!ph.ready) throw CapacityError("read phase has not been released by the producer");
        if (ph.consumed + bits > ph.produced) throw CapacityError("read past the end of a window phase");
        ph.consumed += bits;
        if (ph.consumed == ph.produced) {
            ph = WindowPhase{};
            ch.read_phase ^= 1;
            // A producer parked on a full phase may now take this one.
            auto& cur = ch.phases[static_cast<std::size_t>(ch.phase)];
            if (cur.ready && ch.occupancy_bits == ch.capacity_bits) {
                ch.phase ^= 1;
                ch.occupancy_bits = 0;
            }
        }
    }
    ch.consumed_bits += bits;
    const std::uint64_t rate = cost.rate_bits(ch.kind);
    return (bits + rate - 1) / rate;
}

// ---------------------------------------------------------------------------
// Tiles and reports
// ---------------------------------------------------------------------------

struct StallCounts {
    Cycle stream_stall = 0;
    Cycle lock_stall = 0;
    Cycle memory_stall = 0;
    Cycle total() const { return stream_stall + lock_stall + memory_stall; }
};

struct TileState {
    int kernel = -1;
    TileCoord tile;
    Cycle cycle_counter = 0;  ///< free-running tile clock
    std::uint64_t ops_retired = 0;
    StallCounts stalls;
    Cycle busy_cycles = 0;     ///< cycles with a transfer or compute
    Cycle compute_cycles = 0;
    Cycle finish_cycle = 0;    ///< tick after the last write
};

inline Cycle read_cycle_counter(const TileState& t) { return t.cycle_counter; }

struct Efficiency {
    double ops_per_cycle = 0.0;
    double efficiency_pct = 0.0;
};

inline Efficiency efficiency(std::uint64_t total_ops, std::uint64_t total_cycles) {
    if (total_cycles == 0) throw DivisionByZeroError("efficiency over zero cycles");
    Efficiency e;
    e.ops_per_cycle = static_cast<double>(total_ops) / static_cast<double>(total_cycles);
    e.efficiency_pct = e.ops_per_cycle / kLanes * 100.0;
    return e;
}

struct TileReport {
    int kernel = -1;
    std::string name;
    TileCoord tile;
    std::uint64_t ops_retired = 0;
    Cycle busy_cycles = 0;
    Cycle compute_cycles = 0;
    Cycle finish_cycle = 0;
    StallCounts stalls;
};

struct ChannelReport {
    std::string name;
    std::uint64_t produced_bits = 0;
    std::uint64_t consumed_bits = 0;
};

struct SimReport {
    std::string graph;
    std::uint64_t elements = 0;
    Cycle start_cycle = 0;
    Cycle end_cycle = 0;
    Cycle total_cycles = 0;
    int kernel_count = 0;
    double avg_cycles_per_kernel = 0.0;
    std::uint64_t total_ops = 0;
    double ops_per_cycle = 0.0;
    double efficiency_pct = 0.0;
    bool extrapolated = false;
    std::vector<TileReport> tiles;
    std::vector<ChannelReport> channels;

    void finalize() {
        total_cycles = end_cycle - start_cycle;
        avg_cycles_per_kernel = kernel_count > 0 ? static_cast<double>(total_cycles) / kernel_count : 0.0;
        if (total_cycles > 0) {
            const auto e = efficiency(total_ops, total_cycles);
            ops_per_cycle = e.ops_per_cycle;
            efficiency_pct = e.efficiency_pct;
        } else {
            ops_per_cycle = efficiency_pct = 0.0;
        }
    }

    StallCounts stall_totals() const {
        StallCounts s;
        for (const auto& t : tiles) {
            s.stream_stall += t.stalls.stream_stall;
            s.lock_stall += t.stalls.lock_stall;
            s.memory_stall += t.stalls.memory_stall;
        }
        return s;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["graph"] = graph;
        j["elements"] = elements;
        j["start_cycle"] = start_cycle;
        j["end_cycle"] = end_cycle;
        j["total_cycles"] = total_cycles;
        j["kernel_count"] = kernel_count;
        j["avg_cycles_per_kernel"] = avg_cycles_per_kernel;
        j["total_ops"] = total_ops;
        j["ops_per_cycle"] = ops_per_cycle;
        j["efficiency_pct"] = efficiency_pct;
        j["extrapolated"] = extrapolated;
        auto& ts = j["tiles"] = nlohmann::ordered_json::array();
        for (const auto& t : tiles) {
            ts.push_back({{"kernel", t.kernel},
                          {"name", t.name},
                          {"row", t.tile.row},
                          {"col", t.tile.col},
                          {"ops_retired", t.ops_retired},
                          {"busy_cycles", t.busy_cycles},
                          {"compute_cycles", t.compute_cycles},
                          {"finish_cycle", t.finish_cycle},
                          {"stream_stall", t.stalls.stream_stall},
                          {"lock_stall", t.stalls.lock_stall},
                          {"memory_stall", t.stalls.memory_stall}});
        }
        return j;
    }

    static std::string csv_header() {
        return "graph,elements,start_cycle,end_cycle,total_cycles,kernel_count,avg_cycles_per_kernel,total_ops,"
               "ops_per_cycle,efficiency_pct,stream_stall,lock_stall,memory_stall,extrapolated";
    }

    std::string csv_row() const {
        const auto s = stall_totals();
        std::ostringstream os;
        os << graph << ',' << elements << ',' << start_cycle << ',' << end_cycle << ',' << total_cycles << ','
           << kernel_count << ',' << std::fixed << std::setprecision(2) << avg_cycles_per_kernel << ',' << total_ops
           << ',' << std::setprecision(4) << ops_per_cycle << ',' << std::setprecision(3) << efficiency_pct << ','
           << s.stream_stall << ',' << s.lock_stall << ',' << s.memory_stall << ',' << (extrapolated ? 1 : 0);
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

struct Workload {
    std::uint64_t elements = 0;
};

struct SimOptions {
    Cycle cycle_budget = 0;          ///< 0: derived from the workload
    Cycle idle_tolerance = 100000;   ///< ticks without any progress before giving up
};

class Simulator {
public:
    Simulator(const GraphSpec& g, const TileMapping& m, const CostModel& cost, Workload w, SimOptions opt = {})
        : graph_(g), mapping_(m), cost_(cost), work_(w), opt_(opt) {
        cost_.validate();
        require_valid(graph_);
        if (mapping_.assignment.size() != graph_.kernels.size()) {
            throw ConfigurationError("tile mapping does not cover the graph");
        }
        lanes_ = graph_.kernels.front().lanes;
        for (const auto& k : graph_.kernels) {
            if (k.lanes != lanes_) throw ConfigurationError("kernels of one graph must share a lane count");
        }
        iterations_ = (work_.elements + static_cast<std::uint64_t>(lanes_) - 1) / static_cast<std::uint64_t>(lanes_);
        build();
        if (opt_.cycle_budget == 0) {
            Cycle per_iter = 0;
            for (const auto& k : kernels_) per_iter += k.compute + 64 * (k.ins.size() + k.outs.size()) + 4 * cost_.lock_acquire_cycles;
            opt_.cycle_budget = 1000000 + 4 * per_iter * (iterations_ + 1);
        }
    }

    Cycle now() const { return now_; }
    bool done() const { return finished_; }
    std::uint64_t iterations() const { return iterations_; }

    /// Tile clock of the tile at flat index row * cols + col.
    Cycle read_cycle_counter(int tile_index) const { return tile_at(tile_index).cycle_counter; }
    Cycle read_cycle_counter(TileCoord c) const {
        if (c.row < 0 || c.col < 0 || c.row >= mapping_.dims.rows || c.col >= mapping_.dims.cols) {
            throw InvalidTileError("tile (" + std::to_string(c.row) + ", " + std::to_string(c.col) + ") is outside the array");
        }
        return read_cycle_counter(c.row * mapping_.dims.cols + c.col);
    }
    const TileState& kernel_tile(int kernel) const {
        if (kernel < 0 || kernel >= static_cast<int>(kernels_.size())) {
            throw InvalidTileError("no kernel " + std::to_string(kernel));
        }
        return kernels_[static_cast<std::size_t>(kernel)].tile;
    }

    /// Advances one tick; false once the run has completed.
    bool step() {
        if (finished_) return false;
        tick();
        return !finished_;
    }

    void run_to_completion() {
        while (step()) {
        }
    }

    SimReport report() const {
        SimReport r;
        r.graph = graph_.name;
        r.elements = work_.elements;
        r.kernel_count = static_cast<int>(graph_.kernels.size());
        r.start_cycle = 0;
        r.end_cycle = end_cycle_;
        r.total_ops = static_cast<std::uint64_t>(kOpsPerElement) * work_.elements;
        for (const auto& k : kernels_) {
            TileReport t;
            t.kernel = k.tile.kernel;
            t.name = graph_.kernels[static_cast<std::size_t>(k.tile.kernel)].name;
            t.tile = k.tile.tile;
            t.ops_retired = k.tile.ops_retired;
            t.busy_cycles = k.tile.busy_cycles;
            t.compute_cycles = k.tile.compute_cycles;
            t.finish_cycle = k.tile.finish_cycle;
            t.stalls = k.tile.stalls;
            r.tiles.push_back(t);
        }
        for (const auto& c : chans_) r.channels.push_back({c.name, c.st.produced_bits, c.st.consumed_bits});
        r.finalize();
        return r;
    }

private:
    enum class State : std::uint8_t { Read, Compute, Write, Done };

    struct PortIO {
        int chan = -1;
        std::uint64_t need = 0;
        bool holding = false;
        Cycle lock_wait = 0;
    };

    struct KernelActor {
        State state = State::Read;
        std::uint64_t iter = 0;
        Cycle compute = 0;
        Cycle compute_left = 0;
        std::uint64_t ops_per_element = 0;
        std::vector<PortIO> ins, outs;
        TileState tile;
    };

    struct Chan {
        std::string name;
        ChannelState st;
        std::uint64_t bits_per_iter = 0;
        int module = 0;
        std::uint64_t avail_read = 0, avail_write = 0;  // stream snapshot
    };

    struct PlSource {
        int bundle = 0;
        std::vector<int> chans;
        std::vector<std::uint64_t> remaining;
        std::size_t rr = 0;
    };

    struct PlSink {
        int chan = -1;
    };

    enum class Block : std::uint8_t { None, Stream, Lock, Memory };

    const GraphSpec& graph_;
    const TileMapping& mapping_;
    CostModel cost_;
    Workload work_;
    SimOptions opt_;
    int lanes_ = kLanes;
    std::uint64_t iterations_ = 0;
    std::vector<KernelActor> kernels_;
    std::vector<int> order_;
    std::vector<Chan> chans_;
    std::vector<PlSource> sources_;
    std::vector<PlSink> sinks_;
    std::vector<std::uint32_t> module_use_;
    Cycle now_ = 0;
    Cycle end_cycle_ = 0;
    Cycle idle_run_ = 0;
    bool finished_ = false;

    const TileState& tile_at(int tile_index) const {
        for (const auto& k : kernels_) {
            if (mapping_.tile_index(k.tile.kernel) == tile_index) return k.tile;
        }
        throw InvalidTileError("no kernel is mapped to tile " + std::to_string(tile_index));
    }

    std::uint64_t elements_in(std::uint64_t iter) const {
        const std::uint64_t begin = iter * static_cast<std::uint64_t>(lanes_);
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(lanes_), work_.elements - begin);
    }

    void build() {
        const auto n = graph_.kernels.size();
        kernels_.resize(n);
        module_use_.assign(static_cast<std::size_t>(mapping_.dims.tiles()), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& ks = graph_.kernels[i];
            auto& k = kernels_[i];
            k.compute = cost_.compute_cycles(ks);
            k.ops_per_element = static_cast<std::uint64_t>(ks.vector_op_count + ks.scalar_op_count);
            k.ins.resize(ks.in_ports.size());
            k.outs.resize(ks.out_ports.size());
            k.tile.kernel = static_cast<int>(i);
            k.tile.tile = mapping_.assignment[i];
            if (iterations_ == 0) k.state = State::Done;
        }
        order_ = topological_order(graph_);

        auto add_chan = [&](std::string name, const PortSpec& p, std::size_t words, int split, int module) {
            Chan c;
            c.name = std::move(name);
            c.st = ChannelState::make(p, cost_);
            c.bits_per_iter = payload_bits(words, lanes_, split);
            c.module = module;
            chans_.push_back(std::move(c));
            return static_cast<int>(chans_.size()) - 1;
        };
        for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
            const auto& ed = graph_.edges[e];
            const int c = add_chan("edge" + std::to_string(e) + ":" + graph_.kernels[static_cast<std::size_t>(ed.from.kernel)].name +
                                       "->" + graph_.kernels[static_cast<std::size_t>(ed.to.kernel)].name,
                                   graph_.in_port(ed.to), ed.payload.size(), ed.split_parts,
                                   mapping_.tile_index(ed.to.kernel));
            kernels_[static_cast<std::size_t>(ed.from.kernel)].outs[static_cast<std::size_t>(ed.from.port)].chan = c;
            kernels_[static_cast<std::size_t>(ed.to.kernel)].ins[static_cast<std::size_t>(ed.to.port)].chan = c;
        }
        std::map<int, std::size_t> by_bundle;
        for (const auto& in : graph_.inputs) {
            const int c = add_chan("in:" + in.name, graph_.in_port(in.to), in.payload.size(), in.split_parts,
                                   mapping_.tile_index(in.to.kernel));
            kernels_[static_cast<std::size_t>(in.to.kernel)].ins[static_cast<std::size_t>(in.to.port)].chan = c;
            auto it = by_bundle.find(in.bundle);
            if (it == by_bundle.end()) {
                it = by_bundle.emplace(in.bundle, sources_.size()).first;
                sources_.push_back({in.bundle, {}, {}, 0});
            }
            auto& src = sources_[it->second];
            src.chans.push_back(c);
            src.remaining.push_back(chans_[static_cast<std::size_t>(c)].bits_per_iter * iterations_);
        }
        for (const auto& out : graph_.outputs) {
            const int c = add_chan("out:" + out.name, graph_.out_port(out.from), out.payload.size(), 1,
                                   mapping_.tile_index(out.from.kernel));
            kernels_[static_cast<std::size_t>(out.from.kernel)].outs[static_cast<std::size_t>(out.from.port)].chan = c;
            sinks_.push_back({c});
        }
        for (auto& k : kernels_) reset_needs(k);
        if (iterations_ == 0) {
            finished_ = true;
            end_cycle_ = 0;
        }
    }

    void reset_needs(KernelActor& k) {
        for (auto& p : k.ins) p.need = chans_[static_cast<std::size_t>(p.chan)].bits_per_iter;
        for (auto& p : k.outs) p.need = chans_[static_cast<std::size_t>(p.chan)].bits_per_iter;
    }

    bool claim_module(int module) {
        auto& u = module_use_[static_cast<std::size_t>(module)];
        if (u >= cost_.memory_ports_per_module) return false;
        ++u;
        return true;
    }

    static Block worse(Block a, Block b) { return static_cast<int>(b) > static_cast<int>(a) ? b : a; }

    // -- window helpers ----------------------------------------------------

    /// Consumer side; returns bits read this tick.
    std::uint64_t window_read(Chan& c, PortIO& p, std::uint64_t rate, Block& blk, bool lock_cost) {
        auto& ph = c.st.phases[static_cast<std::size_t>(c.st.read_phase)];
        if (!p.holding) {
            if (!(ph.ready && ph.visible_at <= now_)) {
                blk = worse(blk, Block::Lock);
                return 0;
            }
            p.holding = true;
            p.lock_wait = lock_cost ? cost_.lock_acquire_cycles : 0;
        }
        if (p.lock_wait > 0) {
            --p.lock_wait;
            blk = worse(blk, Block::Lock);
            return 0;
        }
        const std::uint64_t take = std::min({rate, ph.produced - ph.consumed, p.need});
        if (take == 0) return 0;
        if (!claim_module(c.module)) {
            blk = worse(blk, Block::Memory);
            return 0;
        }
        ph.consumed += take;
        c.st.consumed_bits += take;
        p.need -= take;
        if (ph.consumed == ph.produced) {
            ph = WindowPhase{};
            ph.visible_at = now_ + 1;
            c.st.read_phase ^= 1;
            p.holding = false;
        }
        return take;
    }

    /// Producer side; returns bits written this tick.
    std::uint64_t window_write(Chan& c, PortIO& p, std::uint64_t rate, Block& blk, bool lock_cost) {
        auto& ph = c.st.phases[static_cast<std::size_t>(c.st.phase)];
        if (!p.holding) {
            if (ph.ready || ph.produced != 0 || ph.visible_at > now_) {
                blk = worse(blk, Block::Lock);
                return 0;
            }
            p.holding = true;
            p.lock_wait = lock_cost ? cost_.lock_acquire_cycles : 0;
        }
        if (p.lock_wait > 0) {
            --p.lock_wait;
            blk = worse(blk, Block::Lock);
            return 0;
        }
        const std::uint64_t put = std::min({rate, c.st.capacity_bits - ph.produced, p.need});
        if (put == 0) return 0;
        if (!claim_module(c.module)) {
            blk = worse(blk, Block::Memory);
            return 0;
        }
        ph.produced += put;
        c.st.occupancy_bits = ph.produced;
        c.st.produced_bits += put;
        p.need -= put;
        if (ph.produced == c.st.capacity_bits) release_phase(c, p);
        return put;
    }

    void release_phase(Chan& c, PortIO& p) {
        auto& ph = c.st.phases[static_cast<std::size_t>(c.st.phase)];
        ph.ready = true;
        ph.visible_at = now_ + 1;
        c.st.phase ^= 1;
        c.st.occupancy_bits = 0;
        p.holding = false;
    }

    // -- stream helpers ----------------------------------------------------

    std::uint64_t stream_read(Chan& c, PortIO& p, std::uint64_t rate, Block& blk) {
        const std::uint64_t take = std::min({rate, c.avail_read, p.need});
        if (take == 0) {
            blk = worse(blk, Block::Stream);
            return 0;
        }
        c.avail_read -= take;
        c.st.occupancy_bits -= take;
        c.st.consumed_bits += take;
        p.need -= take;
        return take;
    }

    std::uint64_t stream_write(Chan& c, PortIO& p, std::uint64_t rate, Block& blk) {
        const std::uint64_t put = std::min({rate, c.avail_write, p.need});
        if (put == 0) {
            blk = worse(blk, Block::Stream);
            return 0;
        }
        c.avail_write -= put;
        c.st.occupancy_bits += put;
        c.st.produced_bits += put;
        p.need -= put;
        return put;
    }

    // -- actors ------------------------------------------------------------

    bool tick_kernel(KernelActor& k) {
        auto& tile = k.tile;
        if (k.state == State::Done) return false;
        if (k.state == State::Compute) {
            ++tile.busy_cycles;
            ++tile.compute_cycles;
            if (--k.compute_left == 0) k.state = State::Write;
            return true;
        }
        Block blk = Block::None;
        bool moved = false;     // data crossed a port
        bool advanced = false;  // any state change, lock countdowns included
        auto& ports = k.state == State::Read ? k.ins : k.outs;
        for (auto& p : ports) {
            if (p.need == 0) continue;
            auto& c = chans_[static_cast<std::size_t>(p.chan)];
            const std::uint64_t rate = cost_.rate_bits(c.st.kind);
            std::uint64_t n = 0;
            if (c.st.kind == PortKind::Window) {
                const Cycle before = p.lock_wait;
                const bool held = p.holding;
                n = k.state == State::Read ? window_read(c, p, rate, blk, true) : window_write(c, p, rate, blk, true);
                advanced |= p.lock_wait != before || p.holding != held;
            } else {
                n = k.state == State::Read ? stream_read(c, p, rate, blk) : stream_write(c, p, rate, blk);
            }
            moved |= n > 0;
        }
        const bool all_done = std::all_of(ports.begin(), ports.end(), [](const PortIO& p) { return p.need == 0; });
        if (moved) {
            ++tile.busy_cycles;
        } else {
            switch (blk) {
                case Block::Stream: ++tile.stalls.stream_stall; break;
                case Block::Lock: ++tile.stalls.lock_stall; break;
                case Block::Memory: ++tile.stalls.memory_stall; break;
                case Block::None: break;
            }
        }
        if (all_done) {
            if (k.state == State::Read) {
                k.state = State::Compute;
                k.compute_left = k.compute;
            } else {
                tile.ops_retired += k.ops_per_element * elements_in(k.iter);
                ++k.iter;
                if (k.iter == iterations_) {
                    for (auto& p : k.outs) {
                        auto& c = chans_[static_cast<std::size_t>(p.chan)];
                        if (c.st.kind == PortKind::Window && p.holding &&
                            c.st.phases[static_cast<std::size_t>(c.st.phase)].produced > 0) {
                            release_phase(c, p);
                        }
                    }
                    k.state = State::Done;
                    tile.finish_cycle = now_ + 1;
                } else {
                    k.state = State::Read;
                    reset_needs(k);
                }
            }
        }
        return moved || advanced || all_done;
    }

    bool tick_source(PlSource& s) {
        if (now_ % cost_.pl_to_aie_clock_ratio != 0) return false;
        const std::size_t n = s.chans.size();
        for (std::size_t step = 0; step < n; ++step) {
            const std::size_t i = (s.rr + step) % n;
            if (s.remaining[i] == 0) continue;
            auto& c = chans_[static_cast<std::size_t>(s.chans[i])];
            PortIO io;
            io.need = std::min<std::uint64_t>(cost_.pl_bits_per_cycle, s.remaining[i]);
            std::uint64_t put = 0;
            Block blk = Block::None;
            if (c.st.kind == PortKind::Window) {
                // DMA fill: no lock cost; keeps filling the producer phase.
                const auto& ph = c.st.phases[static_cast<std::size_t>(c.st.phase)];
                if (ph.ready || ph.visible_at > now_ || ph.produced >= c.st.capacity_bits) continue;
                io.holding = ph.produced > 0;
                put = window_write(c, io, io.need, blk, false);
                const auto& cur = c.st.phases[static_cast<std::size_t>(c.st.phase)];
                if (put > 0 && put == s.remaining[i] && cur.produced > 0 && !cur.ready) release_phase(c, io);
            } else {
                put = stream_write(c, io, io.need, blk);
            }
            if (put == 0) continue;
            s.remaining[i] -= put;
            s.rr = (i + 1) % n;
            return true;
        }
        return false;
    }

    bool tick_sink(PlSink& s) {
        if (now_ % cost_.pl_to_aie_clock_ratio != 0) return false;
        auto& c = chans_[static_cast<std::size_t>(s.chan)];
        PortIO io;
        io.need = cost_.pl_bits_per_cycle;
        Block blk = Block::None;
        if (c.st.kind == PortKind::Window) {
            std::uint64_t got = 0;
            // A DMA read may cross into the next ready phase within one PL cycle.
            for (int rep = 0; rep < 2 && io.need > 0; ++rep) {
                const std::uint64_t n = window_read(c, io, io.need, blk, false);
                if (n == 0) break;
                got += n;
            }
            return got > 0;
        }
        return stream_read(c, io, io.need, blk) > 0;
    }

    bool all_drained() const {
        for (const auto& k : kernels_) {
            if (k.state != State::Done) return false;
        }
        for (const auto& c : chans_) {
            if (c.st.consumed_bits != c.st.produced_bits) return false;
        }
        for (const auto& s : sources_) {
            for (auto r : s.remaining) {
                if (r != 0) return false;
            }
        }
        return true;
    }

    void tick() {
        for (auto& c : chans_) {
            if (c.st.kind != PortKind::Window) {
                c.avail_read = c.st.occupancy_bits;
                c.avail_write = c.st.capacity_bits - c.st.occupancy_bits;
            }
        }
        std::fill(module_use_.begin(), module_use_.end(), 0);
        bool progress = false;
        for (int id : order_) progress |= tick_kernel(kernels_[static_cast<std::size_t>(id)]);
        for (auto& s : sources_) progress |= tick_source(s);
        for (auto& s : sinks_) progress |= tick_sink(s);
        for (auto& k : kernels_) {
            k.tile.cycle_counter = now_ + 1;
            if (k.state == State::Compute) progress = true;
        }
        ++now_;
        if (all_drained()) {
            finished_ = true;
            end_cycle_ = now_;
            return;
        }
        idle_run_ = progress ? 0 : idle_run_ + 1;
        if (idle_run_ > opt_.idle_tolerance || now_ > opt_.cycle_budget) {
            std::ostringstream os;
            os << "graph '" << graph_.name << "' made no progress by cycle " << now_;
            throw DeadlockSuspected(os.str());
        }
    }
};

/// Fill latency of an empty run: one window fill per window hop on the
/// longest input-to-output path.
inline Cycle empty_run_latency(const GraphSpec& g, const CostModel& cost) {
    std::vector<Cycle> at(g.kernels.size(), 0);
    auto hop = [&](const PortSpec& p) { return p.kind == PortKind::Window ? cost.fill_latency(p.window_bytes) : Cycle{0}; };
    for (const auto& in : g.inputs) {
        auto& a = at[static_cast<std::size_t>(in.to.kernel)];
        a = std::max(a, hop(g.in_port(in.to)));
    }
    for (int k : topological_order(g)) {
        for (const auto& e : g.edges) {
            if (e.from.kernel != k) continue;
            auto& a = at[static_cast<std::size_t>(e.to.kernel)];
            a = std::max(a, at[static_cast<std::size_t>(k)] + hop(g.in_port(e.to)));
        }
    }
    Cycle best = 0;
    for (const auto& out : g.outputs) {
        best = std::max(best, at[static_cast<std::size_t>(out.from.kernel)] + hop(g.out_port(out.from)));
    }
    return best;
}

inline SimReport simulate_exact(const GraphSpec& g, const TileMapping& m, const CostModel& cost, Workload w,
                                SimOptions opt = {}) {
    Simulator sim(g, m, cost, w, opt);
    sim.run_to_completion();
    auto r = sim.report();
    if (w.elements == 0) {
        r.end_cycle = empty_run_latency(g, cost);
        r.finalize();
    }
    return r;
}

/// Simulates the workload; above cost.max_simulated_elements the cycle and
/// stall counts are extended linearly from two simulated prefixes (the
/// steady state of a pipeline is periodic per batch).
inline SimReport run(const GraphSpec& g, const TileMapping& m, const CostModel& cost, Workload w, SimOptions opt = {}) {
    cost.validate();
    const auto lanes = static_cast<std::uint64_t>(g.kernels.empty() ? kLanes : g.kernels.front().lanes);
    if (w.elements <= cost.max_simulated_elements) return simulate_exact(g, m, cost, w, opt);

    const std::uint64_t n2 = cost.max_simulated_elements / lanes * lanes;
    const std::uint64_t n1 = n2 / 2 / lanes * lanes;
    const auto r1 = simulate_exact(g, m, cost, {n1}, opt);
    auto r = simulate_exact(g, m, cost, {n2}, opt);
    const double scale = static_cast<double>(w.elements - n2) / static_cast<double>(n2 - n1);
    auto lin = [&](std::uint64_t a1, std::uint64_t a2) {
        const double d = static_cast<double>(a2) - static_cast<double>(a1);
        return static_cast<std::uint64_t>(std::llround(static_cast<double>(a2) + d * scale));
    };
    r.end_cycle = lin(r1.end_cycle, r.end_cycle);
    for (std::size_t i = 0; i < r.tiles.size(); ++i) {
        auto& t = r.tiles[i];
        const auto& t1 = r1.tiles[i];
        t.ops_retired = t.ops_retired / n2 * w.elements;
        t.busy_cycles = lin(t1.busy_cycles, t.busy_cycles);
        t.compute_cycles = lin(t1.compute_cycles, t.compute_cycles);
        t.finish_cycle = lin(t1.finish_cycle, t.finish_cycle);
        t.stalls.stream_stall = lin(t1.stalls.stream_stall, t.stalls.stream_stall);
        t.stalls.lock_stall = lin(t1.stalls.lock_stall, t.stalls.lock_stall);
        t.stalls.memory_stall = lin(t1.stalls.memory_stall, t.stalls.memory_stall);
    }
    for (std::size_t i = 0; i < r.channels.size(); ++i) {
        r.channels[i].produced_bits = lin(r1.channels[i].produced_bits, r.channels[i].produced_bits);
        r.channels[i].consumed_bits = lin(r1.channels[i].consumed_bits, r.channels[i].consumed_bits);
    }
    r.elements = w.elements;
    r.total_ops = static_cast<std::uint64_t>(kOpsPerElement) * w.elements;
    r.extrapolated = true;
    r.finalize();
    return r;
}

}  // namespace aiesim
