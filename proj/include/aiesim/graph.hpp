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
 * @file graph.hpp
 * @brief Dataflow-graph IR for tile-array kernels: kernels with typed ports,
 *        edges carrying named values, PL-facing entry/exit ports, structural
 *        validation and tile placement.
 *
 * Architectural rules enforced here:
 *  - at most two input and two output ports per kernel;
 *  - window buffers are whole 8-lane vectors (multiples of 32 bytes);
 *  - at most one cascade port per direction per kernel;
 *  - the graph is acyclic (recurrences go through the PL loopback adaptor).
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aiesim/common.hpp"
#include "aiesim/program.hpp"

namespace aiesim {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

enum class PortKind : std::uint8_t { Stream32, Window, Cascade };
enum class Direction : std::uint8_t { In, Out };

struct PortSpec {
    PortKind kind = PortKind::Stream32;
    std::uint32_t window_bytes = 0;  ///< Window only
    Direction direction = Direction::In;

    static PortSpec stream(Direction d) { return {PortKind::Stream32, 0, d}; }
    static PortSpec window(std::uint32_t bytes, Direction d) { return {PortKind::Window, bytes, d}; }
    static PortSpec cascade(Direction d) { return {PortKind::Cascade, 0, d}; }
    bool operator==(const PortSpec&) const = default;
};

inline constexpr int kMaxPortsPerDirection = 2;

enum class KernelRole : std::uint8_t { Compute, Load, Store };

struct KernelSpec {
    int id = 0;
    std::string name;
    int vector_op_count = 0;     ///< logical 8-lane ops per batch
    int scalar_op_count = 0;     ///< logical per-lane ops per element
    int vector_issue_count = 0;  ///< vector instructions issued per batch
    std::vector<PortSpec> in_ports;
    std::vector<PortSpec> out_ports;
    double runtime_ratio = 1.0;
    int lanes = kLanes;  ///< 1 = scalar-only kernel
    KernelRole role = KernelRole::Compute;
    std::vector<std::uint8_t> ops;  ///< indices into kProgram, in order

    /// Recomputes the op counts from @ref ops.
    void derive_counts() {
        vector_op_count = scalar_op_count = vector_issue_count = 0;
        for (auto i : ops) {
            const Op& op = kProgram[i];
            if (op.vector) {
                ++vector_op_count;
                vector_issue_count += op.issues();
            } else {
                ++scalar_op_count;
            }
        }
    }
};

struct PortRef {
    int kernel = 0;
    int port = 0;
    bool operator==(const PortRef&) const = default;
};

struct Edge {
    PortRef from;  ///< producer output port
    PortRef to;    ///< consumer input port
    std::vector<Slot> payload;
    int split_parts = 1;  ///< carries 1/split_parts of each payload word
};

struct ExternalInput {
    std::string name;
    PortRef to;
    std::vector<Slot> payload;
    int bundle = 0;  ///< PL interface bundle feeding this port
    int split_parts = 1;
};

struct ExternalOutput {
    std::string name;
    PortRef from;
    std::vector<Slot> payload;
};

struct GraphSpec {
    std::string name;
    std::vector<KernelSpec> kernels;
    std::vector<Edge> edges;
    std::vector<ExternalInput> inputs;
    std::vector<ExternalOutput> outputs;

    const PortSpec& out_port(const PortRef& r) const {
        return kernels.at(static_cast<std::size_t>(r.kernel)).out_ports.at(static_cast<std::size_t>(r.port));
    }
    const PortSpec& in_port(const PortRef& r) const {
        return kernels.at(static_cast<std::size_t>(r.kernel)).in_ports.at(static_cast<std::size_t>(r.port));
    }
};

/// Bits crossing a connection per kernel iteration.
inline std::uint64_t payload_bits(std::size_t words, int lanes, int split_parts) {
    return static_cast<std::uint64_t>(words) * kWordBits * static_cast<std::uint64_t>(lanes) /
           static_cast<std::uint64_t>(std::max(split_parts, 1));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ViolationKind : std::uint8_t {
    EmptyGraph,
    InvalidKernelId,
    PortBudgetExceeded,
    InvalidRuntimeRatio,
    InvalidWindowSize,
    DuplicateCascade,
    DanglingEndpoint,
    UnboundPort,
    MultiplyBoundPort,
    KindMismatch,
    EmptyPayload,
    MissingExternalIO,
    CyclicGraph,
};

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::EmptyGraph: return "EmptyGraph";
        case ViolationKind::InvalidKernelId: return "InvalidKernelId";
        case ViolationKind::PortBudgetExceeded: return "PortBudgetExceeded";
        case ViolationKind::InvalidRuntimeRatio: return "InvalidRuntimeRatio";
        case ViolationKind::InvalidWindowSize: return "InvalidWindowSize";
        case ViolationKind::DuplicateCascade: return "DuplicateCascade";
        case ViolationKind::DanglingEndpoint: return "DanglingEndpoint";
        case ViolationKind::UnboundPort: return "UnboundPort";
        case ViolationKind::MultiplyBoundPort: return "MultiplyBoundPort";
        case ViolationKind::KindMismatch: return "KindMismatch";
        case ViolationKind::EmptyPayload: return "EmptyPayload";
        case ViolationKind::MissingExternalIO: return "MissingExternalIO";
        case ViolationKind::CyclicGraph: return "CyclicGraph";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    std::optional<int> kernel;
    std::optional<int> edge;
    std::string detail;
};

using ValidationReport = std::vector<Violation>;

inline bool has_violation(const ValidationReport& r, ViolationKind k) {
    return std::any_of(r.begin(), r.end(), [k](const Violation& v) { return v.kind == k; });
}

namespace detail {

inline bool port_exists(const GraphSpec& g, const PortRef& r, Direction d) {
    if (r.kernel < 0 || r.kernel >= static_cast<int>(g.kernels.size())) return false;
    const auto& k = g.kernels[static_cast<std::size_t>(r.kernel)];
    const auto n = d == Direction::In ? k.in_ports.size() : k.out_ports.size();
    return r.port >= 0 && r.port < static_cast<int>(n);
}

/// Kahn topological order over kernels; empty optional when cyclic.
inline std::optional<std::vector<int>> topo_order(const GraphSpec& g) {
    const auto n = g.kernels.size();
    std::vector<std::vector<int>> succ(n);
    std::vector<int> indeg(n, 0);
    for (const auto& e : g.edges) {
        if (!port_exists(g, e.from, Direction::Out) || !port_exists(g, e.to, Direction::In)) continue;
        succ[static_cast<std::size_t>(e.from.kernel)].push_back(e.to.kernel);
        ++indeg[static_cast<std::size_t>(e.to.kernel)];
    }
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indeg[i] == 0) ready.push(static_cast<int>(i));
    }
    std::vector<int> order;
    while (!ready.empty()) {
        const int k = ready.top();
        ready.pop();
        order.push_back(k);
        for (int s : succ[static_cast<std::size_t>(k)]) {
            if (--indeg[static_cast<std::size_t>(s)] == 0) ready.push(s);
        }
    }
    if (order.size() != n) return std::nullopt;
    return order;
}

}  // namespace detail

/// Lists every structural violation; an empty report means the graph is
/// valid. Never throws.
inline ValidationReport validate(const GraphSpec& g) {
    ValidationReport rep;
    auto add = [&](ViolationKind k, std::optional<int> kernel, std::optional<int> edge, std::string d) {
        rep.push_back({k, kernel, edge, std::move(d)});
    };
    if (g.kernels.empty()) {
        add(ViolationKind::EmptyGraph, std::nullopt, std::nullopt, "graph has no kernels");
        return rep;
    }

    for (std::size_t i = 0; i < g.kernels.size(); ++i) {
        const auto& k = g.kernels[i];
        const int ki = static_cast<int>(i);
        if (k.id != ki) add(ViolationKind::InvalidKernelId, ki, std::nullopt, "kernel id must equal its index");
        if (k.in_ports.size() > kMaxPortsPerDirection || k.out_ports.size() > kMaxPortsPerDirection) {
            std::ostringstream os;
            os << k.name << " has " << k.in_ports.size() << " inputs and " << k.out_ports.size() << " outputs";
            add(ViolationKind::PortBudgetExceeded, ki, std::nullopt, os.str());
        }
        if (!(k.runtime_ratio > 0.0 && k.runtime_ratio <= 1.0)) {
            add(ViolationKind::InvalidRuntimeRatio, ki, std::nullopt, "runtime ratio outside (0, 1]");
        }
        for (const auto* ports : {&k.in_ports, &k.out_ports}) {
            int cascades = 0;
            for (const auto& p : *ports) {
                if (p.kind == PortKind::Window && (p.window_bytes == 0 || p.window_bytes % 32 != 0)) {
                    add(ViolationKind::InvalidWindowSize, ki, std::nullopt,
                        "window of " + std::to_string(p.window_bytes) + " bytes");
                }
                cascades += p.kind == PortKind::Cascade ? 1 : 0;
            }
            if (cascades > 1) add(ViolationKind::DuplicateCascade, ki, std::nullopt, "more than one cascade port");
        }
    }

    // Port binding counts.
    std::map<std::pair<int, int>, int> in_bound, out_bound;
    for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
        const auto& e = g.edges[ei];
        const int eid = static_cast<int>(ei);
        const bool ok_from = detail::port_exists(g, e.from, Direction::Out);
        const bool ok_to = detail::port_exists(g, e.to, Direction::In);
        if (!ok_from || !ok_to) {
            add(ViolationKind::DanglingEndpoint, std::nullopt, eid, "edge references a missing kernel or port");
            continue;
        }
        ++out_bound[{e.from.kernel, e.from.port}];
        ++in_bound[{e.to.kernel, e.to.port}];
        if (!(g.out_port(e.from).kind == g.in_port(e.to).kind &&
              g.out_port(e.from).window_bytes == g.in_port(e.to).window_bytes)) {
            add(ViolationKind::KindMismatch, e.to.kernel, eid, "producer and consumer port kinds differ");
        }
        if (e.payload.empty()) add(ViolationKind::EmptyPayload, std::nullopt, eid, "edge carries nothing");
    }
    for (const auto& in : g.inputs) {
        if (!detail::port_exists(g, in.to, Direction::In)) {
            add(ViolationKind::DanglingEndpoint, std::nullopt, std::nullopt, "input '" + in.name + "' has no target");
            continue;
        }
        ++in_bound[{in.to.kernel, in.to.port}];
        if (g.in_port(in.to).kind == PortKind::Cascade) {
            add(ViolationKind::KindMismatch, in.to.kernel, std::nullopt, "PL input cannot drive a cascade port");
        }
        if (in.payload.empty()) add(ViolationKind::EmptyPayload, in.to.kernel, std::nullopt, "input '" + in.name + "' is empty");
    }
    for (const auto& out : g.outputs) {
        if (!detail::port_exists(g, out.from, Direction::Out)) {
            add(ViolationKind::DanglingEndpoint, std::nullopt, std::nullopt, "output '" + out.name + "' has no source");
            continue;
        }
        ++out_bound[{out.from.kernel, out.from.port}];
        if (g.out_port(out.from).kind == PortKind::Cascade) {
            add(ViolationKind::KindMismatch, out.from.kernel, std::nullopt, "cascade port cannot leave the array");
        }
        if (out.payload.empty()) add(ViolationKind::EmptyPayload, out.from.kernel, std::nullopt, "output '" + out.name + "' is empty");
    }
    for (std::size_t i = 0; i < g.kernels.size(); ++i) {
        const auto& k = g.kernels[i];
        const int ki = static_cast<int>(i);
        auto check = [&](const std::map<std::pair<int, int>, int>& bound, std::size_t nports, const char* dir) {
            for (std::size_t p = 0; p < nports; ++p) {
                const auto it = bound.find({ki, static_cast<int>(p)});
                const int n = it == bound.end() ? 0 : it->second;
                if (n == 0) {
                    add(ViolationKind::UnboundPort, ki, std::nullopt, k.name + " " + dir + " port " + std::to_string(p));
                } else if (n > 1) {
                    add(ViolationKind::MultiplyBoundPort, ki, std::nullopt,
                        k.name + " " + dir + " port " + std::to_string(p) + " bound " + std::to_string(n) + " times");
                }
            }
        };
        check(in_bound, k.in_ports.size(), "input");
        check(out_bound, k.out_ports.size(), "output");
    }
    if (g.inputs.empty() || g.outputs.empty()) {
        add(ViolationKind::MissingExternalIO, std::nullopt, std::nullopt, "graph needs PL inputs and outputs");
    }

    if (!detail::topo_order(g)) {
        add(ViolationKind::CyclicGraph, std::nullopt, std::nullopt, "dataflow graph contains a cycle");
    }
    return rep;
}

inline std::string describe(const ValidationReport& rep) {
    std::ostringstream os;
    for (const auto& v : rep) {
        os << to_string(v.kind);
        if (v.kernel) os << " kernel=" << *v.kernel;
        if (v.edge) os << " edge=" << *v.edge;
        os << ": " << v.detail << "\n";
    }
    return os.str();
}

/// Throws ConfigurationError listing violations when @p g is invalid.
inline void require_valid(const GraphSpec& g) {
    const auto rep = validate(g);
    if (!rep.empty()) throw ConfigurationError("invalid graph '" + g.name + "':\n" + describe(rep));
}

inline std::vector<int> topological_order(const GraphSpec& g) {
    auto o = detail::topo_order(g);
    if (!o) throw ConfigurationError("graph '" + g.name + "' is cyclic");
    return *o;
}

// ---------------------------------------------------------------------------
// Variant builders
// ---------------------------------------------------------------------------

enum class Variant : std::uint8_t { NaiveScalar, VectorSingle, MultiAIE, MultiAIE128, OneOpPerKernel };

inline constexpr std::array<Variant, 5> kAllVariants = {Variant::NaiveScalar, Variant::VectorSingle, Variant::MultiAIE,
                                                        Variant::MultiAIE128, Variant::OneOpPerKernel};

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::NaiveScalar: return "naive-scalar";
        case Variant::VectorSingle: return "vector-single";
        case Variant::MultiAIE: return "multi-aie";
        case Variant::MultiAIE128: return "multi-aie-128";
        case Variant::OneOpPerKernel: return "one-op-per-kernel";
    }
    return "?";
}

inline const char* description(Variant v) {
    switch (v) {
        case Variant::NaiveScalar: return "naive scalar kernel";
        case Variant::VectorSingle: return "vectorised kernel";
        case Variant::MultiAIE: return "multi-AIE";
        case Variant::MultiAIE128: return "read 128 bit/cycle for loads";
        case Variant::OneOpPerKernel: return "one vec operation/kernel";
    }
    return "?";
}

inline std::optional<Variant> variant_from_string(std::string_view s) {
    for (auto v : kAllVariants) {
        if (s == to_string(v)) return v;
    }
    return std::nullopt;
}

struct Connection {
    enum class Kind : std::uint8_t { Stream, Window } kind = Kind::Stream;
    std::uint32_t window_bytes = 0;

    static Connection stream() { return {Kind::Stream, 0}; }
    static Connection window(std::uint32_t bytes) { return {Kind::Window, bytes}; }

    PortSpec port(Direction d) const {
        return kind == Kind::Stream ? PortSpec::stream(d) : PortSpec::window(window_bytes, d);
    }
    std::string str() const { return kind == Kind::Stream ? "stream" : "window:" + std::to_string(window_bytes); }
    bool operator==(const Connection&) const = default;

    /// Accepts "stream", "window" (128 bytes) or "window:<bytes>".
    static Connection parse(std::string_view s) {
        if (s == "stream") return stream();
        if (s == "window") return window(128);
        if (s.rfind("window:", 0) == 0) {
            const std::string num(s.substr(7));
            try {
                std::size_t used = 0;
                const long v = std::stol(num, &used);
                if (used == num.size() && v > 0) return window(static_cast<std::uint32_t>(v));
            } catch (const std::exception&) {
            }
        }
        throw ConfigurationError("unknown connection '" + std::string(s) + "'");
    }
};

/// Connection used for the Table-2 style micro runs of each variant.
inline Connection default_connection(Variant v) {
    switch (v) {
        case Variant::NaiveScalar:
        case Variant::VectorSingle:
            return Connection::stream();
        default:
            return Connection::window(128);
    }
}

/// Nine compute stages: contiguous runs of the schedule with vector-op
/// quotas 3,3,3,3,3,3,2,2,2; scalar ops stay with the preceding vector op.
inline std::vector<std::vector<std::uint8_t>> multi_aie_partition() {
    constexpr std::array<int, 9> quota = {3, 3, 3, 3, 3, 3, 2, 2, 2};
    std::vector<std::vector<std::uint8_t>> groups(quota.size());
    std::size_t g = 0;
    int vec_in_group = 0;
    for (std::size_t i = 0; i < kProgram.size(); ++i) {
        if (kProgram[i].vector && vec_in_group == quota[g] && g + 1 < quota.size()) {
            ++g;
            vec_in_group = 0;
        }
        groups[g].push_back(static_cast<std::uint8_t>(i));
        vec_in_group += kProgram[i].vector ? 1 : 0;
    }
    return groups;
}

namespace detail {

struct ChainBuilder {
    GraphSpec g;
    Connection conn;
    int lanes = kLanes;

    int add_kernel(std::string name, std::vector<std::uint8_t> ops, KernelRole role, int n_in, int n_out) {
        KernelSpec k;
        k.id = static_cast<int>(g.kernels.size());
        k.name = std::move(name);
        k.ops = std::move(ops);
        k.role = role;
        k.lanes = lanes;
        k.derive_counts();
        for (int i = 0; i < n_in; ++i) k.in_ports.push_back(conn.port(Direction::In));
        for (int i = 0; i < n_out; ++i) k.out_ports.push_back(conn.port(Direction::Out));
        g.kernels.push_back(std::move(k));
        return g.kernels.back().id;
    }
    void connect(int from, int from_port, int to, int to_port, std::vector<Slot> payload, int split = 1) {
        g.edges.push_back({{from, from_port}, {to, to_port}, std::move(payload), split});
    }
};

inline std::vector<Slot> without(std::vector<Slot> s, Slot x) {
    s.erase(std::remove(s.begin(), s.end(), x), s.end());
    return s;
}

}  // namespace detail

/// Builds the graph of one benchmark variant. Every returned graph passes
/// validate(). NaiveScalar exists only with stream connections.
inline GraphSpec build_variant(Variant variant, Connection connection) {
    if (connection.kind == Connection::Kind::Window &&
        (connection.window_bytes < 32 || connection.window_bytes % 32 != 0)) {
        throw ConfigurationError("window size must be a positive multiple of 32 bytes, got " +
                                 std::to_string(connection.window_bytes));
    }
    if (variant == Variant::NaiveScalar && connection.kind != Connection::Kind::Stream) {
        throw ConfigurationError("naive-scalar is built with 32-bit streams only");
    }

    detail::ChainBuilder b;
    b.conn = connection;
    b.g.name = std::string(to_string(variant)) + "/" + connection.str();
    const std::vector<Slot> vin{Slot::VIn}, zin{Slot::ZIn}, out{Slot::Out};

    std::vector<std::uint8_t> all_ops(kProgram.size());
    for (std::size_t i = 0; i < all_ops.size(); ++i) all_ops[i] = static_cast<std::uint8_t>(i);

    auto finish_single = [&](const std::string& name) {
        const int k = b.add_kernel(name, all_ops, KernelRole::Compute, 2, 1);
        b.g.inputs.push_back({"v", {k, 0}, vin, 0, 1});
        b.g.inputs.push_back({"z", {k, 1}, zin, 0, 1});
        b.g.outputs.push_back({"v1qe", {k, 0}, out});
    };

    switch (variant) {
        case Variant::NaiveScalar:
            b.lanes = 1;
            finish_single("v1qe_scalar");
            break;
        case Variant::VectorSingle:
            finish_single("v1qe_vec");
            break;
        case Variant::MultiAIE: {
            auto groups = multi_aie_partition();
            // Stage 0 takes both PL inputs directly.
            const int s0 = b.add_kernel("stage0", groups[0], KernelRole::Compute, 2, 1);
            b.g.inputs.push_back({"v", {s0, 0}, vin, 0, 1});
            b.g.inputs.push_back({"z", {s0, 1}, zin, 0, 1});
            groups.erase(groups.begin());
            int prev = s0;
            for (std::size_t s = 0; s < groups.size(); ++s) {
                const int k = b.add_kernel("stage" + std::to_string(s + 1), groups[s], KernelRole::Compute, 1, 1);
                b.connect(prev, 0, k, 0, live_across(groups[s].front()));
                prev = k;
            }
            b.g.outputs.push_back({"v1qe", {prev, 0}, out});
            break;
        }
        case Variant::MultiAIE128: {
            auto groups = multi_aie_partition();
            // The load kernel owns the lane loads of stage 0 and merges the
            // two separately bundled PL inputs into one connection.
            std::vector<std::uint8_t> load_ops, rest;
            for (auto i : groups[0]) (kProgram[i].vector ? rest : load_ops).push_back(i);
            groups[0] = rest;
            const int ld = b.add_kernel("load", load_ops, KernelRole::Load, 2, 1);
            b.g.inputs.push_back({"v", {ld, 0}, vin, 0, 1});
            b.g.inputs.push_back({"z", {ld, 1}, zin, 1, 1});
            const int last = [&] {
                int prev = ld;
                for (std::size_t s = 0; s < groups.size(); ++s) {
                    const int k = b.add_kernel("stage" + std::to_string(s), groups[s], KernelRole::Compute, 1, 1);
                    b.connect(prev, 0, k, 0, live_across(groups[s].front()));
                    prev = k;
                }
                return prev;
            }();
            b.g.outputs.push_back({"v1qe", {last, 0}, out});
            break;
        }
        case Variant::OneOpPerKernel: {
            // Each input is split over two bundled PL streams; a load kernel
            // per input merges the halves.
            const int ld_v = b.add_kernel("load_v", {}, KernelRole::Load, 2, 1);
            const int ld_z = b.add_kernel("load_z", {}, KernelRole::Load, 2, 1);
            b.g.inputs.push_back({"v_a", {ld_v, 0}, vin, 0, 2});
            b.g.inputs.push_back({"v_b", {ld_v, 1}, vin, 1, 2});
            b.g.inputs.push_back({"z_a", {ld_z, 0}, zin, 2, 2});
            b.g.inputs.push_back({"z_b", {ld_z, 1}, zin, 3, 2});
            int prev = -1;
            for (std::size_t i = 0; i < kProgram.size(); ++i) {
                const bool takes_z = i == 1;
                const int k = b.add_kernel(std::string("op_") + std::string(kProgram[i].name),
                                           {static_cast<std::uint8_t>(i)}, KernelRole::Compute, takes_z ? 2 : 1, 1);
                if (i == 0) {
                    b.connect(ld_v, 0, k, 0, vin);
                } else {
                    b.connect(prev, 0, k, 0, detail::without(live_across(i), Slot::ZIn));
                }
                if (takes_z) b.connect(ld_z, 0, k, 1, zin);
                prev = k;
            }
            const int st = b.add_kernel("store", {}, KernelRole::Store, 1, 1);
            b.connect(prev, 0, st, 0, out);
            b.g.outputs.push_back({"v1qe", {st, 0}, out});
            break;
        }
    }
    require_valid(b.g);
    return b.g;
}

// ---------------------------------------------------------------------------
// Tile mapping
// ---------------------------------------------------------------------------

struct ArrayDims {
    int rows = 8;
    int cols = 50;
    int tiles() const { return rows * cols; }
};

struct TileCoord {
    int row = 0;
    int col = 0;
    bool operator==(const TileCoord&) const = default;
    auto operator<=>(const TileCoord&) const = default;
};

struct TileMapping {
    ArrayDims dims;
    std::vector<TileCoord> assignment;     ///< indexed by kernel id
    std::vector<int> placement_order;      ///< kernels in tile order
    std::vector<int> cascade_chain_order;  ///< cascade members, producer before consumer

    int tile_index(int kernel) const {
        const auto& t = assignment.at(static_cast<std::size_t>(kernel));
        return t.row * dims.cols + t.col;
    }
    bool operator==(const TileMapping& o) const {
        return assignment == o.assignment && placement_order == o.placement_order &&
               cascade_chain_order == o.cascade_chain_order;
    }
};

/// Row-major placement in topological order. Cascade chains run west to
/// east inside one row on consecutive tiles; kernels with runtime ratio
/// below one share a tile while the summed ratio stays <= 1.
inline TileMapping map_to_tiles(const GraphSpec& g, ArrayDims dims = {}) {
    require_valid(g);
    if (dims.rows < 1 || dims.cols < 1) throw ConfigurationError("array dimensions must be positive");
    const auto n = g.kernels.size();
    std::size_t exclusive = 0;
    for (const auto& k : g.kernels) exclusive += k.runtime_ratio >= 1.0 ? 1 : 0;
    if (exclusive > static_cast<std::size_t>(dims.tiles())) {
        throw CapacityExceeded(std::to_string(exclusive) + " exclusive kernels exceed " +
                               std::to_string(dims.tiles()) + " tiles");
    }

    std::vector<int> cascade_next(n, -1), cascade_prev(n, -1);
    for (const auto& e : g.edges) {
        if (g.out_port(e.from).kind == PortKind::Cascade) {
            cascade_next[static_cast<std::size_t>(e.from.kernel)] = e.to.kernel;
            cascade_prev[static_cast<std::size_t>(e.to.kernel)] = e.from.kernel;
        }
    }

    TileMapping m;
    m.dims = dims;
    m.assignment.assign(n, {});
    std::vector<bool> placed(n, false);
    int cursor = -1;          // last used tile index
    double cursor_load = 1.0;  // runtime ratio already on the cursor tile
    bool cursor_cascade = false;

    auto new_tile = [&](int at_least) {
        cursor = std::max(cursor + 1, at_least);
        if (cursor >= dims.tiles()) {
            throw CapacityExceeded("graph '" + g.name + "' needs more than " + std::to_string(dims.tiles()) + " tiles");
        }
        cursor_load = 0.0;
        cursor_cascade = false;
    };
    auto place = [&](int k) {
        m.assignment[static_cast<std::size_t>(k)] = {cursor / dims.cols, cursor % dims.cols};
        m.placement_order.push_back(k);
        placed[static_cast<std::size_t>(k)] = true;
    };

    for (int k : topological_order(g)) {
        if (placed[static_cast<std::size_t>(k)]) continue;
        // Walk back to the chain head so the whole chain lands contiguously.
        int head = k;
        while (cascade_prev[static_cast<std::size_t>(head)] >= 0) head = cascade_prev[static_cast<std::size_t>(head)];
        std::vector<int> chain;
        for (int c = head; c >= 0; c = cascade_next[static_cast<std::size_t>(c)]) chain.push_back(c);

        if (chain.size() > 1) {
            if (static_cast<int>(chain.size()) > dims.cols) {
                throw CascadeOrderingError("cascade chain of " + std::to_string(chain.size()) +
                                           " kernels does not fit a row of " + std::to_string(dims.cols) + " tiles");
            }
            int start = cursor + 1;
            if (start % dims.cols + static_cast<int>(chain.size()) > dims.cols) {
                start = (start / dims.cols + 1) * dims.cols;
            }
            new_tile(start);
            for (std::size_t i = 0; i < chain.size(); ++i) {
                if (i > 0) new_tile(cursor + 1);
                place(chain[i]);
                cursor_load = 1.0;
                cursor_cascade = true;
                m.cascade_chain_order.push_back(chain[i]);
            }
            continue;
        }
        const double ratio = g.kernels[static_cast<std::size_t>(k)].runtime_ratio;
        if (cursor < 0 || cursor_cascade || cursor_load + ratio > 1.0 + 1e-12) new_tile(cursor + 1);
        cursor_load += ratio;
        place(k);
    }
    return m;
}

}  // namespace aiesim
