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


// Graph construction, validation, tile mapping, JSON form and functional
// execution of the built graphs.

#include <gtest/gtest.h>

#include <cstring>
#include <map>
#include <set>

#include "aiesim/executor.hpp"
#include "aiesim/graph_io.hpp"

using namespace aiesim;

namespace {

std::vector<Connection> connections_for(Variant v) {
    if (v == Variant::NaiveScalar) return {Connection::stream()};
    return {Connection::stream(), Connection::window(128), Connection::window(512)};
}

KernelSpec plain_kernel(int id, int n_in, int n_out, PortSpec (*make)(Direction) = &PortSpec::stream) {
    KernelSpec k;
    k.id = id;
    k.name = "k" + std::to_string(id);
    k.vector_op_count = 1;
    k.vector_issue_count = 1;
    for (int i = 0; i < n_in; ++i) k.in_ports.push_back(make(Direction::In));
    for (int i = 0; i < n_out; ++i) k.out_ports.push_back(make(Direction::Out));
    return k;
}

// in -> k0 -> k1 -> out over streams.
GraphSpec two_stage() {
    GraphSpec g;
    g.name = "two";
    g.kernels = {plain_kernel(0, 1, 1), plain_kernel(1, 1, 1)};
    g.edges.push_back({{0, 0}, {1, 0}, {Slot::Opaque}, 1});
    g.inputs.push_back({"x", {0, 0}, {Slot::Opaque}, 0, 1});
    g.outputs.push_back({"y", {1, 0}, {Slot::Opaque}});
    return g;
}

// in -> k0 =cascade=> k1 =cascade=> ... -> out
GraphSpec cascade_chain(int n) {
    GraphSpec g;
    g.name = "chain";
    for (int i = 0; i < n; ++i) {
        KernelSpec k = plain_kernel(i, 0, 0);
        k.in_ports.push_back(i == 0 ? PortSpec::stream(Direction::In) : PortSpec::cascade(Direction::In));
        k.out_ports.push_back(i == n - 1 ? PortSpec::stream(Direction::Out) : PortSpec::cascade(Direction::Out));
        g.kernels.push_back(k);
        if (i > 0) g.edges.push_back({{i - 1, 0}, {i, 0}, {Slot::Opaque}, 1});
    }
    g.inputs.push_back({"x", {0, 0}, {Slot::Opaque}, 0, 1});
    g.outputs.push_back({"y", {n - 1, 0}, {Slot::Opaque}});
    return g;
}

std::uint32_t bits(float f) {
    std::uint32_t b;
    std::memcpy(&b, &f, sizeof b);
    return b;
}

}  // namespace

TEST(Variants, KernelCountsAndNames) {
    const std::map<Variant, std::size_t> expect = {{Variant::NaiveScalar, 1}, {Variant::VectorSingle, 1},
                                                   {Variant::MultiAIE, 9}, {Variant::MultiAIE128, 10},
                                                   {Variant::OneOpPerKernel, 39}};
    for (auto v : kAllVariants) {
        EXPECT_EQ(variant_from_string(to_string(v)), v);
        for (const auto& c : connections_for(v)) {
            const auto g = build_variant(v, c);
            EXPECT_EQ(g.kernels.size(), expect.at(v)) << g.name;
            EXPECT_TRUE(validate(g).empty()) << describe(validate(g));
        }
    }
    EXPECT_FALSE(variant_from_string("vectorised"));
}

TEST(Variants, EveryOpScheduledOnceInProgramOrder) {
    for (auto v : kAllVariants) {
        const auto g = build_variant(v, default_connection(v));
        std::vector<int> seen;
        for (int k : topological_order(g)) {
            for (auto i : g.kernels[static_cast<std::size_t>(k)].ops) seen.push_back(i);
        }
        ASSERT_EQ(seen.size(), kProgram.size()) << g.name;
        for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], static_cast<int>(i)) << g.name;
    }
}

TEST(Variants, PortBudgetHeldEverywhere) {
    for (auto v : kAllVariants) {
        for (const auto& c : connections_for(v)) {
            for (const auto& k : build_variant(v, c).kernels) {
                EXPECT_LE(k.in_ports.size(), 2u);
                EXPECT_LE(k.out_ports.size(), 2u);
            }
        }
    }
}

TEST(Variants, MultiStagePartitionQuotas) {
    const auto groups = multi_aie_partition();
    ASSERT_EQ(groups.size(), 9u);
    const int quota[] = {3, 3, 3, 3, 3, 3, 2, 2, 2};
    for (std::size_t g = 0; g < groups.size(); ++g) {
        int vec = 0;
        for (auto i : groups[g]) vec += kProgram[i].vector ? 1 : 0;
        EXPECT_EQ(vec, quota[g]) << "group " << g;
    }
}

TEST(Variants, LoadKernelsUseSeparateBundles) {
    const auto g128 = build_variant(Variant::MultiAIE128, default_connection(Variant::MultiAIE128));
    std::set<int> bundles;
    for (const auto& in : g128.inputs) bundles.insert(in.bundle);
    EXPECT_EQ(bundles.size(), 2u);
    EXPECT_EQ(g128.kernels.front().role, KernelRole::Load);

    const auto g1 = build_variant(Variant::OneOpPerKernel, default_connection(Variant::OneOpPerKernel));
    EXPECT_EQ(g1.inputs.size(), 4u);
    for (const auto& in : g1.inputs) EXPECT_EQ(in.split_parts, 2);
    EXPECT_EQ(g1.kernels.back().role, KernelRole::Store);
}

TEST(Variants, RejectsUnsupportedConnections) {
    EXPECT_THROW(build_variant(Variant::NaiveScalar, Connection::window(128)), ConfigurationError);
    EXPECT_THROW(build_variant(Variant::MultiAIE, Connection::window(48)), ConfigurationError);
    EXPECT_THROW(build_variant(Variant::MultiAIE, Connection::window(0)), ConfigurationError);
}

TEST(Connections, Parse) {
    EXPECT_EQ(Connection::parse("stream").kind, Connection::Kind::Stream);
    EXPECT_EQ(Connection::parse("window").window_bytes, 128u);
    EXPECT_EQ(Connection::parse("window:256").window_bytes, 256u);
    EXPECT_EQ(Connection::parse("window:256").str(), "window:256");
    EXPECT_THROW(Connection::parse("cascade"), ConfigurationError);
    EXPECT_THROW(Connection::parse("window:abc"), ConfigurationError);
}

TEST(Validation, CleanGraphPasses) {
    EXPECT_TRUE(validate(two_stage()).empty());
    EXPECT_NO_THROW(require_valid(two_stage()));
}

TEST(Validation, DetectsEachViolation) {
    auto expect_kind = [](const GraphSpec& g, ViolationKind k) {
        const auto rep = validate(g);
        EXPECT_TRUE(has_violation(rep, k)) << to_string(k) << "\n" << describe(rep);
        EXPECT_THROW(require_valid(g), ConfigurationError);
    };
    expect_kind(GraphSpec{}, ViolationKind::EmptyGraph);

    auto g = two_stage();
    g.kernels[1].id = 7;
    expect_kind(g, ViolationKind::InvalidKernelId);

    g = two_stage();
    for (int i = 0; i < 2; ++i) g.kernels[0].out_ports.push_back(PortSpec::stream(Direction::Out));
    expect_kind(g, ViolationKind::PortBudgetExceeded);

    g = two_stage();
    g.kernels[0].runtime_ratio = 0.0;
    expect_kind(g, ViolationKind::InvalidRuntimeRatio);

    g = two_stage();
    g.kernels[0].out_ports[0] = PortSpec::window(100, Direction::Out);
    g.kernels[1].in_ports[0] = PortSpec::window(100, Direction::In);
    expect_kind(g, ViolationKind::InvalidWindowSize);

    g = two_stage();
    g.edges[0].to = {5, 0};
    expect_kind(g, ViolationKind::DanglingEndpoint);

    g = two_stage();
    g.kernels[1].in_ports[0] = PortSpec::window(128, Direction::In);
    expect_kind(g, ViolationKind::KindMismatch);

    g = two_stage();
    g.edges[0].payload.clear();
    expect_kind(g, ViolationKind::EmptyPayload);

    g = two_stage();
    g.kernels[1].in_ports.push_back(PortSpec::stream(Direction::In));
    expect_kind(g, ViolationKind::UnboundPort);

    g = two_stage();
    g.inputs.push_back({"x2", {1, 0}, {Slot::Opaque}, 0, 1});
    expect_kind(g, ViolationKind::MultiplyBoundPort);

    g = two_stage();
    g.outputs.clear();
    g.kernels[1].out_ports.clear();
    expect_kind(g, ViolationKind::MissingExternalIO);

    g = two_stage();
    g.kernels[0].in_ports.push_back(PortSpec::stream(Direction::In));
    g.kernels[1].out_ports.push_back(PortSpec::stream(Direction::Out));
    g.edges.push_back({{1, 1}, {0, 1}, {Slot::Opaque}, 1});
    expect_kind(g, ViolationKind::CyclicGraph);

    g = cascade_chain(3);
    g.kernels[1].out_ports.push_back(PortSpec::cascade(Direction::Out));
    g.kernels[2].in_ports.push_back(PortSpec::cascade(Direction::In));
    g.edges.push_back({{1, 1}, {2, 1}, {Slot::Opaque}, 1});
    expect_kind(g, ViolationKind::DuplicateCascade);
}

TEST(Validation, TopologicalOrderRespectsEdges) {
    for (auto v : kAllVariants) {
        const auto g = build_variant(v, default_connection(v));
        const auto order = topological_order(g);
        std::vector<int> pos(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
        for (const auto& e : g.edges) {
            EXPECT_LT(pos[static_cast<std::size_t>(e.from.kernel)], pos[static_cast<std::size_t>(e.to.kernel)]);
        }
    }
}

TEST(Mapping, ExclusiveTilesAndDeterminism) {
    for (auto v : kAllVariants) {
        const auto g = build_variant(v, default_connection(v));
        const auto m = map_to_tiles(g);
        std::set<TileCoord> used(m.assignment.begin(), m.assignment.end());
        EXPECT_EQ(used.size(), g.kernels.size()) << g.name;
        EXPECT_EQ(m, map_to_tiles(g));
        for (const auto& t : m.assignment) {
            EXPECT_GE(t.row, 0);
            EXPECT_LT(t.row, 8);
            EXPECT_LT(t.col, 50);
        }
    }
}

TEST(Mapping, CascadeChainIsContiguousInOneRow) {
    auto g = cascade_chain(6);
    const auto m = map_to_tiles(g, {4, 8});
    ASSERT_EQ(m.cascade_chain_order, (std::vector<int>{0, 1, 2, 3, 4, 5}));
    for (int i = 1; i < 6; ++i) {
        const auto a = m.assignment[static_cast<std::size_t>(i - 1)];
        const auto b = m.assignment[static_cast<std::size_t>(i)];
        EXPECT_EQ(a.row, b.row);
        EXPECT_EQ(a.col + 1, b.col);
    }
}

TEST(Mapping, CascadeChainWrapsToNextRowWhole) {
    // Four plain kernels take half a row of 8; a chain of 6 must start on the next row.
    GraphSpec g;
    g.name = "wrap";
    for (int i = 0; i < 4; ++i) g.kernels.push_back(plain_kernel(i, 1, 1));
    for (int i = 0; i < 3; ++i) g.edges.push_back({{i, 0}, {i + 1, 0}, {Slot::Opaque}, 1});
    auto chain = cascade_chain(6);
    for (auto& k : chain.kernels) k.id += 4;
    for (auto& e : chain.edges) {
        e.from.kernel += 4;
        e.to.kernel += 4;
    }
    g.kernels.insert(g.kernels.end(), chain.kernels.begin(), chain.kernels.end());
    g.edges.insert(g.edges.end(), chain.edges.begin(), chain.edges.end());
    g.edges.push_back({{3, 0}, {4, 0}, {Slot::Opaque}, 1});
    g.inputs.push_back({"x", {0, 0}, {Slot::Opaque}, 0, 1});
    g.outputs.push_back({"y", {9, 0}, {Slot::Opaque}});
    const auto m = map_to_tiles(g, {4, 8});
    EXPECT_EQ(m.assignment[4], (TileCoord{1, 0}));
    EXPECT_EQ(m.assignment[9], (TileCoord{1, 5}));
}

TEST(Mapping, ChainLongerThanRowIsRejected) {
    EXPECT_THROW(map_to_tiles(cascade_chain(9), {4, 8}), CascadeOrderingError);
}

TEST(Mapping, CapacityAndSharing) {
    const auto g = build_variant(Variant::OneOpPerKernel, default_connection(Variant::OneOpPerKernel));
    EXPECT_THROW(map_to_tiles(g, {2, 10}), CapacityExceeded);

    auto shared = two_stage();
    shared.kernels[0].runtime_ratio = 0.5;
    shared.kernels[1].runtime_ratio = 0.4;
    const auto m = map_to_tiles(shared);
    EXPECT_EQ(m.assignment[0], m.assignment[1]);
}

TEST(Payload, BitsPerIteration) {
    EXPECT_EQ(payload_bits(2, 8, 1), 512u);
    EXPECT_EQ(payload_bits(1, 8, 2), 128u);
    EXPECT_EQ(payload_bits(3, 1, 1), 96u);
}

TEST(GraphJson, RoundTripsEveryVariant) {
    for (auto v : kAllVariants) {
        for (const auto& c : connections_for(v)) {
            const auto g = build_variant(v, c);
            const auto j = graph_to_json(g);
            const auto back = graph_from_json(nlohmann::json::parse(j.dump()));
            EXPECT_EQ(graph_to_json(back).dump(), j.dump()) << g.name;
            EXPECT_TRUE(validate(back).empty());
        }
    }
}

TEST(GraphJson, RejectsUnknownNames) {
    auto j = nlohmann::json::parse(graph_to_json(build_variant(Variant::VectorSingle, Connection::stream())).dump());
    auto bad_op = j;
    bad_op["kernels"][0]["ops"][0] = "teleport";
    EXPECT_THROW(graph_from_json(bad_op), ConfigurationError);
    auto bad_port = j;
    bad_port["kernels"][0]["in_ports"][0]["kind"] = "pigeon";
    EXPECT_THROW(graph_from_json(bad_port), ConfigurationError);
    auto bad_slot = j;
    bad_slot["inputs"][0]["payload"][0] = "nothing";
    EXPECT_THROW(graph_from_json(bad_slot), ConfigurationError);
}

TEST(Padding, RoundTrip) {
    for (std::size_t n = 0; n < 40; ++n) {
        std::vector<float> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<float>(i) + 0.5f;
        const auto padded = pad_lanes(x, 8, -1.0f);
        EXPECT_EQ(padded.size() % 8, 0u);
        EXPECT_LT(padded.size() - n, 8u);
        for (std::size_t i = n; i < padded.size(); ++i) EXPECT_EQ(padded[i], -1.0f);
        EXPECT_EQ(strip_padding(padded, n), x);
    }
    EXPECT_THROW(strip_padding(std::vector<float>(3), 4), ShapeError);
}

TEST(Execution, EveryVariantReproducesOracleBitExact) {
    const ProblemSize pr{2, 5, 21};  // path count not a multiple of 8
    const QEParams p;
    const auto ref = oracle_run(pr, p, 17);
    for (auto v : kAllVariants) {
        for (const auto& c : connections_for(v)) {
            const auto got = execute_workload(build_variant(v, c), pr, p, 17);
            ASSERT_EQ(got.values.size(), ref.values.size());
            for (std::size_t i = 0; i < ref.values.size(); ++i) {
                ASSERT_EQ(bits(got.values[i]), bits(ref.values[i])) << to_string(v) << " element " << i;
            }
        }
    }
}

TEST(Execution, ThreadCountDoesNotChangeResults) {
    const ProblemSize pr{3, 4, 16};
    const auto g = build_variant(Variant::MultiAIE, Connection::window(128));
    EXPECT_EQ(digest(execute_workload(g, pr, {}, 3, 1).values), digest(execute_workload(g, pr, {}, 3, 3).values));
}

TEST(Execution, SaturationCountMatchesOracle) {
    QEParams p;
    p.theta = 0.0004;
    p.sigma = 1.0;
    p.v0 = 0.0001;
    const ProblemSize pr{1, 3, 24};
    const auto ref = oracle_run(pr, p, 2);
    ASSERT_GT(ref.saturated, 0u);
    for (auto v : kAllVariants) {
        EXPECT_EQ(execute_workload(build_variant(v, default_connection(v)), pr, p, 2).saturated, ref.saturated);
    }
}

TEST(Execution, MissingPayloadSlotIsCaught) {
    auto g = build_variant(Variant::MultiAIE, Connection::window(128));
    auto& payload = g.edges[3].payload;
    payload.erase(payload.begin());
    GraphExecutor ex(g, precompute_constants({}));
    const std::vector<float> v(8, 0.04f), z(8, 0.1f);
    EXPECT_THROW(ex.step(v, z), std::logic_error);
}
