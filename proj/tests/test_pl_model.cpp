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


// PL adaptor: stream bundling, loopback cache and scheduling, compute units
// and the input dump.

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "aiesim/pl.hpp"

using namespace aiesim;

TEST(Bundling, BitsPerPlCycle) {
    EXPECT_EQ(bundle_and_split(4, false), 128u);
    EXPECT_EQ(bundle_and_split(4, true), 256u);
    EXPECT_EQ(bundle_and_split(4, false, 2), 128u);
    EXPECT_THROW(bundle_and_split(4, true, 2), PortBudgetExceeded);
    EXPECT_THROW(bundle_and_split(0, false), ConfigurationError);
}

TEST(Bundling, StreamPlan) {
    const auto split = plan_input_streams(2, true);
    EXPECT_EQ(split.physical_streams, 4);
    EXPECT_EQ(split.load_kernels, 2);
    const auto plain = plan_input_streams(2, false);
    EXPECT_EQ(plain.physical_streams, 2);
    EXPECT_EQ(plain.load_kernels, 0);
    EXPECT_THROW(plan_input_streams(3, false), PortBudgetExceeded);
}

TEST(LoopbackCache, ServesPreviousTimestep) {
    LoopbackCache cache(4);
    EXPECT_EQ(cache.footprint_bytes(), 16u);
    EXPECT_EQ(loopback_serve(cache, 0, 0, 2, 0.04f), 0.04f);
    cache.write(0, 0, 2, 0.05f);
    EXPECT_EQ(loopback_serve(cache, 0, 1, 2, 0.04f), 0.05f);
    EXPECT_EQ(loopback_serve(cache, 0, 2, 2, 0.04f, 0.06f), 0.06f);
}

TEST(LoopbackCache, StaleOrMissingEntriesRaise) {
    LoopbackCache cache(2);
    EXPECT_THROW(loopback_serve(cache, 0, 1, 0, 0.04f), DependencyViolationError);
    cache.write(0, 0, 0, 0.05f);
    EXPECT_THROW(loopback_serve(cache, 0, 2, 0, 0.04f), DependencyViolationError);  // t=1 result missing
    EXPECT_THROW(loopback_serve(cache, 1, 1, 0, 0.04f), DependencyViolationError);  // other asset
    EXPECT_THROW(loopback_serve(cache, 0, 1, 5, 0.04f), ConfigurationError);
    EXPECT_THROW(LoopbackCache(0), ConfigurationError);
}

TEST(Loopback, ReproducesOracleForEveryVariant) {
    const ProblemSize pr{2, 10, 64};
    const auto ref = oracle_run(pr, {}, 42);
    for (auto v : kAllVariants) {
        const auto r = run_loopback(build_variant(v, default_connection(v)), pr, {}, 42);
        ASSERT_EQ(r.result.values.size(), 1280u);
        EXPECT_EQ(digest(r.result.values), digest(ref.values)) << to_string(v);
        EXPECT_EQ(r.cache_bytes, 64u * 4u);
        EXPECT_GE(r.pl_cycles, 1280u / 4u);
    }
}

TEST(Loopback, TimestepInnerOrderBreaksRecursion) {
    LoopbackConfig cfg;
    cfg.order = IssueOrder::TimestepInner;
    EXPECT_THROW(run_loopback(build_variant(Variant::VectorSingle, Connection::stream()), {1, 4, 16}, {}, 1, cfg),
                 DependencyViolationError);
}

TEST(Loopback, TooFewPathsForTheLatencyRaises) {
    // With more elements in flight than paths, a request overtakes its own result.
    LoopbackConfig cfg;
    cfg.tile_latency = 100;
    cfg.max_in_flight = 1000;
    EXPECT_THROW(run_loopback(build_variant(Variant::VectorSingle, Connection::stream()), {1, 4, 16}, {}, 1, cfg),
                 DependencyViolationError);
}

TEST(Loopback, InFlightLimitThrottlesIssue) {
    const auto g = build_variant(Variant::VectorSingle, Connection::stream());
    LoopbackConfig tight;
    tight.max_in_flight = 4;
    const auto slow = run_loopback(g, {1, 4, 64}, {}, 3, tight);
    const auto fast = run_loopback(g, {1, 4, 64}, {}, 3);
    EXPECT_GT(slow.issue_stalls, fast.issue_stalls);
    EXPECT_GT(slow.pl_cycles, fast.pl_cycles);
    EXPECT_EQ(digest(slow.result.values), digest(fast.result.values));
}

TEST(Loopback, RejectsZeroWidths) {
    LoopbackConfig cfg;
    cfg.channel_depth = 0;
    EXPECT_THROW(run_loopback(build_variant(Variant::VectorSingle, Connection::stream()), {1, 1, 8}, {}, 1, cfg),
                 ConfigurationError);
}

TEST(ComputeUnits, SixFitSevenDoNot) {
    const auto p = cu_plan(6, 10);
    EXPECT_EQ(p.axi_ports_used, 84u);
    EXPECT_EQ(p.tiles_used, 60u);
    EXPECT_DOUBLE_EQ(p.tile_utilisation_pct(), 15.0);
    EXPECT_THROW(cu_plan(7, 10), AXIBudgetExceeded);
    EXPECT_THROW(cu_plan(0, 10), ConfigurationError);
    EXPECT_THROW(cu_plan(6, 70), CapacityExceeded);
}

TEST(ComputeUnits, RoundRobinAssets) {
    const auto owners = cu_plan(3, 9).assign_assets(8);
    ASSERT_EQ(owners.size(), 3u);
    EXPECT_EQ(owners[0], (std::vector<std::uint64_t>{0, 3, 6}));
    EXPECT_EQ(owners[1], (std::vector<std::uint64_t>{1, 4, 7}));
    EXPECT_EQ(owners[2], (std::vector<std::uint64_t>{2, 5}));
}

TEST(InputDump, LittleEndianPairs) {
    const ProblemSize pr{1, 3, 5};
    const std::string path = testing::TempDir() + "aiesim_dump.bin";
    EXPECT_EQ(dump_inputs(path, pr, {}, 8), 30u);
    std::ifstream f(path, std::ios::binary);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)), {});
    ASSERT_EQ(raw.size(), 120u);
    auto at = [&](std::size_t i) {
        const std::uint32_t b = raw[4 * i] | (raw[4 * i + 1] << 8) | (raw[4 * i + 2] << 16) |
                                (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        float x;
        std::memcpy(&x, &b, sizeof x);
        return x;
    };
    const auto o = oracle_run(pr, {}, 8);
    EXPECT_EQ(at(0), 0.04f);
    EXPECT_EQ(at(1), normal_draw(8, 0, 0, 0));
    // Element (0, 1, 2) is the pair at index 7; its v is the t = 0 result.
    EXPECT_EQ(at(14), o.values[element_index(pr, 0, 0, 2)]);
    EXPECT_EQ(at(15), normal_draw(8, 0, 1, 2));
}
