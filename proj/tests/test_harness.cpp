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


// Benchmark driver, oracle comparison and report formats.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "aiesim/harness.hpp"

using namespace aiesim;

namespace {

RunConfig quick(std::vector<Variant> variants = {}) {
    RunConfig cfg;
    cfg.variants = std::move(variants);
    cfg.repetitions = 1;
    return cfg;
}

const std::vector<BenchmarkRow>& micro_rows() {
    static const auto rows = run_benchmark(quick());
    return rows;
}

}  // namespace

TEST(Compare, RelativeErrorAndWorstIndex) {
    const std::vector<float> ref{1.0f, 2.0f, 4.0f};
    const std::vector<float> got{1.0f, 2.0f + 2e-5f, 4.0f};
    const auto c = compare_to_oracle(got, ref);
    EXPECT_NEAR(c.max_rel_error, 1e-5, 1e-7);
    EXPECT_EQ(c.worst_index, 1u);
    EXPECT_EQ(compare_to_oracle(ref, ref).max_rel_error, 0.0);
    EXPECT_FALSE(compare_to_oracle(ref, ref).worst_index);
}

TEST(Compare, NanAndShape) {
    const std::vector<float> ref{1.0f, 2.0f};
    const std::vector<float> bad{1.0f, std::numeric_limits<float>::quiet_NaN()};
    EXPECT_TRUE(std::isinf(compare_to_oracle(bad, ref).max_rel_error));
    EXPECT_THROW(compare_to_oracle(std::vector<float>{1.0f}, ref), ShapeError);
}

TEST(Benchmark, MicroRowsInTableOrder) {
    const auto& rows = micro_rows();
    ASSERT_EQ(rows.size(), 5u);
    const char* labels[] = {"naive scalar kernel", "vectorised kernel", "multi-AIE", "read 128 bit/cycle for loads",
                            "one vec operation/kernel"};
    const int kernels[] = {1, 1, 9, 10, 39};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].description.rfind(labels[i], 0), 0u) << rows[i].description;
        EXPECT_EQ(rows[i].kernel_count, kernels[i]);
        EXPECT_EQ(rows[i].elements, 504u);
        EXPECT_EQ(rows[i].total_ops, 18144u);
        EXPECT_DOUBLE_EQ(rows[i].ops_per_cycle, 18144.0 / static_cast<double>(rows[i].total_cycles));
        EXPECT_DOUBLE_EQ(rows[i].efficiency_pct, rows[i].ops_per_cycle / 8 * 100);
        EXPECT_EQ(rows[i].max_rel_error, 0.0);
        EXPECT_EQ(rows[i].verified_elements, 504u);
    }
}

TEST(Benchmark, RepetitionsAverageDeterministicRuns) {
    auto cfg = quick({Variant::MultiAIE});
    const auto one = run_benchmark(cfg);
    cfg.repetitions = 3;
    EXPECT_EQ(run_benchmark(cfg), one);
    cfg.repetitions = 0;
    EXPECT_THROW(run_benchmark(cfg), ConfigurationError);
}

TEST(Benchmark, ExplicitConnectionsGiveOneRowEach) {
    auto cfg = quick({Variant::MultiAIE, Variant::OneOpPerKernel});
    cfg.connections = {Connection::stream(), Connection::window(256)};
    const auto rows = run_benchmark(cfg);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].variant, "multi-aie");
    EXPECT_EQ(rows[3].variant, "one-op-per-kernel");
    EXPECT_EQ(rows[1].connection, "window:256");
}

TEST(Benchmark, ComputeUnitsSplitAssets) {
    auto cfg = quick({Variant::MultiAIE128});
    cfg.problem = ProblemSize{5, 2, 64, "five"};
    cfg.cu_count = 2;
    const auto rows = run_benchmark(cfg);
    EXPECT_EQ(rows[0].elements, 3u * 2u * 64u);  // busiest unit owns three assets
    EXPECT_EQ(rows[0].verified_elements, 640u);
    cfg.cu_count = 7;
    EXPECT_THROW(run_benchmark(cfg), AXIBudgetExceeded);
}

TEST(Benchmark, VerificationSliceForLargeProblems) {
    auto cfg = quick({Variant::VectorSingle});
    cfg.problem = ProblemSize{3, 4, 64, "wide"};
    cfg.max_verified_elements = 130;
    const auto rows = run_benchmark(cfg);
    EXPECT_EQ(rows[0].verified_elements, 128u);
    EXPECT_EQ(rows[0].elements, 768u);
}

TEST(Formats, Parse) {
    EXPECT_EQ(parse_format("markdown"), TableFormat::Markdown);
    EXPECT_EQ(parse_format("csv"), TableFormat::Csv);
    EXPECT_EQ(parse_format("json"), TableFormat::Json);
    EXPECT_THROW(parse_format("xlsx"), FormatError);
}

TEST(Formats, MarkdownHasTableColumnsOnly) {
    const auto md = emit_table(micro_rows(), TableFormat::Markdown);
    const auto first = md.substr(0, md.find('\n'));
    EXPECT_EQ(first, "| Description | #K | Start | End | Total | Avg/kernel | Ops/cycle | Eff% |");
    EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 7);
}

TEST(Formats, CsvRoundTripIsStable) {
    const auto csv = emit_table(micro_rows(), TableFormat::Csv);
    const auto back = parse_csv(csv);
    ASSERT_EQ(back.size(), micro_rows().size());
    EXPECT_EQ(emit_table(back, TableFormat::Csv), csv);
    EXPECT_EQ(back[2].total_cycles, micro_rows()[2].total_cycles);
}

TEST(Formats, CsvQuotesAwkwardFields) {
    auto rows = micro_rows();
    rows[0].description = "odd, \"quoted\" text";
    const auto back = parse_csv(emit_table(rows, TableFormat::Csv));
    EXPECT_EQ(back[0].description, rows[0].description);
    EXPECT_THROW(parse_csv("a,b\n1,2\n"), FormatError);
    EXPECT_THROW(parse_csv(""), FormatError);
}

TEST(Formats, JsonRoundTripIsExact) {
    const auto text = emit_table(micro_rows(), TableFormat::Json);
    EXPECT_EQ(rows_from_json(text), micro_rows());
    const auto wrapped = "{\"rows\": " + text + "}";
    EXPECT_EQ(rows_from_json(wrapped), micro_rows());
    EXPECT_THROW(rows_from_json("{\"rows\": 3}"), FormatError);
    EXPECT_THROW(rows_from_json("[{\"variant\": \"x\"}]"), FormatError);
    EXPECT_THROW(rows_from_json("not json"), FormatError);
}

TEST(Formats, EmptyTables) {
    EXPECT_NO_THROW(emit_table({}, TableFormat::Csv));
    EXPECT_THROW(emit_table({}, TableFormat::Csv, false), FormatError);
}
