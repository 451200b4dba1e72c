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
 * @file harness.hpp
 * @brief Benchmark orchestration: run variants over a workload, check the
 *        numbers against the sequential reference and render report tables.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aiesim/engine.hpp"
#include "aiesim/executor.hpp"
#include "aiesim/graph.hpp"
#include "aiesim/oracle.hpp"
#include "aiesim/pl.hpp"
#include "aiesim/problem.hpp"

namespace aiesim {

/// Elements of the default micro workload (one 36-op pass = 18,144 ops).
inline constexpr std::uint64_t kMicroElements = 504;
inline constexpr double kEquivalenceTolerance = 1e-5;

inline ProblemSize micro_problem() { return {1, 1, kMicroElements, "micro"}; }

// ---------------------------------------------------------------------------
// Oracle comparison
// ---------------------------------------------------------------------------

struct OracleComparison {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::optional<std::size_t> worst_index;
};

inline OracleComparison compare_to_oracle(std::span<const float> simulated, std::span<const float> oracle) {
    if (simulated.size() != oracle.size()) {
        throw ShapeError("simulated output has " + std::to_string(simulated.size()) + " elements, oracle " +
                         std::to_string(oracle.size()));
    }
    OracleComparison c;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        const double o = oracle[i];
        const double abs_err = std::abs(static_cast<double>(simulated[i]) - o);
        const double rel = abs_err / std::max(std::abs(o), 1e-12);
        const bool nan = std::isnan(rel);
        if (nan || rel > c.max_rel_error) {
            c.max_rel_error = nan ? std::numeric_limits<double>::infinity() : rel;
            c.worst_index = i;
        }
        c.max_abs_error = std::max(c.max_abs_error, abs_err);
        if (nan) break;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Configuration and rows
// ---------------------------------------------------------------------------

struct RunConfig {
    std::vector<Variant> variants;          ///< empty: all five
    std::vector<Connection> connections;    ///< empty: each variant's default
    std::optional<ProblemSize> problem;     ///< empty: 504-element micro workload
    std::uint32_t cu_count = 1;
    std::uint64_t seed = 42;
    CostModel cost;
    QEParams params;
    std::uint32_t repetitions = 5;
    std::uint64_t max_verified_elements = 16'000'000;
    unsigned threads = 1;

    void validate() const {
        if (repetitions < 1) throw ConfigurationError("repetitions must be >= 1");
        if (problem) problem->validate();
        cost.validate();
        params.validate();
        if (cu_count < 1) throw ConfigurationError("cu_count must be >= 1");
    }
};

struct BenchmarkRow {
    std::string description;
    std::string variant;
    std::string connection;
    std::string size;
    std::uint64_t elements = 0;
    int kernel_count = 0;
    std::uint64_t start_cycle = 0;
    std::uint64_t end_cycle = 0;
    std::uint64_t total_cycles = 0;
    double avg_cycles_per_kernel = 0.0;
    std::uint64_t total_ops = 0;
    double ops_per_cycle = 0.0;
    double efficiency_pct = 0.0;
    double model_time_ms = 0.0;
    double max_rel_error = 0.0;
    std::uint64_t saturated = 0;
    std::uint64_t verified_elements = 0;
    std::uint32_t cu_count = 1;
    bool extrapolated = false;

    bool operator==(const BenchmarkRow&) const = default;
};

namespace detail {

inline std::string describe_row(Variant v, const Connection& c) {
    return std::string(description(v)) + " [" + c.str() + "]";
}

inline int variant_rank(const std::string& name) {
    for (std::size_t i = 0; i < kAllVariants.size(); ++i) {
        if (name == to_string(kAllVariants[i])) return static_cast<int>(i);
    }
    return static_cast<int>(kAllVariants.size());
}

inline std::string element_coords(const ProblemSize& p, std::uint64_t i) {
    std::ostringstream os;
    os << "asset " << i / (p.timesteps * p.paths) << ", timestep " << (i / p.paths) % p.timesteps << ", path "
       << i % p.paths;
    return os.str();
}

}  // namespace detail

inline void sort_rows(std::vector<BenchmarkRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
        const int ra = detail::variant_rank(a.variant), rb = detail::variant_rank(b.variant);
        if (ra != rb) return ra < rb;
        if (a.connection != b.connection) return a.connection < b.connection;
        return a.size < b.size;
    });
}

/// One row per requested (variant, connection). Cycle counts come from the
/// tick engine (averaged over repetitions); numbers come from the functional
/// executor and are checked element-wise against the reference run.
inline std::vector<BenchmarkRow> run_benchmark(const RunConfig& cfg) {
    cfg.validate();
    const ProblemSize problem = cfg.problem.value_or(micro_problem());
    const auto sizes = size_arithmetic(problem);
    const auto variants = cfg.variants.empty() ? std::vector<Variant>(kAllVariants.begin(), kAllVariants.end()) : cfg.variants;

    // Busiest compute unit under round-robin asset ownership.
    const std::uint64_t cu_assets = (problem.assets + cfg.cu_count - 1) / cfg.cu_count;
    const std::uint64_t cu_elements = sizes.elements / problem.assets * cu_assets;

    // Verification slice: whole problem, or leading assets/timesteps when too big.
    ProblemSize verify = problem;
    if (sizes.elements > cfg.max_verified_elements) {
        verify.assets = 1;
        verify.timesteps = std::max<std::uint64_t>(1, std::min(problem.timesteps, cfg.max_verified_elements / problem.paths));
        verify.name = problem.name + "-slice";
    }
    const auto oracle = oracle_run(verify, cfg.params, cfg.seed);

    std::vector<BenchmarkRow> rows;
    for (Variant v : variants) {
        std::vector<Connection> conns = cfg.connections;
        if (conns.empty()) conns.push_back(default_connection(v));
        for (const auto& conn : conns) {
            const GraphSpec g = build_variant(v, conn);
            if (cfg.cu_count > 1) cu_plan(cfg.cu_count, static_cast<std::uint32_t>(g.kernels.size()));
            const TileMapping m = map_to_tiles(g);

            double cycles_sum = 0.0;
            SimReport rep;
            for (std::uint32_t r = 0; r < cfg.repetitions; ++r) {
                rep = run(g, m, cfg.cost, {cu_elements});
                cycles_sum += static_cast<double>(rep.total_cycles);
            }
            rep.end_cycle = rep.start_cycle + static_cast<Cycle>(std::llround(cycles_sum / cfg.repetitions));
            rep.finalize();

            const auto sim = execute_workload(g, verify, cfg.params, cfg.seed, cfg.threads);
            const auto cmp = compare_to_oracle(sim.values, oracle.values);
            if (!(cmp.max_rel_error <= kEquivalenceTolerance)) {
                std::ostringstream os;
                os << to_string(v) << "/" << conn.str() << " deviates from the reference by " << cmp.max_rel_error
                   << " (relative) at element " << *cmp.worst_index << " ("
                   << detail::element_coords(verify, *cmp.worst_index) << ")";
                throw ValidationFailure(os.str());
            }

            BenchmarkRow row;
            row.description = detail::describe_row(v, conn);
            row.variant = to_string(v);
            row.connection = conn.str();
            row.size = problem.name;
            row.elements = rep.elements;
            row.kernel_count = rep.kernel_count;
            row.start_cycle = rep.start_cycle;
            row.end_cycle = rep.end_cycle;
            row.total_cycles = rep.total_cycles;
            row.avg_cycles_per_kernel = rep.avg_cycles_per_kernel;
            row.total_ops = rep.total_ops;
            row.ops_per_cycle = rep.ops_per_cycle;
            row.efficiency_pct = rep.efficiency_pct;
            row.model_time_ms = static_cast<double>(rep.total_cycles) / (cfg.cost.aie_clock_ghz * 1e6);
            row.max_rel_error = cmp.max_rel_error;
            row.saturated = sim.saturated;
            row.verified_elements = verify.assets * verify.timesteps * verify.paths;
            row.cu_count = cfg.cu_count;
            row.extrapolated = rep.extrapolated;
            rows.push_back(std::move(row));
        }
    }
    sort_rows(rows);
    return rows;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class TableFormat : std::uint8_t { Markdown, Csv, Json };

inline TableFormat parse_format(std::string_view s) {
    if (s == "markdown" || s == "md") return TableFormat::Markdown;
    if (s == "csv") return TableFormat::Csv;
    if (s == "json") return TableFormat::Json;
    throw FormatError("unknown format '" + std::string(s) + "' (expected markdown, csv or json)");
}

namespace detail {

inline std::string fixed(double x, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

inline std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw FormatError("unterminated quote in CSV line");
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline const std::vector<std::string>& table_columns() {
    static const std::vector<std::string> cols = {
        "Description", "#K",        "Start",   "End",       "Total",     "Avg/kernel", "Ops/cycle",
        "Eff%",        "Variant",   "Connection", "Size",   "Elements",  "TotalOps",   "ModelTimeMs",
        "MaxRelErr",   "Saturated", "Verified", "CUs",      "Extrapolated"};
    return cols;
}

inline std::vector<std::string> row_cells(const BenchmarkRow& r) {
    return {r.description,
            std::to_string(r.kernel_count),
            std::to_string(r.start_cycle),
            std::to_string(r.end_cycle),
            std::to_string(r.total_cycles),
            detail::fixed(r.avg_cycles_per_kernel, 1),
            detail::fixed(r.ops_per_cycle, 2),
            detail::fixed(r.efficiency_pct, 1),
            r.variant,
            r.connection,
            r.size,
            std::to_string(r.elements),
            std::to_string(r.total_ops),
            detail::fixed(r.model_time_ms, 6),
            detail::sci(r.max_rel_error),
            std::to_string(r.saturated),
            std::to_string(r.verified_elements),
            std::to_string(r.cu_count),
            r.extrapolated ? "1" : "0"};
}

inline nlohmann::ordered_json row_to_json(const BenchmarkRow& r) {
    nlohmann::ordered_json j;
    j["description"] = r.description;
    j["variant"] = r.variant;
    j["connection"] = r.connection;
    j["size"] = r.size;
    j["elements"] = r.elements;
    j["kernel_count"] = r.kernel_count;
    j["start_cycle"] = r.start_cycle;
    j["end_cycle"] = r.end_cycle;
    j["total_cycles"] = r.total_cycles;
    j["avg_cycles_per_kernel"] = r.avg_cycles_per_kernel;
    j["total_ops"] = r.total_ops;
    j["ops_per_cycle"] = r.ops_per_cycle;
    j["efficiency_pct"] = r.efficiency_pct;
    j["model_time_ms"] = r.model_time_ms;
    j["max_rel_error"] = r.max_rel_error;
    j["saturated"] = r.saturated;
    j["verified_elements"] = r.verified_elements;
    j["cu_count"] = r.cu_count;
    j["extrapolated"] = r.extrapolated;
    return j;
}

inline BenchmarkRow row_from_json(const nlohmann::json& j) {
    try {
        BenchmarkRow r;
        r.description = j.at("description").get<std::string>();
        r.variant = j.at("variant").get<std::string>();
        r.connection = j.at("connection").get<std::string>();
        r.size = j.at("size").get<std::string>();
        r.elements = j.at("elements").get<std::uint64_t>();
        r.kernel_count = j.at("kernel_count").get<int>();
        r.start_cycle = j.at("start_cycle").get<std::uint64_t>();
        r.end_cycle = j.at("end_cycle").get<std::uint64_t>();
        r.total_cycles = j.at("total_cycles").get<std::uint64_t>();
        r.avg_cycles_per_kernel = j.at("avg_cycles_per_kernel").get<double>();
        r.total_ops = j.at("total_ops").get<std::uint64_t>();
        r.ops_per_cycle = j.at("ops_per_cycle").get<double>();
        r.efficiency_pct = j.at("efficiency_pct").get<double>();
        r.model_time_ms = j.at("model_time_ms").get<double>();
        r.max_rel_error = j.at("max_rel_error").get<double>();
        r.saturated = j.at("saturated").get<std::uint64_t>();
        r.verified_elements = j.at("verified_elements").get<std::uint64_t>();
        r.cu_count = j.at("cu_count").get<std::uint32_t>();
        r.extrapolated = j.at("extrapolated").get<bool>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report row: ") + e.what());
    }
}

inline std::vector<BenchmarkRow> rows_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report is not JSON: ") + e.what());
    }
    const auto& arr = j.is_object() && j.contains("rows") ? j.at("rows") : j;
    if (!arr.is_array()) throw FormatError("report must be an array of rows or an object with 'rows'");
    std::vector<BenchmarkRow> rows;
    for (const auto& r : arr) rows.push_back(row_from_json(r));
    return rows;
}

/// Inverse of the CSV emitter.
inline std::vector<BenchmarkRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty CSV document");
    if (detail::split_csv_line(line) != table_columns()) throw FormatError("unexpected CSV header");
    std::vector<BenchmarkRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != table_columns().size()) throw FormatError("CSV row has " + std::to_string(f.size()) + " fields");
        try {
            BenchmarkRow r;
            r.description = f[0];
            r.kernel_count = std::stoi(f[1]);
            r.start_cycle = std::stoull(f[2]);
            r.end_cycle = std::stoull(f[3]);
            r.total_cycles = std::stoull(f[4]);
            r.avg_cycles_per_kernel = std::stod(f[5]);
            r.ops_per_cycle = std::stod(f[6]);
            r.efficiency_pct = std::stod(f[7]);
            r.variant = f[8];
            r.connection = f[9];
            r.size = f[10];
            r.elements = std::stoull(f[11]);
            r.total_ops = std::stoull(f[12]);
            r.model_time_ms = std::stod(f[13]);
            r.max_rel_error = std::stod(f[14]);
            r.saturated = std::stoull(f[15]);
            r.verified_elements = std::stoull(f[16]);
            r.cu_count = static_cast<std::uint32_t>(std::stoul(f[17]));
            r.extrapolated = f[18] == "1";
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw FormatError(std::string("bad CSV value: ") + e.what());
        }
    }
    return rows;
}

inline std::string emit_table(const std::vector<BenchmarkRow>& rows, TableFormat format, bool allow_empty = true) {
    if (rows.empty() && !allow_empty) throw FormatError("no rows to emit");
    std::ostringstream os;
    switch (format) {
        case TableFormat::Markdown: {
            const std::size_t n = 8;  // cycle-table columns only
            const auto& cols = table_columns();
            os << '|';
            for (std::size_t i = 0; i < n; ++i) os << ' ' << cols[i] << " |";
            os << "\n|";
            for (std::size_t i = 0; i < n; ++i) os << (i == 0 ? ":---|" : "---:|");
            os << '\n';
            for (const auto& r : rows) {
                const auto cells = row_cells(r);
                os << '|';
                for (std::size_t i = 0; i < n; ++i) os << ' ' << cells[i] << " |";
                os << '\n';
            }
            break;
        }
        case TableFormat::Csv: {
            const auto& cols = table_columns();
            for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << detail::csv_field(cols[i]);
            os << '\n';
            for (const auto& r : rows) {
                const auto cells = row_cells(r);
                for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << detail::csv_field(cells[i]);
                os << '\n';
            }
            break;
        }
        case TableFormat::Json: {
            nlohmann::ordered_json j = nlohmann::ordered_json::array();
            for (const auto& r : rows) j.push_back(row_to_json(r));
            os << j.dump(2) << '\n';
            break;
        }
    }
    return os.str();
}

inline std::string emit_table(const std::vector<BenchmarkRow>& rows, std::string_view format, bool allow_empty = true) {
    return emit_table(rows, parse_format(format), allow_empty);
}

}  // namespace aiesim
