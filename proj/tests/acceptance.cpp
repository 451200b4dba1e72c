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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "aiesim/aiesim.hpp"

#ifndef AIESIM_CLI_PATH
#define AIESIM_CLI_PATH "aiesim"
#endif

using namespace aiesim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string round_to(double x, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

// Hardware reference cycle counts and their rounded derived columns.
struct ReferenceRow {
    Variant v;
    std::uint64_t cycles;
    double ops;
    double eff;
};
constexpr ReferenceRow kReference[] = {
    {Variant::NaiveScalar, 641592, 0.03, 0.4},
    {Variant::VectorSingle, 18607, 0.98, 12.2},
    {Variant::MultiAIE, 11429, 1.59, 19.8},
    {Variant::MultiAIE128, 10897, 1.67, 20.8},
    {Variant::OneOpPerKernel, 28294, 0.64, 8.0},
};

Outcome efficiency_columns() {
    std::ostringstream os;
    bool ok = true;
    for (const auto& r : kReference) {
        const auto e = efficiency(18144, r.cycles);
        ok = ok && std::abs(e.ops_per_cycle - r.ops) <= 0.005 && std::abs(e.efficiency_pct - r.eff) <= 0.05;
        os << to_string(r.v) << " " << round_to(e.ops_per_cycle, 4) << "/" << round_to(e.efficiency_pct, 3) << "%; ";
    }
    return {ok, os.str()};
}

Outcome size_table() {
    struct Row { ProblemSize p; std::uint64_t elements, datapoints, mb; };
    const Row rows[] = {{presets::tiny(), 15'750'000, 31'500'000, 126},
                        {presets::small(), 31'500'000, 63'000'000, 252},
                        {presets::medium(), 126'000'000, 252'000'000, 1008},
                        {presets::large(), 378'000'000, 756'000'000, 3024}};
    std::ostringstream os;
    bool ok = true;
    for (const auto& r : rows) {
        const auto s = size_arithmetic(r.p);
        ok = ok && s.elements == r.elements && s.datapoints == r.datapoints && s.bytes == r.mb * 1'000'000;
        os << r.p.name << " " << s.elements << "/" << s.datapoints << "/" << s.megabytes << "MB; ";
    }
    return {ok, os.str()};
}

Outcome micro_cycles() {
    const auto t0 = Clock::now();
    RunConfig cfg;
    cfg.repetitions = 1;
    const auto rows = run_benchmark(cfg);
    const double secs = seconds_since(t0);
    std::map<std::string, double> cyc;
    std::ostringstream os;
    for (const auto& r : rows) cyc[r.variant] = static_cast<double>(r.total_cycles);
    const double naive = cyc["naive-scalar"], vs = cyc["vector-single"], multi = cyc["multi-aie"],
                 m128 = cyc["multi-aie-128"], oneop = cyc["one-op-per-kernel"];
    bool ok = true;
    for (const auto& p : kReference) {
        const double got = cyc[to_string(p.v)];
        const double dev = (got - static_cast<double>(p.cycles)) / static_cast<double>(p.cycles) * 100.0;
        const bool banded = p.v == Variant::NaiveScalar || p.v == Variant::VectorSingle;
        if (banded) ok = ok && std::abs(dev) <= 20.0;
        os << to_string(p.v) << " " << got << " (" << (dev >= 0 ? "+" : "") << round_to(dev, 1) << "%"
           << (banded ? "" : ", unbanded") << "); ";
    }
    const bool order = naive > oneop && oneop > vs && vs > multi && multi >= m128;
    const bool ratio = naive / vs > 8.0;
    ok = ok && order && ratio && secs < 10.0;
    os << "ordering " << (order ? "holds" : "broken") << ", naive/vs " << round_to(naive / vs, 1) << ", "
       << round_to(secs, 2) << " s";
    return {ok, os.str()};
}

Outcome tiny_equivalence() {
    const auto t0 = Clock::now();
    const auto problem = presets::tiny();
    const QEParams params;
    const auto ref = oracle_run(problem, params, 42);
    std::ostringstream os;
    os << "oracle " << digest(ref.values) << "; ";
    double worst = 0.0;
    int combos = 0;
    for (auto v : kAllVariants) {
        std::vector<Connection> conns{Connection::stream()};
        if (v != Variant::NaiveScalar) conns.push_back(Connection::window(128));
        for (const auto& c : conns) {
            const auto got = execute_workload(build_variant(v, c), problem, params, 42, 0);
            const auto cmp = compare_to_oracle(got.values, ref.values);
            worst = std::max(worst, cmp.max_rel_error);
            ++combos;
        }
    }
    const double secs = seconds_since(t0);
    os << combos << " variant/connection pairs, max rel err " << worst << ", " << round_to(secs, 1) << " s";
    return {worst <= kEquivalenceTolerance && secs < 120.0, os.str()};
}

Outcome loopback() {
    const ProblemSize pr{2, 10, 64};
    const auto ref = oracle_run(pr, {}, 42);
    const auto g = build_variant(Variant::MultiAIE128, default_connection(Variant::MultiAIE128));
    const auto r = run_loopback(g, pr, {}, 42);
    std::size_t match = 0;
    for (std::size_t i = 0; i < ref.values.size(); ++i) match += r.result.values[i] == ref.values[i] ? 1 : 0;
    bool raised = false;
    LoopbackConfig bad;
    bad.order = IssueOrder::TimestepInner;
    try {
        run_loopback(g, pr, {}, 42, bad);
    } catch (const DependencyViolationError&) {
        raised = true;
    }
    std::ostringstream os;
    os << match << "/" << ref.values.size() << " elements reproduced, mis-ordered schedule "
       << (raised ? "raised DependencyViolationError" : "did not raise");
    return {match == 1280 && ref.values.size() == 1280 && raised, os.str()};
}

Outcome compute_units() {
    const auto p = cu_plan(6, 10);
    bool seven = false;
    try {
        cu_plan(7, 10);
    } catch (const AXIBudgetExceeded&) {
        seven = true;
    }
    std::ostringstream os;
    os << "6 CUs: " << p.axi_ports_used << " ports, " << p.tiles_used << " tiles (" << p.tile_utilisation_pct()
       << "%); 7 CUs " << (seven ? "raised AXIBudgetExceeded" : "accepted");
    return {p.axi_ports_used == 84 && p.tiles_used == 60 && p.tile_utilisation_pct() == 15.0 && seven, os.str()};
}

Outcome channel_rates() {
    const CostModel cost;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::uint64_t> words(1, 4096);
    bool ok = true;
    const int trials = 10000;
    for (int i = 0; i < trials && ok; ++i) {
        const std::uint64_t chunks = words(rng);
        auto s = ChannelState::make(PortSpec::stream(Direction::Out), cost);
        ok = ok && channel_transfer(s, 256 * chunks, cost) == 8 * chunks;
        auto w = ChannelState::make(PortSpec::window(static_cast<std::uint32_t>(32 * chunks), Direction::Out), cost);
        ok = ok && channel_transfer(w, 256 * chunks, cost) == chunks;
        auto c = ChannelState::make(PortSpec::cascade(Direction::Out), cost);
        ok = ok && channel_transfer(c, 384 * chunks, cost) <= chunks;
    }
    return {ok, std::to_string(trials) + " random sizes: stream 8/256b, window 1/256b, cascade <=1/384b"};
}

Outcome window_vs_stream() {
    std::ostringstream os;
    bool ok = true;
    const CostModel cost;
    for (const auto& p : presets::all()) {
        const auto elements = size_arithmetic(p).elements;
        SimReport r[2];
        int i = 0;
        for (auto c : {Connection::window(128), Connection::stream()}) {
            const auto g = build_variant(Variant::MultiAIE, c);
            const auto m = map_to_tiles(g);
            r[i++] = run(g, m, cost, {elements});
        }
        ok = ok && r[0].total_cycles <= r[1].total_cycles;
        os << p.name << " " << r[0].total_cycles << " <= " << r[1].total_cycles << "; ";
    }
    return {ok, os.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

Outcome cli_determinism() {
    const std::string cli = AIESIM_CLI_PATH;
    bool ok = true;
    std::ostringstream os;
    for (const char* fmt : {"csv", "json"}) {
        std::string out[2];
        for (int i = 0; i < 2; ++i) {
            const std::string path = std::string("acceptance_cli_") + fmt + std::to_string(i);
            const std::string cmd = "\"" + cli + "\" run --variant all --size micro --reps 2 --format " + fmt +
                                    " --out " + path;
            if (std::system(cmd.c_str()) != 0) {
                ok = false;
                os << fmt << " run failed; ";
            }
            out[i] = slurp(path);
            std::remove(path.c_str());
        }
        const bool same = !out[0].empty() && out[0] == out[1];
        ok = ok && same;
        os << fmt << " " << (same ? "identical" : "differs") << " (" << out[0].size() << " bytes); ";
    }
    return {ok, os.str()};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"efficiency columns from reference cycles", efficiency_columns},
        {"problem-size arithmetic", size_table},
        {"micro workload cycles and ordering", micro_cycles},
        {"tiny preset equivalence", tiny_equivalence},
        {"loopback recursion", loopback},
        {"compute-unit budget", compute_units},
        {"channel transfer rates", channel_rates},
        {"multi-stage windows vs streams", window_vs_stream},
        {"deterministic CLI output", cli_determinism},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [name, check] : criteria) {
        ++n;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << name << ": " << o.detail << std::endl;
    }
    std::cout << (n - failed) << "/" << n << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
