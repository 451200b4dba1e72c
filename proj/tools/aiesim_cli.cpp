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

// aiesim: command-line front end.
//
//   aiesim run            --variant multi-aie --connection window:128 --size tiny
//   aiesim oracle         --size tiny --seed 42
//   aiesim validate-graph graph.json
//   aiesim table          report.json --format markdown
//
// Exit codes: 0 ok, 1 validation failure, 2 configuration or format error,
// 3 any other simulator error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aiesim/aiesim.hpp"

namespace {

using namespace aiesim;

constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitOther = 3;

/// "micro", a preset name, or "A,T,P".
ProblemSize parse_size(const std::string& s) {
    if (s == "micro") return micro_problem();
    if (auto p = find_preset(s)) return *p;
    std::vector<std::uint64_t> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            parts.push_back(v);
        } catch (const std::logic_error&) {
            throw ConfigurationError("bad size '" + s + "' (use micro, tiny, small, medium, large or A,T,P)");
        }
    }
    if (parts.size() != 3) throw ConfigurationError("bad size '" + s + "' (use micro, tiny, small, medium, large or A,T,P)");
    ProblemSize p{parts[0], parts[1], parts[2], "custom"};
    p.validate();
    return p;
}

std::vector<Variant> parse_variants(const std::vector<std::string>& names) {
    std::vector<Variant> out;
    for (const auto& n : names) {
        if (n == "all") return {kAllVariants.begin(), kAllVariants.end()};
        auto v = variant_from_string(n);
        if (!v) throw ConfigurationError("unknown variant '" + n + "'");
        out.push_back(*v);
    }
    return out;
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigurationError("cannot write '" + path + "'");
    f << text;
    if (!f) throw ConfigurationError("write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigurationError("cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct RunOptions {
    std::vector<std::string> variants{"all"};
    std::vector<std::string> connections;
    std::string size = "micro";
    std::uint32_t cus = 1;
    std::uint64_t seed = 42;
    std::uint32_t reps = 5;
    std::string cost_model;
    std::string config;
    std::string out;
    std::string format = "markdown";
};

/// Values from --config fill everything not given on the command line.
void apply_config(RunOptions& o, const CLI::App& cmd, RunConfig& cfg) {
    if (o.config.empty()) return;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(o.config));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("config '" + o.config + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
    static const std::vector<std::string> known = {"variant", "connection", "size", "cus", "seed", "reps",
                                                   "cost_model", "params", "out", "format"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigurationError("unknown config key '" + k + "'");
    }
    auto given = [&](const char* opt) { return cmd.count(opt) > 0; };
    try {
        auto list = [](const nlohmann::json& x) {
            return x.is_array() ? x.get<std::vector<std::string>>() : std::vector<std::string>{x.get<std::string>()};
        };
        if (j.contains("variant") && !given("--variant")) o.variants = list(j["variant"]);
        if (j.contains("connection") && !given("--connection")) o.connections = list(j["connection"]);
        if (j.contains("size") && !given("--size")) o.size = j["size"].get<std::string>();
        if (j.contains("cus") && !given("--cus")) o.cus = j["cus"].get<std::uint32_t>();
        if (j.contains("seed") && !given("--seed")) o.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("reps") && !given("--reps")) o.reps = j["reps"].get<std::uint32_t>();
        if (j.contains("out") && !given("--out")) o.out = j["out"].get<std::string>();
        if (j.contains("format") && !given("--format")) o.format = j["format"].get<std::string>();
        if (j.contains("cost_model") && !given("--cost-model")) cfg.cost = j["cost_model"].get<CostModel>();
        if (j.contains("params")) {
            const auto& p = j["params"];
            cfg.params.kappa = p.value("kappa", cfg.params.kappa);
            cfg.params.theta = p.value("theta", cfg.params.theta);
            cfg.params.sigma = p.value("sigma", cfg.params.sigma);
            cfg.params.dt = p.value("dt", cfg.params.dt);
            cfg.params.v0 = p.value("v0", cfg.params.v0);
            cfg.params.psi_c = p.value("psi_c", cfg.params.psi_c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("config '" + o.config + "': " + e.what());
    }
}

int cmd_run(RunOptions& o, const CLI::App& cmd) {
    RunConfig cfg;
    apply_config(o, cmd, cfg);
    const auto format = parse_format(o.format);
    if (!o.cost_model.empty()) cfg.cost = load_cost_model(o.cost_model);
    cfg.variants = parse_variants(o.variants);
    for (const auto& c : o.connections) cfg.connections.push_back(Connection::parse(c));
    cfg.problem = parse_size(o.size);
    cfg.cu_count = o.cus;
    cfg.seed = o.seed;
    cfg.repetitions = o.reps;
    const auto rows = run_benchmark(cfg);
    write_output(emit_table(rows, format), o.out);
    return 0;
}

int cmd_oracle(const std::string& size, std::uint64_t seed, const std::string& out, const std::string& dump) {
    const auto problem = parse_size(size);
    const auto r = oracle_run(problem, QEParams{}, seed);
    nlohmann::ordered_json j;
    j["size"] = problem.name;
    j["assets"] = problem.assets;
    j["timesteps"] = problem.timesteps;
    j["paths"] = problem.paths;
    j["seed"] = seed;
    j["elements"] = r.values.size();
    j["saturated"] = r.saturated;
    j["digest"] = digest(r.values);
    write_output(j.dump(2) + "\n", out);
    if (!dump.empty()) dump_inputs(dump, problem, QEParams{}, seed);
    return 0;
}

int cmd_validate(const std::string& file, const std::string& variant, const std::string& connection,
                 const std::string& out) {
    GraphSpec g;
    if (!file.empty()) {
        g = load_graph(file);
    } else {
        const auto v = variant_from_string(variant);
        if (!v) throw ConfigurationError("unknown variant '" + variant + "'");
        g = build_variant(*v, connection.empty() ? default_connection(*v) : Connection::parse(connection));
        write_output(graph_to_json(g).dump(2) + "\n", out);
        return 0;
    }
    const auto rep = validate(g);
    if (rep.empty()) {
        const auto m = map_to_tiles(g);
        std::cout << "graph '" << g.name << "' is valid: " << g.kernels.size() << " kernels on "
                  << m.placement_order.size() << " placements\n";
        return 0;
    }
    std::cerr << describe(rep);
    throw ValidationFailure(std::to_string(rep.size()) + " violation(s) in graph '" + g.name + "'");
}

int cmd_table(const std::string& file, const std::string& format, const std::string& out) {
    const auto fmt = parse_format(format);
    const auto text = read_file(file);
    // Accepts reports written as JSON or CSV.
    const bool is_csv = !text.empty() && text.front() != '[' && text.front() != '{';
    auto rows = is_csv ? parse_csv(text) : rows_from_json(text);
    sort_rows(rows);
    write_output(emit_table(rows, fmt), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tile-array dataflow simulator for the QE variance stage"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run = app.add_subcommand("run", "Simulate variants and report cycles and efficiency");
    run->add_option("--variant", ro.variants, "Variant name(s) or 'all'")->delimiter(',');
    run->add_option("--connection", ro.connections, "stream, window or window:<bytes>")->delimiter(',');
    run->add_option("--size", ro.size, "micro, tiny, small, medium, large or A,T,P");
    run->add_option("--cus", ro.cus, "Compute units");
    run->add_option("--seed", ro.seed, "Seed for normal draws");
    run->add_option("--reps", ro.reps, "Repetitions averaged per row");
    run->add_option("--cost-model", ro.cost_model, "Cost-model JSON file");
    run->add_option("--config", ro.config, "Run configuration JSON file");
    run->add_option("--out", ro.out, "Output file (default stdout)");
    run->add_option("--format", ro.format, "markdown, csv or json");

    std::string o_size = "tiny", o_out, o_dump;
    std::uint64_t o_seed = 42;
    auto* oracle = app.add_subcommand("oracle", "Sequential reference run and digest");
    oracle->add_option("--size", o_size, "micro, tiny, small, medium, large or A,T,P");
    oracle->add_option("--seed", o_seed, "Seed for normal draws");
    oracle->add_option("--out", o_out, "Output file (default stdout)");
    oracle->add_option("--dump-inputs", o_dump, "Write (v, z) float32 pairs to this file");

    std::string g_file, g_variant, g_conn, g_out;
    auto* vg = app.add_subcommand("validate-graph", "Lint a JSON graph, or print a built-in variant as JSON");
    vg->add_option("graph", g_file, "Graph JSON file");
    vg->add_option("--variant", g_variant, "Emit this built-in variant instead");
    vg->add_option("--connection", g_conn, "Connection for --variant");
    vg->add_option("--out", g_out, "Output file for --variant");

    std::string t_file, t_format = "markdown", t_out;
    auto* table = app.add_subcommand("table", "Re-render a saved JSON or CSV report");
    table->add_option("report", t_file, "Report file")->required();
    table->add_option("--format", t_format, "markdown, csv or json");
    table->add_option("--out", t_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(ro, *run);
        if (*oracle) return cmd_oracle(o_size, o_seed, o_out, o_dump);
        if (*vg) {
            if (g_file.empty() == g_variant.empty()) throw ConfigurationError("give either a graph file or --variant");
            return cmd_validate(g_file, g_variant, g_conn, g_out);
        }
        if (*table) return cmd_table(t_file, t_format, t_out);
    } catch (const ValidationFailure& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const ConfigurationError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const aiesim::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitOther;
    }
    return 0;
}
