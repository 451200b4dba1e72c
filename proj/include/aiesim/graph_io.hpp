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
 * @file graph_io.hpp
 * @brief JSON form of GraphSpec.
 *
 * @code{.json}
 * {
 *   "name": "demo",
 *   "kernels": [
 *     {"name": "k0", "ops": ["load_v", "load_z"], "lanes": 8, "runtime_ratio": 1.0,
 *      "in_ports": [{"kind": "stream"}, {"kind": "window", "size_bytes": 128}],
 *      "out_ports": [{"kind": "cascade"}]}
 *   ],
 *   "edges":   [{"from": {"kernel": 0, "port": 0}, "to": {"kernel": 1, "port": 0}, "payload": ["v", "z"]}],
 *   "inputs":  [{"name": "v", "to": {"kernel": 0, "port": 0}, "payload": ["v_in"], "bundle": 0}],
 *   "outputs": [{"name": "v1qe", "from": {"kernel": 1, "port": 0}, "payload": ["out"]}]
 * }
 * @endcode
 *
 * Kernels without "ops" may give "vector_op_count" / "scalar_op_count"
 * directly. A payload may be replaced by {"words": n} for opaque data.
 */

#pragma once

#include <fstream>
#include <string>

#include "json.hpp"

#include "aiesim/graph.hpp"

namespace aiesim {

namespace detail {

inline const char* kind_name(PortKind k) {
    switch (k) {
        case PortKind::Stream32: return "stream";
        case PortKind::Window: return "window";
        case PortKind::Cascade: return "cascade";
    }
    return "stream";
}

inline const char* role_name(KernelRole r) {
    switch (r) {
        case KernelRole::Compute: return "compute";
        case KernelRole::Load: return "load";
        case KernelRole::Store: return "store";
    }
    return "compute";
}

[[noreturn]] inline void bad_graph(const std::string& what) { throw ConfigurationError("graph JSON: " + what); }

inline PortSpec port_from_json(const nlohmann::json& j, Direction d) {
    if (!j.is_object() || !j.contains("kind")) bad_graph("port needs a 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "stream") return PortSpec::stream(d);
    if (kind == "cascade") return PortSpec::cascade(d);
    if (kind == "window") {
        const auto bytes = j.value("size_bytes", std::int64_t{0});
        if (bytes < 0) bad_graph("negative window size");
        return PortSpec::window(static_cast<std::uint32_t>(bytes), d);
    }
    bad_graph("unknown port kind '" + kind + "'");
}

inline PortRef ref_from_json(const nlohmann::json& j) {
    if (!j.is_object()) bad_graph("port reference must be an object");
    return {j.at("kernel").get<int>(), j.value("port", 0)};
}

inline std::vector<Slot> payload_from_json(const nlohmann::json& j) {
    std::vector<Slot> out;
    if (j.is_object() && j.contains("words")) {
        const auto n = j.at("words").get<std::int64_t>();
        if (n < 0) bad_graph("negative word count");
        out.assign(static_cast<std::size_t>(n), Slot::Opaque);
        return out;
    }
    if (!j.is_array()) bad_graph("payload must be a list of value names or {\"words\": n}");
    for (const auto& s : j) {
        const auto name = s.get<std::string>();
        const auto slot = slot_from_name(name);
        if (!slot) bad_graph("unknown value name '" + name + "'");
        out.push_back(*slot);
    }
    return out;
}

inline nlohmann::ordered_json payload_to_json(const std::vector<Slot>& p) {
    if (!p.empty() && std::all_of(p.begin(), p.end(), [](Slot s) { return s == Slot::Opaque; })) {
        return {{"words", p.size()}};
    }
    auto arr = nlohmann::ordered_json::array();
    for (Slot s : p) arr.push_back(std::string(slot_name(s)));
    return arr;
}

}  // namespace detail

inline GraphSpec graph_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) detail::bad_graph("top level must be an object");
        GraphSpec g;
        g.name = j.value("name", std::string("graph"));
        for (const auto& kj : j.value("kernels", nlohmann::json::array())) {
            KernelSpec k;
            k.id = kj.value("id", static_cast<int>(g.kernels.size()));
            k.name = kj.value("name", "k" + std::to_string(g.kernels.size()));
            k.lanes = kj.value("lanes", kLanes);
            k.runtime_ratio = kj.value("runtime_ratio", 1.0);
            const auto role = kj.value("role", std::string("compute"));
            if (role == "compute") k.role = KernelRole::Compute;
            else if (role == "load") k.role = KernelRole::Load;
            else if (role == "store") k.role = KernelRole::Store;
            else detail::bad_graph("unknown role '" + role + "'");
            if (kj.contains("ops")) {
                for (const auto& o : kj.at("ops")) {
                    const auto name = o.get<std::string>();
                    auto it = std::find_if(kProgram.begin(), kProgram.end(), [&](const Op& op) { return op.name == name; });
                    if (it == kProgram.end()) detail::bad_graph("unknown op '" + name + "'");
                    k.ops.push_back(static_cast<std::uint8_t>(it - kProgram.begin()));
                }
                k.derive_counts();
            } else {
                k.vector_op_count = kj.value("vector_op_count", 0);
                k.scalar_op_count = kj.value("scalar_op_count", 0);
                k.vector_issue_count = kj.value("vector_issue_count", k.vector_op_count);
            }
            for (const auto& p : kj.value("in_ports", nlohmann::json::array())) k.in_ports.push_back(detail::port_from_json(p, Direction::In));
            for (const auto& p : kj.value("out_ports", nlohmann::json::array())) k.out_ports.push_back(detail::port_from_json(p, Direction::Out));
            g.kernels.push_back(std::move(k));
        }
        for (const auto& ej : j.value("edges", nlohmann::json::array())) {
            Edge e;
            e.from = detail::ref_from_json(ej.at("from"));
            e.to = detail::ref_from_json(ej.at("to"));
            e.payload = detail::payload_from_json(ej.value("payload", nlohmann::json::array()));
            e.split_parts = ej.value("split_parts", 1);
            g.edges.push_back(std::move(e));
        }
        for (const auto& ij : j.value("inputs", nlohmann::json::array())) {
            ExternalInput in;
            in.name = ij.value("name", std::string("in"));
            in.to = detail::ref_from_json(ij.at("to"));
            in.payload = detail::payload_from_json(ij.value("payload", nlohmann::json::array()));
            in.bundle = ij.value("bundle", 0);
            in.split_parts = ij.value("split_parts", 1);
            g.inputs.push_back(std::move(in));
        }
        for (const auto& oj : j.value("outputs", nlohmann::json::array())) {
            ExternalOutput out;
            out.name = oj.value("name", std::string("out"));
            out.from = detail::ref_from_json(oj.at("from"));
            out.payload = detail::payload_from_json(oj.value("payload", nlohmann::json::array()));
            g.outputs.push_back(std::move(out));
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("graph JSON: ") + e.what());
    }
}

inline nlohmann::ordered_json graph_to_json(const GraphSpec& g) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["name"] = g.name;
    auto ports = [](const std::vector<PortSpec>& ps) {
        auto arr = oj::array();
        for (const auto& p : ps) {
            oj pj;
            pj["kind"] = detail::kind_name(p.kind);
            if (p.kind == PortKind::Window) pj["size_bytes"] = p.window_bytes;
            arr.push_back(pj);
        }
        return arr;
    };
    auto ref = [](const PortRef& r) { return oj{{"kernel", r.kernel}, {"port", r.port}}; };
    auto& ks = j["kernels"] = oj::array();
    for (const auto& k : g.kernels) {
        oj kj;
        kj["id"] = k.id;
        kj["name"] = k.name;
        kj["role"] = detail::role_name(k.role);
        kj["lanes"] = k.lanes;
        kj["runtime_ratio"] = k.runtime_ratio;
        if (!k.ops.empty() || k.vector_op_count + k.scalar_op_count == 0) {
            auto ops = oj::array();
            for (auto i : k.ops) ops.push_back(std::string(kProgram[i].name));
            kj["ops"] = ops;
        } else {
            kj["vector_op_count"] = k.vector_op_count;
            kj["scalar_op_count"] = k.scalar_op_count;
            kj["vector_issue_count"] = k.vector_issue_count;
        }
        kj["in_ports"] = ports(k.in_ports);
        kj["out_ports"] = ports(k.out_ports);
        ks.push_back(kj);
    }
    auto& es = j["edges"] = oj::array();
    for (const auto& e : g.edges) {
        es.push_back(oj{{"from", ref(e.from)}, {"to", ref(e.to)}, {"payload", detail::payload_to_json(e.payload)},
                        {"split_parts", e.split_parts}});
    }
    auto& is = j["inputs"] = oj::array();
    for (const auto& in : g.inputs) {
        is.push_back(oj{{"name", in.name}, {"to", ref(in.to)}, {"payload", detail::payload_to_json(in.payload)},
                        {"bundle", in.bundle}, {"split_parts", in.split_parts}});
    }
    auto& os = j["outputs"] = oj::array();
    for (const auto& out : g.outputs) {
        os.push_back(oj{{"name", out.name}, {"from", ref(out.from)}, {"payload", detail::payload_to_json(out.payload)}});
    }
    return j;
}

inline GraphSpec load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open graph '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("graph '" + path + "': " + e.what());
    }
    return graph_from_json(j);
}

}  // namespace aiesim
