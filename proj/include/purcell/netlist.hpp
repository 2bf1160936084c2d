// Copyright 2026 The purcellnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Netlists of lumped elements and lossless line sections with named ports.
//
// JSON schema (ground is the implicit node "gnd"):
//
//   {
//     "nodes": ["in", "a", "q"],
//     "elements": [
//       {"name": "Cin", "kind": "capacitor", "value": 1e-15, "nodes": ["in", "a"]},
//       {"name": "R1",  "kind": "resistor",  "value": 50,    "nodes": ["a", "gnd"]},
//       {"name": "L1",  "kind": "inductor",  "value": 1e-9,  "nodes": ["a", "q"]},
//       {"name": "TL1", "kind": "tline", "z0": 50, "v_phase": 1.19e8, "length": 5e-3,
//        "nodes": ["a", "gnd"]}
//     ],
//     "ports": [
//       {"name": "in", "node": "in", "z_ref": 50},
//       {"name": "qubit", "node": "q"}
//     ]
//   }
//
// A tline's two ends are each referenced to ground; an end tied to "gnd" is a
// shorted end. A port without "z_ref" is a probe: it is never terminated.

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "purcell/errors.hpp"
#include "purcell/tline.hpp"

namespace purcell {

inline constexpr const char *kGround = "gnd";

struct Resistor {
    double ohms;
};
struct Capacitor {
    double farads;
};
struct Inductor {
    double henries;
};
struct TLine {
    double z0;
    double v_phase;
    double length;

    LineSpec spec() const {
        return {z0, v_phase, length};
    }
};

using ElementKind = std::variant<Resistor, Capacitor, Inductor, TLine>;

struct Element {
    std::string name;
    ElementKind kind;
    std::string node_a;
    std::string node_b;
};

struct Port {
    std::string name;
    std::string node;
    std::optional<double> z_ref;  // ohm; empty for an unterminated probe port

    bool terminated() const {
        return z_ref.has_value();
    }
};

class Netlist {
  public:
    Netlist() = default;

    /// Declares a node (idempotent). "gnd" is always present and never stored.
    const std::string &add_node(const std::string &name) {
        if (name.empty()) throw InputError("node name must not be empty");
        if (name != kGround && !index_.contains(name)) {
            index_.emplace(name, static_cast<int>(nodes_.size()));
            nodes_.push_back(name);
        }
        return name;
    }

    Netlist &add_resistor(std::string name, std::string a, std::string b, double ohms) {
        return add(std::move(name), Resistor{ohms}, std::move(a), std::move(b));
    }
    Netlist &add_capacitor(std::string name, std::string a, std::string b, double farads) {
        return add(std::move(name), Capacitor{farads}, std::move(a), std::move(b));
    }
    Netlist &add_inductor(std::string name, std::string a, std::string b, double henries) {
        return add(std::move(name), Inductor{henries}, std::move(a), std::move(b));
    }
    Netlist &add_tline(std::string name, std::string a, std::string b, const LineSpec &line) {
        return add(std::move(name), TLine{line.z0, line.v_phase, line.length}, std::move(a),
                   std::move(b));
    }
    Netlist &add_port(std::string name, std::string node, std::optional<double> z_ref = {}) {
        ports_.push_back({std::move(name), std::move(node), z_ref});
        return *this;
    }

    /// Checks the structural invariants; throws InputError naming the first violation.
    void validate() const {
        std::vector<std::string> seen;
        for (const auto &e : elements_) {
            for (const auto *n : {&e.node_a, &e.node_b})
                if (!has_node(*n))
                    throw InputError("element '" + e.name + "' references undeclared node '" +
                                     *n + "'");
            if (e.node_a == e.node_b)
                throw InputError("element '" + e.name + "' has both ends on one node");
            std::visit(
                [&](const auto &k) {
                    using K = std::decay_t<decltype(k)>;
                    auto positive = [&](double v, const char *what) {
                        if (!(v > 0.0) || !std::isfinite(v))
                            throw InputError("element '" + e.name + "' needs positive " + what);
                    };
                    if constexpr (std::is_same_v<K, Resistor>) positive(k.ohms, "resistance");
                    if constexpr (std::is_same_v<K, Capacitor>) positive(k.farads, "capacitance");
                    if constexpr (std::is_same_v<K, Inductor>) positive(k.henries, "inductance");
                    if constexpr (std::is_same_v<K, TLine>) {
                        positive(k.z0, "z0");
                        positive(k.v_phase, "v_phase");
                        positive(k.length, "length");
                    }
                },
                e.kind);
        }
        bool grounded = false;
        for (const auto &e : elements_)
            grounded = grounded || e.node_a == kGround || e.node_b == kGround ||
                       std::holds_alternative<TLine>(e.kind);
        if (!elements_.empty() && !grounded)
            throw InputError("netlist has no reference to ground");
        for (const auto &p : ports_) {
            if (std::find(seen.begin(), seen.end(), p.name) != seen.end())
                throw InputError("duplicate port name '" + p.name + "'");
            seen.push_back(p.name);
            if (p.node == kGround) throw InputError("port '" + p.name + "' sits on ground");
            if (!has_node(p.node))
                throw InputError("port '" + p.name + "' references undeclared node '" + p.node +
                                 "'");
            if (p.z_ref && !(*p.z_ref > 0.0))
                throw InputError("port '" + p.name + "' needs a positive reference impedance");
        }
    }

    bool has_node(const std::string &name) const {
        return name == kGround || index_.contains(name);
    }
    /// Row index in the nodal matrix, or -1 for ground.
    int node_index(const std::string &name) const {
        if (name == kGround) return -1;
        auto it = index_.find(name);
        if (it == index_.end()) throw InputError("unknown node '" + name + "'");
        return it->second;
    }
    const Port &port(const std::string &name) const {
        for (const auto &p : ports_)
            if (p.name == name) return p;
        throw InputError("unknown port '" + name + "'");
    }

    std::size_t node_count() const {
        return nodes_.size();
    }
    const std::vector<std::string> &nodes() const {
        return nodes_;
    }
    const std::vector<Element> &elements() const {
        return elements_;
    }
    const std::vector<Port> &ports() const {
        return ports_;
    }

  private:
    Netlist &add(std::string name, ElementKind kind, std::string a, std::string b) {
        elements_.push_back({std::move(name), kind, std::move(a), std::move(b)});
        return *this;
    }

    std::vector<std::string> nodes_;
    std::unordered_map<std::string, int> index_;
    std::vector<Element> elements_;
    std::vector<Port> ports_;
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Netlist &net) {
    using nlohmann::json;
    json j;
    j["nodes"] = net.nodes();
    json elements = json::array();
    for (const auto &e : net.elements()) {
        json je{{"name", e.name}, {"nodes", {e.node_a, e.node_b}}};
        std::visit(
            [&](const auto &k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Resistor>) {
                    je["kind"] = "resistor";
                    je["value"] = k.ohms;
                } else if constexpr (std::is_same_v<K, Capacitor>) {
                    je["kind"] = "capacitor";
                    je["value"] = k.farads;
                } else if constexpr (std::is_same_v<K, Inductor>) {
                    je["kind"] = "inductor";
                    je["value"] = k.henries;
                } else {
                    je["kind"] = "tline";
                    je["z0"] = k.z0;
                    je["v_phase"] = k.v_phase;
                    je["length"] = k.length;
                }
            },
            e.kind);
        elements.push_back(std::move(je));
    }
    j["elements"] = std::move(elements);
    json ports = json::array();
    for (const auto &p : net.ports()) {
        json jp{{"name", p.name}, {"node", p.node}};
        if (p.z_ref) jp["z_ref"] = *p.z_ref;
        ports.push_back(std::move(jp));
    }
    j["ports"] = std::move(ports);
    return j;
}

inline Netlist netlist_from_json(const nlohmann::json &j) {
    Netlist net;
    try {
        for (const auto &n : j.at("nodes")) net.add_node(n.get<std::string>());
        for (const auto &e : j.at("elements")) {
            const auto name = e.at("name").get<std::string>();
            const auto &nodes = e.at("nodes");
            if (!nodes.is_array() || nodes.size() != 2)
                throw InputError("element '" + name + "' needs exactly two nodes");
            const auto a = nodes[0].get<std::string>();
            const auto b = nodes[1].get<std::string>();
            const auto kind = e.at("kind").get<std::string>();
            if (kind == "resistor")
                net.add_resistor(name, a, b, e.at("value").get<double>());
            else if (kind == "capacitor")
                net.add_capacitor(name, a, b, e.at("value").get<double>());
            else if (kind == "inductor")
                net.add_inductor(name, a, b, e.at("value").get<double>());
            else if (kind == "tline")
                net.add_tline(name, a, b,
                              {e.at("z0").get<double>(), e.at("v_phase").get<double>(),
                               e.at("length").get<double>()});
            else
                throw InputError("element '" + name + "' has unknown kind '" + kind + "'");
        }
        if (j.contains("ports"))
            for (const auto &p : j.at("ports")) {
                std::optional<double> z_ref;
                if (p.contains("z_ref") && !p.at("z_ref").is_null())
                    z_ref = p.at("z_ref").get<double>();
                net.add_port(p.at("name").get<std::string>(), p.at("node").get<std::string>(),
                             z_ref);
            }
    } catch (const nlohmann::json::exception &ex) {
        throw InputError(std::string("malformed netlist JSON: ") + ex.what());
    }
    net.validate();
    return net;
}

inline Netlist load_netlist(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open netlist '" + path + "'");
    try {
        return netlist_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error &ex) {
        throw InputError("netlist '" + path + "' is not valid JSON: " + ex.what());
    }
}

}  // namespace purcell
