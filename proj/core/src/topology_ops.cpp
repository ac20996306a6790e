#include "phasorflow/topology_ops.hpp"

#include <algorithm>
#include <set>

#include "phasorflow/errors.hpp"
#include "phasorflow/feeder_io.hpp"

namespace phasorflow {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <class T>
T get(const json& op, const char* key) {
    if (!op.contains(key)) throw ValidationError("modification '" + op.value("op", std::string("?")) +
                                                 "': missing '" + key + "'");
    try {
        return op.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("modification field '") + key + "' has the wrong type");
    }
}

const Node& find_node_or_throw(const NetworkData& d, const std::string& id) {
    for (const Node& n : d.nodes) {
        if (n.id == id) return n;
    }
    throw ValidationError("unknown node " + id);
}

void apply_one(NetworkData& d, const Modification& mod) {
    std::visit(
        overloaded{
            [&](const mods::RemoveRegulator& m) {
                auto it = std::find_if(d.regulators.begin(), d.regulators.end(),
                                       [&](const RegulatorSpec& r) { return r.id == m.id; });
                if (it == d.regulators.end()) throw ValidationError("unknown regulator " + m.id);
                d.regulators.erase(it);
            },
            [&](const mods::ReplaceWithLine& m) {
                auto it = std::find_if(d.lines.begin(), d.lines.end(), [&](const LineSpec& l) { return l.id == m.line; });
                if (it == d.lines.end()) throw ValidationError("unknown line " + m.line);
                if (!d.line_configs.count(m.config)) throw ValidationError("unknown config " + m.config);
                if (!(m.length_ft > 0.0)) throw ValidationError("replacement line needs a positive length");
                it->kind = EdgeKind::line;
                it->is_switch = false;
                it->closed = true;
                it->config = m.config;
                it->length_ft = m.length_ft;
            },
            [&](const mods::AddSpotLoad& m) {
                const Node& n = find_node_or_throw(d, m.node);
                PhaseSet phases = m.phases.empty() ? n.phases : m.phases;
                for (Phase p : phases) d.loads.push_back({m.node, p, m.d, m.beta_S, m.beta_Z, true, {}});
            },
            [&](const mods::ScaleLoads& m) {
                for (LoadSpec& ld : d.loads) ld.d *= m.factor;
            },
            [&](const mods::SetLoadModel& m) {
                for (LoadSpec& ld : d.loads) {
                    ld.beta_S = m.beta_S;
                    ld.beta_Z = m.beta_Z;
                }
            },
            [&](const mods::PrefixIds& m) {
                auto ren = [&](std::string& id) {
                    if (id != d.slack) id = m.prefix + id;
                };
                for (Node& n : d.nodes) ren(n.id);
                for (LineSpec& l : d.lines) {
                    l.id = m.prefix + l.id;
                    ren(l.from);
                    ren(l.to);
                }
                for (LoadSpec& x : d.loads) ren(x.node);
                for (CapSpec& x : d.caps) ren(x.node);
                for (DerSpec& x : d.der) ren(x.node);
                for (VvcSpec& x : d.vvc) ren(x.node);
                for (RegulatorSpec& r : d.regulators) {
                    r.id = m.prefix + r.id;
                    ren(r.from);
                    ren(r.to);
                }
            },
            [&](const mods::AddDer& m) {
                for (const std::string& id : m.nodes) {
                    for (Phase p : find_node_or_throw(d, id).phases) d.der.push_back({id, p, m.capacity});
                }
            },
            [&](const mods::AddVvc& m) {
                for (const std::string& id : m.nodes) {
                    for (Phase p : find_node_or_throw(d, id).phases)
                        d.vvc.push_back({id, p, m.q_min, m.q_max, m.v_min, m.v_max});
                }
            },
            [&](const mods::ClearCaps&) { d.caps.clear(); },
        },
        mod);
}

}  // namespace

std::vector<Modification> parse_modifications(const json& script) {
    const json& ops = script.is_object() && script.contains("modifications") ? script.at("modifications") : script;
    if (!ops.is_array()) throw ValidationError("modification script must be an array of operations");
    std::vector<Modification> out;
    for (const json& op : ops) {
        const std::string kind = get<std::string>(op, "op");
        if (kind == "remove_regulator") {
            out.emplace_back(mods::RemoveRegulator{get<std::string>(op, "id")});
        } else if (kind == "replace_with_line") {
            out.emplace_back(mods::ReplaceWithLine{get<std::string>(op, "line"), get<std::string>(op, "config"),
                                                   get<double>(op, "length_ft")});
        } else if (kind == "add_spot_load") {
            mods::AddSpotLoad m;
            m.node = get<std::string>(op, "node");
            if (op.contains("phases")) m.phases = PhaseSet::parse(get<std::string>(op, "phases"));
            m.d = {get<double>(op, "re"), get<double>(op, "im")};
            m.beta_S = op.value("beta_S", 1.0);
            m.beta_Z = op.value("beta_Z", 0.0);
            out.emplace_back(m);
        } else if (kind == "scale_loads") {
            out.emplace_back(mods::ScaleLoads{get<double>(op, "factor")});
        } else if (kind == "set_load_model") {
            out.emplace_back(mods::SetLoadModel{get<double>(op, "beta_S"), get<double>(op, "beta_Z")});
        } else if (kind == "prefix_ids") {
            out.emplace_back(mods::PrefixIds{get<std::string>(op, "prefix")});
        } else if (kind == "add_der") {
            out.emplace_back(mods::AddDer{get<std::vector<std::string>>(op, "nodes"), get<double>(op, "capacity")});
        } else if (kind == "add_vvc") {
            out.emplace_back(mods::AddVvc{get<std::vector<std::string>>(op, "nodes"), get<double>(op, "q_min"),
                                          get<double>(op, "q_max"), get<double>(op, "v_min"),
                                          get<double>(op, "v_max")});
        } else if (kind == "clear_caps") {
            out.emplace_back(mods::ClearCaps{});
        } else {
            throw ValidationError("unknown modification '" + kind + "'");
        }
    }
    return out;
}

json modifications_to_json(const std::vector<Modification>& list) {
    json out = json::array();
    for (const Modification& mod : list) {
        std::visit(overloaded{
                       [&](const mods::RemoveRegulator& m) { out.push_back({{"op", "remove_regulator"}, {"id", m.id}}); },
                       [&](const mods::ReplaceWithLine& m) {
                           out.push_back({{"op", "replace_with_line"}, {"line", m.line}, {"config", m.config},
                                          {"length_ft", m.length_ft}});
                       },
                       [&](const mods::AddSpotLoad& m) {
                           json j = {{"op", "add_spot_load"}, {"node", m.node}, {"re", m.d.real()},
                                     {"im", m.d.imag()}, {"beta_S", m.beta_S}, {"beta_Z", m.beta_Z}};
                           if (!m.phases.empty()) j["phases"] = m.phases.str();
                           out.push_back(j);
                       },
                       [&](const mods::ScaleLoads& m) { out.push_back({{"op", "scale_loads"}, {"factor", m.factor}}); },
                       [&](const mods::SetLoadModel& m) {
                           out.push_back({{"op", "set_load_model"}, {"beta_S", m.beta_S}, {"beta_Z", m.beta_Z}});
                       },
                       [&](const mods::PrefixIds& m) { out.push_back({{"op", "prefix_ids"}, {"prefix", m.prefix}}); },
                       [&](const mods::AddDer& m) {
                           out.push_back({{"op", "add_der"}, {"nodes", m.nodes}, {"capacity", m.capacity}});
                       },
                       [&](const mods::AddVvc& m) {
                           out.push_back({{"op", "add_vvc"}, {"nodes", m.nodes}, {"q_min", m.q_min},
                                          {"q_max", m.q_max}, {"v_min", m.v_min}, {"v_max", m.v_max}});
                       },
                       [&](const mods::ClearCaps&) { out.push_back({{"op", "clear_caps"}}); },
                   },
                   mod);
    }
    return out;
}

Network apply_modifications(const Network& net, const std::vector<Modification>& list) {
    NetworkData d = net.data();
    for (const Modification& m : list) apply_one(d, m);
    return Network(std::move(d));
}

Network merge_with_switch(const Network& net1, const Network& net2, const std::vector<SwitchSpec>& switches) {
    const NetworkData& a = net1.data();
    const NetworkData& b = net2.data();
    if (a.slack != b.slack) throw ValidationError("networks do not share a slack node");
    if (a.slack_voltage != b.slack_voltage) throw ValidationError("networks disagree on the slack voltage");
    if (!(a.bases == b.bases)) throw ValidationError("networks use different per-unit bases");

    NetworkData d = a;
    if (!b.name.empty()) d.name = a.name.empty() ? b.name : a.name + "+" + b.name;
    for (const std::string& p : b.provenance) {
        if (std::find(d.provenance.begin(), d.provenance.end(), p) == d.provenance.end()) d.provenance.push_back(p);
    }

    std::set<std::string> ids;
    for (const Node& n : a.nodes) ids.insert(n.id);
    for (const Node& n : b.nodes) {
        if (n.id == b.slack) continue;
        if (!ids.insert(n.id).second) throw ValidationError("node id collision: " + n.id);
        d.nodes.push_back(n);
    }
    std::set<std::string> line_ids;
    for (const LineSpec& l : a.lines) line_ids.insert(l.id);
    for (const LineSpec& l : b.lines) {
        if (!line_ids.insert(l.id).second) throw ValidationError("line id collision: " + l.id);
        d.lines.push_back(l);
    }
    for (const auto& [name, cfg] : b.line_configs) {
        auto [it, inserted] = d.line_configs.emplace(name, cfg);
        if (!inserted && !(it->second.phases == cfg.phases && it->second.z_ohm_per_mile == cfg.z_ohm_per_mile))
            throw ValidationError("line config " + name + " differs between the networks");
    }
    d.loads.insert(d.loads.end(), b.loads.begin(), b.loads.end());
    d.caps.insert(d.caps.end(), b.caps.begin(), b.caps.end());
    d.der.insert(d.der.end(), b.der.begin(), b.der.end());
    d.vvc.insert(d.vvc.end(), b.vvc.begin(), b.vvc.end());
    d.regulators.insert(d.regulators.end(), b.regulators.begin(), b.regulators.end());

    for (const SwitchSpec& s : switches) {
        if (!net1.find_node(s.from) || !net2.find_node(s.to))
            throw ValidationError("switch " + s.id + ": endpoints must lie in the first and second network");
        auto cfg = d.line_configs.find(s.config);
        if (cfg == d.line_configs.end()) throw ValidationError("switch " + s.id + ": unknown config " + s.config);
        LineSpec sw;
        sw.id = s.id.empty() ? s.from + "-" + s.to : s.id;
        if (!line_ids.insert(sw.id).second) throw ValidationError("line id collision: " + sw.id);
        sw.from = s.from;
        sw.to = s.to;
        sw.phases = cfg->second.phases;
        sw.config = s.config;
        sw.length_ft = s.length_ft;
        sw.is_switch = true;
        sw.closed = false;
        d.lines.push_back(std::move(sw));
    }
    return Network(std::move(d));
}

Network close_switch(const Network& net, const std::string& switch_id) {
    auto idx = net.find_line(switch_id);
    if (!idx) throw ValidationError("unknown switch " + switch_id);
    NetworkData d = net.data();
    LineSpec& l = d.lines[*idx];
    if (!l.is_switch) throw ValidationError(switch_id + " is not a switch");
    if (l.closed) throw ValidationError("switch " + switch_id + " is already closed");
    l.closed = true;
    return Network(std::move(d));
}

}  // namespace phasorflow
