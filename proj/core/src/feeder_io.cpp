#include "phasorflow/feeder_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <system_error>

#include "phasorflow/errors.hpp"

namespace phasorflow {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw ValidationError(where + ": missing key '" + key + "'");
    return obj.at(key);
}

template <class T>
T get_as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + ": wrong type");
    }
}

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
    return get_as<T>(require(obj, key, where), where + "." + key);
}

template <class T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return get_as<T>(obj.at(key), where + "." + key);
}

Phase phase_field(const json& obj, const std::string& where) {
    return parse_phase_or_throw(field<std::string>(obj, "phase", where));
}

const json& array_or_empty(const json& doc, const char* key) {
    static const json empty = json::array();
    if (!doc.contains(key)) return empty;
    const json& arr = doc.at(key);
    if (!arr.is_array()) throw ValidationError(std::string("'") + key + "' must be an array");
    return arr;
}

std::string note_of(const json& obj) { return obj.value("note", std::string{}); }

}  // namespace

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ValidationError("complex value must be a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

json dispatch_to_json(const ChannelMap& w) {
    json out = json::object();
    for (const auto& [ch, v] : w) out[ch.node + "." + to_char(ch.phase)] = complex_to_json(v);
    return out;
}

ChannelMap dispatch_from_json(const json& j) {
    const json& d = j.is_object() && j.contains("dispatch") ? j.at("dispatch") : j;
    ChannelMap out;
    auto put = [&](const Channel& ch, const json& w) {
        if (!out.emplace(ch, complex_from_json(w)).second)
            throw ValidationError("duplicate dispatch entry for " + ch.node + "." + to_char(ch.phase));
    };
    if (d.is_object()) {
        for (const auto& [key, w] : d.items()) {
            const auto dot = key.rfind('.');
            if (dot == std::string::npos || dot + 2 != key.size())
                throw ValidationError("dispatch key '" + key + "' is not node.phase");
            put({key.substr(0, dot), parse_phase_or_throw(key.substr(dot + 1))}, w);
        }
        return out;
    }
    if (!d.is_array()) throw ValidationError("dispatch must be an object or an array");
    for (const json& e : d) {
        put({field<std::string>(e, "node", "dispatch"), parse_phase_or_throw(field<std::string>(e, "phase", "dispatch"))},
            require(e, "w", "dispatch"));
    }
    return out;
}

Network load_feeder(const json& doc) {
    if (!doc.is_object()) throw ValidationError("feeder document must be a JSON object");
    NetworkData d;
    d.name = doc.value("name", std::string{});
    if (doc.contains("provenance")) d.provenance = get_as<std::vector<std::string>>(doc.at("provenance"), "provenance");

    const json& bases = require(doc, "bases", "feeder");
    d.bases.s_base_va = field<double>(bases, "s_base_va", "bases");
    d.bases.v_base_ll = field<double>(bases, "v_base_ll", "bases");

    const json& slack = require(doc, "slack", "feeder");
    d.slack = field<std::string>(slack, "node", "slack");
    if (slack.contains("voltage")) {
        const json& v = slack.at("voltage");
        if (!v.is_array() || v.size() != 3) throw ValidationError("slack.voltage must hold 3 complex values");
        for (int k = 0; k < 3; ++k) d.slack_voltage[k] = complex_from_json(v[k]);
    } else if (slack.contains("voltage_polar_deg")) {
        const json& v = slack.at("voltage_polar_deg");
        if (!v.is_array() || v.size() != 3)
            throw ValidationError("slack.voltage_polar_deg must hold 3 [mag, deg] pairs");
        for (int k = 0; k < 3; ++k) {
            Complex md = complex_from_json(v[k]);
            d.slack_voltage[k] = std::polar(md.real(), md.imag() * std::numbers::pi / 180.0);
        }
    } else {
        d.slack_voltage = balanced_slack_voltage();
    }

    for (const json& n : array_or_empty(doc, "nodes")) {
        d.nodes.push_back({field<std::string>(n, "id", "node"),
                           PhaseSet::parse(field<std::string>(n, "phases", "node"))});
    }

    if (doc.contains("line_configs")) {
        const json& cfgs = doc.at("line_configs");
        if (!cfgs.is_object()) throw ValidationError("line_configs must be an object");
        for (const auto& [name, c] : cfgs.items()) {
            const std::string where = "line_configs." + name;
            LineConfig cfg;
            cfg.phases = PhaseSet::parse(field<std::string>(c, "phases", where));
            cfg.note = note_of(c);
            const json& z = require(c, "z_ohm_per_mile", where);
            const int k = cfg.phases.size();
            if (!z.is_array() || static_cast<int>(z.size()) != k)
                throw ValidationError(where + ": z_ohm_per_mile must be " + std::to_string(k) + "x" +
                                      std::to_string(k));
            for (int i = 0; i < k; ++i) {
                if (!z[i].is_array() || static_cast<int>(z[i].size()) != k)
                    throw ValidationError(where + ": z_ohm_per_mile must be square");
                for (int j = 0; j < k; ++j)
                    cfg.z_ohm_per_mile(index_of(cfg.phases.at(i)), index_of(cfg.phases.at(j))) =
                        complex_from_json(z[i][j]);
            }
            d.line_configs.emplace(name, cfg);
        }
    }

    for (const json& l : array_or_empty(doc, "lines")) {
        LineSpec line;
        line.from = field<std::string>(l, "from", "line");
        line.to = field<std::string>(l, "to", "line");
        const std::string where = "line " + line.from + "-" + line.to;
        line.id = field_or<std::string>(l, "id", line.from + "-" + line.to, where);
        line.config = field_or<std::string>(l, "config", "", where);
        line.length_ft = field_or<double>(l, "length_ft", 0.0, where);
        const std::string kind = field_or<std::string>(l, "kind", "line", where);
        if (kind == "line") line.kind = EdgeKind::line;
        else if (kind == "transformer") line.kind = EdgeKind::transformer;
        else throw ValidationError(where + ": unknown kind '" + kind + "'");
        line.is_switch = field_or<bool>(l, "is_switch", false, where);
        line.closed = field_or<bool>(l, "closed", true, where);
        if (l.contains("phases")) {
            line.phases = PhaseSet::parse(field<std::string>(l, "phases", where));
        } else {
            auto it = d.line_configs.find(line.config);
            if (it == d.line_configs.end()) throw ValidationError(where + ": needs 'phases' or a known config");
            line.phases = it->second.phases;
        }
        line.note = note_of(l);
        d.lines.push_back(std::move(line));
    }

    for (const json& l : array_or_empty(doc, "loads")) {
        LoadSpec ld;
        ld.node = field<std::string>(l, "node", "load");
        const std::string where = "load at " + ld.node;
        ld.phase = phase_field(l, where);
        ld.d = {field<double>(l, "re", where), field<double>(l, "im", where)};
        ld.beta_S = field_or<double>(l, "beta_S", 1.0, where);
        ld.beta_Z = field_or<double>(l, "beta_Z", 0.0, where);
        ld.spot = field_or<bool>(l, "spot", true, where);
        ld.note = note_of(l);
        d.loads.push_back(std::move(ld));
    }
    for (const json& c : array_or_empty(doc, "caps")) {
        CapSpec cap;
        cap.node = field<std::string>(c, "node", "cap");
        cap.phase = phase_field(c, "cap at " + cap.node);
        cap.c = field<double>(c, "c", "cap at " + cap.node);
        cap.note = note_of(c);
        d.caps.push_back(std::move(cap));
    }
    for (const json& g : array_or_empty(doc, "der")) {
        DerSpec der;
        der.node = field<std::string>(g, "node", "der");
        der.phase = phase_field(g, "der at " + der.node);
        der.capacity = field<double>(g, "capacity", "der at " + der.node);
        d.der.push_back(der);
    }
    for (const json& v : array_or_empty(doc, "vvc")) {
        VvcSpec u;
        u.node = field<std::string>(v, "node", "vvc");
        const std::string where = "vvc at " + u.node;
        u.phase = phase_field(v, where);
        u.q_min = field<double>(v, "q_min", where);
        u.q_max = field<double>(v, "q_max", where);
        u.v_min = field<double>(v, "v_min", where);
        u.v_max = field<double>(v, "v_max", where);
        d.vvc.push_back(u);
    }
    for (const json& r : array_or_empty(doc, "regulators")) {
        RegulatorSpec reg;
        reg.from = field<std::string>(r, "from", "regulator");
        reg.to = field<std::string>(r, "to", "regulator");
        reg.id = field_or<std::string>(r, "id", reg.from + "-" + reg.to, "regulator");
        d.regulators.push_back(reg);
    }
    return Network(std::move(d));
}

json save_feeder(const Network& net) {
    const NetworkData& d = net.data();
    json doc;
    if (!d.name.empty()) doc["name"] = d.name;
    if (!d.provenance.empty()) doc["provenance"] = d.provenance;
    doc["bases"] = {{"s_base_va", d.bases.s_base_va}, {"v_base_ll", d.bases.v_base_ll}};
    json v = json::array();
    for (const Complex& z : d.slack_voltage) v.push_back(complex_to_json(z));
    doc["slack"] = {{"node", d.slack}, {"voltage", v}};

    doc["nodes"] = json::array();
    for (const Node& n : d.nodes) doc["nodes"].push_back({{"id", n.id}, {"phases", n.phases.str()}});

    doc["line_configs"] = json::object();
    for (const auto& [name, cfg] : d.line_configs) {
        json z = json::array();
        for (Phase p : cfg.phases) {
            json row = json::array();
            for (Phase q : cfg.phases) row.push_back(complex_to_json(cfg.z_ohm_per_mile(index_of(p), index_of(q))));
            z.push_back(row);
        }
        json c = {{"phases", cfg.phases.str()}, {"z_ohm_per_mile", z}};
        if (!cfg.note.empty()) c["note"] = cfg.note;
        doc["line_configs"][name] = c;
    }

    doc["lines"] = json::array();
    for (const LineSpec& l : d.lines) {
        json j = {{"id", l.id}, {"from", l.from}, {"to", l.to}, {"phases", l.phases.str()},
                  {"length_ft", l.length_ft}, {"is_switch", l.is_switch}, {"closed", l.closed}};
        if (!l.config.empty()) j["config"] = l.config;
        if (l.kind == EdgeKind::transformer) j["kind"] = "transformer";
        if (!l.note.empty()) j["note"] = l.note;
        doc["lines"].push_back(j);
    }
    doc["loads"] = json::array();
    for (const LoadSpec& ld : d.loads) {
        json j = {{"node", ld.node}, {"phase", std::string(1, to_char(ld.phase))}, {"re", ld.d.real()},
                  {"im", ld.d.imag()}, {"beta_S", ld.beta_S}, {"beta_Z", ld.beta_Z}, {"spot", ld.spot}};
        if (!ld.note.empty()) j["note"] = ld.note;
        doc["loads"].push_back(j);
    }
    doc["caps"] = json::array();
    for (const CapSpec& c : d.caps) {
        json j = {{"node", c.node}, {"phase", std::string(1, to_char(c.phase))}, {"c", c.c}};
        if (!c.note.empty()) j["note"] = c.note;
        doc["caps"].push_back(j);
    }
    doc["der"] = json::array();
    for (const DerSpec& g : d.der)
        doc["der"].push_back({{"node", g.node}, {"phase", std::string(1, to_char(g.phase))}, {"capacity", g.capacity}});
    doc["vvc"] = json::array();
    for (const VvcSpec& u : d.vvc)
        doc["vvc"].push_back({{"node", u.node},
                              {"phase", std::string(1, to_char(u.phase))},
                              {"q_min", u.q_min},
                              {"q_max", u.q_max},
                              {"v_min", u.v_min},
                              {"v_max", u.v_max}});
    doc["regulators"] = json::array();
    for (const RegulatorSpec& r : d.regulators)
        doc["regulators"].push_back({{"id", r.id}, {"from", r.from}, {"to", r.to}});
    return doc;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

Network load_feeder_file(const std::filesystem::path& path) { return load_feeder(read_json_file(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

}  // namespace phasorflow
