#include "phasorflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>

#include "phasorflow/errors.hpp"

namespace phasorflow {

bool LineSpec::operator==(const LineSpec& other) const {
    if (id != other.id || from != other.from || to != other.to || phases != other.phases ||
        config != other.config || length_ft != other.length_ft || kind != other.kind ||
        is_switch != other.is_switch || closed != other.closed || note != other.note)
        return false;
    if (impedance.rows() != other.impedance.rows() || impedance.cols() != other.impedance.cols())
        return false;
    return impedance == other.impedance;
}

double VvcSpec::q_of(double vmag) const noexcept {
    if (vmag <= v_min) return q_min;
    if (vmag >= v_max) return q_max;
    return q_min + slope() * (vmag - v_min);
}

std::array<Complex, 3> balanced_slack_voltage() {
    constexpr double deg = std::numbers::pi / 180.0;
    return {Complex(1.0, 0.0), std::polar(1.0, 240.0 * deg), std::polar(1.0, 120.0 * deg)};
}

void derive_impedances(NetworkData& data) {
    const double zb = data.bases.z_base();
    for (LineSpec& line : data.lines) {
        const int k = line.phases.size();
        line.impedance = CMatrix::Zero(k, k);
        if (line.config.empty()) continue;
        auto it = data.line_configs.find(line.config);
        if (it == data.line_configs.end())
            throw ValidationError("line " + line.id + ": unknown config '" + line.config + "'");
        const LineConfig& cfg = it->second;
        if (!line.phases.is_subset_of(cfg.phases))
            throw ValidationError("line " + line.id + ": phases " + line.phases.str() +
                                  " not in config " + line.config + " (" + cfg.phases.str() + ")");
        const double miles = line.length_ft / kFeetPerMile;
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                const Complex z = cfg.z_ohm_per_mile(index_of(line.phases.at(i)), index_of(line.phases.at(j)));
                line.impedance(i, j) = z * miles / zb;
            }
        }
    }
}

Network::Network(NetworkData data) : data_(std::move(data)) {
    if (!(data_.bases.s_base_va > 0.0) || !(data_.bases.v_base_ll > 0.0))
        throw ValidationError("bases must be positive");
    derive_impedances(data_);
    validate();
}

void Network::validate() {
    for (std::size_t i = 0; i < data_.nodes.size(); ++i) {
        const Node& n = data_.nodes[i];
        if (n.id.empty()) throw ValidationError("node with empty id");
        if (n.phases.empty()) throw ValidationError("node " + n.id + " has no phases");
        if (!node_lookup_.emplace(n.id, static_cast<int>(i)).second)
            throw ValidationError("duplicate node id " + n.id);
    }
    auto slack = node_lookup_.find(data_.slack);
    if (slack == node_lookup_.end()) throw ValidationError("slack node '" + data_.slack + "' not declared");
    slack_index_ = slack->second;
    if (data_.nodes[slack_index_].phases != PhaseSet::all())
        throw ValidationError("slack node must carry phases abc");
    for (const Complex& v : data_.slack_voltage) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) == 0.0)
            throw ValidationError("slack voltage must be finite and nonzero");
    }

    for (const auto& [name, cfg] : data_.line_configs) {
        for (Phase p : kAllPhases) {
            for (Phase q : kAllPhases) {
                if ((!cfg.phases.contains(p) || !cfg.phases.contains(q)) &&
                    cfg.z_ohm_per_mile(index_of(p), index_of(q)) != Complex{})
                    throw ValidationError("config " + name + ": impedance outside its phases");
            }
        }
    }

    for (std::size_t i = 0; i < data_.lines.size(); ++i) {
        const LineSpec& l = data_.lines[i];
        if (l.id.empty()) throw ValidationError("line with empty id");
        if (!line_lookup_.emplace(l.id, static_cast<int>(i)).second)
            throw ValidationError("duplicate line id " + l.id);
        auto f = node_lookup_.find(l.from);
        auto t = node_lookup_.find(l.to);
        if (f == node_lookup_.end() || t == node_lookup_.end())
            throw ValidationError("line " + l.id + ": unknown endpoint");
        if (l.from == l.to) throw ValidationError("line " + l.id + ": self loop");
        if (l.phases.empty()) throw ValidationError("line " + l.id + " has no phases");
        if (!l.phases.is_subset_of(data_.nodes[f->second].phases) ||
            !l.phases.is_subset_of(data_.nodes[t->second].phases))
            throw ValidationError("line " + l.id + ": phases " + l.phases.str() +
                                  " not present at both endpoints");
        if (!(l.length_ft >= 0.0) || !std::isfinite(l.length_ft))
            throw ValidationError("line " + l.id + ": bad length");
        if (!l.is_switch && !l.closed) throw ValidationError("line " + l.id + ": only switches can be open");
    }

    auto check_channel = [&](const std::string& what, const std::string& node, Phase p) {
        auto it = node_lookup_.find(node);
        if (it == node_lookup_.end()) throw ValidationError(what + " at unknown node " + node);
        if (!data_.nodes[it->second].phases.contains(p))
            throw ValidationError(what + " at " + node + "." + to_char(p) + ": phase not present");
    };
    for (const LoadSpec& ld : data_.loads) {
        check_channel("load", ld.node, ld.phase);
        if (ld.beta_S < 0.0 || ld.beta_S > 1.0 || ld.beta_Z < 0.0 || ld.beta_Z > 1.0 ||
            std::abs(ld.beta_S + ld.beta_Z - 1.0) > 1e-12)
            throw ValidationError("load at " + ld.node + ": beta_S + beta_Z must be 1 with both in [0,1]");
        if (!std::isfinite(ld.d.real()) || !std::isfinite(ld.d.imag()))
            throw ValidationError("load at " + ld.node + ": non-finite demand");
    }
    for (const CapSpec& c : data_.caps) check_channel("capacitor", c.node, c.phase);
    std::set<std::pair<std::string, int>> seen;
    for (const DerSpec& g : data_.der) {
        check_channel("DER", g.node, g.phase);
        if (!(g.capacity >= 0.0)) throw ValidationError("DER at " + g.node + ": negative capacity");
        if (!seen.emplace(g.node, index_of(g.phase)).second)
            throw ValidationError("duplicate DER channel " + g.node + "." + to_char(g.phase));
    }
    seen.clear();
    for (const VvcSpec& v : data_.vvc) {
        check_channel("VVC", v.node, v.phase);
        if (!(v.q_min < v.q_max) || !(v.v_min < v.v_max))
            throw ValidationError("VVC at " + v.node + ": need q_min < q_max and V_min < V_max");
        if (!seen.emplace(v.node, index_of(v.phase)).second)
            throw ValidationError("duplicate VVC channel " + v.node + "." + to_char(v.phase));
    }
    for (const RegulatorSpec& r : data_.regulators) {
        if (!node_lookup_.count(r.from) || !node_lookup_.count(r.to))
            throw ValidationError("regulator " + r.id + ": unknown endpoint");
    }

    // Every node-phase must be reachable from the slack through closed edges carrying that phase.
    const std::size_t n = data_.nodes.size();
    std::vector<std::vector<int>> adj(n);
    for (std::size_t i = 0; i < data_.lines.size(); ++i) {
        const LineSpec& l = data_.lines[i];
        if (!l.closed) continue;
        adj[node_lookup_.at(l.from)].push_back(static_cast<int>(i));
        adj[node_lookup_.at(l.to)].push_back(static_cast<int>(i));
    }
    for (Phase p : kAllPhases) {
        std::vector<char> seen_node(n, 0);
        std::queue<int> q;
        q.push(slack_index_);
        seen_node[slack_index_] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int li : adj[u]) {
                const LineSpec& l = data_.lines[li];
                if (!l.phases.contains(p)) continue;
                int a = node_lookup_.at(l.from), b = node_lookup_.at(l.to);
                int v = (a == u) ? b : a;
                if (!seen_node[v]) {
                    seen_node[v] = 1;
                    q.push(v);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (data_.nodes[i].phases.contains(p) && !seen_node[i])
                throw ValidationError("node " + data_.nodes[i].id + " phase " + to_char(p) +
                                      " is not connected to the slack");
        }
    }
}

std::optional<int> Network::find_node(const std::string& id) const noexcept {
    auto it = node_lookup_.find(id);
    if (it == node_lookup_.end()) return std::nullopt;
    return it->second;
}

int Network::node_index(const std::string& id) const {
    if (auto i = find_node(id)) return *i;
    throw ValidationError("unknown node " + id);
}

std::optional<int> Network::find_line(const std::string& id) const noexcept {
    auto it = line_lookup_.find(id);
    if (it == line_lookup_.end()) return std::nullopt;
    return it->second;
}

int Network::line_index(const std::string& id) const {
    if (auto i = find_line(id)) return *i;
    throw ValidationError("unknown line " + id);
}

std::vector<std::string> Network::open_switches() const {
    std::vector<std::string> out;
    for (const LineSpec& l : data_.lines) {
        if (l.is_switch && !l.closed) out.push_back(l.id);
    }
    return out;
}

void Network::require_solvable() const {
    if (!data_.regulators.empty())
        throw UnsupportedElementError("regulator " + data_.regulators.front().id + " is not modeled; remove it first");
    for (const LineSpec& l : data_.lines) {
        if (!l.closed) continue;
        if (l.kind == EdgeKind::transformer)
            throw UnsupportedElementError("transformer " + l.id + " is not modeled; replace it with a line first");
        if (!l.has_impedance())
            throw UnsupportedElementError("edge " + l.id + " has zero impedance");
    }
}

PhaseIndex::PhaseIndex(const Network& net) {
    node_offset_.resize(net.nodes().size());
    for (std::size_t i = 0; i < net.nodes().size(); ++i) {
        node_offset_[i] = {-1, -1, -1};
        for (Phase p : net.nodes()[i].phases) {
            node_offset_[i][index_of(p)] = static_cast<int>(node_phases_.size());
            node_phases_.push_back({static_cast<int>(i), p});
        }
    }
    line_offset_.resize(net.lines().size());
    for (std::size_t i = 0; i < net.lines().size(); ++i) {
        line_offset_[i] = {-1, -1, -1};
        const LineSpec& l = net.lines()[i];
        if (!l.closed) continue;
        closed_lines_.push_back(static_cast<int>(i));
        for (Phase p : l.phases) {
            line_offset_[i][index_of(p)] = static_cast<int>(line_phases_.size());
            line_phases_.push_back({static_cast<int>(i), p});
        }
    }
}

}  // namespace phasorflow
