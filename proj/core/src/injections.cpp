#include "phasorflow/injections.hpp"

#include <set>

#include "phasorflow/errors.hpp"

namespace phasorflow {

double LoadTerms::q(int k, double vm) const {
    const auto& u = vvc[k];
    return u ? u->q_of(vm) : 0.0;
}

double LoadTerms::dq_dv(int k, double vm) const {
    const auto& u = vvc[k];
    if (!u || vm <= u->v_min || vm >= u->v_max) return 0.0;
    return u->slope();
}

Complex LoadTerms::load(int k, double vm) const {
    return s_const[k] + s_z[k] * (vm * vm) + Complex(0.0, q(k, vm));
}

LoadTerms build_load_terms(const Network& net, const PhaseIndex& index, const ChannelMap& dispatch) {
    const int n = index.node_phase_count();
    LoadTerms t;
    t.s_const = Eigen::VectorXcd::Zero(n);
    t.s_z = Eigen::VectorXcd::Zero(n);
    t.w = Eigen::VectorXcd::Zero(n);
    t.vvc.assign(n, std::nullopt);
    auto slot = [&](const std::string& node, Phase p) {
        const int k = index.node_phase(net.node_index(node), p);
        if (k < 0) throw ValidationError("phase " + std::string(1, to_char(p)) + " not present at " + node);
        return k;
    };
    for (const LoadSpec& ld : net.loads()) {
        const int k = slot(ld.node, ld.phase);
        t.s_const[k] += ld.beta_S * ld.d;
        t.s_z[k] += ld.beta_Z * ld.d;
    }
    for (const CapSpec& c : net.caps()) t.s_const[slot(c.node, c.phase)] -= Complex(0.0, c.c);
    for (const VvcSpec& u : net.vvc()) t.vvc[slot(u.node, u.phase)] = u;

    std::set<Channel> der;
    for (const DerSpec& g : net.der()) der.insert({g.node, g.phase});
    for (const auto& [ch, w] : dispatch) {
        if (!der.count(ch))
            throw ValidationError("dispatch on " + ch.node + "." + to_char(ch.phase) + " without a DER unit");
        if (ch.node == net.slack()) throw ValidationError("dispatch at the slack node");
        const int k = slot(ch.node, ch.phase);
        t.w[k] = w;
        t.s_const[k] += w;
    }
    return t;
}

}  // namespace phasorflow
