#include "phasorflow/opf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "phasorflow/errors.hpp"

namespace phasorflow {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr double kEqualityRhoScale = 1e3;

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// The QP in OSQP form: min ½xᵀPx s.t. Cx ∈ 𝒞, 𝒞 = {b0} × [lo, hi] × disks.
struct QpForm {
    int nz = 0;
    int ng = 0;
    int ne = 0;
    SpMat P;
    SpMat C;
    Vec b0;
    Vec lo, hi;
    Vec cap;

    int nx() const { return nz + 2 * ng; }
    int m() const { return nz + ne + 2 * ng; }
};

/// B maps w = (u_0, v_0, u_1, ...) onto the model's balance rows.
SpMat dispatch_matrix(const OpfProblem& prob) {
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t g = 0; g < prob.channels.size(); ++g) {
        const int k = prob.channels[g].node_phase;
        t.emplace_back(prob.model.real_row(k), static_cast<int>(2 * g), 1.0);
        t.emplace_back(prob.model.reactive_row(k), static_cast<int>(2 * g + 1), 1.0);
    }
    SpMat B(prob.model.size(), static_cast<int>(2 * prob.channels.size()));
    B.setFromTriplets(t.begin(), t.end());
    return B;
}

QpForm build_qp(const OpfProblem& prob) {
    QpForm qp;
    const LinearModel& mdl = prob.model;
    qp.nz = mdl.size();
    qp.ng = static_cast<int>(prob.channels.size());
    qp.ne = static_cast<int>(prob.bounded_node_phases.size());

    std::vector<Eigen::Triplet<double>> pt;
    auto pair_term = [&](int i, int j, double w) {
        pt.emplace_back(i, i, 2.0 * w);
        pt.emplace_back(j, j, 2.0 * w);
        pt.emplace_back(i, j, -2.0 * w);
        pt.emplace_back(j, i, -2.0 * w);
    };
    for (const auto& [k1, k2] : prob.target_node_phases) {
        if (prob.weights.rho_e > 0.0) pair_term(mdl.E(k1), mdl.E(k2), prob.weights.rho_e);
        if (prob.weights.rho_theta > 0.0) pair_term(mdl.Th(k1), mdl.Th(k2), prob.weights.rho_theta);
    }
    if (prob.weights.rho_w > 0.0) {
        for (int i = 0; i < 2 * qp.ng; ++i) pt.emplace_back(qp.nz + i, qp.nz + i, 2.0 * prob.weights.rho_w);
    }
    qp.P.resize(qp.nx(), qp.nx());
    qp.P.setFromTriplets(pt.begin(), pt.end());

    std::vector<Eigen::Triplet<double>> ct;
    for (int outer = 0; outer < mdl.A.outerSize(); ++outer) {
        for (SpMat::InnerIterator it(mdl.A, outer); it; ++it) ct.emplace_back(it.row(), it.col(), it.value());
    }
    const SpMat B = dispatch_matrix(prob);
    for (int outer = 0; outer < B.outerSize(); ++outer) {
        for (SpMat::InnerIterator it(B, outer); it; ++it) ct.emplace_back(it.row(), qp.nz + it.col(), -it.value());
    }
    for (int e = 0; e < qp.ne; ++e) ct.emplace_back(qp.nz + e, mdl.E(prob.bounded_node_phases[e]), 1.0);
    for (int i = 0; i < 2 * qp.ng; ++i) ct.emplace_back(qp.nz + qp.ne + i, qp.nz + i, 1.0);
    qp.C.resize(qp.m(), qp.nx());
    qp.C.setFromTriplets(ct.begin(), ct.end());

    qp.b0 = mdl.b;
    qp.lo = Vec::Constant(qp.ne, prob.bounds.e_min);
    qp.hi = Vec::Constant(qp.ne, prob.bounds.e_max);
    qp.cap.resize(qp.ng);
    for (int g = 0; g < qp.ng; ++g) qp.cap[g] = prob.channels[g].capacity;
    return qp;
}

void project(const QpForm& qp, Vec& v) {
    v.head(qp.nz) = qp.b0;
    for (int e = 0; e < qp.ne; ++e) v[qp.nz + e] = std::clamp(v[qp.nz + e], qp.lo[e], qp.hi[e]);
    for (int g = 0; g < qp.ng; ++g) {
        const int i = qp.nz + qp.ne + 2 * g;
        const double r = std::hypot(v[i], v[i + 1]);
        if (r > qp.cap[g]) {
            const double s = r > 0.0 ? qp.cap[g] / r : 0.0;
            v[i] *= s;
            v[i + 1] *= s;
        }
    }
}

/// sup over 𝒞 of δyᵀc, used by the infeasibility certificate.
double support(const QpForm& qp, const Vec& dy) {
    double s = qp.b0.dot(dy.head(qp.nz));
    for (int e = 0; e < qp.ne; ++e) {
        const double d = dy[qp.nz + e];
        s += d > 0.0 ? qp.hi[e] * d : qp.lo[e] * d;
    }
    for (int g = 0; g < qp.ng; ++g) {
        const int i = qp.nz + qp.ne + 2 * g;
        s += qp.cap[g] * std::hypot(dy[i], dy[i + 1]);
    }
    return s;
}

std::string row_name(const OpfProblem& prob, const QpForm& qp, int row) {
    const Network& net = prob.network;
    const PhaseIndex index(net);
    auto np_name = [&](int k) {
        const auto& np = index.node_phase_at(k);
        return net.nodes()[np.node].id + "." + to_char(np.phase);
    };
    const LinearModel& mdl = prob.model;
    if (row < qp.nz) {
        if (row < mdl.n_node) return "real power balance at " + np_name(row);
        if (row < 2 * mdl.n_node) return "reactive power balance at " + np_name(row - mdl.n_node);
        const int l = (row - 2 * mdl.n_node) % mdl.n_line;
        const auto& lp = index.line_phase_at(l);
        const std::string what = row - 2 * mdl.n_node < mdl.n_line ? "magnitude row" : "angle row";
        return what + " of line " + net.lines()[lp.line].id + "." + to_char(lp.phase);
    }
    if (row < qp.nz + qp.ne) return "voltage bounds at " + np_name(prob.bounded_node_phases[row - qp.nz]);
    const auto& ch = prob.channels[(row - qp.nz - qp.ne) / 2];
    return "DER capacity at " + ch.node + "." + to_char(ch.phase);
}

Vec w_vector(const OpfProblem& prob, const ChannelMap& w) {
    Vec out = Vec::Zero(2 * static_cast<int>(prob.channels.size()));
    std::set<Channel> known;
    for (std::size_t g = 0; g < prob.channels.size(); ++g) {
        const Channel ch{prob.channels[g].node, prob.channels[g].phase};
        known.insert(ch);
        auto it = w.find(ch);
        if (it == w.end()) continue;
        out[2 * g] = it->second.real();
        out[2 * g + 1] = it->second.imag();
    }
    for (const auto& [ch, v] : w) {
        if (!known.count(ch) && v != Complex{})
            throw ValidationError("dispatch on " + ch.node + "." + to_char(ch.phase) + " without a DER unit");
    }
    return out;
}

Vec state_from_w(const OpfProblem& prob, const Vec& wv) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(prob.model.A);
    if (lu.info() != Eigen::Success) throw SingularMatrixError("linear model is singular");
    const Vec rhs = prob.model.b + dispatch_matrix(prob) * wv;
    Vec z = lu.solve(rhs);
    z += lu.solve(Vec(rhs - prob.model.A * z));
    return z;
}

OpfTerms terms_of(const OpfProblem& prob, const Vec& z, const Vec& wv) {
    OpfTerms t;
    const LinearModel& mdl = prob.model;
    for (const auto& [k1, k2] : prob.target_node_phases) {
        const double de = z[mdl.E(k1)] - z[mdl.E(k2)];
        const double dt = z[mdl.Th(k1)] - z[mdl.Th(k2)];
        t.C_E += de * de;
        t.C_theta += dt * dt;
    }
    t.C_w = wv.squaredNorm();
    t.objective = prob.weights.rho_e * t.C_E + prob.weights.rho_theta * t.C_theta + prob.weights.rho_w * t.C_w;
    return t;
}

Dispatch finish(const OpfProblem& prob, Vec wv, SolverStats stats, Vec lambda, Vec mu, Vec yw) {
    for (std::size_t g = 0; g < prob.channels.size(); ++g) {
        const double r = std::hypot(wv[2 * g], wv[2 * g + 1]);
        const double cap = prob.channels[g].capacity;
        if (r > cap) {
            const double s = r > 0.0 ? cap / r : 0.0;
            wv[2 * g] *= s;
            wv[2 * g + 1] *= s;
        }
    }
    const Vec z = state_from_w(prob, wv);
    Dispatch d;
    for (std::size_t g = 0; g < prob.channels.size(); ++g)
        d.w[{prob.channels[g].node, prob.channels[g].phase}] = Complex(wv[2 * g], wv[2 * g + 1]);
    d.terms = terms_of(prob, z, wv);
    d.stats = std::move(stats);
    d.lambda = std::move(lambda);
    d.mu = std::move(mu);
    d.y_w = std::move(yw);
    return d;
}

}  // namespace

OpfProblem build_opf(const Network& net, const std::vector<TargetPair>& targets, const OpfWeights& weights,
                     const OpfBounds& bounds) {
    for (double r : {weights.rho_e, weights.rho_theta, weights.rho_w}) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("weights must be finite and nonnegative");
    }
    if (weights.rho_e == 0.0 && weights.rho_theta == 0.0 && weights.rho_w == 0.0)
        throw ValidationError("degenerate weights: rho_e, rho_theta and rho_w are all zero");
    if (!(bounds.e_min < bounds.e_max)) throw ValidationError("E bounds must satisfy E_min < E_max");

    OpfProblem prob{net, targets, weights, bounds, assemble(net), {}, {}, {}};
    const PhaseIndex index(net);
    for (const TargetPair& t : targets) {
        const int a = net.node_index(t.k1);
        const int b = net.node_index(t.k2);
        const PhaseSet shared = net.nodes()[a].phases.intersect(net.nodes()[b].phases);
        if (shared.empty()) throw ValidationError("targets " + t.k1 + " and " + t.k2 + " share no phase");
        for (Phase p : shared) prob.target_node_phases.emplace_back(index.node_phase(a, p), index.node_phase(b, p));
    }
    for (const DerSpec& g : net.der()) {
        const int node = net.node_index(g.node);
        if (node == net.slack_index()) throw ValidationError("DER at the slack node");
        prob.channels.push_back({g.node, g.phase, index.node_phase(node, g.phase), g.capacity});
    }
    for (int k = 0; k < index.node_phase_count(); ++k) {
        if (index.node_phase_at(k).node != net.slack_index()) prob.bounded_node_phases.push_back(k);
    }
    return prob;
}

OpfTerms evaluate_objective(const OpfProblem& prob, const ChannelMap& w) {
    const Vec wv = w_vector(prob, w);
    return terms_of(prob, state_from_w(prob, wv), wv);
}

Dispatch solve_opf(const OpfProblem& prob, const AdmmSettings& s) {
    if (!(s.rho > 0.0) || !(s.sigma > 0.0) || !(s.alpha > 0.0 && s.alpha < 2.0) || s.max_iterations < 1 ||
        s.check_every < 1)
        throw ValidationError("bad ADMM settings");
    if (s.eps_abs > 1e-6 || s.eps_rel > 1e-6) throw ValidationError("ADMM tolerances may not exceed 1e-6");

    const QpForm qp = build_qp(prob);
    const int nx = qp.nx();
    const int m = qp.m();

    auto trivial = [&]() {
        SolverStats st;
        st.status = "trivial";
        return finish(prob, Vec::Zero(2 * qp.ng), st, Vec::Zero(qp.nz), Vec::Zero(qp.ne), Vec::Zero(2 * qp.ng));
    };
    // Only ‖w‖² is penalized (or there is nothing to dispatch): w = 0 is optimal whenever it is feasible.
    if (qp.ng == 0 || (prob.weights.rho_e == 0.0 && prob.weights.rho_theta == 0.0)) {
        const Vec z0 = state_from_w(prob, Vec::Zero(2 * qp.ng));
        std::vector<std::string> violated;
        for (int e = 0; e < qp.ne; ++e) {
            const double E = z0[prob.model.E(prob.bounded_node_phases[e])];
            if (E < qp.lo[e] || E > qp.hi[e]) violated.push_back(row_name(prob, qp, qp.nz + e));
        }
        if (violated.empty()) return trivial();
        if (qp.ng == 0) throw InfeasibleError("OPF is infeasible: no DER and the voltage bounds are violated", violated);
    }

    Vec rho_vec(m);
    auto set_rho = [&](double rho) {
        rho_vec.head(qp.nz).setConstant(rho * kEqualityRhoScale);
        rho_vec.tail(m - qp.nz).setConstant(rho);
    };
    double rho = s.rho;
    set_rho(rho);

    const SpMat Ct = qp.C.transpose();
    Eigen::SimplicialLLT<SpMat> llt;
    SolverStats stats;
    auto factor = [&]() {
        SpMat K = qp.P + Ct * rho_vec.asDiagonal() * qp.C;
        for (int i = 0; i < nx; ++i) K.coeffRef(i, i) += s.sigma;
        if (stats.factorizations == 0) llt.analyzePattern(K);
        llt.factorize(K);
        if (llt.info() != Eigen::Success) throw SingularMatrixError("ADMM system factorization failed");
        ++stats.factorizations;
    };
    factor();

    Vec x = Vec::Zero(nx);
    x.head(qp.nz) = state_from_w(prob, Vec::Zero(2 * qp.ng));
    Vec zc = qp.C * x;
    project(qp, zc);
    Vec y = Vec::Zero(m);
    Vec y_prev = y;

    bool converged = false;
    int iter = 0;
    for (iter = 1; iter <= s.max_iterations; ++iter) {
        const Vec rhs = s.sigma * x + Ct * (rho_vec.cwiseProduct(zc) - y);
        const Vec xt = llt.solve(rhs);
        const Vec zt = qp.C * xt;
        x = s.alpha * xt + (1.0 - s.alpha) * x;
        const Vec zr = s.alpha * zt + (1.0 - s.alpha) * zc;
        Vec zn = zr + y.cwiseQuotient(rho_vec);
        project(qp, zn);
        y_prev = y;
        y += rho_vec.cwiseProduct(zr - zn);
        zc = std::move(zn);

        if (iter % s.check_every != 0 && iter != s.max_iterations) continue;

        const Vec Cx = qp.C * x;
        const Vec Px = qp.P * x;
        const Vec Cty = Ct * y;
        const double rp = inf_norm(Cx - zc);
        const double rd = inf_norm(Px + Cty);
        stats.primal_residual = rp;
        stats.dual_residual = rd;
        const double ep = s.eps_abs + s.eps_rel * std::max(inf_norm(Cx), inf_norm(zc));
        const double ed = s.eps_abs + s.eps_rel * std::max(inf_norm(Px), inf_norm(Cty));
        if (rp <= ep && rd <= ed) {
            converged = true;
            break;
        }

        const Vec dy = y - y_prev;
        const double ndy = inf_norm(dy);
        if (ndy > 0.0 && inf_norm(Ct * dy) <= s.eps_infeasible * ndy && support(qp, dy) < -s.eps_infeasible * ndy) {
            std::vector<std::string> violated;
            // The equality rows carry the certificate through the network; report the inequalities.
            const double cut = 0.1 * inf_norm(dy.tail(m - qp.nz));
            for (int i = qp.nz; i < m; ++i) {
                if (std::abs(dy[i]) < cut || std::abs(dy[i]) == 0.0) continue;
                std::string name = row_name(prob, qp, i);
                if (violated.empty() || violated.back() != name) violated.push_back(std::move(name));
            }
            throw InfeasibleError("OPF is infeasible", violated);
        }

        if (s.adaptive_rho && iter % (5 * s.check_every) == 0) {
            const double pn = rp / std::max(std::max(inf_norm(Cx), inf_norm(zc)), 1e-30);
            const double dn = rd / std::max(std::max(inf_norm(Px), inf_norm(Cty)), 1e-30);
            const double r_new = std::clamp(rho * std::sqrt(pn / std::max(dn, 1e-30)), 1e-6, 1e6);
            if (r_new > 5.0 * rho || r_new < 0.2 * rho) {
                rho = r_new;
                set_rho(rho);
                factor();
            }
        }
    }
    stats.iterations = std::min(iter, s.max_iterations);
    stats.status = converged ? "solved" : "max_iterations";
    stats.rho = rho;
    return finish(prob, x.tail(2 * qp.ng), stats, y.head(qp.nz), y.segment(qp.nz, qp.ne), y.tail(2 * qp.ng));
}

KktReport kkt_check(const OpfProblem& prob, const Dispatch& dispatch, double tol, double feas_tol) {
    const QpForm qp = build_qp(prob);
    KktReport rep;
    if (dispatch.lambda.size() != qp.nz || dispatch.mu.size() != qp.ne || dispatch.y_w.size() != 2 * qp.ng)
        throw DimensionError("dispatch multipliers do not match the problem");
    const Vec wv = w_vector(prob, dispatch.w);
    const Vec z = state_from_w(prob, wv);
    Vec x(qp.nx());
    x << z, wv;
    const Vec g = qp.P * x;
    const SpMat B = dispatch_matrix(prob);

    rep.equality = inf_norm(prob.model.A * z - prob.model.b - B * wv);

    // λ is fixed by stationarity in (E, Θ, P, Q): Aᵀλ = −(∇_z f + S_Eᵀμ).
    Vec rz = -g.head(qp.nz);
    for (int e = 0; e < qp.ne; ++e) rz[prob.model.E(prob.bounded_node_phases[e])] -= dispatch.mu[e];
    Eigen::SparseLU<SpMat> lu;
    lu.compute(SpMat(prob.model.A.transpose()));
    if (lu.info() != Eigen::Success) throw SingularMatrixError("linear model is singular");
    const Vec lambda = lu.solve(rz);
    rep.multiplier_gap = inf_norm(lambda - dispatch.lambda);
    rep.stationarity = inf_norm(g.tail(2 * qp.ng) - B.transpose() * lambda + dispatch.y_w);

    double comp = 0.0;
    double bound_viol = 0.0;
    for (int e = 0; e < qp.ne; ++e) {
        const double E = z[prob.model.E(prob.bounded_node_phases[e])];
        const double mu = dispatch.mu[e];
        bound_viol = std::max({bound_viol, qp.lo[e] - E, E - qp.hi[e]});
        if (mu > 0.0) comp = std::max(comp, mu * std::max(qp.hi[e] - E, 0.0));
        if (mu < 0.0) comp = std::max(comp, -mu * std::max(E - qp.lo[e], 0.0));
    }
    double cap_viol = 0.0;
    for (int g2 = 0; g2 < qp.ng; ++g2) {
        const double u = wv[2 * g2], v = wv[2 * g2 + 1];
        const double yu = dispatch.y_w[2 * g2], yv = dispatch.y_w[2 * g2 + 1];
        const double r = std::hypot(u, v);
        const double cap = qp.cap[g2];
        cap_viol = std::max(cap_viol, r - cap);
        if (cap == 0.0) continue;
        if (r == 0.0) {
            comp = std::max(comp, std::hypot(yu, yv) * cap);
            continue;
        }
        const double radial = (yu * u + yv * v) / r;
        const double tangential = (yv * u - yu * v) / r;
        comp = std::max({comp, std::abs(tangential), std::max(-radial, 0.0), std::abs(radial) * (cap - r)});
    }
    rep.complementarity = comp;
    rep.bound_violation = std::max(bound_viol, 0.0);
    rep.capacity_violation = std::max(cap_viol, 0.0);
    rep.stationarity_ok = rep.stationarity <= tol;
    rep.complementarity_ok = rep.complementarity <= tol;
    rep.feasibility_ok = rep.equality <= feas_tol && rep.bound_violation <= feas_tol && rep.capacity_violation <= feas_tol;
    return rep;
}

}  // namespace phasorflow
