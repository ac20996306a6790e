#include "phasorflow/linear_powerflow.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/SparseLU>

#include "phasorflow/errors.hpp"

namespace phasorflow {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

void reject_degenerate_switch_loops(const Network& net) {
    std::set<std::pair<std::string, std::string>> plain;
    std::set<std::pair<std::string, std::string>> switches;
    for (const LineSpec& l : net.lines()) {
        if (!l.closed) continue;
        auto key = std::minmax(l.from, l.to);
        std::pair<std::string, std::string> k{key.first, key.second};
        if (l.is_switch) {
            if (switches.count(k) || plain.count(k))
                throw ValidationError("closed switch " + l.id + " duplicates another edge between " + l.from +
                                      " and " + l.to);
            switches.insert(k);
        } else {
            if (switches.count(k))
                throw ValidationError("edge " + l.id + " parallels a closed switch between " + l.from + " and " + l.to);
            plain.insert(k);
        }
    }
}

}  // namespace

Eigen::Matrix3cd alpha_matrix() {
    const Complex a = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    const Complex a2 = a * a;
    Eigen::Matrix3cd A;
    A << 1.0, a, a2, a2, 1.0, a, a, a2, 1.0;
    return A;
}

MnPair build_mn(const CMatrix& Z, PhaseSet phases) {
    const int k = phases.size();
    if (Z.rows() != Z.cols()) throw DimensionError("impedance matrix is not square");
    if (Z.rows() != k) throw DimensionError("impedance matrix does not match the phase set");
    constexpr double s3 = std::numbers::sqrt3;
    MnPair mn{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k)};
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double r = Z(i, j).real();
            const double x = Z(i, j).imag();
            const int step = (index_of(phases.at(j)) - index_of(phases.at(i)) + 3) % 3;
            if (step == 0) {
                mn.M(i, j) = r;
                mn.N(i, j) = -x;
            } else if (step == 1) {  // ab, bc, ca
                mn.M(i, j) = 0.5 * (-r + s3 * x);
                mn.N(i, j) = 0.5 * (x + s3 * r);
            } else {  // ac, ba, cb
                mn.M(i, j) = 0.5 * (-r - s3 * x);
                mn.N(i, j) = 0.5 * (x - s3 * r);
            }
        }
    }
    return mn;
}

LinearModel assemble(const Network& net, const ChannelMap& dispatch) {
    net.require_solvable();
    reject_degenerate_switch_loops(net);
    const PhaseIndex index(net);
    const LoadTerms loads = build_load_terms(net, index, dispatch);

    LinearModel m;
    m.n_node = index.node_phase_count();
    m.n_line = index.line_phase_count();
    m.b = Eigen::VectorXd::Zero(m.size());
    std::vector<Eigen::Triplet<double>> t;
    const int slack = net.slack_index();

    for (int k = 0; k < m.n_node; ++k) {
        const auto& np = index.node_phase_at(k);
        if (np.node == slack) {
            const Complex vs = net.slack_voltage()[index_of(np.phase)];
            t.emplace_back(m.real_row(k), m.E(k), 1.0);
            m.b[m.real_row(k)] = std::norm(vs);
            t.emplace_back(m.reactive_row(k), m.Th(k), 1.0);
            m.b[m.reactive_row(k)] = std::arg(vs);
            continue;
        }
        double e_re = loads.s_z[k].real();
        double e_im = loads.s_z[k].imag();
        double b_im = loads.s_const[k].imag();
        if (const auto& u = loads.vvc[k]) {
            // q ≈ slope·((1 + E)/2 − V_min) + q_min
            e_im += 0.5 * u->slope();
            b_im += u->slope() * (0.5 - u->v_min) + u->q_min;
        }
        if (e_re != 0.0) t.emplace_back(m.real_row(k), m.E(k), -e_re);
        if (e_im != 0.0) t.emplace_back(m.reactive_row(k), m.E(k), -e_im);
        m.b[m.real_row(k)] = loads.s_const[k].real();
        m.b[m.reactive_row(k)] = b_im;
    }

    for (int li : index.closed_lines()) {
        const LineSpec& l = net.lines()[li];
        const int from = net.node_index(l.from);
        const int to = net.node_index(l.to);
        const MnPair mn = build_mn(l);
        const int kk = l.phases.size();
        for (int i = 0; i < kk; ++i) {
            const Phase p = l.phases.at(i);
            const int lp = index.line_phase(li, p);
            const int km = index.node_phase(from, p);
            const int kn = index.node_phase(to, p);
            if (to != slack) {
                t.emplace_back(m.real_row(kn), m.P(lp), 1.0);
                t.emplace_back(m.reactive_row(kn), m.Q(lp), 1.0);
            }
            if (from != slack) {
                t.emplace_back(m.real_row(km), m.P(lp), -1.0);
                t.emplace_back(m.reactive_row(km), m.Q(lp), -1.0);
            }
            const int rm = m.magnitude_row(lp);
            const int ra = m.angle_row(lp);
            t.emplace_back(rm, m.E(km), 1.0);
            t.emplace_back(rm, m.E(kn), -1.0);
            t.emplace_back(ra, m.Th(km), 1.0);
            t.emplace_back(ra, m.Th(kn), -1.0);
            for (int j = 0; j < kk; ++j) {
                const int lq = index.line_phase(li, l.phases.at(j));
                t.emplace_back(rm, m.P(lq), -2.0 * mn.M(i, j));
                t.emplace_back(rm, m.Q(lq), 2.0 * mn.N(i, j));
                t.emplace_back(ra, m.P(lq), mn.N(i, j));
                t.emplace_back(ra, m.Q(lq), mn.M(i, j));
            }
        }
    }
    m.A.resize(m.size(), m.size());
    m.A.setFromTriplets(t.begin(), t.end());
    m.A.makeCompressed();
    return m;
}

LinearSolution unpack(const LinearModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.size()) throw DimensionError("solution vector does not match the linear model");
    LinearSolution s;
    s.E = z.segment(model.E(0), model.n_node);
    s.Theta = z.segment(model.Th(0), model.n_node);
    s.P = z.segment(model.P(0), model.n_line);
    s.Q = z.segment(model.Q(0), model.n_line);
    return s;
}

LinearSolution solve_linear(const Network& net, const ChannelMap& dispatch) {
    const LinearModel model = assemble(net, dispatch);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(model.A);
    if (lu.info() != Eigen::Success)
        throw SingularMatrixError("linear model is structurally singular: " + lu.lastErrorMessage());
    Eigen::VectorXd z = lu.solve(model.b);
    Eigen::VectorXd r = model.b - model.A * z;
    z += lu.solve(r);
    r = model.b - model.A * z;

    LinearSolution sol = unpack(model, z);
    sol.residual_norm = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    if (!z.allFinite()) throw SingularMatrixError("linear model produced non-finite values");

    const PhaseIndex index(net);
    const LoadTerms loads = build_load_terms(net, index, dispatch);
    sol.s = Eigen::VectorXcd::Zero(model.n_node);
    for (int k = 0; k < model.n_node; ++k) {
        if (index.node_phase_at(k).node == net.slack_index()) continue;
        Complex s = loads.s_const[k] + loads.s_z[k] * sol.E[k];
        if (const auto& u = loads.vvc[k]) s += Complex(0.0, u->slope() * ((1.0 + sol.E[k]) / 2.0 - u->v_min) + u->q_min);
        sol.s[k] = s;
    }
    return sol;
}

namespace {

Eigen::VectorXd angle_residual_impl(const Network& net, const PhasorSolution& sol, bool exact_gamma) {
    const PhaseIndex index(net);
    if (sol.V.size() != index.node_phase_count() || sol.S_line.size() != index.line_phase_count())
        throw DimensionError("solution does not match the network");
    const Eigen::Matrix3cd A = alpha_matrix();
    Eigen::VectorXd res = Eigen::VectorXd::Zero(index.line_phase_count());
    for (int li : index.closed_lines()) {
        const LineSpec& l = net.lines()[li];
        const int from = net.node_index(l.from);
        const int to = net.node_index(l.to);
        const int kk = l.phases.size();
        for (int i = 0; i < kk; ++i) {
            const Phase p = l.phases.at(i);
            const Complex vm = sol.V[index.node_phase(from, p)];
            const Complex vn = sol.V[index.node_phase(to, p)];
            double r = (vm * std::conj(vn)).imag();
            for (int j = 0; j < kk; ++j) {
                const Phase q = l.phases.at(j);
                const Complex g = exact_gamma ? vn / sol.V[index.node_phase(to, q)] : A(index_of(p), index_of(q));
                const Complex mn = g * std::conj(l.impedance(i, j));
                const Complex S = sol.S_line[index.line_phase(li, q)];
                r += mn.imag() * S.real() + mn.real() * S.imag();
            }
            res[index.line_phase(li, p)] = r;
        }
    }
    return res;
}

}  // namespace

Eigen::VectorXd angle_residual(const Network& net, const PhasorSolution& sol) {
    return angle_residual_impl(net, sol, true);
}

Eigen::VectorXd angle_residual_approx(const Network& net, const PhasorSolution& sol) {
    return angle_residual_impl(net, sol, false);
}

}  // namespace phasorflow
