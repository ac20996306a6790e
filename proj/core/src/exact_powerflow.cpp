#include "phasorflow/exact_powerflow.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "phasorflow/errors.hpp"

namespace phasorflow {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using CSpRow = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

Eigen::VectorXcd reduced(const Eigen::VectorXcd& V, const PhaseIndex& index, int node, PhaseSet phases) {
    Eigen::VectorXcd out(phases.size());
    int i = 0;
    for (Phase p : phases) out[i++] = V[index.node_phase(node, p)];
    return out;
}

void fill_line_quantities(const Network& net, const PhaseIndex& index, PhasorSolution& sol) {
    sol.I = Eigen::VectorXcd::Zero(index.line_phase_count());
    sol.S_line = Eigen::VectorXcd::Zero(index.line_phase_count());
    for (int li : index.closed_lines()) {
        const LineSpec& l = net.lines()[li];
        const int m = net.node_index(l.from);
        const int n = net.node_index(l.to);
        const Eigen::VectorXcd Vm = reduced(sol.V, index, m, l.phases);
        const Eigen::VectorXcd Vn = reduced(sol.V, index, n, l.phases);
        const Eigen::VectorXcd I = line_admittance(l) * (Vm - Vn);
        int i = 0;
        for (Phase p : l.phases) {
            const int k = index.line_phase(li, p);
            sol.I[k] = I[i];
            sol.S_line[k] = Vn[i] * std::conj(I[i]);
            ++i;
        }
    }
}

std::string describe(const Network& net, const PhaseIndex& index, int k) {
    const auto& np = index.node_phase_at(k);
    return net.nodes()[np.node].id + "." + to_char(np.phase);
}

}  // namespace

CMatrix line_admittance(const LineSpec& line) {
    Eigen::FullPivLU<CMatrix> lu(line.impedance);
    if (line.impedance.size() == 0 || !lu.isInvertible())
        throw SingularMatrixError("line " + line.id + ": impedance matrix is singular");
    return lu.inverse();
}

Eigen::SparseMatrix<Complex> build_ybus(const Network& net, const PhaseIndex& index) {
    std::vector<Eigen::Triplet<Complex>> trips;
    for (int li : index.closed_lines()) {
        const LineSpec& l = net.lines()[li];
        const CMatrix Y = line_admittance(l);
        const int m = net.node_index(l.from);
        const int n = net.node_index(l.to);
        for (int i = 0; i < l.phases.size(); ++i) {
            const int mi = index.node_phase(m, l.phases.at(i));
            const int ni = index.node_phase(n, l.phases.at(i));
            for (int j = 0; j < l.phases.size(); ++j) {
                const int mj = index.node_phase(m, l.phases.at(j));
                const int nj = index.node_phase(n, l.phases.at(j));
                trips.emplace_back(mi, mj, Y(i, j));
                trips.emplace_back(ni, nj, Y(i, j));
                trips.emplace_back(mi, nj, -Y(i, j));
                trips.emplace_back(ni, mj, -Y(i, j));
            }
        }
    }
    const int n = index.node_phase_count();
    Eigen::SparseMatrix<Complex> Ybus(n, n);
    Ybus.setFromTriplets(trips.begin(), trips.end());
    return Ybus;
}

PhasorSolution solve_exact(const Network& net, const ChannelMap& dispatch, const NewtonOptions& opts) {
    if (!(opts.tolerance > 0.0) || opts.max_iterations < 1) throw ValidationError("bad Newton options");
    net.require_solvable();
    const PhaseIndex index(net);
    const LoadTerms loads = build_load_terms(net, index, dispatch);
    const CSpRow Y = build_ybus(net, index);
    const int n = index.node_phase_count();

    std::vector<int> free_of(n, -1);
    int nf = 0;
    for (int k = 0; k < n; ++k) {
        if (index.node_phase_at(k).node != net.slack_index()) free_of[k] = nf++;
    }

    Eigen::VectorXd vm(n), th(n);
    Eigen::VectorXcd V(n);
    for (int k = 0; k < n; ++k) {
        const Complex v0 = net.slack_voltage()[index_of(index.node_phase_at(k).phase)];
        V[k] = v0;
        vm[k] = std::abs(v0);
        th[k] = std::arg(v0);
    }

    PhasorSolution sol;
    Eigen::SparseLU<SpMat> lu;
    bool analyzed = false;
    Eigen::VectorXd F(2 * nf);
    for (int iter = 0;; ++iter) {
        const Eigen::VectorXcd I = Y * V;
        double resid = 0.0;
        for (int k = 0; k < n; ++k) {
            const int f = free_of[k];
            if (f < 0) continue;
            const Complex mis = V[k] * std::conj(I[k]) + loads.load(k, vm[k]);
            F[f] = mis.real();
            F[nf + f] = mis.imag();
            resid = std::max(resid, std::abs(mis) * std::max(1.0, 1.0 / vm[k]));
        }
        if (!std::isfinite(resid)) resid = std::numeric_limits<double>::infinity();
        sol.residual_history.push_back(resid);
        if (resid <= opts.tolerance) {
            sol.iterations = iter;
            sol.residual_norm = resid;
            break;
        }
        if (iter >= opts.max_iterations || !std::isfinite(resid))
            throw ConvergenceError("Newton-Raphson did not converge in " + std::to_string(iter) +
                                       " iterations (mismatch " + std::to_string(resid) + ")",
                                   sol.residual_history);

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(4 * Y.nonZeros());
        for (int k = 0; k < n; ++k) {
            const int f = free_of[k];
            if (f < 0) continue;
            for (CSpRow::InnerIterator it(Y, k); it; ++it) {
                const int j = static_cast<int>(it.col());
                const int g = free_of[j];
                if (g < 0) continue;
                Complex dth, dvm;
                if (j == k) {
                    const Complex u = V[k] / vm[k];
                    dth = Complex(0.0, 1.0) * V[k] * std::conj(I[k] - it.value() * V[k]);
                    dvm = V[k] * std::conj(it.value() * u) + std::conj(I[k]) * u +
                          2.0 * vm[k] * loads.s_z[k] + Complex(0.0, loads.dq_dv(k, vm[k]));
                } else {
                    dth = Complex(0.0, -1.0) * V[k] * std::conj(it.value() * V[j]);
                    dvm = V[k] * std::conj(it.value() * V[j] / vm[j]);
                }
                trips.emplace_back(f, g, dth.real());
                trips.emplace_back(nf + f, g, dth.imag());
                trips.emplace_back(f, nf + g, dvm.real());
                trips.emplace_back(nf + f, nf + g, dvm.imag());
            }
        }
        SpMat J(2 * nf, 2 * nf);
        J.setFromTriplets(trips.begin(), trips.end());
        J.makeCompressed();
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success) {
            int worst = 0;
            double worst_mis = -1.0;
            for (int k = 0; k < n; ++k) {
                const int f = free_of[k];
                if (f < 0) continue;
                const double mis = std::hypot(F[f], F[nf + f]);
                if (mis > worst_mis) {
                    worst_mis = mis;
                    worst = k;
                }
            }
            throw SingularMatrixError("singular Jacobian at iteration " + std::to_string(iter) +
                                      " (largest mismatch at " + describe(net, index, worst) + ")");
        }
        const Eigen::VectorXd dx = lu.solve(-F);
        for (int k = 0; k < n; ++k) {
            const int f = free_of[k];
            if (f < 0) continue;
            th[k] += dx[f];
            vm[k] += dx[nf + f];
            if (vm[k] <= 0.0) vm[k] = 1e-3;
            V[k] = std::polar(vm[k], th[k]);
        }
    }

    sol.V = V;
    sol.w = loads.w;
    sol.q = Eigen::VectorXd::Zero(n);
    sol.s_node = Eigen::VectorXcd::Zero(n);
    for (int k = 0; k < n; ++k) {
        if (free_of[k] < 0) continue;
        sol.q[k] = loads.q(k, vm[k]);
        sol.s_node[k] = loads.load(k, vm[k]);
    }
    fill_line_quantities(net, index, sol);
    return sol;
}

Eigen::VectorXcd kcl_residual(const Network& net, const PhasorSolution& sol) {
    const PhaseIndex index(net);
    const int n = index.node_phase_count();
    if (sol.V.size() != n || sol.I.size() != index.line_phase_count() || sol.w.size() != n)
        throw DimensionError("solution does not match the network");
    LoadTerms loads = build_load_terms(net, index, {});
    loads.s_const += sol.w;
    loads.w = sol.w;

    Eigen::VectorXcd res = Eigen::VectorXcd::Zero(n);
    for (int li : index.closed_lines()) {
        const LineSpec& l = net.lines()[li];
        const int m = net.node_index(l.from);
        const int t = net.node_index(l.to);
        const Eigen::VectorXcd I = line_admittance(l) * (reduced(sol.V, index, m, l.phases) -
                                                         reduced(sol.V, index, t, l.phases));
        int i = 0;
        for (Phase p : l.phases) {
            res[index.node_phase(t, p)] += I[i];
            res[index.node_phase(m, p)] -= I[i];
            ++i;
        }
    }
    for (int k = 0; k < n; ++k) {
        if (index.node_phase_at(k).node == net.slack_index()) {
            res[k] = 0.0;
            continue;
        }
        const double vm = std::abs(sol.V[k]);
        res[k] -= std::conj(loads.load(k, vm) / sol.V[k]);
    }
    return res;
}

std::array<Complex, 3> slack_power(const Network& net, const PhasorSolution& sol) {
    const PhaseIndex index(net);
    if (sol.V.size() != index.node_phase_count() || sol.I.size() != index.line_phase_count())
        throw DimensionError("solution does not match the network");
    std::array<Complex, 3> out{};
    const int s = net.slack_index();
    for (int li : index.closed_lines()) {
        const LineSpec& l = net.lines()[li];
        const bool from_slack = net.node_index(l.from) == s;
        const bool to_slack = net.node_index(l.to) == s;
        if (!from_slack && !to_slack) continue;
        for (Phase p : l.phases) {
            const Complex I = sol.I[index.line_phase(li, p)];
            const Complex Vs = sol.V[index.node_phase(s, p)];
            out[index_of(p)] += Vs * std::conj(from_slack ? I : -I);
        }
    }
    return out;
}

Complex switch_flow_estimate(Complex Vm, Complex Vn, Complex Y) { return Vn * std::conj(Vm - Vn) * std::conj(Y); }

Eigen::VectorXcd closure_flow_estimate(const Eigen::VectorXcd& Vk1, const Eigen::VectorXcd& Vk2, const CMatrix& Y) {
    if (Vk1.size() != Vk2.size() || Y.rows() != Vk1.size() || Y.cols() != Vk1.size())
        throw DimensionError("closure estimate: size mismatch");
    const Eigen::VectorXcd I = Y * (Vk1 - Vk2);
    return Vk1.cwiseProduct(I.conjugate());
}

Eigen::VectorXcd node_voltages(const Network& net, const PhaseIndex& index, const PhasorSolution& sol,
                               const std::string& node) {
    const int ni = net.node_index(node);
    return reduced(sol.V, index, ni, net.nodes()[ni].phases);
}

}  // namespace phasorflow
