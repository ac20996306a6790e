#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "phasorflow/injections.hpp"
#include "phasorflow/network.hpp"

namespace phasorflow {

struct NewtonOptions {
    double tolerance = 1e-9;  ///< on max |ΔS|·max(1, 1/|V|), i.e. power and current mismatch
    int max_iterations = 50;
};

/// Exact solution. Vectors are indexed by PhaseIndex: V, s_node, w, q per node-phase;
/// I, S_line per closed line-phase.
struct PhasorSolution {
    Eigen::VectorXcd V;
    Eigen::VectorXcd I;       ///< from -> to
    Eigen::VectorXcd S_line;  ///< receiving end: V_to ∘ conj(I)
    Eigen::VectorXcd s_node;  ///< load evaluated at the solved V (slack entries are 0)
    Eigen::VectorXcd w;       ///< dispatch used
    Eigen::VectorXd q;        ///< VVC output used
    int iterations = 0;
    double residual_norm = 0.0;
    std::vector<double> residual_history;
};

/// Series admittance of a closed line, |phases| x |phases|.
CMatrix line_admittance(const LineSpec& line);

/// Node-phase admittance matrix of the closed edges.
Eigen::SparseMatrix<Complex> build_ybus(const Network& net, const PhaseIndex& index);

/// Newton-Raphson in polar coordinates from the slack-rotated flat start.
/// Works on radial and meshed networks. Throws ConvergenceError / SingularMatrixError.
PhasorSolution solve_exact(const Network& net, const ChannelMap& dispatch = {}, const NewtonOptions& opts = {});

/// Σ_in I − i_n(V) − Σ_out I per node-phase, with line currents recomputed from sol.V.
/// Slack entries are 0. Throws DimensionError if sol does not belong to net.
Eigen::VectorXcd kcl_residual(const Network& net, const PhasorSolution& sol);

/// Complex power delivered by the slack, per phase.
std::array<Complex, 3> slack_power(const Network& net, const PhasorSolution& sol);

/// Single-phase S_mn = V_n (V_m − V_n)* Y*.
Complex switch_flow_estimate(Complex Vm, Complex Vn, Complex Y);

/// Power leaving k1 into a switch line of admittance Y right at closure, from pre-closure phasors:
/// V_k1 ∘ conj(Y (V_k1 − V_k2)).
Eigen::VectorXcd closure_flow_estimate(const Eigen::VectorXcd& Vk1, const Eigen::VectorXcd& Vk2, const CMatrix& Y);

/// Phasors of a node in canonical phase order.
Eigen::VectorXcd node_voltages(const Network& net, const PhaseIndex& index, const PhasorSolution& sol,
                               const std::string& node);

}  // namespace phasorflow
