#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "phasorflow/exact_powerflow.hpp"
#include "phasorflow/injections.hpp"
#include "phasorflow/network.hpp"

namespace phasorflow {

/// M = Re{A ∘ Z*}, N = Im{A ∘ Z*} over the line's phases.
struct MnPair {
    Eigen::MatrixXd M;
    Eigen::MatrixXd N;
};

/// A with α = 1∠120°: [[1, α, α²], [α², 1, α], [α, α², 1]].
Eigen::Matrix3cd alpha_matrix();

/// Closed-form entries; the α pattern follows the global phase pair, not the reduced index.
MnPair build_mn(const CMatrix& Z, PhaseSet phases);
inline MnPair build_mn(const LineSpec& line) { return build_mn(line.impedance, line.phases); }

/// Square sparse system A z = b of the linear model.
/// Unknowns: E (node-phase), Θ (node-phase), P, Q (closed line-phase).
/// Rows: per node-phase a real and a reactive balance (slack: E and Θ pins),
/// per line-phase a magnitude and an angle row.
struct LinearModel {
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    int n_node = 0;  ///< node-phases
    int n_line = 0;  ///< closed line-phases

    int size() const noexcept { return 2 * n_node + 2 * n_line; }
    int E(int k) const noexcept { return k; }
    int Th(int k) const noexcept { return n_node + k; }
    int P(int l) const noexcept { return 2 * n_node + l; }
    int Q(int l) const noexcept { return 2 * n_node + n_line + l; }
    int real_row(int k) const noexcept { return k; }
    int reactive_row(int k) const noexcept { return n_node + k; }
    int magnitude_row(int l) const noexcept { return 2 * n_node + l; }
    int angle_row(int l) const noexcept { return 2 * n_node + n_line + l; }
};

/// Builds the model for `net` with DER setpoints `dispatch` on the right-hand side.
/// A positive u or v adds +1 to b at the node-phase's real or reactive row.
LinearModel assemble(const Network& net, const ChannelMap& dispatch = {});

struct LinearSolution {
    Eigen::VectorXd E;
    Eigen::VectorXd Theta;  ///< radians
    Eigen::VectorXd P;
    Eigen::VectorXd Q;
    Eigen::VectorXcd s;     ///< node-phase load at the solved E (slack entries are 0)
    double residual_norm = 0.0;
};

/// Factorizes and solves the assembled model; throws SingularMatrixError on structural singularity.
LinearSolution solve_linear(const Network& net, const ChannelMap& dispatch = {});

/// Unpacks a solution vector z of `model` into a LinearSolution (s left empty).
LinearSolution unpack(const LinearModel& model, const Eigen::VectorXd& z);

/// |V_m||V_n| sin(θ_m − θ_n) + N_Γ P + M_Γ Q per closed line-phase, with the exact
/// Γ^{φψ} = V_n^φ / V_n^ψ and P + jQ the exact receiving-end flow. Zero on exact solutions.
Eigen::VectorXd angle_residual(const Network& net, const PhasorSolution& sol);

/// Same residual with A in place of Γ: the error the angle row actually makes.
Eigen::VectorXd angle_residual_approx(const Network& net, const PhasorSolution& sol);

}  // namespace phasorflow
