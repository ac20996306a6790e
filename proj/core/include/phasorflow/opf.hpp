#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "phasorflow/injections.hpp"
#include "phasorflow/linear_powerflow.hpp"
#include "phasorflow/network.hpp"

namespace phasorflow {

struct OpfWeights {
    double rho_e = 0.0;
    double rho_theta = 0.0;
    double rho_w = 0.0;
};

struct TargetPair {
    std::string k1;
    std::string k2;
};

struct OpfBounds {
    double e_min = 0.9025;  ///< 0.95²
    double e_max = 1.1025;  ///< 1.05²
};

struct DerChannel {
    std::string node;
    Phase phase;
    int node_phase;  ///< PhaseIndex position
    double capacity;
};

/// Phasor-tracking OPF over the linear model:
///   min ρE Σ (E_k1 − E_k2)² + ρθ Σ (Θ_k1 − Θ_k2)² + ρw Σ |w|²
///   s.t. linear model with w on the right-hand side, E_min ≤ E ≤ E_max, |w| ≤ w̄.
/// VVC units contribute their unclamped linear row through the model.
struct OpfProblem {
    Network network;
    std::vector<TargetPair> targets;
    OpfWeights weights;
    OpfBounds bounds;

    LinearModel model;                          ///< assembled with zero dispatch (b = b0)
    std::vector<DerChannel> channels;
    std::vector<std::pair<int, int>> target_node_phases;  ///< (k1, k2) per shared phase
    std::vector<int> bounded_node_phases;                 ///< non-slack node-phases with E bounds
};

/// Throws ValidationError for unknown targets, empty phase intersections, negative or all-zero weights
/// and E_min ≥ E_max.
OpfProblem build_opf(const Network& net, const std::vector<TargetPair>& targets, const OpfWeights& weights,
                     const OpfBounds& bounds = {});

struct AdmmSettings {
    double rho = 1.0;
    double sigma = 1e-6;
    double alpha = 1.6;
    double eps_abs = 1e-11;
    double eps_rel = 1e-11;
    double eps_infeasible = 1e-7;
    int max_iterations = 200000;
    int check_every = 10;
    bool adaptive_rho = true;
};

struct SolverStats {
    std::string status;  ///< "solved", "trivial", "max_iterations"
    int iterations = 0;
    int factorizations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double rho = 0.0;
};

struct OpfTerms {
    double C_E = 0.0;
    double C_theta = 0.0;
    double C_w = 0.0;
    double objective = 0.0;
};

struct Dispatch {
    ChannelMap w;
    OpfTerms terms;
    SolverStats stats;
    /// Multipliers: λ per model row, μ per bounded node-phase (positive at the upper bound),
    /// y per DER channel pair (u, v).
    Eigen::VectorXd lambda;
    Eigen::VectorXd mu;
    Eigen::VectorXd y_w;
};

/// Operator-splitting solve in the full (E, Θ, P, Q, u, v) space. On return the state
/// is recomputed from w through the linear model, so the equalities hold to solver precision.
/// Throws InfeasibleError with the offending constraint names on a primal infeasibility certificate.
Dispatch solve_opf(const OpfProblem& prob, const AdmmSettings& settings = {});

/// Objective terms at dispatch `w`, with the state obtained from the linear model.
OpfTerms evaluate_objective(const OpfProblem& prob, const ChannelMap& w);

struct KktReport {
    double stationarity = 0.0;     ///< ‖∇f + Cᵀy‖∞ with λ implied by the E, Θ, P, Q block
    double complementarity = 0.0;  ///< worst |multiplier · slack| and sign/cone violation
    double multiplier_gap = 0.0;   ///< ‖λ_solver − λ_implied‖∞ (informational)
    double equality = 0.0;         ///< model residual of the recomputed state
    double bound_violation = 0.0;
    double capacity_violation = 0.0;
    bool stationarity_ok = false;
    bool complementarity_ok = false;
    bool feasibility_ok = false;
    bool pass() const noexcept { return stationarity_ok && complementarity_ok && feasibility_ok; }
};

KktReport kkt_check(const OpfProblem& prob, const Dispatch& dispatch, double tol = 1e-6, double feas_tol = 1e-8);

}  // namespace phasorflow
