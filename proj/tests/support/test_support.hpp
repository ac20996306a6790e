#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "phasorflow/experiments.hpp"
#include "phasorflow/feeder_io.hpp"
#include "phasorflow/linear_powerflow.hpp"
#include "phasorflow/opf.hpp"

namespace pftest {

using phasorflow::Complex;

std::filesystem::path data_dir();
std::filesystem::path data_file(const std::string& name);

/// Modified IEEE-13 feeder (regulator removed, transformer and switch replaced).
phasorflow::Network ieee13_modified();
/// Modified IEEE-37 feeder.
phasorflow::Network ieee37_modified();
phasorflow::Network scenario_network(const std::string& spec_file);

// ---- hand-built feeders; bases are chosen so that Z_base = 1 and 5280 ft lines carry ohms/mile as p.u. ----

/// slack --Z-- "1", phases `phases`, one load per phase.
nlohmann::json two_node_doc(const std::string& phases, const Eigen::MatrixXcd& Z, const std::vector<Complex>& d,
                            double beta_S = 1.0, double beta_Z = 0.0);

/// Random radial feeder with `n` nodes below the slack, mixed phase sets and β_Z loads.
nlohmann::json random_radial_doc(unsigned seed, int n);

// ---- oracles ----

/// Re/Im{A ∘ Z*} by direct complex evaluation with α = e^{j2π/3}.
phasorflow::MnPair mn_reference(const Eigen::MatrixXcd& Z, phasorflow::PhaseSet phases);

/// Backward/forward sweep of the linear model on a radial network, iterated on E for the β_Z and
/// VVC terms. Does not use assemble(); M/N come from mn_reference.
phasorflow::LinearSolution radial_sweep(const phasorflow::Network& net, const phasorflow::ChannelMap& dispatch = {},
                                        int max_sweeps = 200, double tol = 1e-15);

/// V = 1 − Z conj(s / V) iterated `steps` times from V = 1 (single-phase, constant power).
Complex two_node_fixed_point(Complex Z, Complex s, int steps = 20);

/// Closed-form solution of the 2-node single-phase linear model with constant-power load s:
/// P = Re s, Q = Im s, E = 1 − 2(rP + xQ), θ = −xP + rQ.
struct TwoNodeLinear {
    double E, theta, P, Q;
};
TwoNodeLinear two_node_linear(Complex Z, Complex s);

/// Reduced OPF: z(w) = z0 + G w with G from solve_linear differences; projected gradient with
/// step 1/L over the DER disks. E bounds are ignored (callers check they stay inactive).
struct ReferenceOpf {
    Eigen::VectorXd w;  ///< (u_0, v_0, u_1, ...)
    double objective = 0.0;
    double max_e = 0.0;
    double min_e = 0.0;
};
ReferenceOpf projected_gradient(const phasorflow::OpfProblem& prob, long iterations = 1000000);

/// Spearman rank correlation.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pftest
