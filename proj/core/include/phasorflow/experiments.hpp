#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasorflow/exact_powerflow.hpp"
#include "phasorflow/linear_powerflow.hpp"
#include "phasorflow/opf.hpp"
#include "phasorflow/topology_ops.hpp"

namespace phasorflow {

// ---- model error ----

struct ErrorMetrics {
    double eps_mag = 0.0;    ///< max | |V| − √E |
    double eps_angle = 0.0;  ///< max |∠V − Θ|, degrees
    double eps_power = 0.0;  ///< max |S − (P + jQ)| over closed line-phases
};

/// Worst-case deviation of the linear solution from the exact one on the same network.
ErrorMetrics error_metrics(const Network& net, const PhasorSolution& exact, const LinearSolution& approx);

/// Σ_φ |S^φ| over the lines attached to the slack (receiving end).
double substation_power(const Network& net, const PhasorSolution& exact);

// ---- Monte Carlo ----

struct ErrorRecord {
    double dr = 0.0;
    double di = 0.0;
    int scenario = 0;
    bool converged = true;
    double eps_mag = 0.0;
    double eps_angle = 0.0;
    double eps_power = 0.0;
    double substation_power = 0.0;
};

struct MonteCarloOptions {
    std::vector<double> dr_values;
    std::vector<double> di_values;
    int per_cell = 100;
    std::uint64_t seed = 42;
    unsigned workers = 0;  ///< 0: hardware concurrency
    double beta_S = 0.85;
    double beta_Z = 0.15;
    NewtonOptions newton;
};

/// Inclusive grid lo, lo + step, ..., hi (rounded so that 0:0.15:0.01 has 16 points).
std::vector<double> grid_values(double lo, double hi, double step);

/// Load channels of the spot loads in `net`, in (node, phase) order.
std::vector<Channel> spot_load_channels(const Network& net);

/// Copy of `net` with every load and capacitor removed and one load d_i per channel.
Network with_sampled_loads(const Network& net, const std::vector<Channel>& channels, const std::vector<Complex>& d,
                           double beta_S, double beta_Z);

/// Records in cell order (dr outer, di inner), scenarios in order within a cell.
/// Cell (i, j) draws from cell_stream(seed, i * |di| + j); each scenario takes 2 draws per channel.
std::vector<ErrorRecord> monte_carlo(const Network& net, const MonteCarloOptions& opts);

struct Envelope {
    int count = 0;
    double eps_mag = 0.0;
    double eps_angle = 0.0;
    double eps_power = 0.0;
};

/// Worst errors over converged records with substation_power ≤ s_max.
Envelope envelope(const std::vector<ErrorRecord>& records, double s_max);

// ---- switching scenarios ----

struct FeederSpec {
    std::filesystem::path file;
    std::vector<std::filesystem::path> mods;
    std::vector<Modification> extra;
};

struct CaseSpec {
    std::string name;
    std::optional<OpfWeights> weights;  ///< none: zero dispatch
};

struct ScenarioSpec {
    std::string name;
    bool sequential = false;
    std::vector<FeederSpec> feeders;
    std::vector<SwitchSpec> switches;
    std::vector<std::string> der_nodes;
    double der_capacity = 0.0;
    std::optional<mods::AddVvc> vvc;
    OpfBounds bounds;
    std::vector<CaseSpec> cases;
};

/// Relative paths in the spec resolve against `base_dir`.
ScenarioSpec parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir);
ScenarioSpec load_scenario_file(const std::filesystem::path& path);

/// Merged network with all switches open and DER/VVC attached.
Network build_scenario_network(const ScenarioSpec& spec);

struct PhaseResult {
    Phase phase;
    Complex v_k1;
    Complex v_k2;
    double dmag = 0.0;        ///< |V_k1| − |V_k2|
    double dangle_deg = 0.0;  ///< ∠V_k1 − ∠V_k2
    Complex closure_estimate;  ///< sending-end flow from the pre-closure phasors
    Complex post_closure;      ///< exact sending-end flow after closing
};

struct CaseResult {
    std::string name;
    std::optional<OpfWeights> weights;
    ChannelMap dispatch;
    std::optional<SolverStats> opf_stats;
    std::optional<OpfTerms> opf_terms;
    std::optional<KktReport> kkt;
    int open_iterations = 0;
    int closed_iterations = 0;
    std::vector<PhaseResult> phases;
};

struct SwitchingAction {
    std::string switch_id;
    std::string k1;
    std::string k2;
    std::vector<CaseResult> cases;
};

struct ScenarioReport {
    std::string name;
    bool sequential = false;
    std::vector<SwitchingAction> actions;
};

/// Runs every case for one open switch of `net`.
SwitchingAction run_switching_action(const Network& net, const SwitchSpec& sw, const std::vector<CaseSpec>& cases,
                                     const OpfBounds& bounds, const AdmmSettings& admm = {},
                                     const NewtonOptions& newton = {});

/// Single mode: each switch against the all-open network.
ScenarioReport run_switch_scenario(const ScenarioSpec& spec, const AdmmSettings& admm = {},
                                   const NewtonOptions& newton = {});

/// Sequential mode: switches in order, each on the topology left by closing the previous ones.
ScenarioReport run_sequential_switching(const ScenarioSpec& spec, const AdmmSettings& admm = {},
                                        const NewtonOptions& newton = {});

/// Dispatches on spec.sequential.
ScenarioReport run_scenario(const ScenarioSpec& spec, const AdmmSettings& admm = {},
                            const NewtonOptions& newton = {});

nlohmann::json report_to_json(const ScenarioReport& report);

}  // namespace phasorflow
