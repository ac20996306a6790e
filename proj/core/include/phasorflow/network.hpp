#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "phasorflow/phase.hpp"

namespace phasorflow {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kFeetPerMile = 5280.0;

struct Bases {
    double s_base_va = 0.0;  ///< three-phase base power
    double v_base_ll = 0.0;  ///< line-to-line base voltage

    double z_base() const noexcept { return v_base_ll * v_base_ll / s_base_va; }
    bool operator==(const Bases&) const = default;
};

struct Node {
    std::string id;
    PhaseSet phases;
    bool operator==(const Node&) const = default;
};

/// Series impedance per mile in ohms. Stored as a full 3x3 matrix in abc order;
/// rows/columns outside `phases` are zero.
struct LineConfig {
    PhaseSet phases;
    Eigen::Matrix3cd z_ohm_per_mile = Eigen::Matrix3cd::Zero();
    std::string note;
    bool operator==(const LineConfig&) const = default;
};

enum class EdgeKind { line, transformer };

struct LineSpec {
    std::string id;
    std::string from;
    std::string to;
    PhaseSet phases;
    std::string config;      ///< empty for transformers and ideal switches
    double length_ft = 0.0;
    EdgeKind kind = EdgeKind::line;
    bool is_switch = false;
    bool closed = true;
    CMatrix impedance;       ///< p.u., |phases| x |phases|, canonical order (derived)
    std::string note;

    bool has_impedance() const noexcept { return impedance.size() > 0 && impedance.norm() > 0.0; }
    bool operator==(const LineSpec& other) const;
};

struct LoadSpec {
    std::string node;
    Phase phase = Phase::a;
    Complex d{0.0, 0.0};
    double beta_S = 1.0;
    double beta_Z = 0.0;
    bool spot = true;
    std::string note;
    bool operator==(const LoadSpec&) const = default;
};

struct CapSpec {
    std::string node;
    Phase phase = Phase::a;
    double c = 0.0;
    std::string note;
    bool operator==(const CapSpec&) const = default;
};

struct DerSpec {
    std::string node;
    Phase phase = Phase::a;
    double capacity = 0.0;
    bool operator==(const DerSpec&) const = default;
};

struct VvcSpec {
    std::string node;
    Phase phase = Phase::a;
    double q_min = 0.0;
    double q_max = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;

    double slope() const noexcept { return (q_max - q_min) / (v_max - v_min); }
    /// Clamped piecewise-linear characteristic in |V|.
    double q_of(double vmag) const noexcept;
    bool operator==(const VvcSpec&) const = default;
};

/// Annotation for a voltage regulator sitting on a line; solvers refuse networks that still carry one.
struct RegulatorSpec {
    std::string id;
    std::string from;
    std::string to;
    bool operator==(const RegulatorSpec&) const = default;
};

/// Plain data of a feeder. Validation happens when it is turned into a Network.
struct NetworkData {
    std::string name;
    Bases bases;
    std::string slack;
    std::array<Complex, 3> slack_voltage{};
    std::vector<Node> nodes;
    std::map<std::string, LineConfig> line_configs;
    std::vector<LineSpec> lines;
    std::vector<LoadSpec> loads;
    std::vector<CapSpec> caps;
    std::vector<DerSpec> der;
    std::vector<VvcSpec> vvc;
    std::vector<RegulatorSpec> regulators;
    std::vector<std::string> provenance;

    bool operator==(const NetworkData&) const = default;
};

/// Recompute every line's p.u. impedance from its config, length and the bases.
void derive_impedances(NetworkData& data);

/// Validated, immutable feeder. Mutating operations build a new Network.
class Network {
  public:
    /// Validates `data` and throws ValidationError on the first violated invariant.
    explicit Network(NetworkData data);

    const NetworkData& data() const noexcept { return data_; }
    const std::string& name() const noexcept { return data_.name; }
    const Bases& bases() const noexcept { return data_.bases; }
    const std::string& slack() const noexcept { return data_.slack; }
    const std::array<Complex, 3>& slack_voltage() const noexcept { return data_.slack_voltage; }
    const std::vector<Node>& nodes() const noexcept { return data_.nodes; }
    const std::vector<LineSpec>& lines() const noexcept { return data_.lines; }
    const std::vector<LoadSpec>& loads() const noexcept { return data_.loads; }
    const std::vector<CapSpec>& caps() const noexcept { return data_.caps; }
    const std::vector<DerSpec>& der() const noexcept { return data_.der; }
    const std::vector<VvcSpec>& vvc() const noexcept { return data_.vvc; }
    const std::vector<RegulatorSpec>& regulators() const noexcept { return data_.regulators; }
    const std::map<std::string, LineConfig>& line_configs() const noexcept { return data_.line_configs; }

    int node_index(const std::string& id) const;  ///< throws ValidationError if unknown
    std::optional<int> find_node(const std::string& id) const noexcept;
    int line_index(const std::string& id) const;  ///< throws ValidationError if unknown
    std::optional<int> find_line(const std::string& id) const noexcept;
    const Node& node(const std::string& id) const { return data_.nodes[node_index(id)]; }
    const LineSpec& line(const std::string& id) const { return data_.lines[line_index(id)]; }
    int slack_index() const noexcept { return slack_index_; }

    std::vector<std::string> open_switches() const;

    /// Throws UnsupportedElementError if the network still has regulators,
    /// transformers or closed zero-impedance edges.
    void require_solvable() const;

    bool operator==(const Network& other) const { return data_ == other.data_; }

  private:
    void validate();

    NetworkData data_;
    std::unordered_map<std::string, int> node_lookup_;
    std::unordered_map<std::string, int> line_lookup_;
    int slack_index_ = -1;
};

/// Dense numbering of node-phases and closed line-phases, shared by both solvers.
class PhaseIndex {
  public:
    explicit PhaseIndex(const Network& net);

    int node_phase_count() const noexcept { return static_cast<int>(node_phases_.size()); }
    int line_phase_count() const noexcept { return static_cast<int>(line_phases_.size()); }

    /// -1 if the phase is absent at the node.
    int node_phase(int node, Phase p) const noexcept { return node_offset_[node][index_of(p)]; }
    /// -1 if the line is open or does not carry the phase.
    int line_phase(int line, Phase p) const noexcept { return line_offset_[line][index_of(p)]; }

    struct NodePhase {
        int node;
        Phase phase;
    };
    struct LinePhase {
        int line;
        Phase phase;
    };
    const NodePhase& node_phase_at(int k) const { return node_phases_[k]; }
    const LinePhase& line_phase_at(int k) const { return line_phases_[k]; }
    const std::vector<int>& closed_lines() const noexcept { return closed_lines_; }

  private:
    std::vector<std::array<int, 3>> node_offset_;
    std::vector<std::array<int, 3>> line_offset_;
    std::vector<NodePhase> node_phases_;
    std::vector<LinePhase> line_phases_;
    std::vector<int> closed_lines_;
};

/// Slack voltage [1, 1∠240°, 1∠120°].
std::array<Complex, 3> balanced_slack_voltage();

}  // namespace phasorflow
