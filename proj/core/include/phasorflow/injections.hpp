#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phasorflow/network.hpp"

namespace phasorflow {

struct Channel {
    std::string node;
    Phase phase = Phase::a;
    auto operator<=>(const Channel&) const = default;
};

/// Per-channel complex DER setpoints w (load convention: positive u consumes real power).
using ChannelMap = std::map<Channel, Complex>;

/// Node-phase load terms, aggregated over all loads/caps/DER at a channel:
/// s(V) = s_const + s_z |V|^2 + j q(|V|), with s_const = beta_S d + w - j c.
struct LoadTerms {
    Eigen::VectorXcd s_const;
    Eigen::VectorXcd s_z;
    Eigen::VectorXcd w;
    std::vector<std::optional<VvcSpec>> vvc;

    /// Load at node-phase k for voltage magnitude vm with VVC clamped.
    Complex load(int k, double vm) const;
    /// Clamped VVC output (0 if no unit).
    double q(int k, double vm) const;
    /// d q / d|V| of the clamped characteristic (0 outside the linear band).
    double dq_dv(int k, double vm) const;
};

/// Throws ValidationError for dispatch on channels without a declared DER and
/// for setpoints at the slack.
LoadTerms build_load_terms(const Network& net, const PhaseIndex& index, const ChannelMap& dispatch);

}  // namespace phasorflow
