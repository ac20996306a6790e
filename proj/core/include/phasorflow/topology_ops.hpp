#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasorflow/network.hpp"

namespace phasorflow {

namespace mods {

struct RemoveRegulator {
    std::string id;
};
/// Turns a transformer, ideal switch or line into an ordinary closed line.
struct ReplaceWithLine {
    std::string line;
    std::string config;
    double length_ft = 0.0;
};
struct AddSpotLoad {
    std::string node;
    PhaseSet phases;  ///< empty means every phase at the node
    Complex d;
    double beta_S = 1.0;
    double beta_Z = 0.0;
};
struct ScaleLoads {
    double factor = 1.0;
};
struct SetLoadModel {
    double beta_S = 1.0;
    double beta_Z = 0.0;
};
/// Prepends `prefix` to every node, line and regulator id except the slack.
struct PrefixIds {
    std::string prefix;
};
struct AddDer {
    std::vector<std::string> nodes;
    double capacity = 0.0;
};
struct AddVvc {
    std::vector<std::string> nodes;
    double q_min = 0.0;
    double q_max = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
};
struct ClearCaps {};

}  // namespace mods

using Modification = std::variant<mods::RemoveRegulator, mods::ReplaceWithLine, mods::AddSpotLoad, mods::ScaleLoads,
                                  mods::SetLoadModel, mods::PrefixIds, mods::AddDer, mods::AddVvc, mods::ClearCaps>;

/// Parses a modification script: a JSON array of {"op": ..., ...} objects.
std::vector<Modification> parse_modifications(const nlohmann::json& script);
nlohmann::json modifications_to_json(const std::vector<Modification>& mods);

/// Applies `mods` in order and returns the new network; `net` is untouched.
Network apply_modifications(const Network& net, const std::vector<Modification>& mods);

struct SwitchSpec {
    std::string id;
    std::string from;
    std::string to;
    std::string config;
    double length_ft = 0.0;
};

/// Joins two feeders that share the slack node, adding each switch as an open line.
/// Bases, slack voltage and any shared line configs must agree.
Network merge_with_switch(const Network& net1, const Network& net2, const std::vector<SwitchSpec>& switches);

/// Returns a copy with the named switch closed. Throws on unknown, non-switch or already-closed ids.
Network close_switch(const Network& net, const std::string& switch_id);

}  // namespace phasorflow
