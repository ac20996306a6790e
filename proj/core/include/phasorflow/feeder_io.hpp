#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "phasorflow/injections.hpp"
#include "phasorflow/network.hpp"

namespace phasorflow {

/// Parses a feeder document. Lengths in feet, impedances in ohms/mile, loads in p.u.
/// Throws ValidationError on schema or invariant violations.
Network load_feeder(const nlohmann::json& doc);
Network load_feeder_file(const std::filesystem::path& path);

/// Inverse of load_feeder: load_feeder(save_feeder(net)) == net.
nlohmann::json save_feeder(const Network& net);

/// Reads a JSON file, turning I/O and parse failures into ValidationError.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

nlohmann::json complex_to_json(Complex z);
Complex complex_from_json(const nlohmann::json& j);

/// {"node.phase": [u, v], ...}
nlohmann::json dispatch_to_json(const ChannelMap& w);
/// Accepts the map form, an array of {"node", "phase", "w"} records, or either under a "dispatch" key.
ChannelMap dispatch_from_json(const nlohmann::json& j);

}  // namespace phasorflow
