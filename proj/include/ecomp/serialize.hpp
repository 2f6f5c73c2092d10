#pragma once

// Versioned JSON documents for parameter sets and trained models. Every
// document carries {"format": "<kind>", "version": N}. Doubles are written in
// shortest round-trip form, so save -> load reproduces values bit-exactly.

#include "ecomp/bench.hpp"
#include "ecomp/compose.hpp"
#include "ecomp/envelope.hpp"
#include "ecomp/netdyn.hpp"
#include "ecomp/plant.hpp"

#include "json.hpp"

#include <filesystem>
#include <string_view>

namespace ecomp::io {

using json = nlohmann::json;

inline constexpr int kVersion = 1;

json to_json(const EquivCircuitParams &p);
EquivCircuitParams equiv_circuit_from_json(const json &j);

json to_json(const PlantConfig &c);
PlantConfig plant_config_from_json(const json &j);

json to_json(const NarxModel &m);
NarxModel narx_from_json(const json &j);

json to_json(const OcsvmModel &m);
OcsvmModel ocsvm_from_json(const json &j);

json to_json(const HullModel &h);
HullModel hull_from_json(const json &j);

json to_json(const GateConfig &g);
GateConfig gate_from_json(const json &j);

json to_json(const TrainOptions &o);
void overlay(const json &j, TrainOptions &o);
json to_json(const DriveProfile &p);
void overlay(const json &j, DriveProfile &p);

/// Experiment configs are plain JSON objects. Missing keys keep their defaults;
/// unknown keys are rejected with Error("config.key").
json to_json(const PolyExperimentConfig &c);
PolyExperimentConfig poly_config_from_json(const json &j);
json to_json(const BatteryConfig &c);
BatteryConfig battery_config_from_json(const json &j);

/// Wraps a body with format/version tags.
json document(std::string_view format, json body);
/// Checks tags and returns the body. Throws Error("io.format") on mismatch.
const json &unwrap(const json &doc, std::string_view format);

json read_json(const std::filesystem::path &path);
void write_json(const std::filesystem::path &path, const json &doc);

} // namespace ecomp::io
