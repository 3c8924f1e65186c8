#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "srlim/attack.hpp"
#include "srlim/dataset.hpp"
#include "srlim/gcn.hpp"
#include "srlim/geodesic.hpp"
#include "srlim/optimizer.hpp"
#include "srlim/surrogate.hpp"
#include "srlim/victim.hpp"

namespace srlim {

using Json = nlohmann::json;

// Config objects as JSON. Readers start from `base`, overwrite the keys that
// are present and reject unknown keys or mistyped values with a ValidationError.
Json to_json(const OptimizerConfig& c);
Json to_json(const GeodesicConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const AttackConfig& c);
Json to_json(const VictimSpec& c);
Json to_json(const SplitSpec& c);

OptimizerConfig optimizer_config_from_json(const Json& j, const OptimizerConfig& base = {});
GeodesicConfig geodesic_config_from_json(const Json& j, const GeodesicConfig& base = {});
TrainConfig train_config_from_json(const Json& j, const TrainConfig& base = {});
AttackConfig attack_config_from_json(const Json& j, const AttackConfig& base = {});
VictimSpec victim_spec_from_json(const Json& j, const VictimSpec& base = {});
SplitSpec split_spec_from_json(const Json& j, const SplitSpec& base = {});

std::string to_string(TrainMode m);
std::string to_string(PathMode m);
std::string to_string(OptimizerKind k);
std::string to_string(AttackLoss l);
std::string to_string(AttackMethod m);
std::string to_string(VictimArch a);
TrainMode parse_train_mode(const std::string& s);
PathMode parse_path_mode(const std::string& s);
OptimizerKind parse_optimizer_kind(const std::string& s);
AttackLoss parse_attack_loss(const std::string& s);
AttackMethod parse_attack_method(const std::string& s);
VictimArch parse_victim_arch(const std::string& s);

// Model file: shapes, seed, the training config echo and row-major weights.
// Doubles are written in shortest round-trip form, so loading reproduces the
// weights exactly.
void save_model(const std::filesystem::path& path, const GcnModel& m, const TrainConfig& cfg);
struct LoadedModel {
  GcnModel model;
  TrainConfig config;
};
LoadedModel load_model(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace srlim
