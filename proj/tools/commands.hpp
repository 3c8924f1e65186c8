#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srlim/attack.hpp"
#include "srlim/dataset.hpp"
#include "srlim/io.hpp"
#include "srlim/protocol.hpp"
#include "srlim/surrogate.hpp"
#include "srlim/victim.hpp"

namespace srlim::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kNumeric = 2, kPartial = 3 };

// Fixed output filenames under --out.
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kTrainLogFile = "train_log.json";
inline constexpr const char* kEditsFile = "edits.tsv";
inline constexpr const char* kAttackLogFile = "attack_log.json";
inline constexpr const char* kReportFile = "report.csv";
inline constexpr const char* kTrialsFile = "trials.json";
inline constexpr const char* kResultsCsvFile = "results.csv";
inline constexpr const char* kResultsTextFile = "results.txt";
inline constexpr const char* kPcaFile = "pca.csv";

struct TrainParams {
  fs::path data;
  fs::path out;
  SplitSpec split;
  TrainConfig train;
};

struct AttackParams {
  fs::path data;
  fs::path model;
  fs::path out;
  SplitSpec split;
  AttackConfig attack;
};

struct EvaluateParams {
  fs::path data;
  std::optional<fs::path> edits;  // clean graph when absent
  fs::path out;
  SplitSpec split;
  VictimSpec victim;
  std::uint64_t trial_seed = 0;
  int jobs = 1;
};

struct ReproduceParams {
  fs::path data;
  fs::path out;
  SplitSpec split;
  Scenario scenario = Scenario::kWeightAgnostic;
  std::vector<double> budgets = {0.01, 0.03, 0.05};
  std::vector<std::string> methods = {std::begin(kMethodNames), std::end(kMethodNames)};
  TrainConfig surrogate;
  AttackConfig attack;
  VictimSpec victim;
  std::uint64_t trial_seed = 0;
  int jobs = 1;
};

struct PcaParams {
  fs::path data;
  fs::path model;
  fs::path out;
};

// Each command writes its outputs plus config.json (the resolved parameters,
// enough for replay) under params.out and returns an exit code. Errors
// propagate as srlim exceptions; exit_code_for maps them.
int validate_dataset(const fs::path& dir, std::ostream& out);
int train_surrogate_cmd(const TrainParams& p, std::ostream& log);
int attack_cmd(const AttackParams& p, std::ostream& log);
int evaluate_cmd(const EvaluateParams& p, std::ostream& log);
int reproduce_cmd(const ReproduceParams& p, std::ostream& log);
int export_pca_cmd(const PcaParams& p, std::ostream& log);

Json to_json(const TrainParams& p);
Json to_json(const AttackParams& p);
Json to_json(const EvaluateParams& p);
Json to_json(const ReproduceParams& p);
Json to_json(const PcaParams& p);

// Re-runs the command recorded in a config echo. When `out` is given, outputs
// go there instead of the recorded directory.
int replay(const Json& config, const std::optional<fs::path>& out, std::ostream& log);

int exit_code_for(const std::exception& e);

}  // namespace srlim::cli
