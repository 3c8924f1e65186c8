#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srlim/attack.hpp"
#include "srlim/graph.hpp"
#include "srlim/surrogate.hpp"
#include "srlim/victim.hpp"

namespace srlim {

inline constexpr int kProtocolTrials = 20;

struct TrimmedStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation of the kept values
  std::size_t kept = 0;
};

// Drops one maximum and one minimum and summarizes the rest. Needs >= 3 values.
TrimmedStats trimmed_stats(std::span<const double> values);

// `count` distinct victim seeds derived from `base`.
std::vector<std::uint64_t> protocol_seeds(std::uint64_t base, int count = kProtocolTrials);

struct Trial {
  std::uint64_t seed = 0;
  double rate = 0.0;
};

struct TrialReport {
  std::vector<Trial> trials;  // in seed order
  TrimmedStats stats;
  VictimSpec spec;
  std::size_t flips = 0;
  std::string failure;  // empty when every trial finished

  bool complete() const { return failure.empty(); }
};

// Applies `edits` to the clean graph once, then trains and scores one victim
// per seed on the poisoned graph. Seeds must be distinct and number exactly
// kProtocolTrials. Trials run on up to `jobs` threads; results are keyed by
// seed, so the report does not depend on scheduling. A failing trial stops
// the remaining ones and is reported through `failure` with the finished
// trials kept.
TrialReport run_protocol(const Graph& clean, std::span<const Flip> edits, const VictimSpec& spec,
                         std::span<const std::uint64_t> seeds, int jobs = 1);

enum class Scenario { kWeightAgnostic, kArchAgnostic };

inline constexpr const char* kMethodNames[] = {"original", "dice", "grad_ce", "explore_ce", "explore_srlim"};

struct ReproduceConfig {
  std::string dataset;
  Scenario scenario = Scenario::kWeightAgnostic;
  std::vector<double> budgets = {0.01, 0.03, 0.05};
  std::vector<std::string> methods = {std::begin(kMethodNames), std::end(kMethodNames)};
  TrainConfig surrogate;  // mode is overridden per method
  AttackConfig attack;    // method and budget are overridden per cell
  VictimSpec victim;
  std::uint64_t trial_seed = 0;
  int jobs = 1;
};

struct ResultCell {
  std::string method;
  double budget = 0.0;
  std::optional<TrialReport> report;
  std::string error;  // set when the cell is NA
};

struct ResultsTable {
  std::string dataset;
  Scenario scenario = Scenario::kWeightAgnostic;
  std::vector<ResultCell> cells;

  const ResultCell* find(const std::string& method, double budget) const;
  std::size_t failed_cells() const;
};

// Throws ContractError when the victim architecture does not fit the scenario:
// weight-agnostic needs a GCN victim, arch-agnostic a ChebNet victim.
void check_scenario(Scenario scenario, const VictimSpec& victim);

// Trains the CE and SRLIM surrogates on `g` (split attached), crafts each
// method's plan and runs the protocol for every cell. Gradient and DICE plans
// for smaller budgets are prefixes of the largest-budget plan, which is how
// the sequential attacks produce them anyway. Cell failures become NA.
ResultsTable reproduce_table(const Graph& g, const ReproduceConfig& cfg);

std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);

// "dataset,scenario,method,budget,trimmed_mean,stddev,n_trials" rows.
void write_results_csv(const std::filesystem::path& path, const ResultsTable& table);
// Method-by-budget grid of trimmed means for reading in a terminal.
std::string format_results_text(const ResultsTable& table);

}  // namespace srlim
