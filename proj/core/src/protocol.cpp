#include "srlim/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "srlim/error.hpp"
#include "srlim/log.hpp"

namespace srlim {

TrimmedStats trimmed_stats(std::span<const double> values) {
  if (values.size() < 3) throw ContractError("trimmed statistics need at least three values");
  const auto lo = std::min_element(values.begin(), values.end());
  const auto hi = std::max_element(values.begin(), values.end());
  std::vector<double> kept;
  kept.reserve(values.size() - 2);
  for (auto it = values.begin(); it != values.end(); ++it) {
    if (it != lo && it != hi) kept.push_back(*it);
  }
  // min and max coincide only when all values are equal; drop a second copy.
  if (lo == hi) kept.pop_back();

  TrimmedStats s;
  s.kept = kept.size();
  double sum = 0.0;
  for (const double v : kept) sum += v;
  s.mean = sum / static_cast<double>(kept.size());
  double sq = 0.0;
  for (const double v : kept) sq += (v - s.mean) * (v - s.mean);
  s.stddev = kept.size() > 1 ? std::sqrt(sq / static_cast<double>(kept.size() - 1)) : 0.0;
  return s;
}

std::vector<std::uint64_t> protocol_seeds(std::uint64_t base, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
  return seeds;
}

TrialReport run_protocol(const Graph& clean, std::span<const Flip> edits, const VictimSpec& spec,
                         std::span<const std::uint64_t> seeds, int jobs) {
  if (seeds.size() != static_cast<std::size_t>(kProtocolTrials)) {
    throw ContractError("the protocol needs exactly " + std::to_string(kProtocolTrials) + " seeds");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ContractError("protocol seeds must be distinct");
  }
  if (!clean.has_split() || clean.test_nodes().empty()) throw ContractError("the protocol needs a test split");

  const Graph poisoned = apply_flips(clean, edits);

  std::vector<std::optional<double>> rates(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size() && !stop; i = next++) {
      VictimSpec trial_spec = spec;
      trial_spec.seed = seeds[i];
      try {
        rates[i] = misclassification_rate(train_victim(poisoned, trial_spec), poisoned);
      } catch (const Error& e) {
        errors[i] = e.what();
        stop = true;
      }
    }
  };
  const int threads = std::clamp(jobs, 1, kProtocolTrials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  TrialReport report;
  report.spec = spec;
  report.flips = edits.size();
  std::vector<double> values;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!errors[i].empty() && report.failure.empty()) {
      report.failure = "seed " + std::to_string(seeds[i]) + ": " + errors[i];
    }
    if (rates[i]) {
      report.trials.push_back({seeds[i], *rates[i]});
      values.push_back(*rates[i]);
    }
  }
  if (report.complete() && values.size() != seeds.size()) report.failure = "trials were not all run";
  if (report.complete()) report.stats = trimmed_stats(values);
  return report;
}

const ResultCell* ResultsTable::find(const std::string& method, double budget) const {
  for (const auto& c : cells) {
    if (c.method == method && c.budget == budget) return &c;
  }
  return nullptr;
}

std::size_t ResultsTable::failed_cells() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const ResultCell& c) {
    return !c.report || !c.report->complete();
  }));
}

std::string scenario_name(Scenario s) {
  return s == Scenario::kArchAgnostic ? "arch_agnostic" : "weight_agnostic";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "weight_agnostic") return Scenario::kWeightAgnostic;
  if (name == "arch_agnostic") return Scenario::kArchAgnostic;
  throw ValidationError("unknown scenario '" + name + "' (expected weight_agnostic or arch_agnostic)");
}

void check_scenario(Scenario scenario, const VictimSpec& victim) {
  if (scenario == Scenario::kArchAgnostic && victim.arch != VictimArch::kChebNet) {
    throw ContractError("arch_agnostic runs need a ChebNet victim; the surrogate is a GCN");
  }
  if (scenario == Scenario::kWeightAgnostic && victim.arch != VictimArch::kGcn) {
    throw ContractError("weight_agnostic runs need a GCN victim");
  }
}

namespace {

struct MethodPlan {
  std::vector<Flip> edits;  // largest-budget plan
  std::string error;
};

MethodPlan craft(const std::string& method, const Graph& g, const ReproduceConfig& cfg, double max_budget,
                 const GcnModel* ce_model, const GcnModel* srlim_model) {
  MethodPlan out;
  if (method == "original") return out;
  AttackConfig ac = cfg.attack;
  ac.budget_fraction = max_budget;
  const GcnModel* model = ce_model;
  if (method == "dice") {
    ac.method = AttackMethod::kDice;
  } else if (method == "grad_ce") {
    ac.method = AttackMethod::kGreedy;
  } else if (method == "explore_ce") {
    ac.method = AttackMethod::kExplore;
  } else if (method == "explore_srlim") {
    ac.method = AttackMethod::kExplore;
    model = srlim_model;
  } else {
    throw ValidationError("unknown method '" + method + "'");
  }
  if (model == nullptr) throw Error("surrogate training failed");
  out.edits = run_attack(g, *model, ac).edits();
  return out;
}

}  // namespace

ResultsTable reproduce_table(const Graph& g, const ReproduceConfig& cfg) {
  check_scenario(cfg.scenario, cfg.victim);
  if (cfg.budgets.empty()) throw ContractError("no budgets requested");
  for (const double b : cfg.budgets) flip_budget(g, b);
  for (const auto& m : cfg.methods) {
    if (std::find(std::begin(kMethodNames), std::end(kMethodNames), m) == std::end(kMethodNames)) {
      throw ValidationError("unknown method '" + m + "'");
    }
  }
  const double max_budget = *std::max_element(cfg.budgets.begin(), cfg.budgets.end());
  const auto seeds = protocol_seeds(cfg.trial_seed);

  auto wants = [&](const char* m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };
  std::optional<GcnModel> ce_model;
  std::optional<GcnModel> srlim_model;
  std::string ce_error;
  std::string srlim_error;
  if (wants("dice") || wants("grad_ce") || wants("explore_ce")) {
    TrainConfig tc = cfg.surrogate;
    tc.mode = TrainMode::kCrossEntropy;
    try {
      ce_model = train_surrogate(g, tc).model;
    } catch (const Error& e) {
      ce_error = e.what();
    }
  }
  if (wants("explore_srlim")) {
    TrainConfig tc = cfg.surrogate;
    tc.mode = TrainMode::kSrlim;
    try {
      srlim_model = train_surrogate(g, tc).model;
    } catch (const Error& e) {
      srlim_error = e.what();
    }
  }

  ResultsTable table;
  table.dataset = cfg.dataset;
  table.scenario = cfg.scenario;
  std::optional<TrialReport> original;
  for (const auto& method : cfg.methods) {
    MethodPlan plan;
    try {
      plan = craft(method, g, cfg, max_budget, ce_model ? &*ce_model : nullptr,
                   srlim_model ? &*srlim_model : nullptr);
    } catch (const Error& e) {
      const auto& cause = method == "explore_srlim" ? srlim_error : ce_error;
      plan.error = cause.empty() ? e.what() : "surrogate training failed: " + cause;
    }
    for (const double budget : cfg.budgets) {
      ResultCell cell;
      cell.method = method;
      cell.budget = budget;
      if (!plan.error.empty()) {
        cell.error = plan.error;
      } else if (method == "original" && original) {
        cell.report = original;
      } else {
        const auto count = std::min(plan.edits.size(), flip_budget(g, budget));
        try {
          cell.report = run_protocol(g, std::span<const Flip>(plan.edits.data(), count), cfg.victim, seeds, cfg.jobs);
          if (!cell.report->complete()) cell.error = cell.report->failure;
        } catch (const Error& e) {
          cell.error = e.what();
        }
        if (method == "original") original = cell.report;
      }
      if (!cell.error.empty()) log::warn(method + " @ " + std::to_string(budget) + ": " + cell.error);
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string budget_label(double b) { return fixed(100.0 * b, 0) + "%"; }

}  // namespace

void write_results_csv(const std::filesystem::path& path, const ResultsTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "dataset,scenario,method,budget,trimmed_mean,stddev,n_trials\n";
  for (const auto& c : table.cells) {
    out << table.dataset << ',' << scenario_name(table.scenario) << ',' << c.method << ',' << fixed(c.budget, 2) << ',';
    if (c.report && c.report->complete()) {
      out << fixed(c.report->stats.mean, 4) << ',' << fixed(c.report->stats.stddev, 4) << ',' << c.report->trials.size();
    } else {
      out << "NA,NA," << (c.report ? c.report->trials.size() : 0);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::string format_results_text(const ResultsTable& table) {
  std::vector<std::string> methods;
  std::vector<double> budgets;
  for (const auto& c : table.cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
    if (std::find(budgets.begin(), budgets.end(), c.budget) == budgets.end()) budgets.push_back(c.budget);
  }
  std::size_t name_width = 6;
  for (const auto& m : methods) name_width = std::max(name_width, m.size());
  constexpr int kCell = 16;

  std::ostringstream os;
  os << table.dataset << " (" << scenario_name(table.scenario) << "), misclassification % (trimmed mean ± sd)\n";
  os << std::string(name_width, ' ');
  for (const double b : budgets) {
    const auto label = budget_label(b);
    os << std::string(kCell - label.size(), ' ') << label;
  }
  os << '\n';
  for (const auto& m : methods) {
    os << m << std::string(name_width - m.size(), ' ');
    for (const double b : budgets) {
      const auto* c = table.find(m, b);
      std::string text = "NA";
      if (c && c->report && c->report->complete()) {
        text = fixed(c->report->stats.mean, 2) + " ± " + fixed(c->report->stats.stddev, 2);
      }
      // "±" is two bytes but one column wide.
      const std::size_t width = text.size() - (text == "NA" ? 0 : 1);
      os << std::string(kCell > static_cast<int>(width) ? kCell - width : 1, ' ') << text;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace srlim
