#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include "srlim/error.hpp"
#include "srlim/log.hpp"
#include "srlim/pca.hpp"

namespace srlim::cli {
namespace {

struct LoadedData {
  Dataset dataset;
  Graph graph;  // with the split attached
};

LoadedData load_split(const fs::path& data, const SplitSpec& split) {
  Dataset ds = load_dataset(data);
  Graph g = make_split(ds.graph, split);
  return {std::move(ds), std::move(g)};
}

void prepare_out(const fs::path& out) {
  if (out.empty()) throw ValidationError("--out is required");
  fs::create_directories(out);
}

Json base_echo(const char* command, const fs::path& data, const fs::path& out) {
  return {{"command", command},
          {"data", fs::absolute(data).lexically_normal().string()},
          {"dataset_checksum", dataset_checksum(data)},
          {"out", fs::absolute(out).lexically_normal().string()}};
}

void write_echo(const fs::path& out, const Json& echo) { write_json(out / kConfigFile, echo); }

Json history_json(const std::vector<EpochRecord>& history) {
  Json j = Json::array();
  for (const auto& r : history) j.push_back({{"epoch", r.epoch}, {"ce", r.ce}, {"im", r.im}, {"total", r.total}});
  return j;
}

double rate_on(std::span<const int> pred, const Graph& g, std::span<const NodeId> nodes) {
  std::size_t wrong = 0;
  for (const NodeId i : nodes) wrong += pred[static_cast<std::size_t>(i)] != g.label(i);
  return nodes.empty() ? 0.0 : 100.0 * static_cast<double>(wrong) / static_cast<double>(nodes.size());
}

Json report_json(const TrialReport& r) {
  Json trials = Json::array();
  for (const auto& t : r.trials) trials.push_back({{"seed", t.seed}, {"rate", t.rate}});
  Json j = {{"trials", trials}, {"flips", r.flips}, {"victim", to_json(r.spec)}, {"complete", r.complete()}};
  if (r.complete()) {
    j["trimmed_mean"] = r.stats.mean;
    j["stddev"] = r.stats.stddev;
    j["kept"] = r.stats.kept;
  } else {
    j["failure"] = r.failure;
  }
  return j;
}

const Json& field(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("config echo lacks '") + key + "'");
  return *it;
}

fs::path path_field(const Json& j, const char* key) { return fs::path(field(j, key).get<std::string>()); }

}  // namespace

int validate_dataset(const fs::path& dir, std::ostream& out) {
  const auto ds = load_dataset(dir);
  const auto& m = ds.manifest;
  out << m.name << ": n=" << m.num_nodes << " edges=" << m.edge_count << " d=" << m.feature_dim
      << " K=" << m.num_classes << " checksum=" << m.checksum << '\n';
  return kOk;
}

Json to_json(const TrainParams& p) {
  Json j = base_echo("train-surrogate", p.data, p.out);
  j["split"] = srlim::to_json(p.split);
  j["train"] = srlim::to_json(p.train);
  return j;
}

int train_surrogate_cmd(const TrainParams& p, std::ostream& log) {
  const auto d = load_split(p.data, p.split);
  prepare_out(p.out);
  write_echo(p.out, to_json(p));

  std::vector<EpochRecord> progress;
  TrainResult result;
  try {
    result = train_surrogate(d.graph, p.train, &progress);
  } catch (const Error&) {
    write_json(p.out / kTrainLogFile, history_json(progress));
    throw;
  }
  write_json(p.out / kTrainLogFile, history_json(result.history));
  save_model(p.out / kModelFile, result.model, p.train);

  const auto pred = pseudo_labels(d.graph, result.model);
  Json metrics = {{"epochs", result.history.size()},
                  {"train_misclassification", rate_on(pred, d.graph, d.graph.train_nodes())},
                  {"clean_misclassification", misclassification_rate(pred, d.graph)}};
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    metrics["final_ce"] = last.ce;
    metrics["final_im"] = last.im;
    metrics["final_total"] = last.total;
  }
  write_json(p.out / kMetricsFile, metrics);
  log << "trained " << to_string(p.train.mode) << " surrogate for " << result.history.size()
      << " epochs; clean misclassification " << metrics["clean_misclassification"].get<double>() << "%\n";
  return kOk;
}

Json to_json(const AttackParams& p) {
  Json j = base_echo("attack", p.data, p.out);
  j["model"] = fs::absolute(p.model).lexically_normal().string();
  j["split"] = srlim::to_json(p.split);
  j["attack"] = srlim::to_json(p.attack);
  return j;
}

int attack_cmd(const AttackParams& p, std::ostream& log) {
  const auto d = load_split(p.data, p.split);
  const auto model = load_model(p.model);
  prepare_out(p.out);
  write_echo(p.out, to_json(p));

  const auto start = std::chrono::steady_clock::now();
  auto plan = run_attack(d.graph, model.model, p.attack);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  plan.base_checksum = d.dataset.manifest.checksum;
  save_perturbed(p.out / kEditsFile, plan.edits(), plan.base_checksum);

  Json steps = Json::array();
  for (std::size_t k = 0; k < plan.flips.size(); ++k) {
    const auto& f = plan.flips[k];
    const auto& s = plan.steps[k];
    steps.push_back({{"u", f.flip.u},
                     {"v", f.flip.v},
                     {"kind", f.flip.kind == FlipKind::kAdd ? "add" : "remove"},
                     {"score", f.score},
                     {"candidates", s.candidates},
                     {"chosen_loss", s.chosen_loss},
                     {"top1_loss", s.top1_loss}});
  }
  write_json(p.out / kAttackLogFile, {{"config", srlim::to_json(p.attack)},
                                      {"base_checksum", plan.base_checksum},
                                      {"budget", plan.budget},
                                      {"exhausted", plan.exhausted},
                                      {"steps", steps},
                                      {"wall_time_s", wall}});
  log << to_string(p.attack.method) << ": " << plan.flips.size() << " of " << plan.budget << " flips\n";
  return plan.exhausted ? kPartial : kOk;
}

Json to_json(const EvaluateParams& p) {
  Json j = base_echo("evaluate", p.data, p.out);
  j["edits"] = p.edits ? Json(fs::absolute(*p.edits).lexically_normal().string()) : Json(nullptr);
  j["split"] = srlim::to_json(p.split);
  j["victim"] = srlim::to_json(p.victim);
  j["trial_seed"] = p.trial_seed;
  j["jobs"] = p.jobs;
  return j;
}

int evaluate_cmd(const EvaluateParams& p, std::ostream& log) {
  const auto d = load_split(p.data, p.split);
  std::vector<Flip> flips;
  if (p.edits) {
    auto edits = read_edits(*p.edits);
    if (edits.base_checksum != d.dataset.manifest.checksum) {
      throw ValidationError(p.edits->string() + ": edits were made for dataset " + edits.base_checksum +
                            ", not " + d.dataset.manifest.checksum);
    }
    flips = std::move(edits.flips);
  }
  prepare_out(p.out);
  write_echo(p.out, to_json(p));

  const auto seeds = protocol_seeds(p.trial_seed);
  const auto report = run_protocol(d.graph, flips, p.victim, seeds, p.jobs);
  {
    std::ofstream csv(p.out / kReportFile);
    csv << "seed,misclassification\n";
    for (const auto& t : report.trials) csv << t.seed << ',' << Json(t.rate).dump() << '\n';
    if (!csv) throw Error("failed writing " + (p.out / kReportFile).string());
  }
  write_json(p.out / kTrialsFile, report_json(report));
  if (!report.complete()) {
    log << "protocol stopped: " << report.failure << '\n';
    return report.trials.empty() ? kNumeric : kPartial;
  }
  log << to_string(p.victim.arch) << " victim, " << flips.size() << " flips: trimmed mean "
      << report.stats.mean << "% (sd " << report.stats.stddev << ", " << report.stats.kept << " of "
      << report.trials.size() << " trials)\n";
  return kOk;
}

Json to_json(const ReproduceParams& p) {
  Json j = base_echo("reproduce", p.data, p.out);
  j["split"] = srlim::to_json(p.split);
  j["scenario"] = scenario_name(p.scenario);
  j["budgets"] = p.budgets;
  j["methods"] = p.methods;
  j["surrogate"] = srlim::to_json(p.surrogate);
  j["attack"] = srlim::to_json(p.attack);
  j["victim"] = srlim::to_json(p.victim);
  j["trial_seed"] = p.trial_seed;
  j["jobs"] = p.jobs;
  return j;
}

int reproduce_cmd(const ReproduceParams& p, std::ostream& log) {
  const auto d = load_split(p.data, p.split);
  check_scenario(p.scenario, p.victim);
  prepare_out(p.out);
  write_echo(p.out, to_json(p));

  ReproduceConfig cfg;
  cfg.dataset = d.dataset.manifest.name;
  cfg.scenario = p.scenario;
  cfg.budgets = p.budgets;
  cfg.methods = p.methods;
  cfg.surrogate = p.surrogate;
  cfg.attack = p.attack;
  cfg.victim = p.victim;
  cfg.trial_seed = p.trial_seed;
  cfg.jobs = p.jobs;
  const auto table = reproduce_table(d.graph, cfg);

  write_results_csv(p.out / kResultsCsvFile, table);
  const auto text = format_results_text(table);
  {
    std::ofstream txt(p.out / kResultsTextFile);
    txt << text;
    if (!txt) throw Error("failed writing " + (p.out / kResultsTextFile).string());
  }
  Json cells = Json::array();
  for (const auto& c : table.cells) {
    Json cell = {{"method", c.method}, {"budget", c.budget}};
    if (c.report) cell["report"] = report_json(*c.report);
    if (!c.error.empty()) cell["error"] = c.error;
    cells.push_back(cell);
  }
  write_json(p.out / kTrialsFile, {{"dataset", table.dataset}, {"scenario", scenario_name(table.scenario)}, {"cells", cells}});
  log << text;
  return table.failed_cells() == table.cells.size() ? kNumeric : kOk;
}

Json to_json(const PcaParams& p) {
  Json j = base_echo("export-pca", p.data, p.out);
  j["model"] = fs::absolute(p.model).lexically_normal().string();
  return j;
}

int export_pca_cmd(const PcaParams& p, std::ostream& log) {
  const auto ds = load_dataset(p.data);
  const auto model = load_model(p.model);
  prepare_out(p.out);
  write_echo(p.out, to_json(p));
  export_pca(model.model, ds.graph, p.out / kPcaFile);
  log << "wrote " << ds.graph.num_nodes() << " PCA rows\n";
  return kOk;
}

int replay(const Json& config, const std::optional<fs::path>& out, std::ostream& log) {
  if (!config.is_object()) throw ValidationError("config echo must be a JSON object");
  const auto command = field(config, "command").get<std::string>();
  const auto data = path_field(config, "data");
  const auto recorded = field(config, "dataset_checksum").get<std::string>();
  if (dataset_checksum(data) != recorded) {
    throw ValidationError("dataset at " + data.string() + " no longer matches the recorded checksum");
  }
  const fs::path target = out ? *out : path_field(config, "out");

  if (command == "train-surrogate") {
    TrainParams p{data, target, split_spec_from_json(field(config, "split")),
                  train_config_from_json(field(config, "train"))};
    return train_surrogate_cmd(p, log);
  }
  if (command == "attack") {
    AttackParams p{data, path_field(config, "model"), target, split_spec_from_json(field(config, "split")),
                   attack_config_from_json(field(config, "attack"))};
    return attack_cmd(p, log);
  }
  if (command == "evaluate") {
    EvaluateParams p;
    p.data = data;
    p.out = target;
    if (!field(config, "edits").is_null()) p.edits = path_field(config, "edits");
    p.split = split_spec_from_json(field(config, "split"));
    p.victim = victim_spec_from_json(field(config, "victim"));
    p.trial_seed = field(config, "trial_seed").get<std::uint64_t>();
    p.jobs = field(config, "jobs").get<int>();
    return evaluate_cmd(p, log);
  }
  if (command == "reproduce") {
    ReproduceParams p;
    p.data = data;
    p.out = target;
    p.split = split_spec_from_json(field(config, "split"));
    p.scenario = parse_scenario(field(config, "scenario").get<std::string>());
    p.budgets = field(config, "budgets").get<std::vector<double>>();
    p.methods = field(config, "methods").get<std::vector<std::string>>();
    p.surrogate = train_config_from_json(field(config, "surrogate"));
    p.attack = attack_config_from_json(field(config, "attack"));
    p.victim = victim_spec_from_json(field(config, "victim"));
    p.trial_seed = field(config, "trial_seed").get<std::uint64_t>();
    p.jobs = field(config, "jobs").get<int>();
    return reproduce_cmd(p, log);
  }
  if (command == "export-pca") {
    return export_pca_cmd(PcaParams{data, path_field(config, "model"), target}, log);
  }
  throw ValidationError("unknown command '" + command + "' in config echo");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kNumeric;
  if (dynamic_cast<const Error*>(&e) != nullptr) return kUsage;
  if (dynamic_cast<const Json::exception*>(&e) != nullptr) return kUsage;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kUsage;
  return kNumeric;
}

}  // namespace srlim::cli
