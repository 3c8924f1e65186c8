#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "srlim/log.hpp"

namespace {

using namespace srlim;
using namespace srlim::cli;

void add_split_flags(CLI::App* app, SplitSpec& s) {
  app->add_option("--split-seed", s.seed, "seed of the train/test split")->capture_default_str();
  app->add_option("--labeled-fraction", s.labeled_fraction, "fraction of labeled nodes used for training")
      ->capture_default_str();
  app->add_option("--stratified", s.stratified, "stratify the split by class (true|false)")->capture_default_str();
}

void add_optimizer_flags(CLI::App* app, const std::string& prefix, OptimizerConfig& o, std::string& kind) {
  app->add_option("--" + prefix + "optimizer", kind, "gd | adam")->capture_default_str();
  app->add_option("--" + prefix + "lr", o.learning_rate, "learning rate")->capture_default_str();
  app->add_option("--" + prefix + "weight-decay", o.weight_decay, "L2 weight decay")->capture_default_str();
}

// Enum-valued flags are read as strings and parsed after CLI11 is done.
struct TrainFlags {
  std::string mode;
  std::string optimizer;
  std::string path_mode;
};

void add_train_flags(CLI::App* app, const std::string& prefix, TrainConfig& t, TrainFlags& f, bool with_mode) {
  f.mode = to_string(t.mode);
  f.optimizer = to_string(t.optimizer.kind);
  f.path_mode = to_string(t.path_mode);
  if (with_mode) app->add_option("--mode", f.mode, "ce | srlim")->capture_default_str();
  app->add_option("--" + prefix + "epochs", t.epochs, "training epochs")->capture_default_str();
  app->add_option("--" + prefix + "hidden", t.hidden_dim, "hidden width")->capture_default_str();
  add_optimizer_flags(app, prefix, t.optimizer, f.optimizer);
  app->add_option("--lambda", t.lambda, "weight of the isometric-mapping loss")->capture_default_str();
  app->add_option("--batch-size", t.batch_size, "isometric-mapping batch size")->capture_default_str();
  app->add_option("--dof", t.geodesic.dof, "t-distribution degrees of freedom")->capture_default_str();
  app->add_option("--compactness", t.geodesic.compactness, "calibration target Q")->capture_default_str();
  app->add_option("--gamma", t.geodesic.gamma, "disconnected-pair distance multiplier")->capture_default_str();
  app->add_option("--path-mode", f.path_mode, "frozen | recompute")->capture_default_str();
  app->add_option("--" + prefix + "seed", t.seed, "surrogate initialization and batching seed")->capture_default_str();
}

void resolve(TrainConfig& t, const TrainFlags& f) {
  t.mode = parse_train_mode(f.mode);
  t.optimizer.kind = parse_optimizer_kind(f.optimizer);
  t.path_mode = parse_path_mode(f.path_mode);
}

struct AttackFlags {
  std::string method;
  std::string loss;
};

void add_attack_flags(CLI::App* app, AttackConfig& a, AttackFlags& f, bool with_method) {
  f.method = to_string(a.method);
  f.loss = to_string(a.loss);
  if (with_method) {
    app->add_option("--method", f.method, "greedy | explore | dice")->capture_default_str();
    app->add_option("--budget", a.budget_fraction, "flip budget as a fraction of |E|, in (0, 0.05]")
        ->capture_default_str();
    app->add_flag("--one-shot", a.one_shot, "greedy: rank all flips on the clean graph's gradient");
  }
  app->add_option("--loss", f.loss, "attack loss: train | self")->capture_default_str();
  app->add_option("--explore-k", a.explore_k, "candidate pool of the explore method")->capture_default_str();
  app->add_option("--attack-seed", a.seed, "seed of random attacks (DICE)")->capture_default_str();
}

void resolve(AttackConfig& a, const AttackFlags& f) {
  a.method = parse_attack_method(f.method);
  a.loss = parse_attack_loss(f.loss);
}

struct VictimFlags {
  std::string arch;
  std::string optimizer;
};

void add_victim_flags(CLI::App* app, VictimSpec& v, VictimFlags& f) {
  f.arch = to_string(v.arch);
  f.optimizer = to_string(v.optimizer.kind);
  app->add_option("--victim-arch", f.arch, "gcn | chebnet")->capture_default_str();
  app->add_option("--victim-hidden", v.hidden_dim, "victim hidden width")->capture_default_str();
  app->add_option("--cheb-order", v.cheb_order, "number of Chebyshev terms")->capture_default_str();
  app->add_option("--victim-epochs", v.epochs, "victim training epochs")->capture_default_str();
  add_optimizer_flags(app, "victim-", v.optimizer, f.optimizer);
}

void resolve(VictimSpec& v, const VictimFlags& f) {
  v.arch = parse_victim_arch(f.arch);
  v.optimizer.kind = parse_optimizer_kind(f.optimizer);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srlim: gray-box graph poisoning toolkit"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress warnings");

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate-dataset", "check a dataset directory and print its manifest");
  validate->add_option("dir", validate_dir, "dataset directory")->required();

  TrainParams train;
  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train-surrogate", "train a CE or SRLIM surrogate");
  train_cmd->add_option("--data", train.data, "dataset directory")->required();
  train_cmd->add_option("--out", train.out, "output directory")->required();
  add_split_flags(train_cmd, train.split);
  add_train_flags(train_cmd, "", train.train, train_flags, true);

  AttackParams attack;
  AttackFlags attack_flags;
  auto* attack_sub = app.add_subcommand("attack", "craft an edge-flip poisoning plan");
  attack_sub->add_option("--data", attack.data, "dataset directory")->required();
  attack_sub->add_option("--model", attack.model, "surrogate model.json")->required();
  attack_sub->add_option("--out", attack.out, "output directory")->required();
  add_split_flags(attack_sub, attack.split);
  add_attack_flags(attack_sub, attack.attack, attack_flags, true);

  EvaluateParams evaluate;
  VictimFlags eval_victim;
  std::string edits;
  auto* evaluate_sub = app.add_subcommand("evaluate", "train 20 victims on the (poisoned) graph");
  evaluate_sub->add_option("--data", evaluate.data, "dataset directory")->required();
  evaluate_sub->add_option("--edits", edits, "edits.tsv to apply before training (clean graph if omitted)");
  evaluate_sub->add_option("--out", evaluate.out, "output directory")->required();
  add_split_flags(evaluate_sub, evaluate.split);
  add_victim_flags(evaluate_sub, evaluate.victim, eval_victim);
  evaluate_sub->add_option("--trial-seed", evaluate.trial_seed, "first of the 20 victim seeds")->capture_default_str();
  evaluate_sub->add_option("--jobs", evaluate.jobs, "parallel trials")->capture_default_str();

  ReproduceParams reproduce;
  TrainFlags repro_train;
  AttackFlags repro_attack;
  VictimFlags repro_victim;
  std::string scenario = scenario_name(reproduce.scenario);
  auto* reproduce_sub = app.add_subcommand("reproduce", "run the method x budget matrix for one dataset");
  reproduce_sub->add_option("--data", reproduce.data, "dataset directory")->required();
  reproduce_sub->add_option("--out", reproduce.out, "output directory")->required();
  reproduce_sub->add_option("--scenario", scenario, "weight_agnostic | arch_agnostic")->capture_default_str();
  reproduce_sub->add_option("--budgets", reproduce.budgets, "comma-separated budget fractions")
      ->delimiter(',')
      ->capture_default_str();
  reproduce_sub->add_option("--methods", reproduce.methods, "comma-separated subset of the five methods")
      ->delimiter(',')
      ->capture_default_str();
  add_split_flags(reproduce_sub, reproduce.split);
  add_train_flags(reproduce_sub, "surrogate-", reproduce.surrogate, repro_train, false);
  add_attack_flags(reproduce_sub, reproduce.attack, repro_attack, false);
  add_victim_flags(reproduce_sub, reproduce.victim, repro_victim);
  reproduce_sub->add_option("--trial-seed", reproduce.trial_seed, "first of the 20 victim seeds")->capture_default_str();
  reproduce_sub->add_option("--jobs", reproduce.jobs, "parallel trials")->capture_default_str();

  PcaParams pca;
  auto* pca_sub = app.add_subcommand("export-pca", "project a surrogate's embedding layer onto two components");
  pca_sub->add_option("--data", pca.data, "dataset directory")->required();
  pca_sub->add_option("--model", pca.model, "surrogate model.json")->required();
  pca_sub->add_option("--out", pca.out, "output directory")->required();

  std::string replay_config;
  std::string replay_out;
  auto* replay_sub = app.add_subcommand("replay", "re-run a command from its config.json");
  replay_sub->add_option("config", replay_config, "config.json written by an earlier run")->required();
  replay_sub->add_option("--out", replay_out, "write outputs here instead of the recorded directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  log::set_quiet(quiet);

  try {
    if (validate->parsed()) return validate_dataset(validate_dir, std::cout);
    if (train_cmd->parsed()) {
      resolve(train.train, train_flags);
      return train_surrogate_cmd(train, std::cout);
    }
    if (attack_sub->parsed()) {
      resolve(attack.attack, attack_flags);
      return attack_cmd(attack, std::cout);
    }
    if (evaluate_sub->parsed()) {
      resolve(evaluate.victim, eval_victim);
      if (!edits.empty()) evaluate.edits = edits;
      return evaluate_cmd(evaluate, std::cout);
    }
    if (reproduce_sub->parsed()) {
      resolve(reproduce.surrogate, repro_train);
      resolve(reproduce.attack, repro_attack);
      reproduce.scenario = parse_scenario(scenario);
      // The arch-agnostic scenario defaults its victim to ChebNet; an explicit
      // GCN victim is rejected by the harness.
      if (reproduce.scenario == Scenario::kArchAgnostic && reproduce_sub->count("--victim-arch") == 0) {
        repro_victim.arch = to_string(VictimArch::kChebNet);
      }
      resolve(reproduce.victim, repro_victim);
      return reproduce_cmd(reproduce, std::cout);
    }
    if (pca_sub->parsed()) return export_pca_cmd(pca, std::cout);
    if (replay_sub->parsed()) {
      std::optional<std::filesystem::path> out;
      if (!replay_out.empty()) out = replay_out;
      return replay(read_json(replay_config), out, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}
