#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "srlim/error.hpp"
#include "srlim/log.hpp"
#include "support/paths.hpp"

using namespace srlim;
using namespace srlim::cli;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs a command body and maps an escaping exception the way main() does.
template <typename F>
int run(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return exit_code_for(e);
  }
}

// Every output file of `a` equals its counterpart in `b`. config.json records
// the output directory itself and attack_log.json a wall-clock time, so those
// two are compared with that field removed.
void expect_same_outputs(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    ASSERT_TRUE(fs::exists(b / name)) << name;
    ++files;
    if (name == kConfigFile || name == kAttackLogFile) {
      auto ja = read_json(a / name);
      auto jb = read_json(b / name);
      ja.erase(name == kConfigFile ? "out" : "wall_time_s");
      jb.erase(name == kConfigFile ? "out" : "wall_time_s");
      EXPECT_EQ(ja.dump(), jb.dump()) << name;
    } else {
      EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    }
  }
  EXPECT_GT(files, 1u);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    log::set_quiet(true);
    dir_ = test_support::scratch_dir("cli");
  }

  TrainParams train_params(const std::string& out, TrainMode mode, int epochs = 40) const {
    TrainParams p;
    p.data = sbm_;
    p.out = dir_ / out;
    p.train.mode = mode;
    p.train.epochs = epochs;
    p.train.seed = 3;
    return p;
  }

  fs::path dir_;
  fs::path sbm_ = test_support::fixture("sbm");
  std::ostringstream log_;
};

}  // namespace

TEST_F(Cli, ValidateDataset) {
  std::ostringstream out;
  EXPECT_EQ(validate_dataset(sbm_, out), kOk);
  EXPECT_NE(out.str().find("n=300 edges=980"), std::string::npos) << out.str();

  const auto broken = dir_ / "broken";
  fs::copy(sbm_, broken);
  fs::remove(broken / "labels.tsv");
  try {
    validate_dataset(broken, out);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_EQ(exit_code_for(e), kUsage);
    EXPECT_NE(std::string(e.what()).find("labels.tsv"), std::string::npos);
  }

  const auto corrupt = dir_ / "corrupt";
  fs::copy(sbm_, corrupt);
  auto labels = slurp(corrupt / "labels.tsv");
  labels[labels.find("\t0\n") + 1] = '1';
  std::ofstream(corrupt / "labels.tsv", std::ios::binary | std::ios::trunc) << labels;
  EXPECT_EQ(run([&] { return validate_dataset(corrupt, out); }), kUsage);
}

TEST_F(Cli, ZeroLambdaWeightsEqualCrossEntropy) {
  ASSERT_EQ(train_surrogate_cmd(train_params("ce", TrainMode::kCrossEntropy), log_), kOk);
  auto p = train_params("sr0", TrainMode::kSrlim);
  p.train.lambda = 0.0;
  ASSERT_EQ(train_surrogate_cmd(p, log_), kOk);
  const auto a = read_json(dir_ / "ce" / kModelFile);
  const auto b = read_json(dir_ / "sr0" / kModelFile);
  EXPECT_EQ(a["w0"].dump(), b["w0"].dump());
  EXPECT_EQ(a["w1"].dump(), b["w1"].dump());
}

TEST_F(Cli, ZeroEpochsWritesInitialization) {
  ASSERT_EQ(train_surrogate_cmd(train_params("init", TrainMode::kSrlim, 0), log_), kOk);
  const auto loaded = load_model(dir_ / "init" / kModelFile);
  const auto init = init_gcn(120, 16, 3, 3);
  EXPECT_EQ(loaded.model.w0, init.w0);
  EXPECT_EQ(loaded.model.w1, init.w1);
  EXPECT_EQ(loaded.config.mode, TrainMode::kSrlim);
  EXPECT_TRUE(read_json(dir_ / "init" / kTrainLogFile).empty());
}

TEST_F(Cli, AttackVariants) {
  ASSERT_EQ(train_surrogate_cmd(train_params("ce", TrainMode::kCrossEntropy), log_), kOk);
  auto attack = [&](const std::string& out, AttackMethod method, int k, std::uint64_t seed) {
    AttackParams p;
    p.data = sbm_;
    p.model = dir_ / "ce" / kModelFile;
    p.out = dir_ / out;
    p.attack.method = method;
    p.attack.explore_k = k;
    p.attack.seed = seed;
    p.attack.budget_fraction = 0.02;
    EXPECT_EQ(attack_cmd(p, log_), kOk);
    return slurp(dir_ / out / kEditsFile);
  };
  EXPECT_EQ(attack("dice_a", AttackMethod::kDice, 1, 7), attack("dice_b", AttackMethod::kDice, 1, 7));
  EXPECT_EQ(attack("greedy", AttackMethod::kGreedy, 20, 0), attack("explore1", AttackMethod::kExplore, 1, 0));
  const auto edits = read_edits(dir_ / "greedy" / kEditsFile);
  EXPECT_EQ(edits.flips.size(), 19u);  // floor(0.02 * 980)
  EXPECT_EQ(edits.base_checksum, dataset_checksum(sbm_));
  const auto log = read_json(dir_ / "greedy" / kAttackLogFile);
  EXPECT_EQ(log["steps"].size(), 19u);
  EXPECT_FALSE(log["exhausted"].get<bool>());
}

TEST_F(Cli, EvaluateRejectsEditsForAnotherDataset) {
  ASSERT_EQ(train_surrogate_cmd(train_params("ce", TrainMode::kCrossEntropy, 5), log_), kOk);
  AttackParams a;
  a.data = sbm_;
  a.model = dir_ / "ce" / kModelFile;
  a.out = dir_ / "atk";
  a.attack.budget_fraction = 0.01;
  ASSERT_EQ(attack_cmd(a, log_), kOk);
  EvaluateParams e;
  e.data = test_support::fixture("moons");
  e.edits = dir_ / "atk" / kEditsFile;
  e.out = dir_ / "eval";
  EXPECT_EQ(run([&] { return evaluate_cmd(e, log_); }), kUsage);
}

TEST_F(Cli, ReproduceEnforcesScenario) {
  ReproduceParams p;
  p.data = test_support::fixture("moons");
  p.out = dir_ / "rep";
  p.scenario = Scenario::kArchAgnostic;
  EXPECT_EQ(run([&] { return reproduce_cmd(p, log_); }), kUsage);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(exit_code_for(NumericError("x")), kNumeric);
  EXPECT_EQ(exit_code_for(ValidationError("x")), kUsage);
  EXPECT_EQ(exit_code_for(ContractError("x")), kUsage);
}

TEST_F(Cli, ReplayReproducesEveryCommandBitwise) {
  const auto moons = test_support::fixture("moons");
  ASSERT_EQ(train_surrogate_cmd(train_params("ce", TrainMode::kCrossEntropy), log_), kOk);
  ASSERT_EQ(train_surrogate_cmd(train_params("sr", TrainMode::kSrlim, 20), log_), kOk);

  std::vector<std::string> runs = {"ce", "sr"};
  for (const auto method : {AttackMethod::kGreedy, AttackMethod::kExplore, AttackMethod::kDice}) {
    AttackParams p;
    p.data = sbm_;
    p.model = dir_ / "sr" / kModelFile;
    p.out = dir_ / ("atk_" + to_string(method));
    p.attack.method = method;
    p.attack.budget_fraction = 0.01;
    p.attack.explore_k = 5;
    ASSERT_EQ(attack_cmd(p, log_), kOk);
    runs.push_back(p.out.filename());
  }
  EvaluateParams e;
  e.data = sbm_;
  e.edits = dir_ / "atk_explore" / kEditsFile;
  e.out = dir_ / "eval";
  e.victim.epochs = 30;
  ASSERT_EQ(evaluate_cmd(e, log_), kOk);
  runs.push_back("eval");

  PcaParams pca{sbm_, dir_ / "sr" / kModelFile, dir_ / "pca"};
  ASSERT_EQ(export_pca_cmd(pca, log_), kOk);
  runs.push_back("pca");

  ReproduceParams r;
  r.data = moons;
  r.out = dir_ / "rep";
  r.budgets = {0.01};
  r.methods = {"original", "dice", "explore_srlim"};
  r.surrogate.epochs = 10;
  r.victim.epochs = 20;
  ASSERT_EQ(reproduce_cmd(r, log_), kOk);
  runs.push_back("rep");

  for (const auto& name : runs) {
    const auto again = dir_ / (name + "_replay");
    EXPECT_EQ(replay(read_json(dir_ / name / kConfigFile), again, log_), kOk) << name;
    expect_same_outputs(dir_ / name, again);
  }
}

TEST_F(Cli, ReplayRefusesChangedDataset) {
  const auto copy = dir_ / "data";
  fs::copy(sbm_, copy);
  auto p = train_params("ce", TrainMode::kCrossEntropy, 2);
  p.data = copy;
  ASSERT_EQ(train_surrogate_cmd(p, log_), kOk);
  std::ofstream(copy / "edges.tsv", std::ios::app) << "0\t1\n";
  EXPECT_THROW(replay(read_json(dir_ / "ce" / kConfigFile), dir_ / "again", log_), ValidationError);
}
