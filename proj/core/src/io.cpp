#include "srlim/io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <utility>

#include "srlim/error.hpp"

namespace srlim {
namespace {

template <typename E>
using Names = std::initializer_list<std::pair<E, const char*>>;

template <typename E>
std::string name_of(E value, Names<E> names) {
  for (const auto& [v, n] : names) {
    if (v == value) return n;
  }
  throw ContractError("unnamed enum value");
}

template <typename E>
E parse_name(const std::string& s, Names<E> names, const char* what) {
  std::string options;
  for (const auto& [v, n] : names) {
    if (s == n) return v;
    options += options.empty() ? n : std::string(", ") + n;
  }
  throw ValidationError("unknown " + std::string(what) + " '" + s + "' (expected one of: " + options + ")");
}

constexpr Names<TrainMode> kTrainModes = {{TrainMode::kCrossEntropy, "ce"}, {TrainMode::kSrlim, "srlim"}};
constexpr Names<PathMode> kPathModes = {{PathMode::kFrozen, "frozen"}, {PathMode::kRecompute, "recompute"}};
constexpr Names<OptimizerKind> kOptimizers = {{OptimizerKind::kGradientDescent, "gd"}, {OptimizerKind::kAdam, "adam"}};
constexpr Names<AttackLoss> kLosses = {{AttackLoss::kTrain, "train"}, {AttackLoss::kSelf, "self"}};
constexpr Names<AttackMethod> kMethods = {
    {AttackMethod::kGreedy, "greedy"}, {AttackMethod::kExplore, "explore"}, {AttackMethod::kDice, "dice"}};
constexpr Names<VictimArch> kArchs = {{VictimArch::kGcn, "gcn"}, {VictimArch::kChebNet, "chebnet"}};

// Reads keys of one JSON object into fields, rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ValidationError(what_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ValidationError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ValidationError("");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw ValidationError(what_ + "." + key + " has the wrong type");
    }
  }

  template <typename E>
  void get_enum(const char* key, E& out, E (*parse)(const std::string&)) {
    std::string s;
    bool present = j_.contains(key);
    get(key, s);
    if (present) out = parse(s);
  }

  template <typename T, typename Parse>
  void get_object(const char* key, T& out, Parse parse) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    if (it != j_.end()) out = parse(*it);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw ValidationError("unknown key '" + key + "' in " + what_);
      }
    }
  }

 private:
  const Json& j_;
  std::string what_;
  std::vector<std::string> seen_;
};

Json matrix_values(const Eigen::MatrixXd& m) {
  Json values = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  }
  return values;
}

Eigen::MatrixXd read_matrix(const Json& model, const char* name) {
  const auto& shape = model.at("shapes").at(name);
  const auto rows = shape.at(0).get<Eigen::Index>();
  const auto cols = shape.at(1).get<Eigen::Index>();
  const auto& values = model.at(name);
  if (rows < 1 || cols < 1 || !values.is_array() || static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw ValidationError(std::string("model weight ") + name + " does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values.at(k++).get<double>();
  }
  return m;
}

}  // namespace

std::string to_string(TrainMode m) { return name_of(m, kTrainModes); }
std::string to_string(PathMode m) { return name_of(m, kPathModes); }
std::string to_string(OptimizerKind k) { return name_of(k, kOptimizers); }
std::string to_string(AttackLoss l) { return name_of(l, kLosses); }
std::string to_string(AttackMethod m) { return name_of(m, kMethods); }
std::string to_string(VictimArch a) { return name_of(a, kArchs); }
TrainMode parse_train_mode(const std::string& s) { return parse_name(s, kTrainModes, "mode"); }
PathMode parse_path_mode(const std::string& s) { return parse_name(s, kPathModes, "path mode"); }
OptimizerKind parse_optimizer_kind(const std::string& s) { return parse_name(s, kOptimizers, "optimizer"); }
AttackLoss parse_attack_loss(const std::string& s) { return parse_name(s, kLosses, "attack loss"); }
AttackMethod parse_attack_method(const std::string& s) { return parse_name(s, kMethods, "attack method"); }
VictimArch parse_victim_arch(const std::string& s) { return parse_name(s, kArchs, "victim architecture"); }

Json to_json(const OptimizerConfig& c) {
  return {{"kind", to_string(c.kind)}, {"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},          {"beta2", c.beta2},                 {"epsilon", c.epsilon}};
}

Json to_json(const GeodesicConfig& c) {
  return {{"dof", c.dof},
          {"compactness", c.compactness},
          {"gamma", c.gamma},
          {"eps_lo", c.eps_lo},
          {"eps_hi", c.eps_hi},
          {"eps_tol", c.eps_tol},
          {"max_bisect_iters", c.max_bisect_iters},
          {"max_bracket_expansions", c.max_bracket_expansions}};
}

Json to_json(const TrainConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"epochs", c.epochs},
          {"hidden_dim", c.hidden_dim},
          {"optimizer", to_json(c.optimizer)},
          {"lambda", c.lambda},
          {"batch_size", c.batch_size},
          {"geodesic", to_json(c.geodesic)},
          {"path_mode", to_string(c.path_mode)},
          {"seed", c.seed}};
}

Json to_json(const AttackConfig& c) {
  return {{"budget_fraction", c.budget_fraction}, {"loss", to_string(c.loss)}, {"method", to_string(c.method)},
          {"explore_k", c.explore_k},             {"one_shot", c.one_shot},    {"seed", c.seed}};
}

Json to_json(const VictimSpec& c) {
  return {{"arch", to_string(c.arch)}, {"hidden_dim", c.hidden_dim},        {"cheb_order", c.cheb_order},
          {"epochs", c.epochs},        {"optimizer", to_json(c.optimizer)}, {"seed", c.seed}};
}

Json to_json(const SplitSpec& c) {
  return {{"seed", c.seed}, {"labeled_fraction", c.labeled_fraction}, {"stratified", c.stratified}};
}

OptimizerConfig optimizer_config_from_json(const Json& j, const OptimizerConfig& base) {
  OptimizerConfig c = base;
  ObjectReader r(j, "optimizer");
  r.get_enum("kind", c.kind, parse_optimizer_kind);
  r.get("learning_rate", c.learning_rate);
  r.get("weight_decay", c.weight_decay);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("epsilon", c.epsilon);
  r.finish();
  return c;
}

GeodesicConfig geodesic_config_from_json(const Json& j, const GeodesicConfig& base) {
  GeodesicConfig c = base;
  ObjectReader r(j, "geodesic");
  r.get("dof", c.dof);
  r.get("compactness", c.compactness);
  r.get("gamma", c.gamma);
  r.get("eps_lo", c.eps_lo);
  r.get("eps_hi", c.eps_hi);
  r.get("eps_tol", c.eps_tol);
  r.get("max_bisect_iters", c.max_bisect_iters);
  r.get("max_bracket_expansions", c.max_bracket_expansions);
  r.finish();
  return c;
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& base) {
  TrainConfig c = base;
  ObjectReader r(j, "train config");
  r.get_enum("mode", c.mode, parse_train_mode);
  r.get("epochs", c.epochs);
  r.get("hidden_dim", c.hidden_dim);
  r.get_object("optimizer", c.optimizer, [&](const Json& x) { return optimizer_config_from_json(x, c.optimizer); });
  r.get("lambda", c.lambda);
  r.get("batch_size", c.batch_size);
  r.get_object("geodesic", c.geodesic, [&](const Json& x) { return geodesic_config_from_json(x, c.geodesic); });
  r.get_enum("path_mode", c.path_mode, parse_path_mode);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

AttackConfig attack_config_from_json(const Json& j, const AttackConfig& base) {
  AttackConfig c = base;
  ObjectReader r(j, "attack config");
  r.get("budget_fraction", c.budget_fraction);
  r.get_enum("loss", c.loss, parse_attack_loss);
  r.get_enum("method", c.method, parse_attack_method);
  r.get("explore_k", c.explore_k);
  r.get("one_shot", c.one_shot);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

VictimSpec victim_spec_from_json(const Json& j, const VictimSpec& base) {
  VictimSpec c = base;
  ObjectReader r(j, "victim");
  r.get_enum("arch", c.arch, parse_victim_arch);
  r.get("hidden_dim", c.hidden_dim);
  r.get("cheb_order", c.cheb_order);
  r.get("epochs", c.epochs);
  r.get_object("optimizer", c.optimizer, [&](const Json& x) { return optimizer_config_from_json(x, c.optimizer); });
  r.get("seed", c.seed);
  r.finish();
  return c;
}

SplitSpec split_spec_from_json(const Json& j, const SplitSpec& base) {
  SplitSpec c = base;
  ObjectReader r(j, "split");
  r.get("seed", c.seed);
  r.get("labeled_fraction", c.labeled_fraction);
  r.get("stratified", c.stratified);
  r.finish();
  return c;
}

void save_model(const std::filesystem::path& path, const GcnModel& m, const TrainConfig& cfg) {
  Json j;
  j["format"] = "srlim-gcn";
  j["seed"] = m.seed;
  j["shapes"] = {{"w0", {m.w0.rows(), m.w0.cols()}}, {"w1", {m.w1.rows(), m.w1.cols()}}};
  j["config"] = to_json(cfg);
  j["w0"] = matrix_values(m.w0);
  j["w1"] = matrix_values(m.w1);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  const Json j = read_json(path);
  try {
    if (j.at("format") != "srlim-gcn") throw ValidationError(path.string() + ": not a model file");
    LoadedModel out;
    out.model.seed = j.at("seed").get<std::uint64_t>();
    out.model.w0 = read_matrix(j, "w0");
    out.model.w1 = read_matrix(j, "w1");
    if (out.model.w0.cols() != out.model.w1.rows()) throw ValidationError(path.string() + ": hidden sizes disagree");
    out.config = train_config_from_json(j.at("config"));
    return out;
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": malformed model file (" + e.what() + ")");
  }
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace srlim
