#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srlim/gcn.hpp"
#include "srlim/graph.hpp"

namespace srlim {

// The attack loss L_atk is the cross-entropy the attacker drives up.
// kTrain: CE of the labeled (train) nodes.
// kSelf: CE of every node against the surrogate's clean predictions.
enum class AttackLoss { kTrain, kSelf };
enum class AttackMethod { kGreedy, kExplore, kDice };

struct AttackConfig {
  double budget_fraction = 0.05;  // in (0, 0.05]
  AttackLoss loss = AttackLoss::kSelf;
  AttackMethod method = AttackMethod::kGreedy;
  int explore_k = 20;
  bool one_shot = false;  // greedy only: take the top flips of a single gradient
  std::uint64_t seed = 0;
};

// floor(fraction * |E|); ContractError unless fraction is in (0, 0.05] and
// the budget is at least one flip.
std::size_t flip_budget(const Graph& g, double fraction);

struct ScoredFlip {
  Flip flip;
  double score = 0.0;  // |A_grad(u, v)| when selected (0 for random flips)

  friend bool operator==(const ScoredFlip&, const ScoredFlip&) = default;
};

// Per-step diagnostics; losses are only evaluated by the explore method.
struct AttackStep {
  std::size_t candidates = 0;
  double chosen_loss = 0.0;
  double top1_loss = 0.0;
};

struct PerturbationPlan {
  std::vector<ScoredFlip> flips;
  std::vector<AttackStep> steps;
  std::string base_checksum;
  std::size_t budget = 0;
  bool exhausted = false;  // ran out of candidates before the budget
  bool one_shot = false;   // all flips were ranked on the clean graph's gradient

  std::vector<Flip> edits() const;
};

// Surrogate-side state that stays fixed during an attack: the trained weights,
// the feature projection X W0 and the loss targets. Test labels are erased on
// construction and never read afterwards.
class AttackSurrogate {
 public:
  AttackSurrogate(const Graph& clean, const GcnModel& model, AttackLoss loss);

  const Graph& clean_graph() const { return clean_; }
  const GcnModel& model() const { return model_; }
  AttackLoss loss_kind() const { return loss_; }
  std::span<const int> targets() const { return targets_; }
  std::span<const NodeId> loss_nodes() const { return nodes_; }

  // L_atk = CE(targets) on `current`.
  double attack_loss(const Graph& current) const;
  // d L_atk / d A through the renormalized adjacency, symmetrized, zero diagonal.
  Eigen::MatrixXd adjacency_gradient(const Graph& current) const;

 private:
  Graph clean_;
  GcnModel model_;
  AttackLoss loss_;
  Eigen::MatrixXd xw0_;
  std::vector<int> targets_;
  std::vector<NodeId> nodes_;
};

// Surrogate argmax predictions on g.
std::vector<int> pseudo_labels(const Graph& g, const GcnModel& m);

Eigen::MatrixXd adjacency_gradient(const Graph& g, const GcnModel& m, AttackLoss loss);

// Flips allowed by the sign rule: an edge with negative gradient (remove) or a
// non-edge with positive gradient (add). Sorted by |gradient| descending, then
// (u, v) ascending.
std::vector<ScoredFlip> eligible_flips(const Graph& g, const Eigen::MatrixXd& grad);
// The first k entries of eligible_flips, skipping pairs in `excluded`.
std::vector<ScoredFlip> top_eligible_flips(const Graph& g, const Eigen::MatrixXd& grad, std::size_t k,
                                           const std::set<Edge>& excluded = {});

PerturbationPlan attack_greedy(const Graph& g, const GcnModel& m, const AttackConfig& cfg);
PerturbationPlan attack_explore(const Graph& g, const GcnModel& m, const AttackConfig& cfg);
// Uniform sampling from {remove same-class edge} U {add cross-class non-edge}.
PerturbationPlan attack_dice(const Graph& g, std::span<const int> effective_labels, const AttackConfig& cfg);
// Train labels where known, surrogate predictions elsewhere.
std::vector<int> dice_labels(const Graph& g, const GcnModel& m);

PerturbationPlan run_attack(const Graph& g, const GcnModel& m, const AttackConfig& cfg);

// Re-derives the gradient on every intermediate graph and checks that each
// flip obeyed the sign rule when it was taken. Returns the index of the first
// violating flip, or -1.
long find_sign_rule_violation(const Graph& g, const GcnModel& m, AttackLoss loss,
                              const PerturbationPlan& plan);

}  // namespace srlim
