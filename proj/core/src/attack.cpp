#include "srlim/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "srlim/error.hpp"
#include "srlim/log.hpp"
#include "srlim/rng.hpp"

namespace srlim {
namespace {

// Strict weak order matching the published ranking: score desc, then (u, v).
bool ranks_before(const ScoredFlip& a, const ScoredFlip& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.flip.u != b.flip.u) return a.flip.u < b.flip.u;
  return a.flip.v < b.flip.v;
}

// Visits every sign-rule-eligible pair u < v with its flip kind and score.
template <typename Fn>
void for_each_eligible(const Graph& g, const Eigen::MatrixXd& grad, Fn&& fn) {
  const int n = g.num_nodes();
  if (grad.rows() != n || grad.cols() != n) throw ContractError("gradient shape does not match graph");
  for (NodeId u = 0; u < n; ++u) {
    const auto nbrs = g.neighbors(u);
    auto next = std::upper_bound(nbrs.begin(), nbrs.end(), u);
    // The gradient is symmetric; column u is contiguous in memory.
    const double* column = grad.col(u).data();
    for (NodeId v = u + 1; v < n; ++v) {
      const bool is_edge = next != nbrs.end() && *next == v;
      if (is_edge) ++next;
      const double value = column[v];
      if (is_edge ? value < 0.0 : value > 0.0) {
        fn(ScoredFlip{Flip{u, v, is_edge ? FlipKind::kRemove : FlipKind::kAdd}, std::abs(value)});
      }
    }
  }
}

}  // namespace

std::vector<Flip> PerturbationPlan::edits() const {
  std::vector<Flip> out;
  out.reserve(flips.size());
  for (const auto& f : flips) out.push_back(f.flip);
  return out;
}

std::size_t flip_budget(const Graph& g, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.05)) {
    throw ContractError("budget fraction must lie in (0, 0.05]");
  }
  const auto budget =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(g.num_edges()) + 1e-9));
  if (budget < 1) throw ContractError("budget is below one edge flip");
  return budget;
}

std::vector<int> pseudo_labels(const Graph& g, const GcnModel& m) {
  const auto adj = normalize_adjacency(g);
  return argmax_rows(gcn_forward(g.features(), adj.a_hat, m).logits);
}

AttackSurrogate::AttackSurrogate(const Graph& clean, const GcnModel& model, AttackLoss loss)
    : clean_(clean.without_test_labels()), model_(model), loss_(loss) {
  if (clean_.feature_dim() != model_.feature_dim() || clean_.num_classes() != model_.num_classes()) {
    throw ContractError("surrogate model does not match the graph");
  }
  xw0_ = clean_.features() * model_.w0;
  if (loss_ == AttackLoss::kTrain) {
    if (!clean_.has_split()) throw ContractError("train attack loss needs a split");
    nodes_ = clean_.train_nodes();
    targets_.assign(clean_.labels().begin(), clean_.labels().end());
  } else {
    nodes_.resize(static_cast<std::size_t>(clean_.num_nodes()));
    std::iota(nodes_.begin(), nodes_.end(), 0);
    targets_ = pseudo_labels(clean_, model_);
  }
  if (nodes_.empty()) throw ContractError("attack loss has no nodes");
}

double AttackSurrogate::attack_loss(const Graph& current) const {
  const auto adj = normalize_adjacency(current);
  const auto trace = gcn_forward_projected(xw0_, adj.a_hat, model_);
  return ce_loss_from_logits(trace.logits, targets_, nodes_, nullptr);
}

Eigen::MatrixXd AttackSurrogate::adjacency_gradient(const Graph& current) const {
  const int n = current.num_nodes();
  const auto adj = normalize_adjacency(current);
  const auto trace = gcn_forward_projected(xw0_, adj.a_hat, model_);
  Eigen::MatrixXd grad_logits;
  ce_loss_from_logits(trace.logits, targets_, nodes_, &grad_logits);
  const auto back = gcn_backward(trace, current.features(), adj.a_hat, model_, grad_logits);

  // d L / d Â: Â enters as Â (X W0) and as Â (H1 W1).
  Eigen::MatrixXd grad_ahat = grad_logits * trace.h1w1.transpose();
  grad_ahat.noalias() += back.pre1 * trace.xw0.transpose();

  // Â_ij = Ã_ij r_i r_j with r = d̃^{-1/2}, d̃_i = sum_j Ã_ij.
  const Eigen::VectorXd r = adj.degrees.array().rsqrt();
  Eigen::VectorXd grad_r = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    grad_r[i] += 2.0 * grad_ahat(i, i) * r[i];
    for (const NodeId j : current.neighbors(i)) {
      grad_r[i] += (grad_ahat(i, j) + grad_ahat(j, i)) * r[j];
    }
  }
  // d L / d d̃_i, which every entry of row i of Ã receives.
  const Eigen::VectorXd row_term = (-0.5 * grad_r.array() * r.array().cube()).matrix();

  for (int j = 0; j < n; ++j) {
    grad_ahat(j, j) = 0.0;
    for (int i = j + 1; i < n; ++i) {
      const double sym = 0.5 * (r[i] * r[j] * (grad_ahat(i, j) + grad_ahat(j, i)) + row_term[i] + row_term[j]);
      grad_ahat(i, j) = sym;
      grad_ahat(j, i) = sym;
    }
  }
  if (!grad_ahat.allFinite()) throw NumericError("non-finite adjacency gradient");
  return grad_ahat;
}

Eigen::MatrixXd adjacency_gradient(const Graph& g, const GcnModel& m, AttackLoss loss) {
  return AttackSurrogate(g, m, loss).adjacency_gradient(g);
}

std::vector<ScoredFlip> eligible_flips(const Graph& g, const Eigen::MatrixXd& grad) {
  std::vector<ScoredFlip> out;
  for_each_eligible(g, grad, [&](const ScoredFlip& f) { out.push_back(f); });
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::vector<ScoredFlip> top_eligible_flips(const Graph& g, const Eigen::MatrixXd& grad, std::size_t k,
                                           const std::set<Edge>& excluded) {
  if (k == 0) return {};
  // Max-heap under ranks_before keeps the worst retained candidate on top.
  std::priority_queue<ScoredFlip, std::vector<ScoredFlip>, decltype(&ranks_before)> heap(ranks_before);
  for_each_eligible(g, grad, [&](const ScoredFlip& f) {
    if (heap.size() == k && !ranks_before(f, heap.top())) return;
    if (!excluded.empty() && excluded.contains(Edge{f.flip.u, f.flip.v})) return;
    heap.push(f);
    if (heap.size() > k) heap.pop();
  });
  std::vector<ScoredFlip> out;
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

PerturbationPlan gradient_attack(const Graph& g, const GcnModel& m, const AttackConfig& cfg,
                                 std::size_t pool) {
  const AttackSurrogate surrogate(g, m, cfg.loss);
  PerturbationPlan plan;
  plan.budget = flip_budget(g, cfg.budget_fraction);

  if (cfg.one_shot) {
    plan.one_shot = true;
    const auto grad = surrogate.adjacency_gradient(surrogate.clean_graph());
    for (const auto& f : top_eligible_flips(surrogate.clean_graph(), grad, plan.budget)) {
      plan.flips.push_back(f);
      plan.steps.push_back({1, 0.0, 0.0});
    }
  } else {
    Graph current = surrogate.clean_graph();
    std::set<Edge> taken;
    for (std::size_t step = 0; step < plan.budget; ++step) {
      const auto grad = surrogate.adjacency_gradient(current);
      const auto candidates = top_eligible_flips(current, grad, pool, taken);
      if (candidates.empty()) break;
      std::size_t best = 0;
      AttackStep log{candidates.size(), 0.0, 0.0};
      if (pool > 1) {
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          const Flip f = candidates[c].flip;
          const double loss = surrogate.attack_loss(apply_flips(current, std::span<const Flip>(&f, 1)));
          if (c == 0) log.top1_loss = loss;
          if (c == 0 || loss > log.chosen_loss) {
            best = c;
            log.chosen_loss = loss;
          }
        }
      }
      const Flip f = candidates[best].flip;
      current = apply_flips(current, std::span<const Flip>(&f, 1));
      taken.insert(Edge{f.u, f.v});
      plan.flips.push_back(candidates[best]);
      plan.steps.push_back(log);
    }
  }
  if (plan.flips.size() < plan.budget) {
    plan.exhausted = true;
    log::warn("attack ran out of eligible flips after " + std::to_string(plan.flips.size()) + " of " +
              std::to_string(plan.budget));
  }
  return plan;
}

}  // namespace

PerturbationPlan attack_greedy(const Graph& g, const GcnModel& m, const AttackConfig& cfg) {
  return gradient_attack(g, m, cfg, 1);
}

PerturbationPlan attack_explore(const Graph& g, const GcnModel& m, const AttackConfig& cfg) {
  if (cfg.explore_k < 1) throw ContractError("explore_k must be at least 1");
  AttackConfig iterative = cfg;
  iterative.one_shot = false;
  return gradient_attack(g, m, iterative, static_cast<std::size_t>(cfg.explore_k));
}

std::vector<int> dice_labels(const Graph& g, const GcnModel& m) {
  const Graph visible = g.without_test_labels();
  auto labels = pseudo_labels(visible, m);
  for (const NodeId i : visible.train_nodes()) labels[static_cast<std::size_t>(i)] = visible.label(i);
  return labels;
}

PerturbationPlan attack_dice(const Graph& g, std::span<const int> effective_labels, const AttackConfig& cfg) {
  const int n = g.num_nodes();
  if (effective_labels.size() != static_cast<std::size_t>(n)) {
    throw ContractError("DICE needs one effective label per node");
  }
  PerturbationPlan plan;
  plan.budget = flip_budget(g, cfg.budget_fraction);
  auto label = [&](NodeId i) { return effective_labels[static_cast<std::size_t>(i)]; };

  std::vector<Flip> removals;
  std::size_t cross_edges = 0;
  for (const auto& e : g.edges()) {
    if (label(e.u) == label(e.v)) {
      removals.push_back({e.u, e.v, FlipKind::kRemove});
    } else {
      ++cross_edges;
    }
  }
  std::vector<std::size_t> class_size(static_cast<std::size_t>(g.num_classes()) + 1, 0);
  for (NodeId i = 0; i < n; ++i) {
    const int c = label(i);
    ++class_size[c < 0 ? class_size.size() - 1 : static_cast<std::size_t>(c)];
  }
  std::size_t cross_pairs = 0;
  for (std::size_t a = 0; a < class_size.size(); ++a) {
    for (std::size_t b = a + 1; b < class_size.size(); ++b) cross_pairs += class_size[a] * class_size[b];
  }
  std::size_t additions_left = cross_pairs - cross_edges;

  SplitMix64 rng(cfg.seed);
  std::set<Edge> added;
  while (plan.flips.size() < plan.budget) {
    const std::size_t pool = removals.size() + additions_left;
    if (pool == 0) break;
    const auto pick = static_cast<std::size_t>(rng.below(pool));
    if (pick < removals.size()) {
      plan.flips.push_back({removals[pick], 0.0});
      removals[pick] = removals.back();
      removals.pop_back();
    } else {
      while (true) {
        auto a = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
        auto b = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
        if (a == b || label(a) == label(b)) continue;
        if (a > b) std::swap(a, b);
        if (g.has_edge(a, b) || added.contains(Edge{a, b})) continue;
        added.insert(Edge{a, b});
        plan.flips.push_back({Flip{a, b, FlipKind::kAdd}, 0.0});
        break;
      }
      --additions_left;
    }
    plan.steps.push_back({pool, 0.0, 0.0});
  }
  if (plan.flips.size() < plan.budget) {
    plan.exhausted = true;
    log::warn("DICE pool exhausted after " + std::to_string(plan.flips.size()) + " flips");
  }
  return plan;
}

PerturbationPlan run_attack(const Graph& g, const GcnModel& m, const AttackConfig& cfg) {
  switch (cfg.method) {
    case AttackMethod::kGreedy:
      return attack_greedy(g, m, cfg);
    case AttackMethod::kExplore:
      return attack_explore(g, m, cfg);
    case AttackMethod::kDice:
      return attack_dice(g, dice_labels(g, m), cfg);
  }
  throw ContractError("unknown attack method");
}

long find_sign_rule_violation(const Graph& g, const GcnModel& m, AttackLoss loss,
                              const PerturbationPlan& plan) {
  const AttackSurrogate surrogate(g, m, loss);
  Graph current = surrogate.clean_graph();
  Eigen::MatrixXd grad;
  for (std::size_t k = 0; k < plan.flips.size(); ++k) {
    if (!plan.one_shot || k == 0) grad = surrogate.adjacency_gradient(current);
    const auto& f = plan.flips[k].flip;
    const double value = grad(f.u, f.v);
    const bool is_edge = current.has_edge(f.u, f.v);
    const bool ok = f.kind == FlipKind::kRemove ? (is_edge && value < 0.0) : (!is_edge && value > 0.0);
    if (!ok) return static_cast<long>(k);
    if (!plan.one_shot) current = apply_flips(current, std::span<const Flip>(&f, 1));
  }
  return -1;
}

}  // namespace srlim
