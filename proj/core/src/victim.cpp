#include "srlim/victim.hpp"

#include <array>
#include <cmath>
#include <string>

#include "srlim/error.hpp"
#include "srlim/rng.hpp"

namespace srlim {
namespace {

// Victim weights are drawn from their own stream family so a victim seeded
// like the surrogate never starts from the surrogate's initialization.
constexpr std::uint64_t kVictimInitStream = 100;

std::uint64_t victim_init_seed(std::uint64_t seed) { return SplitMix64::stream(seed, kVictimInitStream).next(); }

// sum_k T_k P_k for per-order inputs P_k.
Eigen::MatrixXd chebyshev_apply(const SparseMatrix& l, const std::vector<Eigen::MatrixXd>& parts) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(parts.front().rows(), parts.front().cols());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out += chebyshev_basis(l, parts[k], static_cast<int>(k) + 1).back();
  }
  return out;
}

}  // namespace

SparseMatrix scaled_laplacian(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n), 0.0);
  for (NodeId u = 0; u < n; ++u) {
    const auto deg = g.neighbors(u).size();
    if (deg > 0) inv_sqrt[static_cast<std::size_t>(u)] = 1.0 / std::sqrt(static_cast<double>(deg));
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * g.num_edges());
  for (const auto& e : g.edges()) {
    const double w = -inv_sqrt[static_cast<std::size_t>(e.u)] * inv_sqrt[static_cast<std::size_t>(e.v)];
    entries.emplace_back(e.u, e.v, w);
    entries.emplace_back(e.v, e.u, w);
  }
  SparseMatrix l(n, n);
  l.setFromTriplets(entries.begin(), entries.end());
  return l;
}

std::vector<Eigen::MatrixXd> chebyshev_basis(const SparseMatrix& l_scaled, const Eigen::MatrixXd& m, int order) {
  if (order < 1) throw ContractError("Chebyshev order must be at least 1");
  std::vector<Eigen::MatrixXd> basis;
  basis.reserve(static_cast<std::size_t>(order));
  basis.push_back(m);
  if (order > 1) basis.push_back(l_scaled * m);
  for (int k = 2; k < order; ++k) {
    Eigen::MatrixXd next = 2.0 * (l_scaled * basis[static_cast<std::size_t>(k - 1)]);
    next -= basis[static_cast<std::size_t>(k - 2)];
    basis.push_back(std::move(next));
  }
  return basis;
}

ChebModel init_cheb(int feature_dim, int hidden_dim, int num_classes, int order, std::uint64_t seed) {
  if (feature_dim < 1 || hidden_dim < 1 || num_classes < 1) {
    throw ContractError("ChebNet dimensions must be positive");
  }
  if (order < 1) throw ContractError("Chebyshev order must be at least 1");
  ChebModel m;
  for (int k = 0; k < order; ++k) {
    const auto stream = static_cast<std::uint64_t>(2 * k);
    m.w0.push_back(glorot_uniform(feature_dim, hidden_dim, seed, stream));
    m.w1.push_back(glorot_uniform(hidden_dim, num_classes, seed, stream + 1));
  }
  return m;
}

namespace {

struct ChebTrace {
  Eigen::MatrixXd pre1;
  Eigen::MatrixXd h1;
  Eigen::MatrixXd logits;
};

ChebTrace cheb_forward(const FeatureMatrix& x, const SparseMatrix& l, const ChebModel& m) {
  if (m.w0.empty() || m.w0.size() != m.w1.size()) throw ContractError("malformed ChebNet weights");
  if (x.cols() != m.w0.front().rows()) throw ContractError("ChebNet feature dimension mismatch");
  ChebTrace t;
  std::vector<Eigen::MatrixXd> projected;
  projected.reserve(m.w0.size());
  for (const auto& wk : m.w0) projected.push_back(x * wk);
  t.pre1 = chebyshev_apply(l, projected);
  t.h1 = t.pre1.cwiseMax(0.0);
  if (!t.h1.allFinite()) throw NumericError("non-finite values in ChebNet layer 1");
  std::vector<Eigen::MatrixXd> parts;
  parts.reserve(m.w1.size());
  for (const auto& wk : m.w1) parts.push_back(t.h1 * wk);
  t.logits = chebyshev_apply(l, parts);
  if (!t.logits.allFinite()) throw NumericError("non-finite values in ChebNet layer 2");
  return t;
}

}  // namespace

Eigen::MatrixXd cheb_logits(const FeatureMatrix& x, const SparseMatrix& l_scaled, const ChebModel& m) {
  return cheb_forward(x, l_scaled, m).logits;
}

double cheb_loss_and_grad(const FeatureMatrix& x, const SparseMatrix& l_scaled, const ChebModel& m,
                          std::span<const int> labels, std::span<const NodeId> nodes, ChebModel* grads) {
  const auto t = cheb_forward(x, l_scaled, m);
  Eigen::MatrixXd grad_logits;
  const double loss = ce_loss_from_logits(t.logits, labels, nodes, grads ? &grad_logits : nullptr);
  if (grads == nullptr) return loss;

  // T_k is symmetric, so T_k^T G = T_k G.
  const int order = static_cast<int>(m.w0.size());
  const auto g2 = chebyshev_basis(l_scaled, grad_logits, order);
  grads->w1.assign(m.w1.size(), {});
  Eigen::MatrixXd grad_h1 = Eigen::MatrixXd::Zero(t.h1.rows(), t.h1.cols());
  for (int k = 0; k < order; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    grads->w1[uk] = t.h1.transpose() * g2[uk];
    grad_h1.noalias() += g2[uk] * m.w1[uk].transpose();
  }
  const Eigen::MatrixXd grad_pre1 = (t.pre1.array() > 0.0).select(grad_h1, 0.0);
  const auto g1 = chebyshev_basis(l_scaled, grad_pre1, order);
  const Eigen::SparseMatrix<double> xt = x.transpose();
  grads->w0.assign(m.w0.size(), {});
  for (int k = 0; k < order; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    grads->w0[uk] = xt * g1[uk];
  }
  return loss;
}

VictimModel train_victim(const Graph& g, const VictimSpec& spec) {
  if (!g.has_split() || g.train_nodes().empty()) throw ContractError("victim training needs a train split");
  if (spec.epochs < 0 || spec.hidden_dim < 1 || spec.optimizer.learning_rate <= 0.0) {
    throw ContractError("invalid victim specification");
  }
  const auto train = g.train_nodes();
  VictimModel vm;
  vm.spec = spec;
  const auto seed = victim_init_seed(spec.seed);
  Optimizer opt(spec.optimizer);

  if (spec.arch == VictimArch::kGcn) {
    vm.gcn = init_gcn(g.feature_dim(), spec.hidden_dim, g.num_classes(), seed);
    const auto adj = normalize_adjacency(g);
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      GcnGradients grads;
      try {
        const auto trace = gcn_forward(g.features(), adj.a_hat, vm.gcn);
        Eigen::MatrixXd grad_logits;
        const double loss = ce_loss_from_logits(trace.logits, g.labels(), train, &grad_logits);
        if (!std::isfinite(loss)) throw NumericError("loss is not finite");
        grads = gcn_backward(trace, g.features(), adj.a_hat, vm.gcn, grad_logits);
      } catch (const NumericError& e) {
        throw NumericError("victim training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      std::array<Eigen::MatrixXd*, 2> params = {&vm.gcn.w0, &vm.gcn.w1};
      std::array<Eigen::MatrixXd, 2> g_list = {std::move(grads.w0), std::move(grads.w1)};
      opt.step(params, g_list);
    }
    return vm;
  }

  vm.cheb = init_cheb(g.feature_dim(), spec.hidden_dim, g.num_classes(), spec.cheb_order, seed);
  const auto l = scaled_laplacian(g);
  std::vector<Eigen::MatrixXd*> params;
  for (auto& w : vm.cheb.w0) params.push_back(&w);
  for (auto& w : vm.cheb.w1) params.push_back(&w);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    ChebModel grads;
    try {
      const double loss = cheb_loss_and_grad(g.features(), l, vm.cheb, g.labels(), train, &grads);
      if (!std::isfinite(loss)) throw NumericError("loss is not finite");
    } catch (const NumericError& e) {
      throw NumericError("victim training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    std::vector<Eigen::MatrixXd> g_list;
    for (auto& w : grads.w0) g_list.push_back(std::move(w));
    for (auto& w : grads.w1) g_list.push_back(std::move(w));
    opt.step(params, g_list);
  }
  return vm;
}

std::vector<int> victim_predictions(const VictimModel& m, const Graph& g) {
  if (m.spec.arch == VictimArch::kGcn) {
    const auto adj = normalize_adjacency(g);
    return argmax_rows(gcn_forward(g.features(), adj.a_hat, m.gcn).logits);
  }
  return argmax_rows(cheb_logits(g.features(), scaled_laplacian(g), m.cheb));
}

double misclassification_rate(std::span<const int> predictions, const Graph& g) {
  if (predictions.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw ContractError("one prediction per node is required");
  }
  const auto test = g.test_nodes();
  if (test.empty()) throw ContractError("misclassification rate needs a nonempty test set");
  std::size_t wrong = 0;
  for (const NodeId i : test) {
    if (predictions[static_cast<std::size_t>(i)] != g.label(i)) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(test.size());
}

double misclassification_rate(const VictimModel& m, const Graph& g) {
  return misclassification_rate(victim_predictions(m, g), g);
}

}  // namespace srlim
