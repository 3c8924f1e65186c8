#include "srlim/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "srlim/error.hpp"

namespace srlim {
namespace {

std::string pair_text(NodeId a, NodeId b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

Edge canonical(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

Graph Graph::build(std::vector<Edge> edges, FeatureMatrix features, std::vector<int> labels,
                   int num_classes, Mask train_mask, Mask test_mask) {
  const auto n = static_cast<NodeId>(features.rows());
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ValidationError("feature rows (" + std::to_string(n) + ") != label count (" +
                          std::to_string(labels.size()) + ")");
  }
  if (num_classes < 1) throw ValidationError("class count must be positive");

  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [a, b] = edges[i];
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw ValidationError("edge #" + std::to_string(i) + " " + pair_text(a, b) +
                            ": endpoint out of range [0," + std::to_string(n) + ")");
    }
    if (a == b) {
      throw ValidationError("edge #" + std::to_string(i) + " " + pair_text(a, b) + ": self-loop");
    }
    edges[i] = canonical(a, b);
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw ValidationError("duplicate edge " + pair_text(dup->u, dup->v));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnlabeled && (labels[i] < 0 || labels[i] >= num_classes)) {
      throw ValidationError("node " + std::to_string(i) + ": label " + std::to_string(labels[i]) +
                            " outside [0," + std::to_string(num_classes) + ")");
    }
  }

  features.makeCompressed();
  Graph g;
  g.num_nodes_ = n;
  g.num_classes_ = num_classes;
  g.features_ = std::make_shared<const FeatureMatrix>(std::move(features));
  g.labels_ = std::make_shared<const std::vector<int>>(std::move(labels));
  g.edges_ = std::move(edges);
  g.train_mask_ = std::move(train_mask);
  g.test_mask_ = std::move(test_mask);
  g.validate_masks();
  g.index_edges();
  return g;
}

void Graph::validate_masks() const {
  if (train_mask_.empty() && test_mask_.empty()) return;
  const auto n = static_cast<std::size_t>(num_nodes_);
  if (train_mask_.size() != n || test_mask_.size() != n) {
    throw ValidationError("mask length differs from node count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (train_mask_[i] && test_mask_[i]) {
      throw ValidationError("node " + std::to_string(i) + " is in both train and test masks");
    }
    if (train_mask_[i] && (*labels_)[i] == kUnlabeled) {
      throw ValidationError("train node " + std::to_string(i) + " has no label");
    }
    if ((*labels_)[i] != kUnlabeled && !train_mask_[i] && !test_mask_[i]) {
      throw ValidationError("labeled node " + std::to_string(i) + " is in neither mask");
    }
  }
}

void Graph::index_edges() {
  const auto n = static_cast<std::size_t>(num_nodes_);
  offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[static_cast<std::size_t>(e.u) + 1];
    ++offsets_[static_cast<std::size_t>(e.v) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  adjacency_.assign(static_cast<std::size_t>(offsets_[n]), 0);
  adjacency_edge_.assign(adjacency_.size(), 0);
  std::vector<std::int32_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // Edges are sorted by (u, v). Writing every "smaller neighbor" entry before
  // any "larger neighbor" entry leaves each CSR row sorted.
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const auto slot = static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.v)]++);
    adjacency_[slot] = e.u;
    adjacency_edge_[slot] = static_cast<std::int32_t>(k);
  }
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const auto slot = static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.u)]++);
    adjacency_[slot] = e.v;
    adjacency_edge_[slot] = static_cast<std::int32_t>(k);
  }
}

std::span<const NodeId> Graph::neighbors(NodeId u) const {
  const auto i = static_cast<std::size_t>(u);
  return std::span<const NodeId>(adjacency_).subspan(
      static_cast<std::size_t>(offsets_[i]), static_cast<std::size_t>(offsets_[i + 1] - offsets_[i]));
}

std::span<const std::int32_t> Graph::incident_edges(NodeId u) const {
  const auto i = static_cast<std::size_t>(u);
  return std::span<const std::int32_t>(adjacency_edge_)
      .subspan(static_cast<std::size_t>(offsets_[i]),
               static_cast<std::size_t>(offsets_[i + 1] - offsets_[i]));
}

std::int32_t Graph::edge_index(NodeId a, NodeId b) const {
  if (a < 0 || b < 0 || a >= num_nodes_ || b >= num_nodes_ || a == b) return -1;
  const auto nbrs = neighbors(a);
  const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), b);
  if (it == nbrs.end() || *it != b) return -1;
  return incident_edges(a)[static_cast<std::size_t>(it - nbrs.begin())];
}

std::vector<NodeId> Graph::train_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < train_mask_.size(); ++i) {
    if (train_mask_[i]) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

std::vector<NodeId> Graph::test_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < test_mask_.size(); ++i) {
    if (test_mask_[i]) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

Graph Graph::with_split(Mask train_mask, Mask test_mask) const {
  Graph g = *this;
  g.train_mask_ = std::move(train_mask);
  g.test_mask_ = std::move(test_mask);
  g.validate_masks();
  return g;
}

Graph Graph::without_test_labels() const {
  Graph g = *this;
  auto labels = *labels_;
  for (std::size_t i = 0; i < test_mask_.size(); ++i) {
    if (test_mask_[i]) labels[i] = kUnlabeled;
  }
  g.labels_ = std::make_shared<const std::vector<int>>(std::move(labels));
  return g;
}

Graph Graph::with_edges(std::vector<Edge> canonical_sorted_edges) const {
  Graph g = *this;
  g.edges_ = std::move(canonical_sorted_edges);
  g.index_edges();
  return g;
}

Eigen::MatrixXd Graph::dense_adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(num_nodes_, num_nodes_);
  for (const auto& e : edges_) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  return a;
}

bool operator==(const Graph& a, const Graph& b) {
  if (a.num_nodes_ != b.num_nodes_ || a.num_classes_ != b.num_classes_ || a.edges_ != b.edges_ ||
      a.train_mask_ != b.train_mask_ || a.test_mask_ != b.test_mask_ || *a.labels_ != *b.labels_) {
    return false;
  }
  if (a.features_ == b.features_) return true;
  const auto& fa = *a.features_;
  const auto& fb = *b.features_;
  if (fa.rows() != fb.rows() || fa.cols() != fb.cols() || fa.nonZeros() != fb.nonZeros()) return false;
  return std::equal(fa.valuePtr(), fa.valuePtr() + fa.nonZeros(), fb.valuePtr()) &&
         std::equal(fa.innerIndexPtr(), fa.innerIndexPtr() + fa.nonZeros(), fb.innerIndexPtr()) &&
         std::equal(fa.outerIndexPtr(), fa.outerIndexPtr() + fa.outerSize() + 1, fb.outerIndexPtr());
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const int n = g.num_nodes();
  NormalizedAdjacency out;
  out.degrees.resize(n);
  for (NodeId i = 0; i < n; ++i) out.degrees[i] = 1.0 + static_cast<double>(g.neighbors(i).size());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) + 2 * g.num_edges());
  for (NodeId i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, 1.0 / out.degrees[i]);
    for (const NodeId j : g.neighbors(i)) {
      triplets.emplace_back(i, j, 1.0 / std::sqrt(out.degrees[i] * out.degrees[j]));
    }
  }
  out.a_hat.resize(n, n);
  out.a_hat.setFromTriplets(triplets.begin(), triplets.end());
  out.a_hat.makeCompressed();
  return out;
}

Graph apply_flips(const Graph& g, std::span<const Flip> flips) {
  if (flips.empty()) return g;
  std::set<Edge> touched;
  std::vector<bool> removed(g.num_edges(), false);
  std::vector<Edge> added;
  for (std::size_t k = 0; k < flips.size(); ++k) {
    const auto& f = flips[k];
    if (f.u == f.v || f.u < 0 || f.v < 0 || f.u >= g.num_nodes() || f.v >= g.num_nodes()) {
      throw ContractError("flip #" + std::to_string(k) + " " + pair_text(f.u, f.v) +
                          ": invalid node pair");
    }
    const Edge e = canonical(f.u, f.v);
    if (!touched.insert(e).second) {
      throw ContractError("flip #" + std::to_string(k) + " " + pair_text(e.u, e.v) + ": pair repeated");
    }
    const auto idx = g.edge_index(e.u, e.v);
    if (f.kind == FlipKind::kAdd) {
      if (idx >= 0) {
        throw ContractError("flip #" + std::to_string(k) + " adds existing edge " + pair_text(e.u, e.v));
      }
      added.push_back(e);
    } else {
      if (idx < 0) {
        throw ContractError("flip #" + std::to_string(k) + " removes missing edge " +
                            pair_text(e.u, e.v));
      }
      removed[static_cast<std::size_t>(idx)] = true;
    }
  }
  std::vector<Edge> edges;
  edges.reserve(g.num_edges() + added.size());
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    if (!removed[k]) edges.push_back(g.edges()[k]);
  }
  edges.insert(edges.end(), added.begin(), added.end());
  std::sort(edges.begin(), edges.end());
  return g.with_edges(std::move(edges));
}

std::vector<Flip> invert_flips(std::span<const Flip> flips) {
  std::vector<Flip> out(flips.rbegin(), flips.rend());
  for (auto& f : out) f.kind = f.kind == FlipKind::kAdd ? FlipKind::kRemove : FlipKind::kAdd;
  return out;
}

}  // namespace srlim
