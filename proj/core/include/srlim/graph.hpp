#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace srlim {

using NodeId = std::int32_t;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using FeatureMatrix = SparseMatrix;
using Mask = std::vector<bool>;

// Label value for nodes whose class is unknown (or hidden from an attacker).
inline constexpr int kUnlabeled = -1;

// Undirected edge in canonical form (u < v).
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class FlipKind : std::uint8_t { kAdd, kRemove };

struct Flip {
  NodeId u = 0;
  NodeId v = 0;
  FlipKind kind = FlipKind::kAdd;

  friend bool operator==(const Flip&, const Flip&) = default;
};

// Immutable attributed graph: sparse features, symmetric binary adjacency
// (stored as a sorted canonical edge set plus CSR neighbor lists), labels and
// an optional train/test split. Features and labels are shared between copies.
class Graph {
 public:
  // Validates and canonicalizes. Edges may be given in either orientation;
  // self-loops, out-of-range endpoints, duplicates (after canonicalization),
  // bad labels and overlapping masks raise ValidationError.
  static Graph build(std::vector<Edge> edges, FeatureMatrix features, std::vector<int> labels,
                     int num_classes, Mask train_mask = {}, Mask test_mask = {});

  int num_nodes() const { return num_nodes_; }
  int feature_dim() const { return static_cast<int>(features_->cols()); }
  int num_classes() const { return num_classes_; }
  std::size_t num_edges() const { return edges_.size(); }

  std::span<const Edge> edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId u) const;
  // Edge indices (into edges()) aligned with neighbors(u).
  std::span<const std::int32_t> incident_edges(NodeId u) const;
  bool has_edge(NodeId a, NodeId b) const { return edge_index(a, b) >= 0; }
  // Index into edges() or -1.
  std::int32_t edge_index(NodeId a, NodeId b) const;

  const FeatureMatrix& features() const { return *features_; }
  std::span<const int> labels() const { return *labels_; }
  int label(NodeId u) const { return (*labels_)[static_cast<std::size_t>(u)]; }

  const Mask& train_mask() const { return train_mask_; }
  const Mask& test_mask() const { return test_mask_; }
  bool has_split() const { return !train_mask_.empty(); }
  std::vector<NodeId> train_nodes() const;
  std::vector<NodeId> test_nodes() const;

  Graph with_split(Mask train_mask, Mask test_mask) const;
  // Copy whose test-node labels are replaced by kUnlabeled.
  Graph without_test_labels() const;
  // Same features/labels/masks over a different (already validated) edge set.
  Graph with_edges(std::vector<Edge> canonical_sorted_edges) const;

  Eigen::MatrixXd dense_adjacency() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  Graph() = default;
  void index_edges();
  void validate_masks() const;

  int num_nodes_ = 0;
  int num_classes_ = 0;
  std::shared_ptr<const FeatureMatrix> features_;
  std::shared_ptr<const std::vector<int>> labels_;
  std::vector<Edge> edges_;
  std::vector<std::int32_t> offsets_;
  std::vector<NodeId> adjacency_;
  std::vector<std::int32_t> adjacency_edge_;
  Mask train_mask_;
  Mask test_mask_;
};

// Â = D̃^{-1/2} (A + I) D̃^{-1/2} with d̃_i = 1 + deg(i).
struct NormalizedAdjacency {
  SparseMatrix a_hat;
  Eigen::VectorXd degrees;
};

NormalizedAdjacency normalize_adjacency(const Graph& g);

// Applies edge flips in order and returns the perturbed graph. Adding an
// existing edge, removing a missing one, self-loops and repeated pairs raise
// ContractError.
Graph apply_flips(const Graph& g, std::span<const Flip> flips);

// Inverse of a flip list: reversed order, each kind swapped.
std::vector<Flip> invert_flips(std::span<const Flip> flips);

}  // namespace srlim
