#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "srlim/geodesic.hpp"
#include "srlim/graph.hpp"

namespace srlim {

inline constexpr double kSimilarityClamp = 1e-7;

// Bregman divergence of the Bernoulli negative entropy, i.e. the binary KL
// divergence a log(a/b) + (1-a) log((1-a)/(1-b)), with both arguments clamped
// to [delta, 1 - delta].
double bernoulli_divergence(double a, double b);
// d/db of bernoulli_divergence; zero where b is clamped.
double bernoulli_divergence_grad(double a, double b);

// Mean divergence over unordered pairs i < j. The two matrices must cover the
// same nodes in the same order.
double im_loss(const SimilarityMatrix& input, const SimilarityMatrix& embedding);

// Per-batch constants of the embedding-layer similarity, held fixed while
// differentiating: the row calibrations and the disconnected-pair distance.
struct FrozenCalibration {
  std::vector<Calibration> rows;
  double far_distance = 0.0;
};

// Isometric-mapping term over node batches. Shortest paths are found once on
// the input features; the embedding-layer distances re-measure those same
// paths with cosine lengths between embedding rows.
class IsometryObjective {
 public:
  IsometryObjective(const Graph& g, const GeodesicConfig& cfg);

  const GeodesicConfig& config() const { return cfg_; }
  const ShortestPaths& input_paths() const { return input_paths_; }

  SimilarityMatrix input_similarity(std::span<const NodeId> batch) const;

  // Distances between batch nodes along the frozen paths, measured in the
  // embedding. Disconnected pairs get `far_distance`, or, when it is not
  // given, gamma times the largest connected distance in the batch.
  Eigen::MatrixXd embedding_distances(const Eigen::MatrixXd& embedding, std::span<const NodeId> batch,
                                      const double* far_distance = nullptr) const;

  FrozenCalibration calibrate_embedding(const Eigen::MatrixXd& embedding, std::span<const NodeId> batch) const;

  // Loss for one batch with calibration held at `frozen`. When grad is given,
  // d loss / d embedding is accumulated into it (n x K, not cleared).
  double batch_loss(const Eigen::MatrixXd& embedding, std::span<const NodeId> batch,
                    const SimilarityMatrix& input, const FrozenCalibration& frozen,
                    Eigen::MatrixXd* grad) const;

  // Replaces the paths used at the embedding layer with shortest paths under
  // the embedding's own edge lengths (the non-frozen variant).
  void recompute_embedding_paths(const Eigen::MatrixXd& embedding);

 private:
  const ShortestPaths& embedding_paths() const {
    return embedding_paths_ ? *embedding_paths_ : input_paths_;
  }

  Graph graph_;
  GeodesicConfig cfg_;
  ShortestPaths input_paths_;
  std::unique_ptr<ShortestPaths> embedding_paths_;
};

// Splits a permutation of all nodes into consecutive batches of batch_size; a
// trailing batch with fewer than two nodes is merged into the previous one.
std::vector<std::vector<NodeId>> make_batches(std::span<const NodeId> order, int batch_size);

}  // namespace srlim
