#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "srlim/graph.hpp"

namespace srlim {

// Two-layer GCN weights: Z = softmax(Â relu(Â X W0) W1).
struct GcnModel {
  Eigen::MatrixXd w0;  // d x h
  Eigen::MatrixXd w1;  // h x K
  std::uint64_t seed = 0;

  int feature_dim() const { return static_cast<int>(w0.rows()); }
  int hidden_dim() const { return static_cast<int>(w0.cols()); }
  int num_classes() const { return static_cast<int>(w1.cols()); }
};

// Glorot-uniform initialization, U(-r, r) with r = sqrt(6 / (fan_in + fan_out)).
GcnModel init_gcn(int feature_dim, int hidden_dim, int num_classes, std::uint64_t seed);

// Glorot-uniform matrix drawn from the given stream.
Eigen::MatrixXd glorot_uniform(int rows, int cols, std::uint64_t seed, std::uint64_t stream);

struct ForwardTrace {
  Eigen::MatrixXd xw0;     // X W0
  Eigen::MatrixXd pre1;    // Â X W0
  Eigen::MatrixXd h1;      // relu(pre1)
  Eigen::MatrixXd h1w1;    // H1 W1
  Eigen::MatrixXd logits;  // H^(L) = Â H1 W1, the embedding layer
  Eigen::MatrixXd z;       // row softmax of logits
};

// Throws NumericError naming the layer if a non-finite value appears.
ForwardTrace gcn_forward(const FeatureMatrix& x, const SparseMatrix& a_hat, const GcnModel& m);
// Same, reusing a precomputed X W0 (the feature projection does not depend on A).
ForwardTrace gcn_forward_projected(Eigen::MatrixXd xw0, const SparseMatrix& a_hat, const GcnModel& m);

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Mean of -log Z[i, y_i] over `nodes`. Throws ContractError on an empty set.
double ce_loss(const Eigen::MatrixXd& z, std::span<const int> labels, std::span<const NodeId> nodes);

// Cross-entropy evaluated from logits with a log-sum-exp; optionally writes
// d loss / d logits, which is (Z - onehot(y)) / |nodes| on the selected rows.
double ce_loss_from_logits(const Eigen::MatrixXd& logits, std::span<const int> labels,
                           std::span<const NodeId> nodes, Eigen::MatrixXd* grad_logits);

struct GcnGradients {
  Eigen::MatrixXd w0;
  Eigen::MatrixXd w1;
  Eigen::MatrixXd pre1;  // d loss / d (Â X W0), reused for adjacency gradients
};

// Backpropagates d loss / d logits through both layers.
GcnGradients gcn_backward(const ForwardTrace& trace, const FeatureMatrix& x, const SparseMatrix& a_hat,
                          const GcnModel& m, const Eigen::MatrixXd& grad_logits);

std::vector<int> argmax_rows(const Eigen::MatrixXd& m);

}  // namespace srlim
