#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "srlim/gcn.hpp"
#include "srlim/graph.hpp"
#include "srlim/optimizer.hpp"

namespace srlim {

enum class VictimArch { kGcn, kChebNet };

struct VictimSpec {
  VictimArch arch = VictimArch::kGcn;
  int hidden_dim = 16;
  int cheb_order = 2;  // number of Chebyshev terms T_0 .. T_{order-1}
  int epochs = 200;
  OptimizerConfig optimizer{.kind = OptimizerKind::kAdam, .learning_rate = 0.01};
  std::uint64_t seed = 0;

  friend bool operator==(const VictimSpec&, const VictimSpec&) = default;
};

// Scaled Laplacian L~ = 2 L / lambda_max - I with lambda_max = 2, i.e.
// -D^{-1/2} A D^{-1/2}. Isolated nodes get an all-zero row.
SparseMatrix scaled_laplacian(const Graph& g);

// Chebyshev basis T_k(L~) M for k < order, via T_k = 2 L~ T_{k-1} - T_{k-2}.
std::vector<Eigen::MatrixXd> chebyshev_basis(const SparseMatrix& l_scaled, const Eigen::MatrixXd& m, int order);

// Two-layer Chebyshev network: Z = softmax(sum_k T_k relu(sum_k T_k X W0_k) W1_k).
struct ChebModel {
  std::vector<Eigen::MatrixXd> w0;  // order x (d x h)
  std::vector<Eigen::MatrixXd> w1;  // order x (h x K)
};

ChebModel init_cheb(int feature_dim, int hidden_dim, int num_classes, int order, std::uint64_t seed);
Eigen::MatrixXd cheb_logits(const FeatureMatrix& x, const SparseMatrix& l_scaled, const ChebModel& m);
// Mean CE over `nodes` and its weight gradients.
double cheb_loss_and_grad(const FeatureMatrix& x, const SparseMatrix& l_scaled, const ChebModel& m,
                          std::span<const int> labels, std::span<const NodeId> nodes, ChebModel* grads);

struct VictimModel {
  VictimSpec spec;
  GcnModel gcn;    // used when spec.arch == kGcn
  ChebModel cheb;  // used when spec.arch == kChebNet
};

// Full-batch training on the train nodes of g. NumericError names the epoch
// on divergence.
VictimModel train_victim(const Graph& g, const VictimSpec& spec);
std::vector<int> victim_predictions(const VictimModel& m, const Graph& g);

// 100 * (# test nodes whose prediction differs from the label) / |test|.
double misclassification_rate(std::span<const int> predictions, const Graph& g);
double misclassification_rate(const VictimModel& m, const Graph& g);

}  // namespace srlim
