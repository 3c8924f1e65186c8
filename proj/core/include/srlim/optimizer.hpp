#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace srlim {

enum class OptimizerKind { kGradientDescent, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kGradientDescent;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;  // L2 term added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Full-batch first-order update over a fixed list of parameter matrices.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(std::span<Eigen::MatrixXd* const> params, std::span<const Eigen::MatrixXd> grads);

 private:
  OptimizerConfig cfg_;
  long step_count_ = 0;
  std::vector<Eigen::MatrixXd> first_moment_;
  std::vector<Eigen::MatrixXd> second_moment_;
};

}  // namespace srlim
