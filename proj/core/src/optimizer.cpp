#include "srlim/optimizer.hpp"

#include <cmath>

#include "srlim/error.hpp"

namespace srlim {

void Optimizer::step(std::span<Eigen::MatrixXd* const> params, std::span<const Eigen::MatrixXd> grads) {
  if (params.size() != grads.size()) throw ContractError("optimizer: parameter/gradient count mismatch");
  ++step_count_;
  if (cfg_.kind == OptimizerKind::kGradientDescent) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      *params[k] -= cfg_.learning_rate * (grads[k] + cfg_.weight_decay * *params[k]);
    }
    return;
  }

  if (first_moment_.empty()) {
    for (const auto* p : params) {
      first_moment_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      second_moment_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
  }
  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Eigen::MatrixXd g = grads[k] + cfg_.weight_decay * *params[k];
    first_moment_[k] = cfg_.beta1 * first_moment_[k] + (1.0 - cfg_.beta1) * g;
    second_moment_[k] = cfg_.beta2 * second_moment_[k] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    *params[k] -= (cfg_.learning_rate / bias1) *
                  (first_moment_[k].array() / ((second_moment_[k].array() / bias2).sqrt() + cfg_.epsilon))
                      .matrix();
  }
}

}  // namespace srlim
