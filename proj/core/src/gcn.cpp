#include "srlim/gcn.hpp"

#include <cmath>
#include <string>

#include "srlim/error.hpp"
#include "srlim/rng.hpp"

namespace srlim {
namespace {

void require_finite(const Eigen::MatrixXd& m, const char* layer) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + layer);
}

}  // namespace

Eigen::MatrixXd glorot_uniform(int rows, int cols, std::uint64_t seed, std::uint64_t stream) {
  auto rng = SplitMix64::stream(seed, stream);
  const double range = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  // Row-major fill order so the draw sequence matches the model file layout.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * range;
  }
  return w;
}

GcnModel init_gcn(int feature_dim, int hidden_dim, int num_classes, std::uint64_t seed) {
  if (feature_dim < 1 || hidden_dim < 1 || num_classes < 1) {
    throw ContractError("GCN dimensions must be positive");
  }
  GcnModel m;
  m.seed = seed;
  m.w0 = glorot_uniform(feature_dim, hidden_dim, seed, 0);
  m.w1 = glorot_uniform(hidden_dim, num_classes, seed, 1);
  return m;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd z(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    z.row(i) = (logits.row(i).array() - top).exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

ForwardTrace gcn_forward_projected(Eigen::MatrixXd xw0, const SparseMatrix& a_hat, const GcnModel& m) {
  if (a_hat.rows() != xw0.rows() || xw0.cols() != m.w0.cols()) {
    throw ContractError("gcn_forward: shape mismatch");
  }
  ForwardTrace t;
  t.xw0 = std::move(xw0);
  require_finite(t.xw0, "layer 1 (X W0)");
  t.pre1 = a_hat * t.xw0;
  t.h1 = t.pre1.cwiseMax(0.0);
  require_finite(t.h1, "layer 1 (relu(Â X W0))");
  t.h1w1 = t.h1 * m.w1;
  t.logits = a_hat * t.h1w1;
  require_finite(t.logits, "layer 2 (Â H1 W1)");
  t.z = softmax_rows(t.logits);
  require_finite(t.z, "softmax output");
  return t;
}

ForwardTrace gcn_forward(const FeatureMatrix& x, const SparseMatrix& a_hat, const GcnModel& m) {
  if (x.cols() != m.w0.rows()) throw ContractError("gcn_forward: feature dimension mismatch");
  return gcn_forward_projected(x * m.w0, a_hat, m);
}

double ce_loss(const Eigen::MatrixXd& z, std::span<const int> labels, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw ContractError("ce_loss: empty node set");
  double total = 0.0;
  for (const NodeId i : nodes) total -= std::log(z(i, labels[static_cast<std::size_t>(i)]));
  return total / static_cast<double>(nodes.size());
}

double ce_loss_from_logits(const Eigen::MatrixXd& logits, std::span<const int> labels,
                           std::span<const NodeId> nodes, Eigen::MatrixXd* grad_logits) {
  if (nodes.empty()) throw ContractError("ce_loss: empty node set");
  const double scale = 1.0 / static_cast<double>(nodes.size());
  if (grad_logits != nullptr) grad_logits->setZero(logits.rows(), logits.cols());
  double total = 0.0;
  for (const NodeId i : nodes) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw ContractError("ce_loss: node without a valid label");
    const double top = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd shifted = (logits.row(i).array() - top).exp().matrix();
    const double sum = shifted.sum();
    total += std::log(sum) + top - logits(i, y);
    if (grad_logits != nullptr) {
      grad_logits->row(i) = shifted * (scale / sum);
      (*grad_logits)(i, y) -= scale;
    }
  }
  return total * scale;
}

GcnGradients gcn_backward(const ForwardTrace& trace, const FeatureMatrix& x, const SparseMatrix& a_hat,
                          const GcnModel& m, const Eigen::MatrixXd& grad_logits) {
  GcnGradients g;
  // Â is symmetric, so Âᵀ G = Â G.
  const Eigen::MatrixXd grad_h1w1 = a_hat * grad_logits;
  g.w1 = trace.h1.transpose() * grad_h1w1;
  Eigen::MatrixXd grad_h1 = grad_h1w1 * m.w1.transpose();
  g.pre1 = (trace.pre1.array() > 0.0).select(grad_h1, 0.0);
  const Eigen::MatrixXd grad_xw0 = a_hat * g.pre1;
  g.w0 = x.transpose() * grad_xw0;
  return g;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    m.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace srlim
