#include "srlim/isometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srlim/error.hpp"

namespace srlim {
namespace {

double clamp_similarity(double s) { return std::clamp(s, kSimilarityClamp, 1.0 - kSimilarityClamp); }

// Adds d(1 - cos(h_u, h_v)) / d(h_u, h_v) * upstream into grad.
void accumulate_cosine_length_grad(const Eigen::MatrixXd& h, NodeId u, NodeId v, double upstream,
                                   Eigen::MatrixXd& grad) {
  const double nu = h.row(u).norm();
  const double nv = h.row(v).norm();
  if (nu == 0.0 || nv == 0.0) return;
  const double cosine = h.row(u).dot(h.row(v)) / (nu * nv);
  grad.row(u) -= upstream * (h.row(v) / (nu * nv) - cosine * h.row(u) / (nu * nu));
  grad.row(v) -= upstream * (h.row(u) / (nu * nv) - cosine * h.row(v) / (nv * nv));
}

}  // namespace

double bernoulli_divergence(double a, double b) {
  a = clamp_similarity(a);
  b = clamp_similarity(b);
  return a * std::log(a / b) + (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
}

double bernoulli_divergence_grad(double a, double b) {
  if (b < kSimilarityClamp || b > 1.0 - kSimilarityClamp) return 0.0;
  a = clamp_similarity(a);
  return -a / b + (1.0 - a) / (1.0 - b);
}

double im_loss(const SimilarityMatrix& input, const SimilarityMatrix& embedding) {
  if (input.node_ids != embedding.node_ids || input.s.rows() != embedding.s.rows()) {
    throw ContractError("im_loss: similarity matrices cover different scopes");
  }
  const auto m = input.s.rows();
  if (m < 2) throw ContractError("im_loss: scope needs at least two nodes");
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) total += bernoulli_divergence(input.s(i, j), embedding.s(i, j));
  }
  return total / (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

IsometryObjective::IsometryObjective(const Graph& g, const GeodesicConfig& cfg)
    : graph_(g), cfg_(cfg), input_paths_(g, edge_lengths(g, g.features())) {}

SimilarityMatrix IsometryObjective::input_similarity(std::span<const NodeId> batch) const {
  return similarity_from_distances(scoped_distances(input_paths_, batch, cfg_.gamma),
                                   std::vector<NodeId>(batch.begin(), batch.end()), cfg_);
}

Eigen::MatrixXd IsometryObjective::embedding_distances(const Eigen::MatrixXd& embedding,
                                                       std::span<const NodeId> batch,
                                                       const double* far_distance) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto lengths = edge_lengths(graph_, embedding);
  const auto& paths = embedding_paths();
  const auto m = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(m, m);
  double max_connected = 0.0;
  for (Eigen::Index p = 0; p < m; ++p) {
    const NodeId bp = batch[static_cast<std::size_t>(p)];
    for (Eigen::Index q = p + 1; q < m; ++q) {
      const NodeId bq = batch[static_cast<std::size_t>(q)];
      double d = kInf;
      if (paths.connected(bp, bq)) {
        d = paths.path_length(bp, bq, lengths);
        max_connected = std::max(max_connected, d);
      }
      tau(p, q) = d;
      tau(q, p) = d;
    }
  }
  const double far =
      far_distance != nullptr ? *far_distance : cfg_.gamma * (max_connected > 0.0 ? max_connected : 1.0);
  for (Eigen::Index p = 0; p < m; ++p) {
    for (Eigen::Index q = 0; q < m; ++q) {
      if (tau(p, q) == kInf) tau(p, q) = far;
    }
  }
  return tau;
}

FrozenCalibration IsometryObjective::calibrate_embedding(const Eigen::MatrixXd& embedding,
                                                         std::span<const NodeId> batch) const {
  const auto tau = embedding_distances(embedding, batch);
  FrozenCalibration out;
  double max_connected = 0.0;
  const auto& paths = embedding_paths();
  for (std::size_t p = 0; p < batch.size(); ++p) {
    for (std::size_t q = p + 1; q < batch.size(); ++q) {
      if (paths.connected(batch[p], batch[q])) {
        max_connected = std::max(max_connected, tau(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)));
      }
    }
  }
  out.far_distance = cfg_.gamma * (max_connected > 0.0 ? max_connected : 1.0);
  std::vector<double> row(batch.size());
  for (Eigen::Index p = 0; p < tau.rows(); ++p) {
    for (Eigen::Index q = 0; q < tau.cols(); ++q) row[static_cast<std::size_t>(q)] = tau(p, q);
    out.rows.push_back(calibrate_epsilon(row, static_cast<std::size_t>(p), cfg_));
  }
  return out;
}

double IsometryObjective::batch_loss(const Eigen::MatrixXd& embedding, std::span<const NodeId> batch,
                                     const SimilarityMatrix& input, const FrozenCalibration& frozen,
                                     Eigen::MatrixXd* grad) const {
  const auto m = static_cast<Eigen::Index>(batch.size());
  if (m < 2 || input.s.rows() != m || frozen.rows.size() != batch.size()) {
    throw ContractError("batch_loss: batch, input similarity and calibration disagree");
  }
  const auto& paths = embedding_paths();
  const auto lengths = edge_lengths(graph_, embedding);
  const double dof = cfg_.dof;

  Eigen::MatrixXd tau = Eigen::MatrixXd::Constant(m, m, frozen.far_distance);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> connected(m, m);
  connected.setConstant(false);
  for (Eigen::Index p = 0; p < m; ++p) {
    tau(p, p) = 0.0;
    for (Eigen::Index q = p + 1; q < m; ++q) {
      const NodeId bp = batch[static_cast<std::size_t>(p)];
      const NodeId bq = batch[static_cast<std::size_t>(q)];
      if (paths.connected(bp, bq)) {
        tau(p, q) = tau(q, p) = paths.path_length(bp, bq, lengths);
        connected(p, q) = connected(q, p) = true;
      }
    }
  }

  // scaled(p, q) = (tau - xi_p) / eps_p; cond(p, q) = s_{p|q}.
  Eigen::MatrixXd scaled(m, m);
  Eigen::MatrixXd cond(m, m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const auto& cal = frozen.rows[static_cast<std::size_t>(p)];
    for (Eigen::Index q = 0; q < m; ++q) {
      scaled(p, q) = (tau(p, q) - cal.xi) / cal.eps;
      cond(p, q) = p == q ? 0.0 : t_transform(scaled(p, q), dof);
    }
  }

  const double pairs = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
  double total = 0.0;
  std::vector<double> length_grad;
  if (grad != nullptr) length_grad.assign(lengths.size(), 0.0);
  for (Eigen::Index p = 0; p < m; ++p) {
    for (Eigen::Index q = p + 1; q < m; ++q) {
      const double a = cond(p, q);
      const double b = cond(q, p);
      const double beta = fuzzy_symmetrize(a, b);
      total += bernoulli_divergence(input.s(p, q), beta);
      if (grad == nullptr || !connected(p, q)) continue;
      const double g_beta = bernoulli_divergence_grad(input.s(p, q), beta) / pairs;
      if (g_beta == 0.0) continue;
      const double eps_p = frozen.rows[static_cast<std::size_t>(p)].eps;
      const double eps_q = frozen.rows[static_cast<std::size_t>(q)].eps;
      const double g_tau = g_beta * ((1.0 - 2.0 * b) * t_transform_derivative(scaled(p, q), dof) / eps_p +
                                     (1.0 - 2.0 * a) * t_transform_derivative(scaled(q, p), dof) / eps_q);
      paths.for_each_path_edge(batch[static_cast<std::size_t>(p)], batch[static_cast<std::size_t>(q)],
                               [&](std::int32_t e) { length_grad[static_cast<std::size_t>(e)] += g_tau; });
    }
  }
  if (grad != nullptr) {
    const auto edges = graph_.edges();
    for (std::size_t e = 0; e < length_grad.size(); ++e) {
      if (length_grad[e] != 0.0) {
        accumulate_cosine_length_grad(embedding, edges[e].u, edges[e].v, length_grad[e], *grad);
      }
    }
  }
  return total / pairs;
}

void IsometryObjective::recompute_embedding_paths(const Eigen::MatrixXd& embedding) {
  embedding_paths_ = std::make_unique<ShortestPaths>(graph_, edge_lengths(graph_, embedding));
}

std::vector<std::vector<NodeId>> make_batches(std::span<const NodeId> order, int batch_size) {
  if (batch_size < 2) throw ContractError("batch size must be at least 2");
  std::vector<std::vector<NodeId>> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const auto end = std::min(order.size(), start + bs);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() < 2) {
    auto tail = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), tail.begin(), tail.end());
  }
  return batches;
}

}  // namespace srlim
