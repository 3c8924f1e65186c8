#include "srlim/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>

#include "srlim/error.hpp"
#include "srlim/log.hpp"

namespace srlim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double length_from_cosine(double dot, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) {
    log::warn_once("zero-feature-vector",
                   "zero vector at an edge endpoint; using edge length 1.0 (orthogonal)");
    return 1.0;
  }
  const double cosine = std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

double sparse_row_dot(const FeatureMatrix& x, NodeId a, NodeId b) {
  FeatureMatrix::InnerIterator ia(x, a);
  FeatureMatrix::InnerIterator ib(x, b);
  double dot = 0.0;
  while (ia && ib) {
    if (ia.col() < ib.col()) {
      ++ia;
    } else if (ib.col() < ia.col()) {
      ++ib;
    } else {
      dot += ia.value() * ib.value();
      ++ia;
      ++ib;
    }
  }
  return dot;
}

}  // namespace

double cosine_edge_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("cosine_edge_length: dimension mismatch");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return length_from_cosine(dot, std::sqrt(na), std::sqrt(nb));
}

std::vector<double> edge_lengths(const Graph& g, const FeatureMatrix& x) {
  Eigen::VectorXd norms(x.rows());
  for (int i = 0; i < x.rows(); ++i) norms[i] = x.row(i).norm();
  std::vector<double> out;
  out.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    out.push_back(length_from_cosine(sparse_row_dot(x, e.u, e.v), norms[e.u], norms[e.v]));
  }
  return out;
}

std::vector<double> edge_lengths(const Graph& g, const Eigen::MatrixXd& h) {
  const Eigen::VectorXd norms = h.rowwise().norm();
  std::vector<double> out;
  out.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    out.push_back(length_from_cosine(h.row(e.u).dot(h.row(e.v)), norms[e.u], norms[e.v]));
  }
  return out;
}

ShortestPaths::ShortestPaths(const Graph& g, std::span<const double> lengths)
    : edges_(g.edges().begin(), g.edges().end()) {
  if (lengths.size() != g.num_edges()) throw ContractError("edge length count != edge count");
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    if (!(lengths[k] >= 0.0)) {
      throw Error("internal invariant: negative or NaN edge length at edge " + std::to_string(k));
    }
  }
  const int n = g.num_nodes();
  dist_.setConstant(n, n, kInf);
  pred_edge_.setConstant(n, n, -1);

  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (NodeId s = 0; s < n; ++s) {
    auto dist = dist_.row(s);
    auto pred = pred_edge_.row(s);
    dist[s] = 0.0;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      const auto nbrs = g.neighbors(u);
      const auto eids = g.incident_edges(u);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const NodeId v = nbrs[k];
        const double cand = d + lengths[static_cast<std::size_t>(eids[k])];
        if (cand < dist[v]) {
          dist[v] = cand;
          pred[v] = eids[k];
          heap.emplace(cand, v);
        }
      }
    }
  }
}

bool ShortestPaths::connected(NodeId i, NodeId j) const { return distance(i, j) < kInf; }

std::vector<std::int32_t> ShortestPaths::path(NodeId i, NodeId j) const {
  std::vector<std::int32_t> out;
  for_each_path_edge(i, j, [&](std::int32_t e) { out.push_back(e); });
  // Walked from max(i,j) back to min(i,j); orient it from i to j.
  if (i < j) std::reverse(out.begin(), out.end());
  return out;
}

double ShortestPaths::path_length(NodeId i, NodeId j, std::span<const double> lengths) const {
  double total = 0.0;
  for_each_path_edge(i, j, [&](std::int32_t e) { total += lengths[static_cast<std::size_t>(e)]; });
  return total;
}

Eigen::MatrixXd scoped_distances(const ShortestPaths& paths, std::span<const NodeId> scope, double gamma) {
  const auto m = static_cast<Eigen::Index>(scope.size());
  Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(m, m);
  double max_connected = 0.0;
  bool any_disconnected = false;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const double d = paths.distance(scope[static_cast<std::size_t>(a)], scope[static_cast<std::size_t>(b)]);
      if (d < kInf) {
        max_connected = std::max(max_connected, d);
      } else {
        any_disconnected = true;
      }
      tau(a, b) = d;
      tau(b, a) = d;
    }
  }
  if (any_disconnected) {
    const double far = gamma * (max_connected > 0.0 ? max_connected : 1.0);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        if (tau(a, b) == kInf) tau(a, b) = far;
      }
    }
  }
  return tau;
}

GeodesicDistances geodesic_distances(const Graph& g, const FeatureMatrix& x, const GeodesicConfig& cfg) {
  const auto lengths = edge_lengths(g, x);
  ShortestPaths paths(g, lengths);
  std::vector<NodeId> all(static_cast<std::size_t>(g.num_nodes()));
  for (NodeId i = 0; i < g.num_nodes(); ++i) all[static_cast<std::size_t>(i)] = i;
  auto tau = scoped_distances(paths, all, cfg.gamma);
  return {std::move(tau), std::move(paths)};
}

namespace {

double t_normalizer(double dof) {
  thread_local double cached_dof = std::numeric_limits<double>::quiet_NaN();
  thread_local double cached = 0.0;
  if (dof != cached_dof) {
    cached = std::exp(0.5 * std::log(2.0 * std::numbers::pi) + std::lgamma((dof + 1.0) / 2.0) -
                      0.5 * std::log(dof * std::numbers::pi) - std::lgamma(dof / 2.0));
    cached_dof = dof;
  }
  return cached;
}

// (1 + tau^2 / u)^(-(u + 1) / 2)
double t_kernel(double tau, double dof) {
  const double base = 1.0 + tau * tau / dof;
  return dof == 1.0 ? 1.0 / base : std::pow(base, -(dof + 1.0) / 2.0);
}

}  // namespace

double t_transform(double tau, double dof) { return t_normalizer(dof) * t_kernel(tau, dof); }

double t_transform_derivative(double tau, double dof) {
  const double base = 1.0 + tau * tau / dof;
  return t_normalizer(dof) * t_kernel(tau, dof) * (-(dof + 1.0) / dof) * tau / base;
}

double calibration_objective(std::span<const double> row, std::size_t self, double xi, double eps,
                             double dof) {
  double sum = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j == self) continue;
    const double t = t_transform((row[j] - xi) / eps, dof);
    sum += t * t;
  }
  return sum;
}

Calibration calibrate_epsilon(std::span<const double> row, std::size_t self, const GeodesicConfig& cfg) {
  double xi = kInf;
  double largest = -kInf;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j == self) continue;
    xi = std::min(xi, row[j]);
    largest = std::max(largest, row[j]);
  }
  if (xi == kInf) throw ContractError("calibrate_epsilon: row has no entry besides the node itself");

  const double target = std::log2(cfg.compactness);
  auto objective = [&](double eps) { return calibration_objective(row, self, xi, eps, cfg.dof); };
  auto residual = [&](double value) { return std::abs(cfg.compactness - std::exp2(value)); };

  Calibration out;
  out.xi = xi;
  if (largest == xi) {
    out.eps = std::sqrt(cfg.eps_lo * cfg.eps_hi);
    out.residual = residual(objective(out.eps));
    out.status = CalibrationStatus::kDegenerate;
    return out;
  }

  // The objective grows with eps: a wider kernel raises every T term.
  double lo = cfg.eps_lo;
  double hi = cfg.eps_hi;
  double f_lo = objective(lo);
  double f_hi = objective(hi);
  for (int k = 0; k < cfg.max_bracket_expansions && f_lo > target; ++k) f_lo = objective(lo /= 10.0);
  for (int k = 0; k < cfg.max_bracket_expansions && f_hi < target; ++k) f_hi = objective(hi *= 10.0);
  if (f_lo > target || f_hi < target) {
    out.eps = f_lo > target ? lo : hi;
    out.residual = residual(f_lo > target ? f_lo : f_hi);
    out.status = out.residual <= cfg.eps_tol ? CalibrationStatus::kConverged : CalibrationStatus::kSaturated;
    return out;
  }

  out.status = CalibrationStatus::kMaxIterations;
  out.eps = lo;
  out.residual = residual(f_lo);
  for (int it = 0; it < cfg.max_bisect_iters; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double f_mid = objective(mid);
    const double r = residual(f_mid);
    if (r < out.residual) {
      out.eps = mid;
      out.residual = r;
    }
    if (r <= cfg.eps_tol) {
      out.status = CalibrationStatus::kConverged;
      break;
    }
    if (f_mid < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return out;
}

SimilarityMatrix similarity_from_distances(const Eigen::MatrixXd& tau, std::vector<NodeId> node_ids,
                                           const GeodesicConfig& cfg) {
  const auto m = tau.rows();
  if (m < 2) throw ContractError("similarity scope needs at least two nodes");
  if (tau.cols() != m || static_cast<Eigen::Index>(node_ids.size()) != m) {
    throw ContractError("similarity: distance matrix and scope disagree in size");
  }
  SimilarityMatrix out;
  out.node_ids = std::move(node_ids);
  out.conditional = Eigen::MatrixXd::Zero(m, m);
  out.calibration.resize(static_cast<std::size_t>(m));
  std::vector<double> row(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) row[static_cast<std::size_t>(j)] = tau(i, j);
    const auto cal = calibrate_epsilon(row, static_cast<std::size_t>(i), cfg);
    out.calibration[static_cast<std::size_t>(i)] = cal;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      out.conditional(i, j) = t_transform((tau(i, j) - cal.xi) / cal.eps, cfg.dof);
    }
  }
  out.s.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.s(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = fuzzy_symmetrize(out.conditional(i, j), out.conditional(j, i));
      out.s(i, j) = v;
      out.s(j, i) = v;
    }
  }
  return out;
}

SimilarityMatrix similarity_matrix(const Graph& g, const FeatureMatrix& x, const GeodesicConfig& cfg,
                                   std::span<const NodeId> scope) {
  if (scope.size() < 2) throw ContractError("similarity scope needs at least two nodes");
  const auto lengths = edge_lengths(g, x);
  const ShortestPaths paths(g, lengths);
  return similarity_from_distances(scoped_distances(paths, scope, cfg.gamma),
                                   std::vector<NodeId>(scope.begin(), scope.end()), cfg);
}

void write_similarity_tsv(const std::filesystem::path& path, const SimilarityMatrix& sim) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  const auto m = sim.s.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      out << sim.node_ids[static_cast<std::size_t>(i)] << '\t' << sim.node_ids[static_cast<std::size_t>(j)]
          << '\t' << sim.s(i, j) << '\n';
    }
  }
}

}  // namespace srlim
