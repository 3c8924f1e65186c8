#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "srlim/rng.hpp"

namespace oracle {

using srlim::Edge;
using srlim::NodeId;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd normalized_adjacency(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  Eigen::MatrixXd tilde = a + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd d = tilde.rowwise().sum();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = tilde(i, j) / std::sqrt(d[i] * d[j]);
  }
  return out;
}

Eigen::MatrixXd floyd_warshall(int n, const std::vector<Edge>& edges, const std::vector<double>& lengths) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, kInf);
  for (int i = 0; i < n; ++i) d(i, i) = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    d(edges[e].u, edges[e].v) = std::min(d(edges[e].u, edges[e].v), lengths[e]);
    d(edges[e].v, edges[e].u) = d(edges[e].u, edges[e].v);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);
      }
    }
  }
  return d;
}

double t_density(double tau, double dof) {
  const double c = std::sqrt(2.0 * std::numbers::pi) * std::tgamma((dof + 1.0) / 2.0) /
                   (std::sqrt(dof * std::numbers::pi) * std::tgamma(dof / 2.0));
  return c * std::pow(1.0 + tau * tau / dof, -(dof + 1.0) / 2.0);
}

Eigen::MatrixXd similarity(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& x,
                           const std::vector<NodeId>& scope, const srlim::GeodesicConfig& cfg) {
  const auto n = static_cast<int>(adjacency.rows());
  std::vector<Edge> edges;
  std::vector<double> lengths;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (adjacency(i, j) == 0.0) continue;
      const double cosine = x.row(i).dot(x.row(j)) / (x.row(i).norm() * x.row(j).norm());
      edges.push_back({i, j});
      lengths.push_back(std::clamp(1.0 - cosine, 0.0, 2.0));
    }
  }
  const Eigen::MatrixXd all = floyd_warshall(n, edges, lengths);

  const auto m = static_cast<Eigen::Index>(scope.size());
  Eigen::MatrixXd tau(m, m);
  double largest = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      tau(a, b) = all(scope[a], scope[b]);
      if (tau(a, b) < kInf) largest = std::max(largest, tau(a, b));
    }
  }
  const double far = cfg.gamma * (largest > 0.0 ? largest : 1.0);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      if (tau(a, b) == kInf) tau(a, b) = far;
    }
  }

  Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double xi = kInf;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != i) xi = std::min(xi, tau(i, j));
    }
    auto excess = [&](double eps) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j != i) sum += std::pow(t_density((tau(i, j) - xi) / eps, cfg.dof), 2);
      }
      return sum - std::log2(cfg.compactness);
    };
    double largest_in_row = -kInf;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != i) largest_in_row = std::max(largest_in_row, tau(i, j));
    }
    double lo = cfg.eps_lo;
    double hi = cfg.eps_hi;
    double eps = 0.0;
    if (largest_in_row == xi) {
      eps = std::sqrt(lo * hi);
    } else {
      for (int k = 0; k < cfg.max_bracket_expansions && excess(lo) > 0.0; ++k) lo /= 10.0;
      for (int k = 0; k < cfg.max_bracket_expansions && excess(hi) < 0.0; ++k) hi *= 10.0;
      if (excess(lo) > 0.0) {
        eps = lo;
      } else if (excess(hi) < 0.0) {
        eps = hi;
      } else {
        for (;;) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          (excess(mid) < 0.0 ? lo : hi) = mid;
        }
        eps = std::abs(excess(lo)) <= std::abs(excess(hi)) ? lo : hi;
      }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != i) cond(i, j) = t_density((tau(i, j) - xi) / eps, cfg.dof);
    }
  }
  Eigen::MatrixXd s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double a = cond(i, j);
      const double b = cond(j, i);
      s(i, j) = i == j ? 0.0 : a + b - 2.0 * a * b;
    }
  }
  return s;
}

Eigen::MatrixXd gcn_logits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w0,
                           const Eigen::MatrixXd& w1) {
  const Eigen::MatrixXd a_hat = normalized_adjacency(a);
  Eigen::MatrixXd h = a_hat * x * w0;
  for (Eigen::Index k = 0; k < h.size(); ++k) h.data()[k] = std::max(0.0, h.data()[k]);
  return a_hat * h * w1;
}

double cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                     const std::vector<NodeId>& nodes) {
  double total = 0.0;
  for (const NodeId i : nodes) {
    double denom = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) denom += std::exp(logits(i, c));
    total -= std::log(std::exp(logits(i, labels[static_cast<std::size_t>(i)])) / denom);
  }
  return total / static_cast<double>(nodes.size());
}

Eigen::MatrixXd pca_scores(const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd centered = h.rowwise() - h.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::MatrixXd v = svd.matrixV().leftCols(2);
  for (int c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0.0) v.col(c) *= -1.0;
  }
  return centered * v;
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

srlim::Graph random_graph(const RandomGraphSpec& spec, std::uint64_t seed) {
  auto rng = srlim::SplitMix64::stream(seed, 7);
  std::vector<Edge> edges;
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; ++j) {
      if (rng.uniform() < spec.edge_probability) edges.push_back({i, j});
    }
  }
  if (spec.ensure_connected) {
    // A random spanning path on top of the sampled edges.
    std::vector<NodeId> order(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(std::span<NodeId>(order));
    for (int k = 1; k < spec.n; ++k) {
      Edge e{std::min(order[k - 1], order[k]), std::max(order[k - 1], order[k])};
      if (std::find(edges.begin(), edges.end(), e) == edges.end()) edges.push_back(e);
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < spec.n; ++i) {
    for (int k = 0; k < spec.feature_dim; ++k) triplets.emplace_back(i, k, 0.05 + rng.uniform());
  }
  srlim::FeatureMatrix x(spec.n, spec.feature_dim);
  x.setFromTriplets(triplets.begin(), triplets.end());
  std::vector<int> labels(static_cast<std::size_t>(spec.n));
  for (auto& y : labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
  srlim::Mask train(static_cast<std::size_t>(spec.n), false);
  srlim::Mask test(static_cast<std::size_t>(spec.n), false);
  for (int i = 0; i < spec.n; ++i) {
    (rng.uniform() < spec.labeled_fraction ? train : test)[static_cast<std::size_t>(i)] = true;
  }
  train[0] = true;
  test[0] = false;
  train.back() = false;
  test.back() = true;
  return srlim::Graph::build(std::move(edges), std::move(x), std::move(labels), spec.num_classes,
                             std::move(train), std::move(test));
}

}  // namespace oracle
