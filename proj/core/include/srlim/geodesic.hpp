#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "srlim/graph.hpp"

namespace srlim {

struct GeodesicConfig {
  double dof = 1.0;            // t-distribution degrees of freedom u
  double compactness = 20.0;   // target Q for the bandwidth search
  double gamma = 100.0;        // disconnected pairs get gamma * (max connected distance)
  double eps_lo = 1e-3;
  double eps_hi = 1e3;
  double eps_tol = 1e-5;       // accepted |Q - 2^sum| residual
  int max_bisect_iters = 100;
  int max_bracket_expansions = 3;  // x10 outward steps per side if Q is not bracketed
};

// 1 - cos(a, b), clamped to [0, 2]. A zero vector on either side yields 1.0
// (treated as orthogonal) and emits a one-time warning.
double cosine_edge_length(std::span<const double> a, std::span<const double> b);

// Edge length for every edge of g (indexed like g.edges()), measured on the
// rows of the given node representation.
std::vector<double> edge_lengths(const Graph& g, const FeatureMatrix& x);
std::vector<double> edge_lengths(const Graph& g, const Eigen::MatrixXd& h);

// All-pairs shortest paths by one Dijkstra per source. The path for an
// unordered pair {i, j} is always read from the tree rooted at min(i, j), so
// distances and paths are exactly symmetric.
class ShortestPaths {
 public:
  ShortestPaths(const Graph& g, std::span<const double> lengths);

  int num_nodes() const { return static_cast<int>(dist_.rows()); }
  // +infinity when disconnected.
  double distance(NodeId i, NodeId j) const {
    return i <= j ? dist_(i, j) : dist_(j, i);
  }
  bool connected(NodeId i, NodeId j) const;
  // Edge indices along the path from i to j (empty when i == j or disconnected).
  std::vector<std::int32_t> path(NodeId i, NodeId j) const;

  // Calls fn(edge_index) for every edge on the canonical {i, j} path.
  template <typename Fn>
  void for_each_path_edge(NodeId i, NodeId j, Fn&& fn) const {
    const NodeId source = i < j ? i : j;
    NodeId node = i < j ? j : i;
    while (node != source) {
      const std::int32_t e = pred_edge_(source, node);
      if (e < 0) return;
      fn(e);
      const auto& edge = edges_[static_cast<std::size_t>(e)];
      node = edge.u == node ? edge.v : edge.u;
    }
  }

  // Re-evaluates the stored (frozen) paths with different edge lengths.
  double path_length(NodeId i, NodeId j, std::span<const double> lengths) const;

 private:
  std::vector<Edge> edges_;
  // Row-major so each source's distances and predecessor edges are contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dist_;
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pred_edge_;
};

// Geodesic distance matrix over `scope`: shortest-path lengths for connected
// pairs, gamma * (largest connected distance within the scope) otherwise.
// When no connected pair has positive length the base distance is 1.
Eigen::MatrixXd scoped_distances(const ShortestPaths& paths, std::span<const NodeId> scope,
                                 double gamma);

// Result of a full-graph geodesic computation.
struct GeodesicDistances {
  Eigen::MatrixXd tau;
  ShortestPaths paths;
};

GeodesicDistances geodesic_distances(const Graph& g, const FeatureMatrix& x, const GeodesicConfig& cfg);

// Density of a Student t distribution scaled by sqrt(2 pi), evaluated at tau.
double t_transform(double tau, double dof);
// d t_transform / d tau.
double t_transform_derivative(double tau, double dof);

enum class CalibrationStatus : std::uint8_t {
  kConverged,
  kSaturated,   // target not bracketed even after expansion; an endpoint is returned
  kDegenerate,  // all off-diagonal distances equal; geometric bracket midpoint returned
  kMaxIterations,
};

struct Calibration {
  double xi = 0.0;        // smallest distance to another node
  double eps = 1.0;       // bandwidth epsilon*
  double residual = 0.0;  // |Q - 2^sum T^2| at eps
  CalibrationStatus status = CalibrationStatus::kConverged;
};

// Bandwidth search for one row of a distance matrix; entry `self` is ignored.
// Throws ContractError when the row has no other entry.
Calibration calibrate_epsilon(std::span<const double> row, std::size_t self, const GeodesicConfig& cfg);

// Sum over j != self of T((row_j - xi) / eps)^2.
double calibration_objective(std::span<const double> row, std::size_t self, double xi, double eps,
                             double dof);

// a + b - 2ab.
inline double fuzzy_symmetrize(double a, double b) { return a + b - 2.0 * a * b; }

struct SimilarityMatrix {
  std::vector<NodeId> node_ids;
  Eigen::MatrixXd s;            // symmetric, zero diagonal, entries in [0, 1]
  Eigen::MatrixXd conditional;  // conditional(i, j) = s_{i|j}; zero diagonal
  std::vector<Calibration> calibration;
};

// Similarities from a geodesic distance matrix over `node_ids` (same order).
SimilarityMatrix similarity_from_distances(const Eigen::MatrixXd& tau, std::vector<NodeId> node_ids,
                                           const GeodesicConfig& cfg);

// Full pipeline over a scope: edge lengths on x, shortest paths, scoped
// distances, calibration, symmetrization.
SimilarityMatrix similarity_matrix(const Graph& g, const FeatureMatrix& x, const GeodesicConfig& cfg,
                                   std::span<const NodeId> scope);

// Upper triangle as "i\tj\ts_ij" lines using the original node ids.
void write_similarity_tsv(const std::filesystem::path& path, const SimilarityMatrix& sim);

}  // namespace srlim
