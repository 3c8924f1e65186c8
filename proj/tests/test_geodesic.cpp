#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "srlim/dataset.hpp"
#include "srlim/error.hpp"
#include "srlim/geodesic.hpp"
#include "srlim/log.hpp"
#include "srlim/rng.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace srlim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

FeatureMatrix unit_features(int n) {
  FeatureMatrix x(n, 1);
  for (int i = 0; i < n; ++i) x.insert(i, 0) = 1.0;
  return x;
}

Graph bare(int n, std::vector<Edge> edges) {
  return Graph::build(std::move(edges), unit_features(n), std::vector<int>(static_cast<std::size_t>(n), 0), 1);
}

// Tolerance zero runs the bisection down to the limit of double precision, so
// two correct searches land on the same bandwidth up to rounding.
GeodesicConfig exact_search() {
  GeodesicConfig cfg;
  cfg.eps_tol = 0.0;
  cfg.max_bisect_iters = 400;
  return cfg;
}

}  // namespace

TEST(EdgeLength, Examples) {
  const std::vector<double> a = {1.0, 0.0};
  const std::vector<double> b = {1.0, 1.0};
  const std::vector<double> c = {0.0, 2.0};
  const std::vector<double> zero = {0.0, 0.0};
  EXPECT_EQ(cosine_edge_length(c, c), 0.0);
  EXPECT_EQ(cosine_edge_length(a, c), 1.0);
  EXPECT_NEAR(cosine_edge_length(a, b), 0.2929, 5e-5);
  EXPECT_NEAR(cosine_edge_length(a, b), 1.0 - 1.0 / std::sqrt(2.0), 1e-15);
  log::set_quiet(true);
  EXPECT_EQ(cosine_edge_length(a, zero), 1.0);
}

TEST(ShortestPaths, MatchFloydWarshallExactly) {
  // Dyadic lengths keep every path sum exact, so the comparison can be strict.
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto rng = SplitMix64::stream(seed, 11);
    const int n = 2 + static_cast<int>(rng.below(29));
    const auto g = oracle::random_graph({.n = n, .edge_probability = 0.05 + 0.3 * rng.uniform()}, seed);
    std::vector<double> lengths(g.num_edges());
    for (auto& l : lengths) l = static_cast<double>(rng.below(17)) / 8.0;

    const ShortestPaths sp(g, lengths);
    const Eigen::MatrixXd fw =
        oracle::floyd_warshall(n, std::vector<Edge>(g.edges().begin(), g.edges().end()), lengths);
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = 0; j < n; ++j) {
        ASSERT_EQ(sp.distance(i, j), fw(i, j)) << "seed " << seed << " pair " << i << "," << j;
        ASSERT_EQ(sp.connected(i, j), fw(i, j) < kInf);
        if (i == j || fw(i, j) == kInf) continue;
        // The stored path is a walk from i to j whose length is the distance.
        const auto path = sp.path(i, j);
        NodeId at = i;
        double total = 0.0;
        for (const auto e : path) {
          const auto& edge = g.edges()[static_cast<std::size_t>(e)];
          ASSERT_TRUE(edge.u == at || edge.v == at);
          at = edge.u == at ? edge.v : edge.u;
          total += lengths[static_cast<std::size_t>(e)];
        }
        EXPECT_EQ(at, j);
        EXPECT_EQ(total, fw(i, j));
        EXPECT_EQ(sp.path_length(i, j, lengths), fw(i, j));
      }
    }
  }
}

TEST(ShortestPaths, PathGraphWithUnitEdges) {
  const auto g = bare(3, {{0, 1}, {1, 2}});
  const std::vector<double> unit = {1.0, 1.0};
  const ShortestPaths sp(g, unit);
  EXPECT_EQ(sp.distance(0, 2), 2.0);
  EXPECT_EQ(sp.distance(2, 0), 2.0);
}

TEST(ShortestPaths, NegativeLengthIsInternalFailure) {
  const auto g = bare(2, {{0, 1}});
  const std::vector<double> bad = {-1.0};
  EXPECT_THROW(ShortestPaths(g, bad), Error);
}

TEST(Geodesic, DisconnectedPairsGetGammaTimesLargest) {
  const auto g = bare(6, {{0, 1}, {1, 2}, {2, 3}, {4, 5}});
  const std::vector<double> unit(4, 1.0);
  const ShortestPaths sp(g, unit);
  const std::vector<NodeId> all = {0, 1, 2, 3, 4, 5};
  const auto tau = scoped_distances(sp, all, 100.0);
  EXPECT_EQ(tau(0, 3), 3.0);
  EXPECT_EQ(tau(0, 4), 300.0);
  EXPECT_EQ(tau(5, 2), 300.0);
  EXPECT_EQ(tau(4, 5), 1.0);
  EXPECT_EQ(tau, tau.transpose());
  EXPECT_EQ(tau.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Geodesic, AdjacentPairDistanceIsEdgeLength) {
  const auto g = oracle::random_graph({.n = 10, .edge_probability = 0.3, .ensure_connected = true}, 2);
  const auto geo = geodesic_distances(g, g.features(), {});
  const auto lengths = edge_lengths(g, g.features());
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edges()[k];
    EXPECT_LE(geo.tau(e.u, e.v), lengths[k]);
    if (geo.paths.path(e.u, e.v).size() == 1) EXPECT_EQ(geo.tau(e.u, e.v), lengths[k]);
  }
}

TEST(TTransform, ClosedFormValues) {
  EXPECT_NEAR(t_transform(0.0, 1.0), 0.797885, 1e-6);
  EXPECT_NEAR(t_transform(0.0, 1.0), std::sqrt(2.0 * std::numbers::pi) / std::numbers::pi, 1e-15);
  EXPECT_NEAR(t_transform(1.0, 1.0), 0.39894, 5e-6);
  EXPECT_LT(t_transform(1e8, 1.0), 1e-15);
  for (const double u : {0.5, 1.0, 2.5, 7.0}) {
    for (const double tau : {0.0, 0.3, 2.0, 11.0}) {
      EXPECT_NEAR(t_transform(tau, u), oracle::t_density(tau, u), 1e-13) << tau << " " << u;
    }
  }
}

TEST(TTransform, StrictlyDecreasingAndDerivative) {
  auto rng = SplitMix64(5);
  for (int k = 0; k < 2000; ++k) {
    const double u = 0.2 + 5.0 * rng.uniform();
    const double a = 10.0 * rng.uniform();
    const double b = a + 1e-3 + 5.0 * rng.uniform();
    EXPECT_GT(t_transform(a, u), t_transform(b, u));
    EXPECT_GT(t_transform(b, u), 0.0);
    const double h = 1e-6;
    const double fd = (t_transform(a + h, u) - t_transform(a - h, u)) / (2 * h);
    EXPECT_LE(oracle::relative_error(t_transform_derivative(a, u), fd), 1e-6);
  }
}

TEST(FuzzyUnion, Algebra) {
  EXPECT_EQ(fuzzy_symmetrize(1.0, 1.0), 0.0);
  EXPECT_EQ(fuzzy_symmetrize(0.3, 0.0), 0.3);
  EXPECT_EQ(fuzzy_symmetrize(0.5, 0.5), 0.5);
  auto rng = SplitMix64(8);
  for (int k = 0; k < 10000; ++k) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    const double s = fuzzy_symmetrize(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_GE(s, std::max(a, b) - a * b - 1e-15);
  }
}

TEST(Calibration, ObjectiveIncreasesWithEpsilon) {
  auto rng = SplitMix64(21);
  for (int r = 0; r < 1000; ++r) {
    const auto m = 2 + rng.below(40);
    std::vector<double> row(m);
    for (auto& v : row) v = 5.0 * rng.uniform();
    const std::size_t self = rng.below(m);
    row[self] = 0.0;
    double xi = kInf;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != self) xi = std::min(xi, row[j]);
    }
    const double dof = 0.5 + 3.0 * rng.uniform();
    double prev = -kInf;
    for (double eps = 1e-3; eps < 1e3; eps *= 1.7) {
      const double f = calibration_objective(row, self, xi, eps, dof);
      EXPECT_GE(f, prev);
      prev = f;
    }
  }
}

TEST(Calibration, NearestNeighborOffsetAndResidual) {
  const std::vector<double> row = {0.0, 0.4, 0.9, 1.3, 2.2, 2.5, 3.0, 3.1, 4.0, 4.4, 5.0, 6.0};
  const GeodesicConfig cfg;
  const auto cal = calibrate_epsilon(row, 0, cfg);
  EXPECT_EQ(cal.xi, 0.4);
  EXPECT_EQ(cal.status, CalibrationStatus::kConverged);
  EXPECT_LE(cal.residual, cfg.eps_tol);
  EXPECT_NEAR(std::exp2(calibration_objective(row, 0, cal.xi, cal.eps, cfg.dof)), cfg.compactness, 1e-3);
}

TEST(Calibration, DegenerateAndSingletonRows) {
  const std::vector<double> flat = {0.0, 2.0, 2.0, 2.0};
  const GeodesicConfig cfg;
  const auto cal = calibrate_epsilon(flat, 0, cfg);
  EXPECT_EQ(cal.status, CalibrationStatus::kDegenerate);
  EXPECT_DOUBLE_EQ(cal.eps, std::sqrt(cfg.eps_lo * cfg.eps_hi));
  const std::vector<double> single = {0.0};
  EXPECT_THROW(calibrate_epsilon(single, 0, cfg), ContractError);
}

TEST(Calibration, FixtureRowsMeetResidual) {
  for (const char* name : {"sbm", "moons"}) {
    const auto ds = load_dataset(test_support::fixture(name));
    const GeodesicConfig cfg;
    std::vector<NodeId> all(static_cast<std::size_t>(ds.graph.num_nodes()));
    for (NodeId i = 0; i < ds.graph.num_nodes(); ++i) all[static_cast<std::size_t>(i)] = i;
    const auto sim = similarity_matrix(ds.graph, ds.graph.features(), cfg, all);
    const auto tau = geodesic_distances(ds.graph, ds.graph.features(), cfg).tau;
    const double t0 = t_transform(0.0, cfg.dof);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < sim.calibration.size(); ++i) {
      const auto& cal = sim.calibration[i];
      if (cal.status == CalibrationStatus::kDegenerate) continue;
      if (cal.status == CalibrationStatus::kSaturated) {
        // Only legitimate when the nearest-neighbour ties alone already exceed log2 Q,
        // which no bandwidth can undo.
        int ties = 0;
        for (Eigen::Index j = 0; j < tau.rows(); ++j) {
          if (j != static_cast<Eigen::Index>(i) && tau(static_cast<Eigen::Index>(i), j) == cal.xi) ++ties;
        }
        EXPECT_GT(ties * t0 * t0, std::log2(cfg.compactness)) << name << " row " << i;
        continue;
      }
      EXPECT_LE(cal.residual, 1e-3) << name << " row " << i;
      ++checked;
    }
    EXPECT_GT(checked, sim.calibration.size() / 2);
  }
}

TEST(Similarity, MatchesStraightLineOracle) {
  const auto cfg = exact_search();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // Sparse enough that some graphs fall apart into components.
    const auto g = oracle::random_graph({.n = 30, .edge_probability = 0.04 + 0.02 * static_cast<double>(seed % 4),
                                         .feature_dim = 5},
                                        100 + seed);
    std::vector<NodeId> scope;
    for (NodeId i = 0; i < 30; ++i) {
      if (seed % 2 == 0 || i % 3 != 1) scope.push_back(i);
    }
    const auto sim = similarity_matrix(g, g.features(), cfg, scope);
    const Eigen::MatrixXd expected =
        oracle::similarity(g.dense_adjacency(), Eigen::MatrixXd(g.features()), scope, cfg);
    EXPECT_LE((sim.s - expected).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed;
  }
}

TEST(Similarity, MatrixInvariants) {
  const auto g = oracle::random_graph({.n = 30, .edge_probability = 0.1}, 77);
  std::vector<NodeId> all(30);
  for (NodeId i = 0; i < 30; ++i) all[static_cast<std::size_t>(i)] = i;
  const auto sim = similarity_matrix(g, g.features(), {}, all);
  EXPECT_EQ(sim.s, sim.s.transpose());
  EXPECT_EQ(sim.s.diagonal().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(sim.s.minCoeff(), 0.0);
  EXPECT_LE(sim.s.maxCoeff(), 1.0);
  EXPECT_GT((sim.conditional - sim.conditional.transpose()).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_THROW(similarity_matrix(g, g.features(), {}, std::vector<NodeId>{3}), ContractError);
}

TEST(Similarity, InvariantUnderFeatureScaling) {
  const auto g = oracle::random_graph({.n = 25, .edge_probability = 0.15}, 31);
  std::vector<NodeId> all(25);
  for (NodeId i = 0; i < 25; ++i) all[static_cast<std::size_t>(i)] = i;
  const auto cfg = exact_search();
  const auto base = similarity_matrix(g, g.features(), cfg, all);
  // A power of two scales exactly; other factors agree up to rounding.
  const FeatureMatrix x4 = 4.0 * g.features();
  EXPECT_EQ(similarity_matrix(g, x4, cfg, all).s, base.s);
  const FeatureMatrix x37 = 3.7 * g.features();
  const auto scaled = similarity_matrix(g, x37, cfg, all);
  EXPECT_LE((scaled.s - base.s).cwiseAbs().maxCoeff(), 1e-9);
  for (std::size_t i = 0; i < base.calibration.size(); ++i) {
    EXPECT_NEAR(scaled.calibration[i].xi, base.calibration[i].xi, 1e-12);
  }
}
