#pragma once

#include <filesystem>
#include <span>

#include <Eigen/Dense>

#include "srlim/gcn.hpp"
#include "srlim/graph.hpp"

namespace srlim {

struct PcaProjection {
  Eigen::MatrixXd scores;      // n x 2
  Eigen::MatrixXd components;  // K x 2, unit columns (zero when unavailable)
  Eigen::Vector2d variance = Eigen::Vector2d::Zero();
  int available = 0;  // components with positive variance
};

// Top-2 principal components of the mean-centered rows of h, from the
// eigendecomposition of the K x K covariance. Each component's sign is fixed
// so that its largest-magnitude loading is positive. Missing components are
// zero-padded with a warning.
PcaProjection pca2(const Eigen::MatrixXd& h);

// Writes "node,label,pc1,pc2" for the embedding layer of m on g; unlabeled
// nodes print label -1.
void export_pca(const GcnModel& m, const Graph& g, const std::filesystem::path& out);
void write_pca_csv(const std::filesystem::path& out, const PcaProjection& p, std::span<const int> labels);

}  // namespace srlim
