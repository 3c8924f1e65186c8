#include "srlim/pca.hpp"

#include <charconv>
#include <fstream>

#include "srlim/error.hpp"
#include "srlim/log.hpp"
#include "srlim/surrogate.hpp"

namespace srlim {
namespace {

// Relative eigenvalue floor below which a direction counts as zero variance.
constexpr double kRankTolerance = 1e-12;

void append_double(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

}  // namespace

PcaProjection pca2(const Eigen::MatrixXd& h) {
  if (h.rows() < 1 || h.cols() < 1) throw ContractError("PCA needs a nonempty embedding");
  const Eigen::RowVectorXd mean = h.colwise().mean();
  const Eigen::MatrixXd centered = h.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(h.rows() - 1, 1));

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
  const auto& values = solver.eigenvalues();  // ascending
  const double scale = std::max(values.cwiseAbs().maxCoeff(), 1.0);

  PcaProjection p;
  p.components = Eigen::MatrixXd::Zero(h.cols(), 2);
  for (int c = 0; c < 2 && c < h.cols(); ++c) {
    const Eigen::Index idx = h.cols() - 1 - c;
    if (values[idx] <= kRankTolerance * scale) break;
    Eigen::VectorXd v = solver.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    p.components.col(c) = v;
    p.variance[c] = values[idx];
    p.available = c + 1;
  }
  if (p.available < 2) {
    log::warn("embedding covariance has rank " + std::to_string(p.available) + "; padding PCA output with zeros");
  }
  p.scores = centered * p.components;
  return p;
}

void write_pca_csv(const std::filesystem::path& out, const PcaProjection& p, std::span<const int> labels) {
  if (labels.size() != static_cast<std::size_t>(p.scores.rows())) throw ContractError("one label per node is required");
  std::ofstream os(out);
  if (!os) throw Error("cannot write " + out.string());
  os << "node,label,pc1,pc2\n";
  std::string line;
  for (Eigen::Index i = 0; i < p.scores.rows(); ++i) {
    line = std::to_string(i) + ',' + std::to_string(labels[static_cast<std::size_t>(i)]) + ',';
    append_double(line, p.scores(i, 0));
    line += ',';
    append_double(line, p.scores(i, 1));
    os << line << '\n';
  }
  if (!os) throw Error("failed writing " + out.string());
}

void export_pca(const GcnModel& m, const Graph& g, const std::filesystem::path& out) {
  write_pca_csv(out, pca2(embed(g, m)), g.labels());
}

}  // namespace srlim
