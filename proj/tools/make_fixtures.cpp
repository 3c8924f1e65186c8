// Generates the two bundled synthetic datasets:
//   sbm    stochastic block model with bag-of-words style binary features
//   moons  two interleaved half-circles, kNN graph, Gaussian-bump features
// Usage: make_fixtures <out_dir>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <set>
#include <vector>

#include "srlim/dataset.hpp"
#include "srlim/error.hpp"
#include "srlim/rng.hpp"

namespace {

using srlim::Edge;
using srlim::SplitMix64;

constexpr std::uint64_t kSeed = 20240611;

double normal(SplitMix64& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u = 1.0 - rng.uniform();
  const double v = rng.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

srlim::Graph make_sbm() {
  constexpr int kClasses = 3;
  constexpr int kPerClass = 100;
  constexpr int kVocab = 120;
  constexpr int kTopicWords = 40;  // words [c * 40, c * 40 + 40) belong to class c
  constexpr int kWordsPerNode = 12;
  constexpr double kTopicShare = 0.3;
  constexpr double kPIn = 0.04;
  constexpr double kPOut = 0.012;
  const int n = kClasses * kPerClass;

  auto rng = SplitMix64::stream(kSeed, 1);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % kClasses;

  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.uniform() < (labels[u] == labels[v] ? kPIn : kPOut)) edges.push_back({u, v});
    }
  }

  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < n; ++i) {
    std::set<int> words;
    while (static_cast<int>(words.size()) < kWordsPerNode) {
      const bool topical = rng.uniform() < kTopicShare;
      const int w = topical ? labels[i] * kTopicWords + static_cast<int>(rng.below(kTopicWords))
                            : static_cast<int>(rng.below(kVocab));
      words.insert(w);
    }
    for (const int w : words) entries.emplace_back(i, w, 1.0);
  }
  srlim::FeatureMatrix x(n, kVocab);
  x.setFromTriplets(entries.begin(), entries.end());
  return srlim::Graph::build(std::move(edges), std::move(x), std::move(labels), kClasses);
}

srlim::Graph make_moons() {
  constexpr int kPerClass = 100;
  constexpr double kNoise = 0.25;
  constexpr int kNeighbors = 5;
  constexpr int kGrid = 5;  // kGrid x kGrid bump centres
  constexpr double kBumpWidth = 0.5;
  const int n = 2 * kPerClass;

  auto rng = SplitMix64::stream(kSeed, 2);
  std::vector<std::array<double, 2>> pts(n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % 2;
    const double t = std::numbers::pi * rng.uniform();
    const double x = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
    const double y = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
    pts[i] = {x + kNoise * normal(rng), y + kNoise * normal(rng)};
    labels[i] = c;
  }

  std::set<Edge> edge_set;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> dist;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = pts[i][0] - pts[j][0];
      const double dy = pts[i][1] - pts[j][1];
      dist.push_back({dx * dx + dy * dy, j});
    }
    std::partial_sort(dist.begin(), dist.begin() + kNeighbors, dist.end());
    for (int k = 0; k < kNeighbors; ++k) {
      const int j = dist[k].second;
      edge_set.insert({std::min(i, j), std::max(i, j)});
    }
  }

  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < n; ++i) {
    for (int gx = 0; gx < kGrid; ++gx) {
      for (int gy = 0; gy < kGrid; ++gy) {
        const double cx = -1.25 + 3.5 * gx / (kGrid - 1);
        const double cy = -0.75 + 2.0 * gy / (kGrid - 1);
        const double dx = pts[i][0] - cx;
        const double dy = pts[i][1] - cy;
        const double value = std::exp(-(dx * dx + dy * dy) / (2.0 * kBumpWidth * kBumpWidth));
        // Small bumps are dropped to keep the matrix sparse.
        if (value > 1e-3) entries.emplace_back(i, gx * kGrid + gy, std::round(value * 1e4) / 1e4);
      }
    }
  }
  srlim::FeatureMatrix x(n, kGrid * kGrid);
  x.setFromTriplets(entries.begin(), entries.end());
  return srlim::Graph::build({edge_set.begin(), edge_set.end()}, std::move(x), std::move(labels), 2);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <out_dir>\n";
    return 1;
  }
  try {
    const std::filesystem::path out = argv[1];
    for (const auto& [name, g] : {std::pair{"sbm", make_sbm()}, std::pair{"moons", make_moons()}}) {
      const auto manifest = srlim::save_dataset(out / name, g, name);
      std::cout << name << ": n=" << manifest.num_nodes << " edges=" << manifest.edge_count
                << " d=" << manifest.feature_dim << " K=" << manifest.num_classes << '\n';
    }
  } catch (const srlim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
