#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srlim/graph.hpp"

namespace srlim {

// Contents of meta.json. Counts must match the data files exactly and the
// checksum is the SHA-256 of edges.tsv, features.tsv and labels.tsv
// concatenated in that (sorted) order.
struct DatasetManifest {
  std::string name;
  int num_nodes = 0;
  int feature_dim = 0;
  int num_classes = 0;
  std::size_t edge_count = 0;
  std::string feature_encoding = "sparse-triplet";
  std::string checksum;
};

struct Dataset {
  Graph graph;
  DatasetManifest manifest;
};

// Loads and validates a dataset directory. The returned graph carries no split.
Dataset load_dataset(const std::filesystem::path& dir);

// Writes meta.json and the three data files in canonical form.
DatasetManifest save_dataset(const std::filesystem::path& dir, const Graph& g, const std::string& name);

// SHA-256 (lowercase hex) of the data files under `dir`.
std::string dataset_checksum(const std::filesystem::path& dir);

// Checksum the graph would get if written with save_dataset.
std::string canonical_checksum(const Graph& g);

struct SplitSpec {
  std::uint64_t seed = 0;
  double labeled_fraction = 0.10;
  bool stratified = true;
};

// floor(fraction * labeled) nodes go to train, the other labeled nodes to
// test. Stratified mode apportions the train quota across classes by largest
// remainder, then takes a seeded Fisher-Yates prefix of each class.
Graph make_split(const Graph& g, const SplitSpec& spec);

// edits.tsv: a "#base_checksum\t<hex>" header followed by "+\tu\tv" or
// "-\tu\tv" lines in application order.
struct EditFile {
  std::string base_checksum;
  std::vector<Flip> flips;
};

void save_perturbed(const std::filesystem::path& path, std::span<const Flip> flips,
                    const std::string& base_checksum);
EditFile read_edits(const std::filesystem::path& path);
// Reads an edit file and applies it to `base`; the recorded checksum must
// match the base dataset.
Graph load_perturbed(const Dataset& base, const std::filesystem::path& path);

}  // namespace srlim
