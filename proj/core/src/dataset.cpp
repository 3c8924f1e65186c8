#include "srlim/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "srlim/error.hpp"
#include "srlim/rng.hpp"

namespace srlim {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 3> kDataFiles = {"edges.tsv", "features.tsv", "labels.tsv"};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest initialization failed");
    }
  }

  void update(std::string_view bytes) {
    EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size());
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

struct CanonicalFiles {
  std::string edges;
  std::string features;
  std::string labels;
};

CanonicalFiles serialize(const Graph& g) {
  CanonicalFiles out;
  for (const auto& e : g.edges()) {
    out.edges += std::to_string(e.u) + '\t' + std::to_string(e.v) + '\n';
  }
  const auto& x = g.features();
  for (int i = 0; i < x.outerSize(); ++i) {
    for (FeatureMatrix::InnerIterator it(x, i); it; ++it) {
      out.features += std::to_string(i) + '\t' + std::to_string(it.col()) + '\t' +
                      format_double(it.value()) + '\n';
    }
  }
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    out.labels += std::to_string(i) + '\t' + std::to_string(g.label(i)) + '\n';
  }
  return out;
}

// Splits a TSV body into fields per line; reports 1-based line numbers.
class TsvReader {
 public:
  TsvReader(std::string_view body, std::string file) : body_(body), file_(std::move(file)) {}

  bool next(std::vector<std::string_view>& fields) {
    while (pos_ < body_.size()) {
      const auto eol = body_.find('\n', pos_);
      auto line = body_.substr(pos_, eol == std::string_view::npos ? std::string_view::npos : eol - pos_);
      pos_ = eol == std::string_view::npos ? body_.size() : eol + 1;
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError(file_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  long long parse_int(std::string_view field) const {
    long long v = 0;
    auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || end != field.data() + field.size()) {
      fail("malformed integer '" + std::string(field) + "'");
    }
    return v;
  }

  double parse_double(std::string_view field) const {
    double v = 0;
    auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || end != field.data() + field.size() || !std::isfinite(v)) {
      fail("malformed value '" + std::string(field) + "'");
    }
    return v;
  }

  void expect_fields(const std::vector<std::string_view>& fields, std::size_t count) const {
    if (fields.size() != count) {
      fail("expected " + std::to_string(count) + " tab-separated fields, got " +
           std::to_string(fields.size()));
    }
  }

 private:
  std::string_view body_;
  std::string file_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

DatasetManifest parse_manifest(const fs::path& path) {
  const auto text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("meta.json: " + std::string(e.what()));
  }
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.num_nodes = j.at("n").get<int>();
    m.feature_dim = j.at("d").get<int>();
    m.num_classes = j.at("K").get<int>();
    m.edge_count = j.at("edge_count").get<std::size_t>();
    m.feature_encoding = j.at("feature_encoding").get<std::string>();
    m.checksum = j.at("checksum").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError("meta.json: " + std::string(e.what()));
  }
  if (m.feature_encoding != "sparse-triplet") {
    throw ValidationError("meta.json: unsupported feature_encoding '" + m.feature_encoding + "'");
  }
  if (m.num_nodes < 1 || m.feature_dim < 1 || m.num_classes < 1) {
    throw ValidationError("meta.json: n, d and K must be positive");
  }
  return m;
}

std::size_t apportion_floor(double fraction, std::size_t count) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) + 1e-9));
}

}  // namespace

std::string dataset_checksum(const fs::path& dir) {
  Sha256 sha;
  for (const auto* name : kDataFiles) sha.update(read_file(dir / name));
  return sha.hex();
}

std::string canonical_checksum(const Graph& g) {
  const auto files = serialize(g);
  Sha256 sha;
  sha.update(files.edges);
  sha.update(files.features);
  sha.update(files.labels);
  return sha.hex();
}

DatasetManifest save_dataset(const fs::path& dir, const Graph& g, const std::string& name) {
  fs::create_directories(dir);
  const auto files = serialize(g);
  write_file(dir / "edges.tsv", files.edges);
  write_file(dir / "features.tsv", files.features);
  write_file(dir / "labels.tsv", files.labels);

  DatasetManifest m;
  m.name = name;
  m.num_nodes = g.num_nodes();
  m.feature_dim = g.feature_dim();
  m.num_classes = g.num_classes();
  m.edge_count = g.num_edges();
  m.checksum = dataset_checksum(dir);
  json j = {{"name", m.name},
            {"n", m.num_nodes},
            {"d", m.feature_dim},
            {"K", m.num_classes},
            {"edge_count", m.edge_count},
            {"feature_encoding", m.feature_encoding},
            {"checksum", m.checksum}};
  write_file(dir / "meta.json", j.dump(2) + "\n");
  return m;
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a dataset directory: " + dir.string());
  for (const auto* name : {"meta.json", "edges.tsv", "features.tsv", "labels.tsv"}) {
    if (!fs::exists(dir / name)) throw ValidationError("missing file: " + (dir / name).string());
  }
  auto manifest = parse_manifest(dir / "meta.json");
  const auto n = manifest.num_nodes;

  const auto edges_body = read_file(dir / "edges.tsv");
  const auto features_body = read_file(dir / "features.tsv");
  const auto labels_body = read_file(dir / "labels.tsv");
  std::vector<std::string_view> fields;
  std::vector<Edge> edges;
  {
    TsvReader reader(edges_body, "edges.tsv");
    while (reader.next(fields)) {
      reader.expect_fields(fields, 2);
      const auto u = reader.parse_int(fields[0]);
      const auto v = reader.parse_int(fields[1]);
      if (u < 0 || v < 0 || u >= n || v >= n) reader.fail("endpoint out of range");
      if (u == v) reader.fail("self-loop");
      edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  }
  if (edges.size() != manifest.edge_count) {
    throw ValidationError("edge count mismatch: meta.json says " + std::to_string(manifest.edge_count) +
                          ", edges.tsv has " + std::to_string(edges.size()));
  }

  std::vector<Eigen::Triplet<double>> triplets;
  {
    TsvReader reader(features_body, "features.tsv");
    std::set<std::pair<long long, long long>> seen;
    while (reader.next(fields)) {
      reader.expect_fields(fields, 3);
      const auto node = reader.parse_int(fields[0]);
      const auto feat = reader.parse_int(fields[1]);
      const auto value = reader.parse_double(fields[2]);
      if (node < 0 || node >= n) reader.fail("node out of range");
      if (feat < 0 || feat >= manifest.feature_dim) reader.fail("feature index out of range (d mismatch)");
      if (!seen.emplace(node, feat).second) reader.fail("duplicate feature entry");
      triplets.emplace_back(static_cast<int>(node), static_cast<int>(feat), value);
    }
  }
  FeatureMatrix features(n, manifest.feature_dim);
  features.setFromTriplets(triplets.begin(), triplets.end());

  std::vector<int> labels(static_cast<std::size_t>(n), kUnlabeled);
  std::size_t label_lines = 0;
  {
    TsvReader reader(labels_body, "labels.tsv");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    while (reader.next(fields)) {
      reader.expect_fields(fields, 2);
      const auto node = reader.parse_int(fields[0]);
      const auto label = reader.parse_int(fields[1]);
      if (node < 0 || node >= n) reader.fail("node out of range (n mismatch)");
      if (label < 0 || label >= manifest.num_classes) reader.fail("label out of range (K mismatch)");
      if (seen[static_cast<std::size_t>(node)]) reader.fail("duplicate label");
      seen[static_cast<std::size_t>(node)] = true;
      labels[static_cast<std::size_t>(node)] = static_cast<int>(label);
      ++label_lines;
    }
  }
  if (label_lines != static_cast<std::size_t>(n)) {
    throw ValidationError("node count mismatch: meta.json says " + std::to_string(n) +
                          ", labels.tsv has " + std::to_string(label_lines));
  }
  // Counts first, so a truncated file reports what is missing rather than a bare hash mismatch.
  Sha256 sha;
  sha.update(edges_body);
  sha.update(features_body);
  sha.update(labels_body);
  const auto actual = sha.hex();
  if (actual != manifest.checksum) {
    throw ValidationError("checksum mismatch: meta.json has " + manifest.checksum + ", files hash to " +
                          actual);
  }

  auto graph = Graph::build(std::move(edges), std::move(features), std::move(labels), manifest.num_classes);
  return {std::move(graph), std::move(manifest)};
}

Graph make_split(const Graph& g, const SplitSpec& spec) {
  if (!(spec.labeled_fraction > 0.0 && spec.labeled_fraction < 1.0)) {
    throw ContractError("labeled_fraction must lie in (0,1)");
  }
  const auto n = static_cast<std::size_t>(g.num_nodes());
  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(g.num_classes()));
  std::vector<NodeId> labeled;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    if (g.label(i) == kUnlabeled) continue;
    by_class[static_cast<std::size_t>(g.label(i))].push_back(i);
    labeled.push_back(i);
  }
  const auto total = apportion_floor(spec.labeled_fraction, labeled.size());

  Mask train(n, false);
  Mask test(n, false);
  for (const NodeId i : labeled) test[static_cast<std::size_t>(i)] = true;
  SplitMix64 rng(spec.seed);

  auto take = [&](std::vector<NodeId>& pool, std::size_t count) {
    rng.shuffle(std::span<NodeId>(pool));
    for (std::size_t k = 0; k < count; ++k) {
      train[static_cast<std::size_t>(pool[k])] = true;
      test[static_cast<std::size_t>(pool[k])] = false;
    }
  };

  if (!spec.stratified) {
    take(labeled, total);
    return g.with_split(std::move(train), std::move(test));
  }

  const auto classes = by_class.size();
  std::vector<std::size_t> quota(classes);
  std::vector<double> remainder(classes);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = spec.labeled_fraction * static_cast<double>(by_class[c].size());
    quota[c] = apportion_floor(spec.labeled_fraction, by_class[c].size());
    remainder[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  std::vector<std::size_t> order(classes);
  for (std::size_t c = 0; c < classes; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total && k < classes; ++k) {
    if (quota[order[k]] < by_class[order[k]].size()) {
      ++quota[order[k]];
      ++assigned;
    }
  }
  for (std::size_t c = 0; c < classes; ++c) take(by_class[c], quota[c]);
  return g.with_split(std::move(train), std::move(test));
}

void save_perturbed(const fs::path& path, std::span<const Flip> flips, const std::string& base_checksum) {
  std::string body = "#base_checksum\t" + base_checksum + "\n";
  for (const auto& f : flips) {
    body += f.kind == FlipKind::kAdd ? "+" : "-";
    body += '\t' + std::to_string(f.u) + '\t' + std::to_string(f.v) + '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, body);
}

EditFile read_edits(const fs::path& path) {
  const auto body = read_file(path);
  const std::string_view header_key = "#base_checksum\t";
  if (body.rfind(header_key, 0) != 0) {
    throw ValidationError(path.filename().string() + ":1: missing #base_checksum header");
  }
  EditFile out;
  const auto eol = body.find('\n');
  out.base_checksum = body.substr(header_key.size(), eol == std::string::npos ? std::string::npos
                                                                                : eol - header_key.size());
  if (!out.base_checksum.empty() && out.base_checksum.back() == '\r') out.base_checksum.pop_back();
  if (eol == std::string::npos) return out;

  TsvReader reader(std::string_view(body).substr(eol + 1), path.filename().string());
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    reader.expect_fields(fields, 3);
    Flip f;
    if (fields[0] == "+") {
      f.kind = FlipKind::kAdd;
    } else if (fields[0] == "-") {
      f.kind = FlipKind::kRemove;
    } else {
      reader.fail("edit kind must be '+' or '-'");
    }
    f.u = static_cast<NodeId>(reader.parse_int(fields[1]));
    f.v = static_cast<NodeId>(reader.parse_int(fields[2]));
    out.flips.push_back(f);
  }
  return out;
}

Graph load_perturbed(const Dataset& base, const fs::path& path) {
  auto edits = read_edits(path);
  if (edits.base_checksum != base.manifest.checksum) {
    throw ValidationError("checksum mismatch: edits were made against " + edits.base_checksum +
                          ", dataset is " + base.manifest.checksum);
  }
  return apply_flips(base.graph, edits.flips);
}

}  // namespace srlim
