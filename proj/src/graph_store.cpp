#include "smn/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace smn {

namespace fs = std::filesystem;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose) {
  // splitmix64 finalizer over root xor a hash of the label
  std::uint64_t z = root ^ fnv1a(purpose);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool LabelMatrix::has(NodeId v, CommunityId j) const {
  const auto& row = labels(v);
  return std::binary_search(row.begin(), row.end(), j);
}

void LabelMatrix::add(NodeId v, CommunityId j) {
  if (j < 0 || j >= c_) throw ArgumentError("community id " + std::to_string(j) + " out of range");
  auto& row = rows_.at(static_cast<std::size_t>(v));
  auto it = std::lower_bound(row.begin(), row.end(), j);
  if (it == row.end() || *it != j) row.insert(it, j);
}

bool LabelMatrix::contains_all(NodeId v, const std::vector<CommunityId>& targets) const {
  return std::all_of(targets.begin(), targets.end(), [&](CommunityId t) { return has(v, t); });
}

Matrix LabelMatrix::dense(const NodeList& nodes) const {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(nodes.size()), c_);
  for (std::size_t r = 0; r < nodes.size(); ++r)
    for (CommunityId j : labels(nodes[r])) y(static_cast<Eigen::Index>(r), j) = 1.0;
  return y;
}

Matrix LabelMatrix::dense() const {
  NodeList all(rows_.size());
  std::iota(all.begin(), all.end(), NodeId{0});
  return dense(all);
}

std::int64_t Graph::degree(NodeId v) const {
  return adjacency.outerIndexPtr()[v + 1] - adjacency.outerIndexPtr()[v];
}

Graph build_graph(NodeId n, const std::vector<std::pair<NodeId, NodeId>>& edges, Matrix features,
                  LabelMatrix labels) {
  if (features.rows() != n)
    throw DimensionError("feature rows " + std::to_string(features.rows()) + " != node count " + std::to_string(n));
  if (labels.rows() != n)
    throw DimensionError("label rows " + std::to_string(labels.rows()) + " != node count " + std::to_string(n));

  std::vector<Eigen::Triplet<Scalar, std::int64_t>> triplets;
  triplets.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw DimensionError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") outside node range");
    if (u == v) continue;
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }

  Graph g;
  g.n = n;
  g.adjacency.resize(n, n);
  // duplicates collapse to a single 1
  g.adjacency.setFromTriplets(triplets.begin(), triplets.end(), [](Scalar, Scalar) { return 1.0; });
  g.adjacency.makeCompressed();
  g.m = g.adjacency.nonZeros() / 2;
  g.features = std::move(features);
  g.labels = std::move(labels);
  return g;
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  return in;
}

[[noreturn]] void parse_fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

bool blank_or_comment(const std::string& line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

struct DenseHeader {
  NodeId rows = 0;
  int cols = 0;
  std::size_t line_no = 0;
};

DenseHeader read_header(std::istream& in, const fs::path& path, std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    DenseHeader h;
    std::string extra;
    if (!(ss >> h.rows >> h.cols) || (ss >> extra) || h.rows < 0 || h.cols < 0)
      parse_fail(path, line_no, "expected header \"<rows> <cols>\"");
    h.line_no = line_no;
    return h;
  }
  parse_fail(path, line_no, "missing header");
}

Matrix read_features(const fs::path& path) {
  auto in = open_input(path);
  std::size_t line_no = 0;
  const auto h = read_header(in, path, line_no);
  Matrix x(h.rows, h.cols);
  std::string line;
  for (NodeId r = 0; r < h.rows; ++r) {
    if (!std::getline(in, line)) parse_fail(path, line_no + 1, "expected " + std::to_string(h.rows) + " feature rows");
    ++line_no;
    std::istringstream ss(line);
    for (int c = 0; c < h.cols; ++c) {
      double v;
      if (!(ss >> v)) parse_fail(path, line_no, "expected " + std::to_string(h.cols) + " values");
      x(r, c) = v;
    }
    std::string extra;
    if (ss >> extra) parse_fail(path, line_no, "too many values");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank_or_comment(line)) parse_fail(path, line_no, "trailing data after feature rows");
  }
  return x;
}

LabelMatrix read_labels(const fs::path& path) {
  auto in = open_input(path);
  std::size_t line_no = 0;
  const auto h = read_header(in, path, line_no);
  LabelMatrix y(h.rows, h.cols);
  std::string line;
  for (NodeId r = 0; r < h.rows; ++r) {
    if (!std::getline(in, line)) parse_fail(path, line_no + 1, "expected " + std::to_string(h.rows) + " label rows");
    ++line_no;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      long j = -1;
      try {
        j = std::stol(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) parse_fail(path, line_no, "bad community id '" + tok + "'");
      if (j < 0 || j >= h.cols) parse_fail(path, line_no, "community id " + tok + " outside [0," + std::to_string(h.cols) + ")");
      y.add(r, static_cast<CommunityId>(j));
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank_or_comment(line)) parse_fail(path, line_no, "trailing data after label rows");
  }
  return y;
}

}  // namespace

std::vector<std::pair<std::int64_t, std::int64_t>> read_edge_list(const fs::path& path) {
  auto in = open_input(path);
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    std::int64_t u, v;
    std::string extra;
    if (!(ss >> u >> v) || (ss >> extra)) parse_fail(path, line_no, "expected two integer node ids");
    if (u < 0 || v < 0) parse_fail(path, line_no, "negative node id");
    edges.emplace_back(u, v);
  }
  return edges;
}

Graph load_dataset(const fs::path& edge_path, const fs::path& feature_path, const fs::path& label_path) {
  const auto raw = read_edge_list(edge_path);
  Matrix x = read_features(feature_path);
  LabelMatrix y = read_labels(label_path);

  NodeId n = std::max<NodeId>(x.rows(), y.rows());
  for (auto [u, v] : raw) n = std::max<NodeId>(n, std::max(u, v) + 1);
  if (x.rows() != n)
    throw DimensionError(feature_path.string() + ": " + std::to_string(x.rows()) + " feature rows but " +
                         std::to_string(n) + " nodes");
  if (y.rows() != n)
    throw DimensionError(label_path.string() + ": " + std::to_string(y.rows()) + " label rows but " +
                         std::to_string(n) + " nodes");

  std::vector<std::pair<NodeId, NodeId>> edges(raw.begin(), raw.end());
  return build_graph(n, edges, std::move(x), std::move(y));
}

Graph load_dataset_dir(const fs::path& dir) {
  return load_dataset(dir / "edges.txt", dir / "features.txt", dir / "labels.txt");
}

void save_dataset_dir(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.txt");
    for (NodeId u = 0; u < g.n; ++u)
      for (SparseMatrix::InnerIterator it(g.adjacency, u); it; ++it)
        if (u < it.col()) out << u << ' ' << it.col() << '\n';
  }
  {
    std::ofstream out(dir / "features.txt");
    out.precision(17);
    out << g.n << ' ' << g.features.cols() << '\n';
    for (NodeId v = 0; v < g.n; ++v) {
      for (Eigen::Index c = 0; c < g.features.cols(); ++c) out << (c ? " " : "") << g.features(v, c);
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt");
    out << g.n << ' ' << g.communities() << '\n';
    for (NodeId v = 0; v < g.n; ++v) {
      const auto& row = g.labels.labels(v);
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
      out << '\n';
    }
  }
}

namespace {

NormalizedAdjacency symmetric_normalize(const SparseMatrix& a) {
  const NodeId n = a.rows();
  Vector inv_sqrt(n);
  for (NodeId i = 0; i < n; ++i) {
    Scalar deg = 0;
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) deg += it.value();
    inv_sqrt(i) = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  NormalizedAdjacency out;
  out.n = n;
  out.values = a;
  for (NodeId i = 0; i < n; ++i)
    for (SparseMatrix::InnerIterator it(out.values, i); it; ++it)
      it.valueRef() = inv_sqrt(i) * it.value() * inv_sqrt(it.col());
  return out;
}

}  // namespace

NormalizedAdjacency normalize(const Graph& g) { return symmetric_normalize(g.adjacency); }

NormalizedAdjacency normalize_with_self_loops(const Graph& g) {
  SparseMatrix eye(g.n, g.n);
  eye.setIdentity();
  SparseMatrix a = g.adjacency + eye;
  a.makeCompressed();
  return symmetric_normalize(a);
}

Split make_split(NodeId n, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
      ratios.train + ratios.validation + ratios.test != 100)
    throw ConfigError("split ratios must be non-negative and sum to 100");
  NodeList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const auto n_train = static_cast<std::size_t>(n * ratios.train / 100);
  const auto n_val = static_cast<std::size_t>(n * ratios.validation / 100);
  Split s;
  s.seed = seed;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.validation.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Split make_split(const Graph& g, SplitRatios ratios, std::uint64_t seed) { return make_split(g.n, ratios, seed); }

IdRemap make_remap(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges, NodeId extra_nodes) {
  IdRemap r;
  for (auto [u, v] : edges) {
    r.to_internal.emplace(u, 0);
    r.to_internal.emplace(v, 0);
  }
  NodeId next = 0;
  for (auto& [orig, internal] : r.to_internal) {
    internal = next++;
    r.to_original.push_back(orig);
  }
  std::int64_t fresh = r.to_original.empty() ? 0 : r.to_original.back() + 1;
  for (NodeId i = 0; i < extra_nodes; ++i) {
    r.to_internal.emplace(fresh, next++);
    r.to_original.push_back(fresh++);
  }
  return r;
}

void save_remap(const IdRemap& remap, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path.string());
  for (std::size_t i = 0; i < remap.to_original.size(); ++i) out << remap.to_original[i] << ' ' << i << '\n';
}

Graph ingest_dataset(const fs::path& edge_path, const fs::path& feature_path, const fs::path& label_path,
                     IdRemap& remap) {
  const auto raw = read_edge_list(edge_path);
  Matrix x = read_features(feature_path);
  LabelMatrix y = read_labels(label_path);
  if (x.rows() != y.rows())
    throw DimensionError("feature rows " + std::to_string(x.rows()) + " != label rows " + std::to_string(y.rows()));

  remap = make_remap(raw, 0);
  const auto distinct = static_cast<NodeId>(remap.to_original.size());
  if (x.rows() < distinct)
    throw DimensionError(std::to_string(distinct) + " distinct edge ids but only " + std::to_string(x.rows()) +
                         " feature rows");
  remap = make_remap(raw, x.rows() - distinct);

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(raw.size());
  for (auto [u, v] : raw) edges.emplace_back(remap.to_internal.at(u), remap.to_internal.at(v));
  const NodeId n = x.rows();
  return build_graph(n, edges, std::move(x), std::move(y));
}

}  // namespace smn
