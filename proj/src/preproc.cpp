#include "smn/preproc.hpp"

#include "binio.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

namespace smn {

namespace fs = std::filesystem;

MultiHopFeatures MultiHopFeatures::select_rows(const NodeList& rows) const {
  MultiHopFeatures out;
  out.channels.reserve(channels.size());
  for (const auto& ch : channels) {
    Matrix sub(static_cast<Eigen::Index>(rows.size()), ch.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = ch.row(rows[r]);
    out.channels.push_back(std::move(sub));
  }
  return out;
}

MultiHopFeatures multi_hop_stack(const NormalizedAdjacency& adj, const Matrix& x, int k) {
  if (k < 1) throw ArgumentError("hop count must be >= 1");
  if (adj.n != x.rows())
    throw DimensionError("adjacency has " + std::to_string(adj.n) + " nodes, features have " +
                         std::to_string(x.rows()) + " rows");
  MultiHopFeatures mh;
  mh.channels.reserve(static_cast<std::size_t>(k));
  mh.channels.push_back(x);
  for (int i = 1; i < k; ++i) mh.channels.push_back(adj.values * mh.channels.back());
  return mh;
}

std::vector<SmoothnessPoint> smoothness_curve(const Graph& g, int hops) {
  const auto plain = multi_hop_stack(normalize(g), g.features, hops);
  const auto looped = multi_hop_stack(normalize_with_self_loops(g), g.features, hops);
  std::vector<SmoothnessPoint> out;
  for (int i = 0; i < hops; ++i)
    out.push_back({i, smoothness(plain.channels[static_cast<std::size_t>(i)]),
                   smoothness(looped.channels[static_cast<std::size_t>(i)])});
  return out;
}

namespace hop_cache {

namespace {
constexpr char kMagic[4] = {'S', 'M', 'H', '1'};
constexpr std::uint32_t kVersion = 1;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}
}  // namespace

std::uint64_t key(const fs::path& edge_file, const fs::path& feature_file, int k) {
  std::uint64_t h = fnv1a(slurp(edge_file));
  h = fnv1a("\x1f", h);
  h = fnv1a(slurp(feature_file), h);
  return fnv1a("k=" + std::to_string(k), h);
}

fs::path file_for(const fs::path& dir, std::uint64_t key) {
  char name[40];
  std::snprintf(name, sizeof name, "hops-%016llx.bin", static_cast<unsigned long long>(key));
  return dir / name;
}

void save(const MultiHopFeatures& mh, const fs::path& path) {
  binio::Writer w;
  w.bytes(kMagic, 4);
  w.pod(kVersion);
  w.pod<std::int32_t>(mh.hops());
  w.pod<std::int64_t>(mh.nodes());
  w.pod<std::int64_t>(mh.dim());
  for (const auto& ch : mh.channels) w.matrix(ch);
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  w.commit(path);
}

MultiHopFeatures load(const fs::path& path) {
  binio::Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError(path.string() + ": not a hop cache");
  if (r.pod<std::uint32_t>() != kVersion) throw FormatError(path.string() + ": unsupported cache version");
  const auto k = r.pod<std::int32_t>();
  const auto n = r.pod<std::int64_t>();
  const auto d = r.pod<std::int64_t>();
  MultiHopFeatures mh;
  for (int i = 0; i < k; ++i) {
    mh.channels.push_back(r.matrix());
    if (mh.channels.back().rows() != n || mh.channels.back().cols() != d)
      throw FormatError(path.string() + ": channel shape disagrees with header");
  }
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return mh;
}

std::optional<MultiHopFeatures> try_load(const fs::path& path, NodeId n, Eigen::Index d, int k) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    auto mh = load(path);
    if (mh.hops() == k && mh.nodes() == n && mh.dim() == d) return mh;
  } catch (const FormatError&) {
  }
  return std::nullopt;
}

}  // namespace hop_cache

}  // namespace smn
