#pragma once

#include "smn/graph_store.hpp"

#include <filesystem>
#include <optional>

namespace smn {

// Channel i holds Ã^i X, i = 0..k-1. Channel 0 is X verbatim.
struct MultiHopFeatures {
  std::vector<Matrix> channels;

  int hops() const { return static_cast<int>(channels.size()); }
  Eigen::Index nodes() const { return channels.empty() ? 0 : channels.front().rows(); }
  Eigen::Index dim() const { return channels.empty() ? 0 : channels.front().cols(); }

  /// Same stack restricted to `rows` (in that order).
  MultiHopFeatures select_rows(const NodeList& rows) const;
};

/// Repeated sparse products; Ã^i is never formed.
MultiHopFeatures multi_hop_stack(const NormalizedAdjacency& adj, const Matrix& x, int k);

/// Mean cosine similarity over all unordered row pairs. Zero rows contribute 0.
template <typename Derived>
Scalar smoothness(const Eigen::MatrixBase<Derived>& h) {
  const Eigen::Index n = h.rows();
  if (n < 2) throw ArgumentError("smoothness needs at least two rows");
  Matrix unit = h;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar norm = unit.row(i).norm();
    if (norm > 0) unit.row(i) /= norm;
  }
  const Matrix gram = unit * unit.transpose();
  const Scalar off_diag = gram.sum() - gram.diagonal().sum();
  return off_diag / static_cast<Scalar>(n * (n - 1));
}

struct SmoothnessPoint {
  int hop;
  Scalar without_self_loops;
  Scalar with_self_loops;
};

/// Per-hop smoothness for the plain normalization vs the self-loop (A + I) one.
std::vector<SmoothnessPoint> smoothness_curve(const Graph& g, int hops);

// Binary cache of a multi-hop stack, keyed by content hash of its inputs.
namespace hop_cache {

std::uint64_t key(const std::filesystem::path& edge_file, const std::filesystem::path& feature_file, int k);
std::filesystem::path file_for(const std::filesystem::path& dir, std::uint64_t key);

void save(const MultiHopFeatures& mh, const std::filesystem::path& path);
MultiHopFeatures load(const std::filesystem::path& path);
std::optional<MultiHopFeatures> try_load(const std::filesystem::path& path, NodeId n, Eigen::Index d, int k);

}  // namespace hop_cache

}  // namespace smn
