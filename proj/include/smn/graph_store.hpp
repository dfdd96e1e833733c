#pragma once

#include "smn/types.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <vector>

namespace smn {

// Binary multi-label membership. Row v lists the communities node v belongs to;
// an empty row is allowed.
class LabelMatrix {
public:
  LabelMatrix() = default;
  LabelMatrix(NodeId n, int c) : c_(c), rows_(static_cast<std::size_t>(n)) {}

  NodeId rows() const { return static_cast<NodeId>(rows_.size()); }
  int communities() const { return c_; }

  const std::vector<CommunityId>& labels(NodeId v) const { return rows_.at(static_cast<std::size_t>(v)); }
  bool has(NodeId v, CommunityId j) const;
  /// Adds j to the sorted label set of v (no-op if present).
  void add(NodeId v, CommunityId j);
  /// True if v's labels are a superset of `targets`.
  bool contains_all(NodeId v, const std::vector<CommunityId>& targets) const;

  /// Dense 0/1 matrix restricted to `nodes` (in that order).
  Matrix dense(const NodeList& nodes) const;
  Matrix dense() const;

private:
  int c_ = 0;
  std::vector<std::vector<CommunityId>> rows_;
};

struct Graph {
  NodeId n = 0;
  std::int64_t m = 0;
  // Symmetric {0,1} pattern; both (i,j) and (j,i) are stored, diagonal empty.
  SparseMatrix adjacency;
  Matrix features;
  LabelMatrix labels;

  int feature_dim() const { return static_cast<int>(features.cols()); }
  int communities() const { return labels.communities(); }
  std::int64_t degree(NodeId v) const;
};

// D^{-1/2} A D^{-1/2} without self-loops. Degree-0 rows are all zero.
struct NormalizedAdjacency {
  NodeId n = 0;
  SparseMatrix values;
};

struct Split {
  NodeList train;
  NodeList validation;
  NodeList test;
  std::uint64_t seed = 0;
};

struct SplitRatios {
  int train = 10;
  int validation = 10;
  int test = 80;
};

/// Builds a Graph from an edge list and dense features / labels already
/// indexed by internal node id. Duplicate and reversed edges collapse into one
/// undirected edge; self-loops are dropped.
Graph build_graph(NodeId n, const std::vector<std::pair<NodeId, NodeId>>& edges, Matrix features,
                  LabelMatrix labels);

Graph load_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                   const std::filesystem::path& label_path);

/// Loads `edges.txt`, `features.txt` and `labels.txt` from a dataset directory.
Graph load_dataset_dir(const std::filesystem::path& dir);

void save_dataset_dir(const Graph& g, const std::filesystem::path& dir);

NormalizedAdjacency normalize(const Graph& g);

/// Â = D̄^{-1/2}(A + I)D̄^{-1/2}, only used by the oversmoothing diagnostic.
NormalizedAdjacency normalize_with_self_loops(const Graph& g);

Split make_split(const Graph& g, SplitRatios ratios, std::uint64_t seed);
Split make_split(NodeId n, SplitRatios ratios, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Raw edge files with arbitrary integer ids.

struct IdRemap {
  // original id -> dense internal id, ascending original order
  std::map<std::int64_t, NodeId> to_internal;
  std::vector<std::int64_t> to_original;
};

std::vector<std::pair<std::int64_t, std::int64_t>> read_edge_list(const std::filesystem::path& path);

/// Dense remap: sorted distinct original ids map to 0..n-1.
IdRemap make_remap(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges, NodeId extra_nodes = 0);

void save_remap(const IdRemap& remap, const std::filesystem::path& path);

/// Loads a dataset whose edge file uses arbitrary ids. Feature and label rows
/// follow ascending original-id order; rows past the last edge id belong to
/// isolated nodes and receive fresh ids above every original one.
Graph ingest_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                     const std::filesystem::path& label_path, IdRemap& remap);

}  // namespace smn
