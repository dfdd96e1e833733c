#pragma once

#include "smn/model.hpp"

#include <limits>

namespace smn {

enum class SearchAlgorithm { topk, cs };
enum class CentroidUpdate { exact, incremental };
enum class SearchScope { held_out, all };

/// Frozen embeddings plus the binarized subspace filter. Immutable; safe to
/// share between concurrent queries.
class SearchIndex {
public:
  SearchIndex(Matrix embeddings, Matrix hard_gate, std::vector<bool> eligible);

  /// Runs the model once over every node. With SearchScope::held_out the
  /// training nodes are not eligible answers.
  static SearchIndex build(const SmnParams& params, const MultiHopFeatures& mh, const NodeList& training,
                           SearchScope scope = SearchScope::held_out);

  const Matrix& embeddings() const { return embeddings_; }
  const Matrix& hard_gate() const { return hard_gate_; }
  bool eligible(NodeId v) const { return eligible_[static_cast<std::size_t>(v)]; }
  NodeId nodes() const { return embeddings_.rows(); }
  int communities() const { return static_cast<int>(hard_gate_.cols()); }

  /// Element-wise OR of the gate columns of `targets`.
  Vector union_basis(const std::vector<CommunityId>& targets) const;

private:
  Matrix embeddings_;
  Matrix hard_gate_;
  std::vector<bool> eligible_;
};

/// Each row multiplied element-wise by `basis`.
template <typename Derived>
auto project(const Eigen::MatrixBase<Derived>& x, const Vector& basis) {
  return x * basis.asDiagonal();
}

Matrix subspace_map(const SearchIndex& index, const std::vector<CommunityId>& targets);

struct Community {
  NodeList members;             // query first
  std::vector<Scalar> scores;   // cosine to the query (top-k) or final centroid (cs)
  NodeId query = 0;
  std::vector<CommunityId> targets;
  bool is_short = false;        // fewer than k eligible answers existed
};

struct Ranked {
  NodeId node;
  Scalar similarity;
};

/// Eligible nodes other than q with a nonzero projection, by descending cosine
/// to the projected query; ties by ascending node id.
std::vector<Ranked> rank_candidates(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets);

struct SwapRecord {
  NodeId evicted;
  NodeId admitted;
  Scalar cohesion_before;  // Σ cos(member, centroid) before the swap
  Scalar cohesion_after;   // same sum over the new members and recomputed centroid
};

struct CsOptions {
  // Early stop threshold on similarity to the query. NaN selects the automatic
  // value: the similarity of the 2k-th ranked candidate.
  Scalar threshold = std::numeric_limits<Scalar>::quiet_NaN();
  CentroidUpdate centroid = CentroidUpdate::exact;
  std::vector<SwapRecord>* swaps = nullptr;  // instrumentation
};

Community sub_topk(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets, int k);
Community sub_cs(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets, int k,
                 const CsOptions& options = {});

/// Intersection search over the union of the target subspaces.
Community ocis_search(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets, int k,
                      SearchAlgorithm algorithm, const CsOptions& options = {});

}  // namespace smn
