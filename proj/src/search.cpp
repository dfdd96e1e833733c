#include "smn/search.hpp"

#include <algorithm>
#include <numeric>

namespace smn {

SearchIndex::SearchIndex(Matrix embeddings, Matrix hard_gate, std::vector<bool> eligible)
    : embeddings_(std::move(embeddings)), hard_gate_(std::move(hard_gate)), eligible_(std::move(eligible)) {
  if (static_cast<Eigen::Index>(eligible_.size()) != embeddings_.rows())
    throw DimensionError("eligible mask length differs from embedding rows");
  if (hard_gate_.rows() != embeddings_.cols()) throw DimensionError("gate rows differ from embedding width");
  if (!hard_gate_.unaryExpr([](Scalar g) { return (g == 0.0 || g == 1.0) ? 0.0 : 1.0; }).isZero())
    throw ArgumentError("hard gate entries must be 0 or 1");
}

SearchIndex SearchIndex::build(const SmnParams& params, const MultiHopFeatures& mh, const NodeList& training,
                               SearchScope scope) {
  auto trace = forward(params, mh, GateMode::hard);
  std::vector<bool> eligible(static_cast<std::size_t>(mh.nodes()), true);
  if (scope == SearchScope::held_out)
    for (NodeId v : training) eligible[static_cast<std::size_t>(v)] = false;
  return SearchIndex(std::move(trace.embeddings), std::move(trace.gate), std::move(eligible));
}

Vector SearchIndex::union_basis(const std::vector<CommunityId>& targets) const {
  if (targets.empty()) throw ArgumentError("target set is empty");
  Vector basis = Vector::Zero(hard_gate_.rows());
  for (CommunityId t : targets) {
    if (t < 0 || t >= communities()) throw ArgumentError("target community " + std::to_string(t) + " out of range");
    basis = basis.cwiseMax(hard_gate_.col(t));
  }
  return basis;
}

Matrix subspace_map(const SearchIndex& index, const std::vector<CommunityId>& targets) {
  const Vector basis = index.union_basis(targets);
  if (basis.isZero()) throw SearchError("degenerate basis: the target subspace has no dimensions");
  return project(index.embeddings(), basis);
}

namespace {

Scalar cosine(const RowVector& a, const RowVector& b) {
  const Scalar na = a.norm(), nb = b.norm();
  return (na > 0 && nb > 0) ? a.dot(b) / (na * nb) : 0.0;
}

struct Projected {
  Matrix x;
  NodeId q;
};

Projected prepare(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets, int k) {
  if (k < 1) throw ArgumentError("community size k must be >= 1");
  if (q < 0 || q >= index.nodes()) throw ArgumentError("query node " + std::to_string(q) + " out of range");
  Projected p{subspace_map(index, targets), q};
  if (p.x.row(q).isZero()) throw SearchError("zero-query: the query projects to the zero vector");
  return p;
}

std::vector<Ranked> rank(const SearchIndex& index, const Projected& p) {
  const RowVector qv = p.x.row(p.q);
  std::vector<Ranked> out;
  for (NodeId v = 0; v < index.nodes(); ++v) {
    if (v == p.q || !index.eligible(v) || p.x.row(v).isZero()) continue;
    out.push_back({v, cosine(p.x.row(v), qv)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) { return a.similarity > b.similarity; });
  return out;
}

std::vector<CommunityId> sorted_targets(std::vector<CommunityId> t) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace

std::vector<Ranked> rank_candidates(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets) {
  return rank(index, prepare(index, q, targets, 1));
}

Community sub_topk(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets, int k) {
  const auto p = prepare(index, q, targets, k);
  const auto order = rank(index, p);
  Community c;
  c.query = q;
  c.targets = sorted_targets(targets);
  c.members.push_back(q);
  c.scores.push_back(1.0);
  const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k - 1));
  for (std::size_t i = 0; i < take; ++i) {
    c.members.push_back(order[i].node);
    c.scores.push_back(order[i].similarity);
  }
  c.is_short = take < static_cast<std::size_t>(k - 1);
  return c;
}

namespace {

class CohesiveState {
public:
  CohesiveState(const Matrix& x, NodeList members) : x_(x), members_(std::move(members)) { recompute(); }

  void recompute() {
    centroid_ = RowVector::Zero(x_.cols());
    for (NodeId v : members_) centroid_ += x_.row(v);
    centroid_ /= static_cast<Scalar>(members_.size());
  }

  Scalar similarity(NodeId v) const { return cosine(x_.row(v), centroid_); }

  Scalar cohesion() const {
    Scalar s = 0;
    for (NodeId v : members_) s += similarity(v);
    return s;
  }

  // least similar member to the centroid; ties go to the smaller node id
  std::size_t weakest() const {
    std::size_t best = 0;
    Scalar best_sim = similarity(members_[0]);
    for (std::size_t i = 1; i < members_.size(); ++i) {
      const Scalar s = similarity(members_[i]);
      if (s < best_sim || (s == best_sim && members_[i] < members_[best])) {
        best = i;
        best_sim = s;
      }
    }
    return best;
  }

  void replace(std::size_t slot, NodeId v, CentroidUpdate mode) {
    const NodeId old = members_[slot];
    members_[slot] = v;
    if (mode == CentroidUpdate::incremental)
      centroid_ += (x_.row(v) - x_.row(old)) / static_cast<Scalar>(members_.size());
    else
      recompute();
  }

  const NodeList& members() const { return members_; }
  const RowVector& centroid() const { return centroid_; }

private:
  const Matrix& x_;
  NodeList members_;
  RowVector centroid_;
};

}  // namespace

Community sub_cs(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets, int k,
                 const CsOptions& options) {
  const auto p = prepare(index, q, targets, k);
  const auto order = rank(index, p);
  const auto seed_count = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k - 1));

  NodeList seed{q};
  for (std::size_t i = 0; i < seed_count; ++i) seed.push_back(order[i].node);

  Scalar threshold = options.threshold;
  if (std::isnan(threshold)) {
    const auto rank_2k = static_cast<std::size_t>(2 * k);
    threshold = order.size() >= rank_2k ? order[rank_2k - 1].similarity : -std::numeric_limits<Scalar>::infinity();
  }

  CohesiveState state(p.x, std::move(seed));
  for (std::size_t i = seed_count; i < order.size(); ++i) {
    const auto [v, sim_to_query] = order[i];
    const std::size_t slot = state.weakest();
    const Scalar weakest_sim = state.similarity(state.members()[slot]);
    if (state.members()[slot] == q) break;
    if (sim_to_query <= threshold) break;
    if (state.similarity(v) > weakest_sim) {
      const Scalar before = options.swaps ? state.cohesion() : 0.0;
      const NodeId evicted = state.members()[slot];
      state.replace(slot, v, options.centroid);
      if (options.swaps) options.swaps->push_back({evicted, v, before, state.cohesion()});
    }
  }

  // query first, then by descending similarity to the final centroid
  NodeList rest(state.members().begin() + 1, state.members().end());
  std::vector<Scalar> sims;
  std::stable_sort(rest.begin(), rest.end(), [&](NodeId a, NodeId b) {
    const Scalar sa = state.similarity(a), sb = state.similarity(b);
    return sa > sb || (sa == sb && a < b);
  });
  Community c;
  c.query = q;
  c.targets = sorted_targets(targets);
  c.members.push_back(q);
  c.scores.push_back(state.similarity(q));
  for (NodeId v : rest) {
    c.members.push_back(v);
    c.scores.push_back(state.similarity(v));
  }
  c.is_short = seed_count < static_cast<std::size_t>(k - 1);
  return c;
}

Community ocis_search(const SearchIndex& index, NodeId q, const std::vector<CommunityId>& targets, int k,
                      SearchAlgorithm algorithm, const CsOptions& options) {
  return algorithm == SearchAlgorithm::topk ? sub_topk(index, q, targets, k) : sub_cs(index, q, targets, k, options);
}

}  // namespace smn
