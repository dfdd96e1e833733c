#pragma once

#include "smn/search.hpp"
#include "smn/trainer.hpp"

#include <string>

namespace smn {

struct SetMetrics {
  Scalar precision = 0;
  Scalar recall = 0;
  Scalar f1 = 0;
  Scalar jaccard = 0;
  bool empty_truth = false;  // metrics forced to 0
};

/// Recall divides by min(|truth|, k) unless `strict_recall` is set, since a
/// k-sized answer cannot recall more than k nodes.
SetMetrics f1_jaccard(const NodeList& returned, const NodeList& truth, int k, bool strict_recall = false);

/// NMI between the {in, out} partitions of `scope` induced by the two sets,
/// normalized by the mean entropy. 0 when either partition is trivial.
Scalar nmi_binary(const NodeList& returned, const NodeList& truth, const NodeList& scope);

enum class BenchTask { ocs, ocis };

struct BenchOptions {
  BenchTask task = BenchTask::ocs;
  int n_queries = 50;
  int k = 30;  // OCS size; OCIS runs use ceil(k / 5)
  SearchAlgorithm algorithm = SearchAlgorithm::cs;
  std::uint64_t seed = 0;
  bool strict_recall = false;
  CsOptions cs;
};

struct QueryResult {
  NodeId query = 0;
  std::vector<CommunityId> targets;
  NodeList returned;
  NodeList truth;
  Scalar f1 = 0, jaccard = 0, nmi = 0;
  Scalar seconds = 0;
  bool is_short = false;
};

struct MetricSummary {
  Scalar mean = 0;
  Scalar stddev = 0;
};

struct BenchReport {
  BenchTask task = BenchTask::ocs;
  SearchAlgorithm algorithm = SearchAlgorithm::cs;
  int k = 0;                         // size actually searched
  NodeList queries;                  // sampled query nodes
  std::vector<QueryResult> runs;     // one per (query, target set)
  MetricSummary f1, jaccard, nmi;    // over per-query averages
  Scalar mean_query_seconds = 0;

  /// Wall-clock fields are left out unless `timings` is set, so equal inputs
  /// give byte-identical reports.
  std::string to_json(bool timings = false) const;
  /// One row in the shape: dataset task algo F1 JAC NMI
  std::string table_row(const std::string& dataset) const;
};

/// Nodes inside the index's eligible scope (plus q) whose labels cover `targets`.
NodeList truth_set(const SearchIndex& index, const LabelMatrix& labels, NodeId q,
                   const std::vector<CommunityId>& targets);

BenchReport run_benchmark(const SearchIndex& index, const LabelMatrix& labels, const BenchOptions& options);
BenchReport run_benchmark(const SmnParams& params, const Graph& g, const Split& split, const BenchOptions& options);

// ---------------------------------------------------------------------------
// Planted overlapping communities

struct SynthConfig {
  NodeId n = 600;
  int c = 4;
  Scalar overlap_ratio = 0.3;
  Scalar p_in = 0.15;
  Scalar p_out = 0.01;
  int d_noise = 16;
  std::uint64_t seed = 1;

  void validate() const;
};

/// One uniform label per node; ceil(overlap_ratio·n) nodes get a second,
/// distinct label. Edges appear with p_in when label sets intersect, p_out
/// otherwise. Features: multi-hot labels followed by d_noise N(0,1) columns.
Graph synth_generate(const SynthConfig& cfg);

struct OverlapStats {
  Scalar overlap_ratio = 0;   // fraction of nodes with more than one label
  int max_affiliation = 0;
};
OverlapStats overlap_stats(const LabelMatrix& labels);

/// Probability that a random (positive, negative) pair is ordered correctly by
/// `score`; ties count one half.
Scalar roc_auc(const std::vector<Scalar>& positive_scores, const std::vector<Scalar>& negative_scores);

}  // namespace smn
