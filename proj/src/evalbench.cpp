#include "smn/evalbench.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <set>

namespace smn {

SetMetrics f1_jaccard(const NodeList& returned, const NodeList& truth, int k, bool strict_recall) {
  if (returned.empty()) throw ArgumentError("returned set is empty");
  SetMetrics m;
  if (truth.empty()) {
    m.empty_truth = true;
    return m;
  }
  const std::set<NodeId> r(returned.begin(), returned.end());
  const std::set<NodeId> t(truth.begin(), truth.end());
  std::size_t hit = 0;
  for (NodeId v : r) hit += t.count(v);
  const auto uni = r.size() + t.size() - hit;
  const auto recall_denom = strict_recall ? t.size() : std::min<std::size_t>(t.size(), static_cast<std::size_t>(k));

  m.precision = static_cast<Scalar>(hit) / static_cast<Scalar>(r.size());
  m.recall = static_cast<Scalar>(hit) / static_cast<Scalar>(recall_denom);
  m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.jaccard = static_cast<Scalar>(hit) / static_cast<Scalar>(uni);
  return m;
}

namespace {

Scalar entropy2(Scalar a, Scalar b) {
  Scalar h = 0;
  for (Scalar p : {a, b})
    if (p > 0) h -= p * std::log(p);
  return h;
}

}  // namespace

Scalar nmi_binary(const NodeList& returned, const NodeList& truth, const NodeList& scope) {
  if (scope.size() < 2) throw ArgumentError("nmi_binary needs a scope of at least two nodes");
  const std::set<NodeId> r(returned.begin(), returned.end());
  const std::set<NodeId> t(truth.begin(), truth.end());
  Scalar table[2][2] = {{0, 0}, {0, 0}};
  for (NodeId v : scope) table[r.count(v)][t.count(v)] += 1;
  const auto n = static_cast<Scalar>(scope.size());
  for (auto& row : table)
    for (auto& cell : row) cell /= n;

  const Scalar px1 = table[1][0] + table[1][1], py1 = table[0][1] + table[1][1];
  const Scalar hx = entropy2(px1, 1 - px1), hy = entropy2(py1, 1 - py1);
  if (hx == 0 || hy == 0) return 0.0;
  Scalar mi = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const Scalar pxy = table[a][b];
      const Scalar px = a ? px1 : 1 - px1, py = b ? py1 : 1 - py1;
      if (pxy > 0) mi += pxy * std::log(pxy / (px * py));
    }
  return std::clamp(2 * mi / (hx + hy), 0.0, 1.0);
}

NodeList truth_set(const SearchIndex& index, const LabelMatrix& labels, NodeId q,
                   const std::vector<CommunityId>& targets) {
  NodeList out;
  for (NodeId v = 0; v < index.nodes(); ++v)
    if ((v == q || index.eligible(v)) && labels.contains_all(v, targets)) out.push_back(v);
  return out;
}

namespace {

MetricSummary summarize(const std::vector<Scalar>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  for (Scalar x : xs) s.mean += x;
  s.mean /= static_cast<Scalar>(xs.size());
  for (Scalar x : xs) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<Scalar>(xs.size()));
  return s;
}

const char* task_name(BenchTask t) { return t == BenchTask::ocs ? "ocs" : "ocis"; }
const char* algo_name(SearchAlgorithm a) { return a == SearchAlgorithm::topk ? "topk" : "cs"; }

}  // namespace

BenchReport run_benchmark(const SearchIndex& index, const LabelMatrix& labels, const BenchOptions& opt) {
  if (opt.k < 1) throw ArgumentError("k must be >= 1");
  if (opt.n_queries < 1) throw ArgumentError("n_queries must be >= 1");
  NodeList pool;
  for (NodeId v = 0; v < index.nodes(); ++v)
    if (index.eligible(v) && !labels.labels(v).empty()) pool.push_back(v);
  if (pool.empty()) throw DatasetError("no eligible labeled query nodes");

  std::mt19937_64 rng(derive_seed(opt.seed, "queries"));
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(opt.n_queries)));

  BenchReport rep;
  rep.task = opt.task;
  rep.algorithm = opt.algorithm;
  rep.k = opt.task == BenchTask::ocs ? opt.k : (opt.k + 4) / 5;
  rep.queries = pool;

  NodeList scope_base;
  for (NodeId v = 0; v < index.nodes(); ++v)
    if (index.eligible(v)) scope_base.push_back(v);

  std::vector<Scalar> f1s, jacs, nmis;
  Scalar total_seconds = 0;
  for (NodeId q : pool) {
    std::vector<std::vector<CommunityId>> target_sets;
    if (opt.task == BenchTask::ocs)
      for (CommunityId t : labels.labels(q)) target_sets.push_back({t});
    else
      target_sets.push_back(labels.labels(q));

    NodeList scope = scope_base;
    if (!index.eligible(q)) scope.insert(std::upper_bound(scope.begin(), scope.end(), q), q);

    Scalar f1 = 0, jac = 0, nmi = 0;
    for (const auto& targets : target_sets) {
      QueryResult qr;
      qr.query = q;
      qr.targets = targets;
      const auto t0 = std::chrono::steady_clock::now();
      const auto comm = ocis_search(index, q, targets, rep.k, opt.algorithm, opt.cs);
      qr.seconds = std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t0).count();
      qr.returned = comm.members;
      qr.is_short = comm.is_short;
      qr.truth = truth_set(index, labels, q, targets);
      const auto m = f1_jaccard(qr.returned, qr.truth, rep.k, opt.strict_recall);
      qr.f1 = m.f1;
      qr.jaccard = m.jaccard;
      qr.nmi = nmi_binary(qr.returned, qr.truth, scope);
      f1 += qr.f1;
      jac += qr.jaccard;
      nmi += qr.nmi;
      total_seconds += qr.seconds;
      rep.runs.push_back(std::move(qr));
    }
    const auto runs = static_cast<Scalar>(target_sets.size());
    f1s.push_back(f1 / runs);
    jacs.push_back(jac / runs);
    nmis.push_back(nmi / runs);
  }
  rep.f1 = summarize(f1s);
  rep.jaccard = summarize(jacs);
  rep.nmi = summarize(nmis);
  rep.mean_query_seconds = rep.runs.empty() ? 0 : total_seconds / static_cast<Scalar>(rep.runs.size());
  return rep;
}

BenchReport run_benchmark(const SmnParams& params, const Graph& g, const Split& split, const BenchOptions& options) {
  const auto mh = multi_hop_stack(normalize(g), g.features, params.dims.hops);
  const auto index = SearchIndex::build(params, mh, split.train);
  return run_benchmark(index, g.labels, options);
}

std::string BenchReport::to_json(bool timings) const {
  nlohmann::ordered_json j;
  j["task"] = task_name(task);
  j["algorithm"] = algo_name(algorithm);
  j["k"] = k;
  j["queries"] = queries;
  auto summary = [](const MetricSummary& s) { return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.stddev}}; };
  j["f1"] = summary(f1);
  j["jaccard"] = summary(jaccard);
  j["nmi"] = summary(nmi);
  if (timings) j["mean_query_seconds"] = mean_query_seconds;
  auto& rows = j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs)
    rows.push_back({{"query", r.query},
                    {"targets", r.targets},
                    {"returned", r.returned},
                    {"truth_size", r.truth.size()},
                    {"f1", r.f1},
                    {"jaccard", r.jaccard},
                    {"nmi", r.nmi},
                    {"short", r.is_short}});
  if (timings)
    for (std::size_t i = 0; i < runs.size(); ++i) rows[i]["seconds"] = runs[i].seconds;
  return j.dump(2);
}

std::string BenchReport::table_row(const std::string& dataset) const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-5s %-5s %.4f %.4f %.4f", dataset.c_str(), task_name(task),
                algo_name(algorithm), f1.mean, jaccard.mean, nmi.mean);
  return buf;
}

// ---------------------------------------------------------------------------

void SynthConfig::validate() const {
  if (n < 2) throw ConfigError("synth.n must be >= 2");
  if (c < 1) throw ConfigError("synth.c must be >= 1");
  if (!(overlap_ratio >= 0 && overlap_ratio <= 1)) throw ConfigError("synth.overlap_ratio must lie in [0, 1]");
  if (overlap_ratio > 0 && c < 2) throw ConfigError("overlapping labels need at least two communities");
  if (!(p_out >= 0 && p_out < p_in && p_in <= 1)) throw ConfigError("synth needs 0 <= p_out < p_in <= 1");
  if (d_noise < 0) throw ConfigError("synth.d_noise must be >= 0");
}

Graph synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  LabelMatrix labels(cfg.n, cfg.c);
  std::uniform_int_distribution<int> pick(0, cfg.c - 1);
  std::vector<int> first(static_cast<std::size_t>(cfg.n));
  for (NodeId v = 0; v < cfg.n; ++v) {
    first[static_cast<std::size_t>(v)] = pick(rng);
    labels.add(v, first[static_cast<std::size_t>(v)]);
  }

  const auto n_overlap =
      static_cast<std::size_t>(std::ceil(cfg.overlap_ratio * static_cast<Scalar>(cfg.n) - 1e-9));
  NodeList order(static_cast<std::size_t>(cfg.n));
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);
  if (n_overlap > 0) {
    std::uniform_int_distribution<int> other(0, cfg.c - 2);
    for (std::size_t i = 0; i < n_overlap; ++i) {
      const NodeId v = order[i];
      int second = other(rng);
      if (second >= first[static_cast<std::size_t>(v)]) ++second;
      labels.add(v, second);
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::uniform_real_distribution<Scalar> coin(0.0, 1.0);
  for (NodeId u = 0; u < cfg.n; ++u)
    for (NodeId v = u + 1; v < cfg.n; ++v) {
      const auto& lu = labels.labels(u);
      const auto& lv = labels.labels(v);
      const bool share = std::find_first_of(lu.begin(), lu.end(), lv.begin(), lv.end()) != lu.end();
      if (coin(rng) < (share ? cfg.p_in : cfg.p_out)) edges.emplace_back(u, v);
    }

  Matrix x(cfg.n, cfg.c + cfg.d_noise);
  x.leftCols(cfg.c) = labels.dense();
  std::normal_distribution<Scalar> noise(0.0, 1.0);
  for (NodeId v = 0; v < cfg.n; ++v)
    for (int j = 0; j < cfg.d_noise; ++j) x(v, cfg.c + j) = noise(rng);

  return build_graph(cfg.n, edges, std::move(x), std::move(labels));
}

OverlapStats overlap_stats(const LabelMatrix& labels) {
  OverlapStats s;
  if (labels.rows() == 0) return s;
  NodeId multi = 0;
  for (NodeId v = 0; v < labels.rows(); ++v) {
    const auto sz = static_cast<int>(labels.labels(v).size());
    multi += sz > 1;
    s.max_affiliation = std::max(s.max_affiliation, sz);
  }
  s.overlap_ratio = static_cast<Scalar>(multi) / static_cast<Scalar>(labels.rows());
  return s;
}

Scalar roc_auc(const std::vector<Scalar>& pos, const std::vector<Scalar>& neg) {
  if (pos.empty() || neg.empty()) throw ArgumentError("roc_auc needs positives and negatives");
  // rank-sum form: sort all scores once
  std::vector<std::pair<Scalar, bool>> all;
  for (Scalar s : pos) all.push_back({s, true});
  for (Scalar s : neg) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first < b.first; });
  Scalar rank_sum = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const Scalar avg_rank = 0.5 * static_cast<Scalar>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (all[t].second) rank_sum += avg_rank;
    i = j;
  }
  const auto np = static_cast<Scalar>(pos.size()), nn = static_cast<Scalar>(neg.size());
  return (rank_sum - np * (np + 1) / 2) / (np * nn);
}

}  // namespace smn
