#include "../support.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace smn;

namespace {

NodeList range(NodeId lo, NodeId hi) {
  NodeList out;
  for (NodeId v = lo; v < hi; ++v) out.push_back(v);
  return out;
}

const test::PlantedRun& planted() {
  static const test::PlantedRun run = test::train_planted(test::planted_config());
  return run;
}

}  // namespace

TEST_CASE("f1 and jaccard closed forms") {
  auto m = f1_jaccard({1, 2, 3}, {1, 2, 3}, 3);
  CHECK(m.f1 == 1.0);
  CHECK(m.jaccard == 1.0);

  m = f1_jaccard({10, 11}, {11, 12}, 2);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == doctest::Approx(0.5));
  CHECK(m.jaccard == doctest::Approx(1.0 / 3.0));

  m = f1_jaccard({1, 2}, {3, 4}, 2);
  CHECK(m.f1 == 0.0);
  CHECK(m.jaccard == 0.0);

  m = f1_jaccard({1, 2}, {}, 2);
  CHECK(m.empty_truth);
  CHECK(m.f1 == 0.0);
}

TEST_CASE("recall is capped at k unless strict") {
  const NodeList truth = range(0, 100);
  const auto capped = f1_jaccard(range(0, 10), truth, 10);
  CHECK(capped.recall == 1.0);
  CHECK(capped.f1 == 1.0);
  const auto strict = f1_jaccard(range(0, 10), truth, 10, true);
  CHECK(strict.recall == doctest::Approx(0.1));
  // returned = truth with k >= |truth|
  CHECK(f1_jaccard(range(0, 7), range(0, 7), 30).f1 == 1.0);
}

TEST_CASE("set metric symmetry") {
  const NodeList a{1, 2, 3, 4, 5}, b{4, 5, 6};
  const auto ab = f1_jaccard(a, b, 5), ba = f1_jaccard(b, a, 5);
  CHECK(ab.jaccard == ba.jaccard);
  CHECK(ab.precision != ba.precision);
}

TEST_CASE("binary NMI") {
  const NodeList scope = range(0, 8);
  CHECK(nmi_binary({0, 1, 2}, {0, 1, 2}, scope) == doctest::Approx(1.0));
  // checkerboard, tests/oracles/losses_oracle.py
  CHECK(std::abs(nmi_binary({0, 1, 4, 5}, {0, 1, 2, 3}, scope)) <= 1e-6);
  CHECK(nmi_binary({4, 5, 6, 7}, {0, 1, 2, 3}, scope) == doctest::Approx(1.0));
  CHECK(nmi_binary(scope, {0, 1}, scope) == 0.0);
  CHECK(nmi_binary({}, {0, 1}, scope) == 0.0);
  const NodeList ten = range(0, 10);
  CHECK(std::abs(nmi_binary({0, 1, 2, 7, 8}, {0, 1, 2, 3}, ten) - 0.12634639359704841) <= 1e-12);
  CHECK(nmi_binary({0, 1, 2, 7, 8}, {0, 1, 2, 3}, ten) == nmi_binary({0, 1, 2, 3}, {0, 1, 2, 7, 8}, ten));
}

TEST_CASE("roc auc") {
  CHECK(roc_auc({0.9, 0.8}, {0.1, 0.2}) == 1.0);
  CHECK(roc_auc({0.1}, {0.9}) == 0.0);
  CHECK(roc_auc({0.5}, {0.5}) == 0.5);
  CHECK(roc_auc({0.9, 0.3}, {0.5}) == 0.5);
}

TEST_CASE("synthetic generator") {
  SUBCASE("no overlap") {
    SynthConfig c;
    c.overlap_ratio = 0;
    c.n = 200;
    const Graph g = synth_generate(c);
    const auto st = overlap_stats(g.labels);
    CHECK(st.overlap_ratio == 0.0);
    CHECK(st.max_affiliation == 1);
  }
  SUBCASE("two disjoint cliques") {
    SynthConfig c;
    c.n = 30;
    c.c = 2;
    c.overlap_ratio = 0;
    c.p_in = 1;
    c.p_out = 0;
    const Graph g = synth_generate(c);
    std::int64_t expected = 0;
    for (int j = 0; j < 2; ++j) {
      std::int64_t size = 0;
      for (NodeId v = 0; v < g.n; ++v) size += g.labels.has(v, j);
      expected += size * (size - 1) / 2;
    }
    CHECK(g.m == expected);
    for (NodeId v = 0; v < g.n; ++v)
      for (SparseMatrix::InnerIterator it(g.adjacency, v); it; ++it)
        CHECK(g.labels.labels(v) == g.labels.labels(it.col()));
  }
  SUBCASE("features carry the labels then noise") {
    SynthConfig c;
    c.n = 50;
    c.d_noise = 3;
    const Graph g = synth_generate(c);
    CHECK(g.feature_dim() == c.c + 3);
    CHECK(g.features.leftCols(c.c) == g.labels.dense());
  }
  SUBCASE("deterministic under seed") {
    SynthConfig c;
    c.n = 80;
    const Graph a = synth_generate(c), b = synth_generate(c);
    CHECK(a.features == b.features);
    CHECK(Matrix(a.adjacency) == Matrix(b.adjacency));
  }
  SUBCASE("invalid configs") {
    SynthConfig c;
    c.p_out = 0.5;
    c.p_in = 0.4;
    CHECK_THROWS_AS(synth_generate(c), ConfigError);
    c = {};
    c.overlap_ratio = 1.5;
    CHECK_THROWS_AS(synth_generate(c), ConfigError);
  }
}

TEST_CASE("planted fixture statistics") {
  // recomputed from the committed label file
  const Graph g = load_dataset_dir(test::fixture("planted"));
  CHECK(g.n == 600);
  CHECK(g.communities() == 4);
  const auto st = overlap_stats(g.labels);
  CHECK(st.overlap_ratio == doctest::Approx(0.3));
  CHECK(st.max_affiliation == 2);
}

TEST_CASE("generator statistics stay within sampling bounds") {
  SynthConfig c;
  c.n = 300;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    c.seed = seed;
    const Graph g = synth_generate(c);
    CHECK(overlap_stats(g.labels).overlap_ratio == doctest::Approx(0.3));
    std::int64_t in_pairs = 0, in_edges = 0, out_edges = 0;
    for (NodeId i = 0; i < g.n; ++i)
      for (NodeId j = i + 1; j < g.n; ++j) {
        bool shared = false;
        for (CommunityId a : g.labels.labels(i)) shared = shared || g.labels.has(j, a);
        const bool edge = g.adjacency.coeff(i, j) != 0;
        in_pairs += shared;
        in_edges += shared && edge;
        out_edges += !shared && edge;
      }
    const double out_pairs = double(g.n) * double(g.n - 1) / 2 - double(in_pairs);
    auto within = [](double count, double trials, double p) {
      return std::abs(count - trials * p) <= 3 * std::sqrt(trials * p * (1 - p));
    };
    CHECK(within(double(in_edges), double(in_pairs), c.p_in));
    CHECK(within(double(out_edges), out_pairs, c.p_out));
    // first label uniform over communities
    std::vector<int> counts(static_cast<std::size_t>(c.c), 0);
    for (NodeId v = 0; v < g.n; ++v)
      for (CommunityId a : g.labels.labels(v)) ++counts[static_cast<std::size_t>(a)];
    const double total = 300 * 1.3, p = 1.0 / c.c;
    for (int n : counts) CHECK(std::abs(n - total * p) <= 3 * std::sqrt(total * p * (1 - p)) + 1);
  }
}

TEST_CASE("truth sets") {
  LabelMatrix labels(5, 3);
  labels.add(0, 0);
  labels.add(1, 0);
  labels.add(1, 1);
  labels.add(2, 1);
  labels.add(3, 0);
  labels.add(3, 1);
  labels.add(4, 0);
  const SearchIndex index(Matrix::Ones(5, 2), Matrix::Ones(2, 3), {true, true, true, false, true});
  CHECK(truth_set(index, labels, 0, {0}) == NodeList{0, 1, 4});
  CHECK(truth_set(index, labels, 1, {0, 1}) == NodeList{1});
  CHECK(truth_set(index, labels, 3, {0, 1}) == NodeList{1, 3});
}

TEST_CASE("benchmark on the planted fixture") {
  const test::PlantedRun& run = planted();
  const SearchIndex index = SearchIndex::build(run.result.params, run.hops, run.split.train);
  BenchOptions opt;
  opt.seed = 5;
  opt.n_queries = 20;
  const BenchReport a = run_benchmark(index, run.graph.labels, opt);
  const BenchReport b = run_benchmark(index, run.graph.labels, opt);
  CHECK(a.queries == b.queries);
  CHECK(a.f1.mean == b.f1.mean);
  CHECK(a.queries.size() == 20);
  CHECK(a.k == 30);
  for (NodeId q : a.queries) {
    CHECK(index.eligible(q));
    CHECK_FALSE(run.graph.labels.labels(q).empty());
  }
  // one run per ground-truth community of each query
  std::size_t expected_runs = 0;
  for (NodeId q : a.queries) expected_runs += run.graph.labels.labels(q).size();
  CHECK(a.runs.size() == expected_runs);
  for (const auto& r : a.runs) {
    CHECK(r.f1 >= 0);
    CHECK(r.f1 <= 1);
    CHECK(r.nmi >= 0);
    CHECK(r.nmi <= 1);
  }

  opt.task = BenchTask::ocis;
  const BenchReport ocis = run_benchmark(index, run.graph.labels, opt);
  CHECK(ocis.k == 6);
  CHECK(ocis.runs.size() == 20);
  for (const auto& r : ocis.runs) CHECK(r.targets == run.graph.labels.labels(r.query));

  const auto json = nlohmann::json::parse(a.to_json());
  CHECK(json["task"] == "ocs");
  CHECK(json["runs"].size() == a.runs.size());
  CHECK(json["f1"]["mean"].get<double>() == doctest::Approx(a.f1.mean));
  CHECK(a.table_row("planted").find("planted") == 0);
}

TEST_CASE("benchmark needs labeled eligible nodes") {
  LabelMatrix labels(4, 1);
  labels.add(0, 0);
  const SearchIndex index(Matrix::Ones(4, 2), Matrix::Ones(2, 1), {false, true, true, true});
  CHECK_THROWS_AS(run_benchmark(index, labels, {}), DatasetError);
}
