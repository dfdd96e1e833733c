#include "smn/cli.hpp"

#include "smn/config.hpp"
#include "smn/evalbench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>

namespace smn::cli {

namespace fs = std::filesystem;

namespace {

struct Prepared {
  Graph graph;
  MultiHopFeatures hops;
  Split split;
};

fs::path effective_cache_dir(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  return cfg.data.cache_dir;
}

Prepared prepare(const RunConfig& cfg, const fs::path& cache_dir) {
  if (cfg.data.dir.empty()) throw ConfigError("no dataset directory (set data.dir or pass --data)");
  Prepared p;
  p.graph = load_dataset_dir(cfg.data.dir);
  const int k = cfg.train.dims.hops;
  if (!cache_dir.empty()) {
    const auto file =
        hop_cache::file_for(cache_dir, hop_cache::key(cfg.data.dir / "edges.txt", cfg.data.dir / "features.txt", k));
    if (auto cached = hop_cache::try_load(file, p.graph.n, p.graph.features.cols(), k)) {
      p.hops = std::move(*cached);
    } else {
      p.hops = multi_hop_stack(normalize(p.graph), p.graph.features, k);
      hop_cache::save(p.hops, file);
    }
  } else {
    p.hops = multi_hop_stack(normalize(p.graph), p.graph.features, k);
  }
  p.split = make_split(p.graph, cfg.data.split, derive_seed(cfg.train.seed, "split"));
  return p;
}

SearchAlgorithm parse_algo(const std::string& s) { return s == "topk" ? SearchAlgorithm::topk : SearchAlgorithm::cs; }

Scalar parse_threshold(const std::string& s) {
  if (s == "auto") return std::numeric_limits<Scalar>::quiet_NaN();
  try {
    std::size_t used = 0;
    const Scalar v = std::stod(s, &used);
    if (used == s.size() && v >= -1 && v <= 1) return v;
  } catch (const std::exception&) {
  }
  throw ArgumentError("--threshold must be 'auto' or a number in [-1, 1]");
}

// A checkpoint plus everything needed to rebuild its search index.
struct Loaded {
  RunConfig cfg;
  SmnParams params;
  Prepared data;
};

Loaded load_model(const std::string& ckpt, const std::string& data_override, const std::string& cache_flag) {
  Loaded l;
  CheckpointMeta meta;
  l.params = load_checkpoint(ckpt, &meta);
  l.cfg = parse_config(meta.config);
  if (!data_override.empty()) l.cfg.data.dir = data_override;
  l.data = prepare(l.cfg, effective_cache_dir(cache_flag, l.cfg));
  if (l.data.hops.dim() != l.params.dims.input || l.data.graph.communities() != l.params.dims.communities)
    throw DimensionError("dataset shape (d=" + std::to_string(l.data.hops.dim()) + ", c=" +
                         std::to_string(l.data.graph.communities()) + ") does not match checkpoint (d=" +
                         std::to_string(l.params.dims.input) + ", c=" + std::to_string(l.params.dims.communities) + ")");
  return l;
}

void print_community(std::ostream& out, const Community& c, int k, SearchAlgorithm algo, double millis) {
  out.precision(10);
  for (std::size_t i = 0; i < c.members.size(); ++i) out << c.members[i] << ' ' << c.scores[i] << '\n';
  nlohmann::ordered_json j{{"query", c.query},
                           {"targets", c.targets},
                           {"k", k},
                           {"algorithm", algo == SearchAlgorithm::topk ? "topk" : "cs"},
                           {"short", c.is_short},
                           {"wall_time_ms", millis}};
  out << j.dump() << '\n';
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return ok;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return numeric_failure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return usage_error;
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << '\n';
    return usage_error;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return data_error;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Overlapping community search with a multi-hop attention network and sparse subspace filter", "smn"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);

  std::function<void()> action;

  // ingest ------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Validate a raw dataset and remap node ids to 0..n-1");
  std::string in_edges, in_features, in_labels, in_out;
  ingest->add_option("--edges", in_edges, "Edge file with arbitrary integer ids")->required();
  ingest->add_option("--features", in_features, "Feature file, rows in ascending original-id order")->required();
  ingest->add_option("--labels", in_labels, "Label file, rows in ascending original-id order")->required();
  ingest->add_option("--out", in_out, "Output dataset directory")->required();
  ingest->callback([&] {
    action = [&] {
      IdRemap remap;
      const Graph g = ingest_dataset(in_edges, in_features, in_labels, remap);
      save_dataset_dir(g, in_out);
      save_remap(remap, fs::path(in_out) / "idmap.txt");
      const auto st = overlap_stats(g.labels);
      out << "n=" << g.n << " m=" << g.m << " c=" << g.communities() << " d=" << g.feature_dim()
          << " OR=" << st.overlap_ratio << " MLA=" << st.max_affiliation << '\n';
    };
  });

  // synth -------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a planted overlapping-community dataset");
  SynthConfig sc;
  std::string synth_out;
  synth->add_option("--n", sc.n, "Node count");
  synth->add_option("--c", sc.c, "Community count");
  synth->add_option("--overlap", sc.overlap_ratio, "Fraction of nodes with two labels");
  synth->add_option("--p-in", sc.p_in, "Edge probability when label sets intersect");
  synth->add_option("--p-out", sc.p_out, "Edge probability otherwise");
  synth->add_option("--d-noise", sc.d_noise, "Extra N(0,1) feature columns");
  synth->add_option("--seed", sc.seed, "Random seed");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->callback([&] {
    action = [&] {
      const Graph g = synth_generate(sc);
      save_dataset_dir(g, synth_out);
      const auto st = overlap_stats(g.labels);
      out << "n=" << g.n << " m=" << g.m << " c=" << g.communities() << " d=" << g.feature_dim()
          << " OR=" << st.overlap_ratio << " MLA=" << st.max_affiliation << '\n';
    };
  });

  // train -------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  std::string tr_config, tr_data, tr_out = "model.smn", tr_log, tr_cache;
  double tr_lr = 0.02, tr_lambda = 0.001;
  int tr_epochs = 300;
  std::uint64_t tr_seed = 0;
  train_cmd->add_option("--config", tr_config, "Config file (sections data, model, loss, train, search)")->required();
  train_cmd->add_option("--data", tr_data, "Dataset directory (overrides data.dir)");
  train_cmd->add_option("--out", tr_out, "Checkpoint path");
  train_cmd->add_option("--log", tr_log, "Per-epoch CSV log path (default: standard output)");
  auto* o_epochs = train_cmd->add_option("--epochs", tr_epochs, "Overrides train.epochs");
  auto* o_lr = train_cmd->add_option("--lr", tr_lr, "Overrides train.learning_rate");
  auto* o_seed = train_cmd->add_option("--seed", tr_seed, "Overrides train.seed");
  auto* o_lambda = train_cmd->add_option("--lambda", tr_lambda, "Overrides loss.lambda");
  train_cmd->add_option("--cache-dir", tr_cache, "Hop-stack cache directory")->envname("SMN_CACHE_DIR");
  train_cmd->callback([&] {
    action = [&] {
      RunConfig cfg = load_config(tr_config);
      if (!tr_data.empty()) cfg.data.dir = tr_data;
      if (o_epochs->count()) cfg.train.epochs = tr_epochs;
      if (o_lr->count()) cfg.train.learning_rate = tr_lr;
      if (o_seed->count()) cfg.train.seed = tr_seed;
      if (o_lambda->count()) cfg.train.loss.lambda = tr_lambda;
      cfg.train.validate();
      cfg.data.dir = fs::absolute(cfg.data.dir);
      const auto data = prepare(cfg, effective_cache_dir(tr_cache, cfg));
      const auto result = train(data.hops, data.graph.labels, data.split, cfg.train);
      save_checkpoint(result.params, {to_config_text(cfg)}, tr_out);
      if (tr_log.empty()) {
        result.log.write_csv(out);
      } else {
        std::ofstream log(tr_log);
        if (!log) throw DatasetError("cannot write " + tr_log);
        result.log.write_csv(log);
      }
      err << "best epoch " << result.log.best_epoch << ", checkpoint written to " << tr_out << '\n';
    };
  });

  // query / ocis ------------------------------------------------------------
  struct QueryFlags {
    std::string ckpt, data, algo = "cs", threshold = "auto", scope = "held-out", cache;
    NodeId node = 0;
    std::vector<CommunityId> targets;
    int k = 30;
  };
  QueryFlags qf, of;
  auto add_query_flags = [](CLI::App* cmd, QueryFlags& f, bool targets_required) {
    cmd->add_option("--ckpt", f.ckpt, "Checkpoint path")->required();
    cmd->add_option("--node", f.node, "Query node id")->required();
    auto* t = cmd->add_option("--targets", f.targets, "Target community ids, comma separated")->delimiter(',');
    if (targets_required) t->required();
    cmd->add_option("--k", f.k, "Community size")->check(CLI::PositiveNumber);
    cmd->add_option("--algo", f.algo, "Search algorithm")->check(CLI::IsMember({"topk", "cs"}));
    cmd->add_option("--threshold", f.threshold, "Sub-CS similarity threshold: auto or a value in [-1, 1]");
    cmd->add_option("--scope", f.scope, "Answer scope")->check(CLI::IsMember({"held-out", "all"}));
    cmd->add_option("--data", f.data, "Dataset directory (overrides the checkpoint's)");
    cmd->add_option("--cache-dir", f.cache, "Hop-stack cache directory")->envname("SMN_CACHE_DIR");
  };
  auto run_query = [&](QueryFlags& f, bool predict_targets) {
    auto model = load_model(f.ckpt, f.data, f.cache);
    if (f.node < 0 || f.node >= model.data.graph.n) throw ArgumentError("--node " + std::to_string(f.node) + " out of range");
    auto targets = f.targets;
    if (targets.empty() && predict_targets) {
      targets = predict_labels(model.params, model.data.hops, f.node);
      if (targets.empty()) throw SearchError("no community predicted for node " + std::to_string(f.node) + "; pass --targets");
    }
    const auto scope = f.scope == "all" ? SearchScope::all : SearchScope::held_out;
    const auto index = SearchIndex::build(model.params, model.data.hops, model.data.split.train, scope);
    CsOptions cs;
    cs.threshold = parse_threshold(f.threshold);
    cs.centroid = model.cfg.search.centroid;
    const auto algo = parse_algo(f.algo);
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = ocis_search(index, f.node, targets, f.k, algo, cs);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    print_community(out, c, f.k, algo, ms);
  };

  auto* query = app.add_subcommand("query", "Overlapping community search for one target community");
  add_query_flags(query, qf, true);
  query->callback([&] {
    action = [&] {
      if (qf.targets.size() != 1) throw ArgumentError("query takes exactly one target; use ocis for intersections");
      run_query(qf, false);
    };
  });

  auto* ocis = app.add_subcommand("ocis", "Intersection search over several target communities");
  add_query_flags(ocis, of, false);
  ocis->footer("Without --targets the node's predicted communities are used.");
  ocis->callback([&] { action = [&] { run_query(of, true); }; });

  // bench -------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Randomized-query benchmark (F1, Jaccard, NMI)");
  std::string b_ckpt, b_data, b_task = "ocs", b_algo = "cs", b_out, b_scope = "held-out", b_name = "dataset", b_cache;
  BenchOptions bo;
  bench->add_option("--ckpt", b_ckpt, "Checkpoint path")->required();
  bench->add_option("--task", b_task, "Benchmark task")->check(CLI::IsMember({"ocs", "ocis"}));
  bench->add_option("--queries", bo.n_queries, "Number of sampled query nodes")->check(CLI::PositiveNumber);
  bench->add_option("--k", bo.k, "OCS community size (OCIS uses ceil(k/5))")->check(CLI::PositiveNumber);
  bench->add_option("--algo", b_algo, "Search algorithm")->check(CLI::IsMember({"topk", "cs"}));
  bench->add_option("--seed", bo.seed, "Query sampling seed");
  bench->add_flag("--strict-recall", bo.strict_recall, "Uncapped recall denominator");
  bench->add_option("--scope", b_scope, "Answer scope")->check(CLI::IsMember({"held-out", "all"}));
  bool b_timings = false;
  bench->add_flag("--timings", b_timings, "Include per-query wall-clock times in the JSON report");
  bench->add_option("--out", b_out, "JSON report path (default: standard output)");
  bench->add_option("--name", b_name, "Dataset name for the summary row");
  bench->add_option("--data", b_data, "Dataset directory (overrides the checkpoint's)");
  bench->add_option("--cache-dir", b_cache, "Hop-stack cache directory")->envname("SMN_CACHE_DIR");
  bench->callback([&] {
    action = [&] {
      auto model = load_model(b_ckpt, b_data, b_cache);
      bo.task = b_task == "ocis" ? BenchTask::ocis : BenchTask::ocs;
      bo.algorithm = parse_algo(b_algo);
      bo.cs.centroid = model.cfg.search.centroid;
      const auto scope = b_scope == "all" ? SearchScope::all : SearchScope::held_out;
      const auto index = SearchIndex::build(model.params, model.data.hops, model.data.split.train, scope);
      const auto report = run_benchmark(index, model.data.graph.labels, bo);
      if (b_out.empty()) {
        out << report.to_json(b_timings) << '\n';
      } else {
        std::ofstream f(b_out);
        if (!f) throw DatasetError("cannot write " + b_out);
        f << report.to_json(b_timings) << '\n';
      }
      err << "dataset      task  algo  F1     JAC    NMI\n" << report.table_row(b_name) << '\n';
      err << "mean query time " << report.mean_query_seconds * 1e3 << " ms\n";
    };
  });

  // diag --------------------------------------------------------------------
  auto* diag = app.add_subcommand("diag", "Per-hop smoothness with and without self-loops (CSV)");
  std::string d_data, d_out;
  int d_hops = 16;
  diag->add_option("--data", d_data, "Dataset directory")->required();
  diag->add_option("--hops", d_hops, "Number of hop channels")->check(CLI::PositiveNumber);
  diag->add_option("--out", d_out, "CSV path (default: standard output)");
  diag->callback([&] {
    action = [&] {
      const Graph g = load_dataset_dir(d_data);
      std::ostringstream csv;
      csv.precision(10);
      csv << "hop,no_self_loop,self_loop\n";
      for (const auto& p : smoothness_curve(g, d_hops))
        csv << p.hop << ',' << p.without_self_loops << ',' << p.with_self_loops << '\n';
      if (d_out.empty()) {
        out << csv.str();
      } else {
        std::ofstream f(d_out);
        if (!f) throw DatasetError("cannot write " + d_out);
        f << csv.str();
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage_error;
  }
  Eigen::setNbThreads(threads);
  if (!action) return usage_error;
  return guarded(err, action);
}

}  // namespace smn::cli
