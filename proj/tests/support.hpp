#pragma once

#include "smn/config.hpp"
#include "smn/evalbench.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

namespace smn::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(SMN_FIXTURE_DIR) / name; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("smn-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Erdős–Rényi graph with Gaussian features and random labels.
inline Graph random_graph(NodeId n, int d, int c, double p_edge, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution edge(p_edge), label(0.4);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (edge(rng)) edges.emplace_back(i, j);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  LabelMatrix labels(n, c);
  for (NodeId v = 0; v < n; ++v)
    for (int j = 0; j < c; ++j)
      if (label(rng)) labels.add(v, j);
  return build_graph(n, edges, std::move(x), std::move(labels));
}

inline MultiHopFeatures stack_for(const Graph& g, int hops) { return multi_hop_stack(normalize(g), g.features, hops); }

// init_params followed by a perturbation of the tensors init leaves at fixed
// values, so every parameter takes a generic value.
inline SmnParams random_params(const ModelDims& dims, const ModelOptions& options, std::uint64_t seed) {
  SmnParams p = init_params(dims, options, seed);
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < p.ssf_logits.size(); ++i) p.ssf_logits.data()[i] = 1.5 * u(rng);
  p.log_delta << 0.3 * u(rng), 0.3 * u(rng);
  return p;
}

inline std::vector<double> flatten(const SmnParams& p) {
  std::vector<double> out;
  p.for_each([&](std::string_view, const Matrix& m) { out.insert(out.end(), m.data(), m.data() + m.size()); });
  return out;
}

struct FdReport {
  double max_rel_error = 0;
  std::string worst;
  std::size_t checked = 0;
};

// Central differences over every scalar of `p`. The relative error uses a
// floor of `abs_floor` in the denominator so that exactly-zero gradients are
// compared in absolute terms.
inline FdReport finite_difference_check(const SmnParams& p, const SmnGrads& analytic,
                                        const std::function<double(const SmnParams&)>& loss, double eps = 1e-5,
                                        double abs_floor = 1e-7) {
  FdReport rep;
  const std::vector<double> a = flatten(analytic);
  SmnParams probe = p;
  std::size_t flat = 0;
  probe.for_each([&](std::string_view name, Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i, ++flat) {
      const double saved = m.data()[i];
      m.data()[i] = saved + eps;
      const double up = loss(probe);
      m.data()[i] = saved - eps;
      const double down = loss(probe);
      m.data()[i] = saved;
      const double fd = (up - down) / (2 * eps);
      const double rel = std::abs(fd - a[flat]) / std::max({std::abs(fd), std::abs(a[flat]), abs_floor});
      ++rep.checked;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst = std::string(name) + "[" + std::to_string(i) + "] analytic=" + std::to_string(a[flat]) +
                    " fd=" + std::to_string(fd);
      }
    }
  });
  return rep;
}

// The planted acceptance dataset, trained once with the reference settings.
struct PlantedRun {
  Graph graph;
  MultiHopFeatures hops;
  Split split;
  TrainConfig config;
  TrainResult result;
};

inline TrainConfig planted_config(int epochs = 300) {
  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.epochs = epochs;
  cfg.seed = 1;
  return cfg;
}

inline PlantedRun train_planted(const TrainConfig& cfg) {
  PlantedRun run;
  run.graph = load_dataset_dir(fixture("planted"));
  run.config = cfg;
  run.hops = multi_hop_stack(normalize(run.graph), run.graph.features, cfg.dims.hops);
  run.split = make_split(run.graph, {}, derive_seed(cfg.seed, "split"));
  run.result = train(run.hops, run.graph.labels, run.split, cfg);
  return run;
}

}  // namespace smn::test
