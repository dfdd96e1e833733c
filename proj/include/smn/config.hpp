#pragma once

#include "smn/graph_store.hpp"
#include "smn/search.hpp"
#include "smn/trainer.hpp"

#include <filesystem>
#include <string>

namespace smn {

struct DataConfig {
  std::filesystem::path dir;       // holds edges.txt, features.txt, labels.txt
  std::filesystem::path cache_dir; // empty: no hop cache
  SplitRatios split;
};

struct SearchConfig {
  int k = 30;
  SearchAlgorithm algorithm = SearchAlgorithm::cs;
  Scalar threshold = std::numeric_limits<Scalar>::quiet_NaN();  // NaN: auto
  SearchScope scope = SearchScope::held_out;
  CentroidUpdate centroid = CentroidUpdate::exact;
};

// Sections: data, model, loss, train, search.
struct RunConfig {
  DataConfig data;
  TrainConfig train;
  SearchConfig search;
};

/// Sets one `section.key`. Unknown keys and unparsable values throw ConfigError.
void set_option(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

/// Flat sectioned key = value text ('#' and ';' start comments).
RunConfig parse_config(const std::string& text, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

/// Round-trips through parse_config; stored inside checkpoints.
std::string to_config_text(const RunConfig& cfg);

}  // namespace smn
