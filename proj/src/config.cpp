#include "smn/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace smn {

namespace {

[[noreturn]] void bad_value(const std::string& section, const std::string& key, const std::string& value) {
  throw ConfigError("invalid value '" + value + "' for " + section + "." + key);
}

template <typename T>
T parse_number(const std::string& section, const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(section, key, value);
  return out;
}

SplitRatios parse_ratios(const std::string& value) {
  SplitRatios r;
  char c1 = 0, c2 = 0;
  std::istringstream ss(value);
  if (!(ss >> r.train >> c1 >> r.validation >> c2 >> r.test) || (c1 != ':' && c1 != ',') || c2 != c1)
    throw ConfigError("data.split must look like 10:10:80");
  std::string extra;
  if (ss >> extra) throw ConfigError("data.split must look like 10:10:80");
  return r;
}

std::string fmt(Scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void set_option(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  auto integer = [&] { return parse_number<long long>(section, key, value); };
  auto real = [&] { return parse_number<double>(section, key, value); };
  auto choose = [&](std::initializer_list<const char*> options) {
    int i = 0;
    for (const char* o : options) {
      if (value == o) return i;
      ++i;
    }
    bad_value(section, key, value);
  };

  auto& tr = cfg.train;
  if (section == "data") {
    if (key == "dir") cfg.data.dir = value;
    else if (key == "cache_dir") cfg.data.cache_dir = value;
    else if (key == "split") cfg.data.split = parse_ratios(value);
    else throw ConfigError("unknown key data." + key);
  } else if (section == "model") {
    if (key == "hops") tr.dims.hops = static_cast<int>(integer());
    else if (key == "hidden") tr.dims.hidden = static_cast<int>(integer());
    else if (key == "heads") tr.dims.heads = static_cast<int>(integer());
    else if (key == "ssf_dim") tr.dims.embedding = static_cast<int>(integer());
    else if (key == "attention_mode")
      tr.model.attention = choose({"shared", "split"}) ? AttentionMode::split : AttentionMode::shared;
    else if (key == "attention_slope") tr.model.attention_slope = real();
    else if (key == "output_slope") tr.model.output_slope = real();
    else throw ConfigError("unknown key model." + key);
  } else if (section == "loss") {
    if (key == "gamma_pos") tr.loss.gamma_pos = real();
    else if (key == "gamma_neg") tr.loss.gamma_neg = real();
    else if (key == "margin") tr.loss.margin = real();
    else if (key == "lambda") tr.loss.lambda = real();
    else if (key == "weighting_mode")
      tr.loss.weighting = choose({"kendall", "raw-clamped"}) ? WeightingMode::raw_clamped : WeightingMode::kendall;
    else throw ConfigError("unknown key loss." + key);
  } else if (section == "train") {
    if (key == "learning_rate") tr.learning_rate = real();
    else if (key == "epochs") tr.epochs = static_cast<int>(integer());
    else if (key == "seed") tr.seed = static_cast<std::uint64_t>(integer());
    else if (key == "eval_every") tr.eval_every = static_cast<int>(integer());
    else if (key == "optimizer") tr.optimizer = choose({"adam", "sgd"}) ? OptimizerKind::sgd : OptimizerKind::adam;
    else throw ConfigError("unknown key train." + key);
  } else if (section == "search") {
    auto& s = cfg.search;
    if (key == "k") s.k = static_cast<int>(integer());
    else if (key == "algorithm") s.algorithm = choose({"topk", "cs"}) ? SearchAlgorithm::cs : SearchAlgorithm::topk;
    else if (key == "threshold") s.threshold = value == "auto" ? std::numeric_limits<Scalar>::quiet_NaN() : real();
    else if (key == "scope") s.scope = choose({"held-out", "all"}) ? SearchScope::all : SearchScope::held_out;
    else if (key == "centroid")
      s.centroid = choose({"exact", "incremental"}) ? CentroidUpdate::incremental : CentroidUpdate::exact;
    else throw ConfigError("unknown key search." + key);
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg = base;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside of any section");
    for (const auto& [key, node] : body) set_option(cfg, section, key, node.data());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string to_config_text(const RunConfig& cfg) {
  const auto& tr = cfg.train;
  std::ostringstream out;
  out << "[data]\n";
  if (!cfg.data.dir.empty()) out << "dir = " << cfg.data.dir.string() << '\n';
  if (!cfg.data.cache_dir.empty()) out << "cache_dir = " << cfg.data.cache_dir.string() << '\n';
  out << "split = " << cfg.data.split.train << ':' << cfg.data.split.validation << ':' << cfg.data.split.test << "\n\n"
      << "[model]\n"
      << "hops = " << tr.dims.hops << '\n'
      << "hidden = " << tr.dims.hidden << '\n'
      << "heads = " << tr.dims.heads << '\n'
      << "ssf_dim = " << tr.dims.embedding << '\n'
      << "attention_mode = " << (tr.model.attention == AttentionMode::split ? "split" : "shared") << '\n'
      << "attention_slope = " << fmt(tr.model.attention_slope) << '\n'
      << "output_slope = " << fmt(tr.model.output_slope) << "\n\n"
      << "[loss]\n"
      << "gamma_pos = " << fmt(tr.loss.gamma_pos) << '\n'
      << "gamma_neg = " << fmt(tr.loss.gamma_neg) << '\n'
      << "margin = " << fmt(tr.loss.margin) << '\n'
      << "lambda = " << fmt(tr.loss.lambda) << '\n'
      << "weighting_mode = " << (tr.loss.weighting == WeightingMode::kendall ? "kendall" : "raw-clamped") << "\n\n"
      << "[train]\n"
      << "learning_rate = " << fmt(tr.learning_rate) << '\n'
      << "epochs = " << tr.epochs << '\n'
      << "seed = " << tr.seed << '\n'
      << "eval_every = " << tr.eval_every << '\n'
      << "optimizer = " << (tr.optimizer == OptimizerKind::adam ? "adam" : "sgd") << "\n\n"
      << "[search]\n"
      << "k = " << cfg.search.k << '\n'
      << "algorithm = " << (cfg.search.algorithm == SearchAlgorithm::cs ? "cs" : "topk") << '\n'
      << "threshold = " << (std::isnan(cfg.search.threshold) ? std::string("auto") : fmt(cfg.search.threshold)) << '\n'
      << "scope = " << (cfg.search.scope == SearchScope::all ? "all" : "held-out") << '\n'
      << "centroid = " << (cfg.search.centroid == CentroidUpdate::exact ? "exact" : "incremental") << '\n';
  return out.str();
}

}  // namespace smn
