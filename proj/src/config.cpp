#include "cplab/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace cplab {

std::string PairSpec::label() const {
  return fmt::format("{}-{}", to_string(ncm), to_string(model));
}

PairSpec parse_pair(std::string_view text) {
  const auto dash = text.rfind('-');
  if (dash == std::string_view::npos) throw ConfigError(fmt::format("pair '{}' is not NCM-MODEL", text));
  PairSpec p;
  try {
    p.ncm = parse_ncm_kind(text.substr(0, dash));
    p.model = parse_model_kind(text.substr(dash + 1));
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("pair '{}': {}", text, e.what()));
  }
  if ((p.ncm == NcmKind::Quantile) != (p.model == ModelKind::GBQR))
    throw ConfigError(fmt::format("pair '{}': the quantile NCM goes with QR and only with QR", text));
  return p;
}

std::vector<PairSpec> default_pairs() {
  return {{NcmKind::Quantile, ModelKind::GBQR},
          {NcmKind::Absolute, ModelKind::MVNN},
          {NcmKind::Normalized, ModelKind::MVNN},
          {NcmKind::Absolute, ModelKind::GP},
          {NcmKind::Normalized, ModelKind::GP}};
}

ExperimentConfig ExperimentConfig::desk_preset() {
  ExperimentConfig c;
  c.repetitions = 20;
  c.sizes = {100, 500, 1000};
  c.test_size = 5000;
  return c;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (sizes.empty() || epsilons.empty() || pairs.empty()) fail("sizes, epsilons and pairs must be non-empty");
  if (synthetic() && (dims.empty() || noises.empty())) fail("dims and noises must be non-empty");
  if (repetitions < 1) fail("repetitions must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (!(noise_level >= 0.0)) fail("noise_level must be >= 0");
  if (synthetic() && test_size < 1) fail("test_size must be >= 1");
  for (int d : dims)
    if (d < 1) fail("dims must be positive");
  for (double e : epsilons)
    if (!(e > 0.0 && e < 1.0)) fail(fmt::format("epsilon {} is outside (0, 1)", e));
  if (!(train_fraction > 0.0 && train_fraction < 1.0) || !(proper_fraction > 0.0 && proper_fraction < 1.0))
    fail("split fractions must lie in (0, 1)");
  for (auto n : sizes)
    if (n < 10) fail("sizes must be >= 10");
  if (std::set<std::size_t>(sizes.begin(), sizes.end()).size() != sizes.size()) fail("sizes must be distinct");
  if (csv) {
    if (csv->name.empty() || csv->target.empty()) fail("csv source needs a name and a target column");
    if (csv->name == "synthetic") fail("csv dataset name 'synthetic' is reserved");
  }
  if (synthetic() &&
      std::any_of(noises.begin(), noises.end(), [](NoiseKind k) { return k == NoiseKind::HeteroNonGauss; }) &&
      std::any_of(dims.begin(), dims.end(), [](int d) { return d != 1; }))
    fail("hetero_nongauss noise is one-dimensional only");
  try {
    train.validate();
  } catch (const ModelError& e) {
    fail(e.what());
  }
}

namespace {

void check_keys(const YAML::Node& node, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) throw ConfigError(fmt::format("'{}' must be a mapping", section));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(fmt::format("unknown key '{}' in '{}'", key, section));
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

void apply(const YAML::Node& root, ExperimentConfig& c) {
  check_keys(root, "<root>", {"preset", "data", "sweep", "run", "training"});

  if (const auto data = root["data"]) {
    check_keys(data, "data", {"source", "dims", "noises", "noise_level", "test_size", "name", "path", "target", "features"});
    const auto source = data["source"] ? data["source"].as<std::string>() : std::string("synthetic");
    if (source == "csv") {
      CsvSource s;
      read(data, "name", s.name);
      std::string path;
      read(data, "path", path);
      s.path = path;
      read(data, "target", s.target);
      read(data, "features", s.features);
      if (path.empty()) throw ConfigError("csv source needs 'path'");
      if (s.name.empty()) s.name = s.path.stem().string();
      c.csv = std::move(s);
    } else if (source != "synthetic") {
      throw ConfigError(fmt::format("data.source must be synthetic or csv, got '{}'", source));
    }
    read(data, "dims", c.dims);
    if (data["noises"]) {
      c.noises.clear();
      for (const auto& n : data["noises"]) {
        try {
          c.noises.push_back(parse_noise_kind(n.as<std::string>()));
        } catch (const DataError& e) {
          throw ConfigError(e.what());
        }
      }
    }
    read(data, "noise_level", c.noise_level);
    read(data, "test_size", c.test_size);
  }

  if (const auto sweep = root["sweep"]) {
    check_keys(sweep, "sweep", {"sizes", "epsilons", "pairs", "repetitions", "train_fraction", "proper_fraction"});
    read(sweep, "sizes", c.sizes);
    read(sweep, "epsilons", c.epsilons);
    if (sweep["pairs"]) {
      c.pairs.clear();
      for (const auto& p : sweep["pairs"]) c.pairs.push_back(parse_pair(p.as<std::string>()));
    }
    read(sweep, "repetitions", c.repetitions);
    read(sweep, "train_fraction", c.train_fraction);
    read(sweep, "proper_fraction", c.proper_fraction);
  }

  if (const auto run = root["run"]) {
    check_keys(run, "run", {"seed", "workers", "output_dir", "resume"});
    read(run, "seed", c.base_seed);
    read(run, "workers", c.workers);
    if (run["output_dir"]) c.output_dir = run["output_dir"].as<std::string>();
    read(run, "resume", c.resume);
  }

  if (const auto t = root["training"]) {
    check_keys(t, "training", {"learning_rate", "mvnn_epochs", "mvnn_hidden", "gp_steps", "gp_jitter",
                               "gp_max_rows", "gbqr_trees", "gbqr_depth", "gbqr_shrinkage"});
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "mvnn_epochs", c.train.mvnn_epochs);
    read(t, "mvnn_hidden", c.train.mvnn_hidden);
    read(t, "gp_steps", c.train.gp_steps);
    read(t, "gp_jitter", c.train.gp_jitter);
    read(t, "gp_max_rows", c.train.gp_max_rows);
    read(t, "gbqr_trees", c.train.gbqr_trees);
    read(t, "gbqr_depth", c.train.gbqr_depth);
    read(t, "gbqr_shrinkage", c.train.gbqr_shrinkage);
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view yaml_text) {
  ExperimentConfig c;
  try {
    const YAML::Node root = YAML::Load(std::string(yaml_text));
    if (root.IsNull()) return c;
    const auto preset = root["preset"] ? root["preset"].as<std::string>() : std::string("full");
    if (preset == "desk") c = ExperimentConfig::desk_preset();
    else if (preset != "full") throw ConfigError(fmt::format("unknown preset '{}'", preset));
    apply(root, c);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string dump_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  if (c.csv) {
    out << YAML::Key << "source" << YAML::Value << "csv";
    out << YAML::Key << "name" << YAML::Value << c.csv->name;
    out << YAML::Key << "path" << YAML::Value << c.csv->path.string();
    out << YAML::Key << "target" << YAML::Value << c.csv->target;
    out << YAML::Key << "features" << YAML::Value << YAML::Flow << c.csv->features;
  } else {
    out << YAML::Key << "source" << YAML::Value << "synthetic";
    out << YAML::Key << "dims" << YAML::Value << YAML::Flow << c.dims;
    std::vector<std::string> noises;
    for (auto n : c.noises) noises.emplace_back(to_string(n));
    out << YAML::Key << "noises" << YAML::Value << YAML::Flow << noises;
    out << YAML::Key << "noise_level" << YAML::Value << c.noise_level;
    out << YAML::Key << "test_size" << YAML::Value << c.test_size;
  }
  out << YAML::EndMap;

  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "sizes" << YAML::Value << YAML::Flow << c.sizes;
  out << YAML::Key << "epsilons" << YAML::Value << YAML::Flow << c.epsilons;
  std::vector<std::string> pairs;
  for (const auto& p : c.pairs) pairs.push_back(p.label());
  out << YAML::Key << "pairs" << YAML::Value << YAML::Flow << pairs;
  out << YAML::Key << "repetitions" << YAML::Value << c.repetitions;
  out << YAML::Key << "train_fraction" << YAML::Value << c.train_fraction;
  out << YAML::Key << "proper_fraction" << YAML::Value << c.proper_fraction;
  out << YAML::EndMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.base_seed;
  out << YAML::Key << "workers" << YAML::Value << c.workers;
  out << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();
  out << YAML::Key << "resume" << YAML::Value << c.resume;
  out << YAML::EndMap;

  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "learning_rate" << YAML::Value << c.train.learning_rate;
  out << YAML::Key << "mvnn_epochs" << YAML::Value << c.train.mvnn_epochs;
  out << YAML::Key << "mvnn_hidden" << YAML::Value << c.train.mvnn_hidden;
  out << YAML::Key << "gp_steps" << YAML::Value << c.train.gp_steps;
  out << YAML::Key << "gp_jitter" << YAML::Value << c.train.gp_jitter;
  out << YAML::Key << "gp_max_rows" << YAML::Value << c.train.gp_max_rows;
  out << YAML::Key << "gbqr_trees" << YAML::Value << c.train.gbqr_trees;
  out << YAML::Key << "gbqr_depth" << YAML::Value << c.train.gbqr_depth;
  out << YAML::Key << "gbqr_shrinkage" << YAML::Value << c.train.gbqr_shrinkage;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace cplab
