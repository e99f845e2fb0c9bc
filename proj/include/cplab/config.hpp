#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cplab/data.hpp"
#include "cplab/models.hpp"
#include "cplab/ncm.hpp"

namespace cplab {

/// Invalid or unreadable sweep configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row of the comparison, e.g. qNCM-QR or normNCM-GP.
struct PairSpec {
  NcmKind ncm = NcmKind::Absolute;
  ModelKind model = ModelKind::MVNN;

  std::string label() const;
  bool operator==(const PairSpec&) const = default;
};

/// Accepts "NCM-NN", "normNCM-GP", "qNCM-QR" and so on. The quantile NCM
/// only pairs with QR, and QR only with the quantile NCM.
PairSpec parse_pair(std::string_view text);

/// The five pairs compared throughout.
std::vector<PairSpec> default_pairs();

struct CsvSource {
  std::string name;  // dataset label in the outputs
  std::filesystem::path path;
  std::string target;
  std::vector<std::string> features;  // empty: every other column
};

struct ExperimentConfig {
  std::optional<CsvSource> csv;  // unset: synthetic data
  std::vector<int> dims{1};
  std::vector<NoiseKind> noises{NoiseKind::HomoGauss, NoiseKind::HeteroGauss, NoiseKind::RightSkew};
  double noise_level = 0.3;
  std::size_t test_size = 10000;  // synthetic only
  std::vector<std::size_t> sizes{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  std::vector<double> epsilons{0.01, 0.05, 0.1, 0.2};
  std::vector<PairSpec> pairs = default_pairs();
  std::size_t repetitions = 100;
  double train_fraction = 0.8;
  double proper_fraction = 0.8;
  std::uint64_t base_seed = 2024;
  std::filesystem::path output_dir = "results";
  int workers = 1;
  bool resume = true;
  TrainConfig train;

  bool synthetic() const noexcept { return !csv.has_value(); }
  std::string dataset_name() const { return csv ? csv->name : "synthetic"; }
  void validate() const;

  /// R = 20, sizes {100, 500, 1000}, 5000 synthetic test points.
  static ExperimentConfig desk_preset();
  static ExperimentConfig full_protocol() { return {}; }
};

/// Reads a YAML sweep file. Keys left out keep the preset's values (the
/// `preset` key picks desk or full; full is the default). Unknown keys are
/// rejected so typos do not pass silently.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view yaml_text);

/// Writes the effective configuration in the same schema load_config reads.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace cplab
