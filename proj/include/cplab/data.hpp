#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cplab {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV ingestion failures are distinct types so callers can tell them apart.
class CsvMissingFile : public DataError {
 public:
  using DataError::DataError;
};
class CsvNonNumeric : public DataError {
 public:
  using DataError::DataError;
};
class CsvMissingColumn : public DataError {
 public:
  using DataError::DataError;
};
class ZeroVarianceColumn : public DataError {
 public:
  ZeroVarianceColumn(std::string column)
      : DataError("zero-variance column: " + column), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

enum class NoiseKind { HomoGauss, HeteroGauss, RightSkew, HeteroNonGauss };

std::string_view to_string(NoiseKind kind) noexcept;
NoiseKind parse_noise_kind(std::string_view text);

struct SyntheticSpec {
  int dim = 1;
  std::size_t n = 100;
  NoiseKind noise = NoiseKind::HomoGauss;
  double noise_level = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-column affine map fitted on a subset of rows; x_std = (x - mean) / scale.
struct Standardization {
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  double target_mean = 0.0;
  double target_scale = 1.0;

  double restore_target(double standardized) const noexcept {
    return standardized * target_scale + target_mean;
  }
  /// Lengths (interval widths) only scale; they do not shift.
  double restore_length(double standardized) const noexcept { return standardized * target_scale; }
};

struct Dataset {
  Eigen::MatrixXd features;  // n x d, row-major semantics (one sample per row)
  Eigen::VectorXd targets;
  std::optional<Standardization> standardization;
  std::vector<std::string> feature_names;
  std::string target_name = "y";

  std::size_t rows() const noexcept { return static_cast<std::size_t>(targets.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }

  Dataset select(std::span<const std::size_t> row_indices) const;
  /// Undo standardization on features and targets. Requires `standardization`.
  Dataset inverse_transform() const;
};

struct SplitIndices {
  std::vector<std::size_t> proper_train;
  std::vector<std::size_t> calibration;
  std::vector<std::size_t> test;
};

double signal(std::span<const double> x) noexcept;
double signal(const Eigen::Ref<const Eigen::RowVectorXd>& x) noexcept;

Dataset generate(const SyntheticSpec& spec);

/// Reads a comma-separated file with a header row. An empty `feature_columns`
/// selects every column other than the target.
Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 std::span<const std::string> feature_columns = {});

void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Zero mean, unit (population) variance using statistics of `fit_rows` only.
Dataset standardize(const Dataset& ds, std::span<const std::size_t> fit_rows);

/// Uniform draw of `size` rows without replacement.
Dataset subsample(const Dataset& ds, std::size_t size, std::uint64_t seed);
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t size, std::uint64_t seed);

/// Real-data split: test = (1 - train_frac) of the pool, calibration =
/// (1 - proper_frac) of the remaining training rows.
SplitIndices split(std::size_t n, double train_frac, double proper_frac, std::uint64_t seed);

/// Synthetic split: the whole pool is training data; the test set is generated
/// separately, so `test` stays empty.
SplitIndices split_training(std::size_t n, double proper_frac, std::uint64_t seed);

}  // namespace cplab
