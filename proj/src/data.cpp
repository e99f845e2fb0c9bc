#include "cplab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cplab/rng.hpp"

namespace cplab {

namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n\"");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::size_t rounded_count(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac));
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto eng = make_engine(seed);
  std::shuffle(idx.begin(), idx.end(), eng);
  return idx;
}

}  // namespace

std::string_view to_string(NoiseKind kind) noexcept {
  switch (kind) {
    case NoiseKind::HomoGauss: return "homo_gauss";
    case NoiseKind::HeteroGauss: return "hetero_gauss";
    case NoiseKind::RightSkew: return "right_skew";
    case NoiseKind::HeteroNonGauss: return "hetero_nongauss";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view text) {
  for (auto k : {NoiseKind::HomoGauss, NoiseKind::HeteroGauss, NoiseKind::RightSkew,
                 NoiseKind::HeteroNonGauss}) {
    if (text == to_string(k)) return k;
  }
  throw DataError("unknown noise kind: " + std::string(text));
}

void SyntheticSpec::validate() const {
  if (dim < 1) throw DataError("synthetic spec: dim must be >= 1");
  if (n < 1) throw DataError("synthetic spec: n must be >= 1");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level))
    throw DataError("synthetic spec: noise level must be finite and >= 0");
  if (noise == NoiseKind::HeteroNonGauss && dim != 1)
    throw DataError("synthetic spec: hetero_nongauss noise is only defined for dim = 1");
}

Dataset Dataset::select(std::span<const std::size_t> row_indices) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(row_indices.size());
  out.features.resize(m, features.cols());
  out.targets.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(row_indices[static_cast<std::size_t>(i)]);
    if (r >= targets.size()) throw DataError("row index out of range");
    out.features.row(i) = features.row(r);
    out.targets(i) = targets(r);
  }
  out.standardization = standardization;
  out.feature_names = feature_names;
  out.target_name = target_name;
  return out;
}

Dataset Dataset::inverse_transform() const {
  if (!standardization) throw DataError("dataset is not standardized");
  const auto& s = *standardization;
  Dataset out = *this;
  for (Eigen::Index j = 0; j < features.cols(); ++j)
    out.features.col(j) = features.col(j).array() * s.feature_scale(j) + s.feature_mean(j);
  out.targets = targets.array() * s.target_scale + s.target_mean;
  out.standardization.reset();
  return out;
}

double signal(std::span<const double> x) noexcept {
  double y = 0.0;
  for (double v : x) y += v * std::sin(v);
  return y;
}

double signal(const Eigen::Ref<const Eigen::RowVectorXd>& x) noexcept {
  double y = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) y += x(j) * std::sin(x(j));
  return y;
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  Dataset ds;
  ds.features.resize(n, spec.dim);
  ds.targets.resize(n);
  for (int j = 0; j < spec.dim; ++j) ds.feature_names.push_back("x" + std::to_string(j));

  // Features and each noise component draw from their own stream so that the
  // inputs do not depend on the noise kind.
  auto feat_eng = make_engine(derive_seed(spec.seed, "features"));
  if (spec.dim == 1) {
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    for (Eigen::Index i = 0; i < n; ++i) ds.features(i, 0) = unif(feat_eng);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < spec.dim; ++j) ds.features(i, j) = normal(feat_eng);
  }

  auto eng1 = make_engine(derive_seed(spec.seed, "noise-1"));
  auto eng2 = make_engine(derive_seed(spec.seed, "noise-2"));
  auto eng3 = make_engine(derive_seed(spec.seed, "noise-3"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::lognormal_distribution<double> lognormal(0.0, 1.0);
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  const double c = spec.noise_level;

  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = signal(Eigen::RowVectorXd(ds.features.row(i)));
    double y = f;
    switch (spec.noise) {
      case NoiseKind::HomoGauss:
        y = f + c * normal(eng1);
        break;
      case NoiseKind::HeteroGauss: {
        const double e1 = normal(eng1);
        const double e2 = normal(eng2);
        y = f + c * e1 + c * std::abs(f) * e2;
        break;
      }
      case NoiseKind::RightSkew:
        y = f + c * lognormal(eng1);
        break;
      case NoiseKind::HeteroNonGauss: {
        const double x = ds.features(i, 0);
        const double s = std::sin(x);
        std::poisson_distribution<long> pois(s * s + 0.1);
        const double count = static_cast<double>(pois(eng3));
        const double e1 = normal(eng1);
        const double e2 = normal(eng2);
        const double u = unif01(eng3);
        y = count + 0.03 * x * e1 + (u < 0.01 ? 25.0 * e2 : 0.0);
        break;
      }
    }
    // c = 0 must give the noiseless signal bit-for-bit.
    if (c == 0.0 && spec.noise != NoiseKind::HeteroNonGauss) y = f;
    ds.targets(i) = y;
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 std::span<const std::string> feature_columns) {
  std::ifstream in(path);
  if (!in) throw CsvMissingFile("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw CsvMissingColumn("CSV file has no header: " + path.string());
  const auto header = split_fields(line);

  auto column_index = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw CsvMissingColumn("column '" + std::string(name) + "' not found in " + path.string());
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t target_idx = column_index(target_column);
  std::vector<std::size_t> feature_idx;
  std::vector<std::string> names;
  if (feature_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == target_idx) continue;
      feature_idx.push_back(j);
      names.push_back(header[j]);
    }
  } else {
    for (const auto& name : feature_columns) {
      feature_idx.push_back(column_index(name));
      names.push_back(name);
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> values(header.size());
    auto parse = [&](std::size_t j) {
      if (j >= fields.size())
        throw CsvNonNumeric("line " + std::to_string(line_no) + ": missing value for column '" +
                            header[j] + "'");
      const auto& cell = fields[j];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
        throw CsvNonNumeric("line " + std::to_string(line_no) + ", column '" + header[j] +
                            "': non-numeric value '" + cell + "'");
      return v;
    };
    std::vector<double> row;
    row.reserve(feature_idx.size() + 1);
    for (auto j : feature_idx) row.push_back(parse(j));
    row.push_back(parse(target_idx));
    rows.push_back(std::move(row));
  }

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(feature_idx.size());
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) ds.features(i, j) = row[static_cast<std::size_t>(j)];
    ds.targets(i) = row.back();
  }
  ds.feature_names = std::move(names);
  ds.target_name = std::string(target_column);
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file: " + path.string());
  out.precision(17);
  for (std::size_t j = 0; j < ds.dim(); ++j)
    out << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j)) << ',';
  out << ds.target_name << '\n';
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out << ds.features(i, j) << ',';
    out << ds.targets(i) << '\n';
  }
}

Dataset standardize(const Dataset& ds, std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) throw DataError("standardize: empty fitting split");
  const auto d = ds.features.cols();
  const double m = static_cast<double>(fit_rows.size());

  auto column_stats = [&](auto&& value_at, const std::string& name) {
    double mean = 0.0;
    for (auto r : fit_rows) mean += value_at(static_cast<Eigen::Index>(r));
    mean /= m;
    double var = 0.0;
    for (auto r : fit_rows) {
      const double dv = value_at(static_cast<Eigen::Index>(r)) - mean;
      var += dv * dv;
    }
    var /= m;
    const double scale = std::sqrt(var);
    if (!(scale > 1e-12 * std::max(1.0, std::abs(mean)))) throw ZeroVarianceColumn(name);
    return std::pair{mean, scale};
  };

  Standardization st;
  st.feature_mean.resize(d);
  st.feature_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const std::string name = static_cast<std::size_t>(j) < ds.feature_names.size()
                                 ? ds.feature_names[static_cast<std::size_t>(j)]
                                 : "x" + std::to_string(j);
    auto [mu, sc] = column_stats([&](Eigen::Index r) { return ds.features(r, j); }, name);
    st.feature_mean(j) = mu;
    st.feature_scale(j) = sc;
  }
  auto [ty, ts] = column_stats([&](Eigen::Index r) { return ds.targets(r); }, ds.target_name);
  st.target_mean = ty;
  st.target_scale = ts;

  Dataset out = ds;
  for (Eigen::Index j = 0; j < d; ++j)
    out.features.col(j) = (ds.features.col(j).array() - st.feature_mean(j)) / st.feature_scale(j);
  out.targets = (ds.targets.array() - st.target_mean) / st.target_scale;
  out.standardization = std::move(st);
  return out;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t size, std::uint64_t seed) {
  if (size > n)
    throw DataError("subsample: requested " + std::to_string(size) + " rows from " +
                    std::to_string(n));
  auto idx = permutation(n, derive_seed(seed, "subsample"));
  idx.resize(size);
  return idx;
}

Dataset subsample(const Dataset& ds, std::size_t size, std::uint64_t seed) {
  const auto idx = subsample_indices(ds.rows(), size, seed);
  return ds.select(idx);
}

SplitIndices split(std::size_t n, double train_frac, double proper_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0) || !(proper_frac > 0.0 && proper_frac < 1.0))
    throw DataError("split: fractions must lie in (0, 1)");
  const std::size_t n_train = rounded_count(n, train_frac);
  const std::size_t n_proper = rounded_count(n_train, proper_frac);
  if (n_train == 0 || n_train >= n || n_proper == 0 || n_proper >= n_train)
    throw DataError("split: a split of " + std::to_string(n) + " rows would be empty");

  const auto perm = permutation(n, derive_seed(seed, "split"));
  SplitIndices s;
  s.proper_train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_proper));
  s.calibration.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_proper),
                       perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return s;
}

SplitIndices split_training(std::size_t n, double proper_frac, std::uint64_t seed) {
  if (!(proper_frac > 0.0 && proper_frac < 1.0))
    throw DataError("split: fractions must lie in (0, 1)");
  const std::size_t n_proper = rounded_count(n, proper_frac);
  if (n_proper == 0 || n_proper >= n)
    throw DataError("split: a split of " + std::to_string(n) + " rows would be empty");
  const auto perm = permutation(n, derive_seed(seed, "split"));
  SplitIndices s;
  s.proper_train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_proper));
  s.calibration.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_proper), perm.end());
  return s;
}

}  // namespace cplab
