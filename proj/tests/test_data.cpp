#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "cplab/data.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cplab;
using cplab::testing::TempDir;

namespace {

Eigen::VectorXd residuals(const Dataset& ds) {
  Eigen::VectorXd r(ds.targets.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = ds.targets(i) - signal(ds.features.row(i));
  return r;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("signal is the sum of x sin x over dimensions") {
  const double pi2 = std::numbers::pi / 2.0;
  CHECK(signal(std::vector<double>{0.0}) == 0.0);
  CHECK(signal(std::vector<double>{pi2}) == doctest::Approx(pi2).epsilon(1e-15));
  CHECK(signal(std::vector<double>{pi2, pi2}) == doctest::Approx(std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("zero noise level reproduces the signal exactly") {
  for (auto kind : {NoiseKind::HomoGauss, NoiseKind::HeteroGauss, NoiseKind::RightSkew}) {
    for (int d : {1, 3}) {
      auto ds = generate({d, 50, kind, 0.0, 11});
      CHECK(residuals(ds).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("feature distributions follow dimensionality") {
  auto one = generate({1, 2000, NoiseKind::HomoGauss, 0.3, 5});
  CHECK(one.features.minCoeff() >= 0.0);
  CHECK(one.features.maxCoeff() <= 10.0);
  CHECK(one.features.mean() == doctest::Approx(5.0).epsilon(0.05));

  auto multi = generate({4, 5000, NoiseKind::HomoGauss, 0.3, 5});
  CHECK(std::abs(multi.features.mean()) < 0.05);
  CHECK(multi.features.minCoeff() < -2.5);  // standard normal, not [0, 10]
}

TEST_CASE("homoscedastic noise has standard deviation c") {
  auto ds = generate({2, 1000, NoiseKind::HomoGauss, 0.3, 2024});
  const Eigen::VectorXd r = residuals(ds);
  const double sd = std::sqrt((r.array() - r.mean()).square().sum() / (r.size() - 1.0));
  CHECK(sd >= 0.27);
  CHECK(sd <= 0.33);
}

TEST_CASE("right-skewed noise is an uncentered log-normal") {
  auto ds = generate({1, 100000, NoiseKind::RightSkew, 0.3, 99});
  const Eigen::VectorXd r = residuals(ds);
  CHECK(r.minCoeff() > 0.0);
  CHECK(r.mean() == doctest::Approx(0.3 * std::exp(0.5)).epsilon(0.02 / 0.495));
}

TEST_CASE("heteroscedastic noise grows with |signal|") {
  auto ds = generate({1, 20000, NoiseKind::HeteroGauss, 0.3, 3});
  const Eigen::VectorXd r = residuals(ds);
  std::vector<std::pair<double, double>> pts;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    pts.emplace_back(std::abs(signal(ds.features.row(i))), r(i));
  std::sort(pts.begin(), pts.end());
  constexpr int kBins = 10;
  std::vector<double> bin_index, bin_var;
  const std::size_t per = pts.size() / kBins;
  for (int b = 0; b < kBins; ++b) {
    double s = 0, ss = 0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      s += pts[i].second;
      ss += pts[i].second * pts[i].second;
    }
    const double m = s / per;
    bin_index.push_back(b);
    bin_var.push_back(ss / per - m * m);
  }
  CHECK(cplab::testing::spearman(bin_index, bin_var) > 0.0);
  CHECK(bin_var.back() > 4.0 * bin_var.front());
}

TEST_CASE("hetero non-Gaussian data") {
  CHECK_THROWS_AS(generate({2, 10, NoiseKind::HeteroNonGauss, 0.3, 1}), DataError);
  auto ds = generate({1, 20000, NoiseKind::HeteroNonGauss, 0.3, 1});
  // Poisson counts plus small noise: most targets sit near non-negative integers.
  int near_int = 0;
  for (Eigen::Index i = 0; i < ds.targets.size(); ++i) {
    const double x = ds.features(i, 0);
    if (x < 2.0 && std::abs(ds.targets(i) - std::round(ds.targets(i))) < 0.2) ++near_int;
  }
  CHECK(near_int > 3000);
  // Rare outliers from the 25 * 1{U < 0.01} term.
  const int big = static_cast<int>((ds.targets.array().abs() > 8.0).count());
  CHECK(big > 40);
  CHECK(big < 300);
}

TEST_CASE("generation is a pure function of the spec") {
  SyntheticSpec spec{3, 200, NoiseKind::HeteroGauss, 0.3, 77};
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK(a.features == b.features);
  CHECK(a.targets == b.targets);
  spec.seed = 78;
  CHECK(generate(spec).targets != a.targets);
}

TEST_CASE("invalid synthetic specs are rejected") {
  CHECK_THROWS_AS(generate({0, 10, NoiseKind::HomoGauss, 0.3, 1}), DataError);
  CHECK_THROWS_AS(generate({1, 0, NoiseKind::HomoGauss, 0.3, 1}), DataError);
  CHECK_THROWS_AS(generate({1, 10, NoiseKind::HomoGauss, -0.1, 1}), DataError);
}

TEST_CASE("noise kind names round-trip") {
  for (auto k : {NoiseKind::HomoGauss, NoiseKind::HeteroGauss, NoiseKind::RightSkew,
                 NoiseKind::HeteroNonGauss})
    CHECK(parse_noise_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_noise_kind("pink"), DataError);
}

TEST_CASE("load_csv") {
  TempDir dir("csv");
  const auto toy = dir.path() / "toy.csv";
  write_text(toy, "a,b,target\n1.5,2,3\n-4,5e-1,6\n7,8,-9.25\n");

  SUBCASE("toy file is ingested verbatim") {
    auto ds = load_csv(toy, "target");
    REQUIRE(ds.rows() == 3);
    REQUIRE(ds.dim() == 2);
    Eigen::MatrixXd x(3, 2);
    x << 1.5, 2, -4, 0.5, 7, 8;
    CHECK(ds.features == x);
    CHECK(ds.targets == Eigen::Vector3d(3, 6, -9.25));
    CHECK(!ds.standardization.has_value());
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  }
  SUBCASE("explicit feature selection") {
    const std::vector<std::string> cols{"b"};
    auto ds = load_csv(toy, "a", cols);
    CHECK(ds.dim() == 1);
    CHECK(ds.features(1, 0) == 0.5);
    CHECK(ds.targets(2) == 7.0);
  }
  SUBCASE("each failure has its own error type") {
    CHECK_THROWS_AS(load_csv(dir.path() / "absent.csv", "target"), CsvMissingFile);
    CHECK_THROWS_AS(load_csv(toy, "nope"), CsvMissingColumn);
    const auto bad = dir.path() / "bad.csv";
    write_text(bad, "a,target\n1,2\nx,3\n");
    CHECK_THROWS_AS(load_csv(bad, "target"), CsvNonNumeric);
  }
  SUBCASE("row count matches the file") {
    const auto big = dir.path() / "big.csv";
    {
      std::ofstream out(big);
      out << "c1,c2,c3,c4,c5,c6,c7,c8,strength\n";
      for (int i = 0; i < 1030; ++i)
        for (int j = 0; j < 9; ++j) out << (i * 9 + j) * 0.5 << (j < 8 ? ',' : '\n');
    }
    auto ds = load_csv(big, "strength");
    CHECK(ds.rows() == 1030);
    CHECK(ds.dim() == 8);
  }
}

TEST_CASE("standardize") {
  SUBCASE("constant column is a named error") {
    Dataset ds;
    ds.features = Eigen::MatrixXd::Constant(4, 1, 2.0);
    ds.targets = Eigen::Vector4d(1, 2, 3, 4);
    ds.feature_names = {"flat"};
    std::vector<std::size_t> rows{0, 1, 2, 3};
    try {
      standardize(ds, rows);
      FAIL("expected ZeroVarianceColumn");
    } catch (const ZeroVarianceColumn& e) {
      CHECK(e.column() == "flat");
    }
  }
  SUBCASE("symmetric two-point case") {
    Dataset ds;
    ds.features = Eigen::Vector2d(-1, 1);
    ds.targets = Eigen::Vector2d(-1, 1);
    std::vector<std::size_t> rows{0, 1};
    auto s = standardize(ds, rows);
    CHECK(s.features(0, 0) == -1.0);
    CHECK(s.features(1, 0) == 1.0);
    CHECK(s.targets == Eigen::Vector2d(-1, 1));
  }
  SUBCASE("random matrix: zero mean, unit scale, invertible") {
    Dataset ds;
    ds.features = Eigen::MatrixXd::Random(100, 3) * 7.0;
    ds.features.col(1).array() += 40.0;
    ds.targets = Eigen::VectorXd::Random(100) * 3.0;
    std::vector<std::size_t> rows(100);
    std::iota(rows.begin(), rows.end(), 0);
    auto s = standardize(ds, rows);
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(std::abs(s.features.col(j).mean()) < 1e-12);
      CHECK(std::sqrt(s.features.col(j).array().square().mean()) == doctest::Approx(1.0).epsilon(1e-9));
    }
    auto back = s.inverse_transform();
    CHECK((back.features - ds.features).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((back.targets - ds.targets).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("statistics come from the fitting rows only") {
    Dataset ds;
    ds.features = Eigen::Vector4d(0, 2, 100, -50);
    ds.targets = Eigen::Vector4d(1, 3, 1000, 7);
    std::vector<std::size_t> rows{0, 1};
    auto s = standardize(ds, rows);
    CHECK(s.standardization->feature_mean(0) == 1.0);
    CHECK(s.standardization->target_mean == 2.0);
    CHECK(s.features(2, 0) == 99.0);
  }
}

TEST_CASE("subsample") {
  auto ds = generate({2, 1030, NoiseKind::HomoGauss, 0.3, 4});
  SUBCASE("size = n is a permutation") {
    auto idx = subsample_indices(1030, 1030, 9);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == 1030);
    CHECK(*uniq.rbegin() == 1029);
  }
  SUBCASE("draws without replacement") {
    auto idx = subsample_indices(1030, 100, 9);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 100);
    CHECK(subsample(ds, 100, 9).rows() == 100);
  }
  SUBCASE("deterministic given the seed") {
    CHECK(subsample_indices(1030, 100, 9) == subsample_indices(1030, 100, 9));
    CHECK(subsample_indices(1030, 100, 9) != subsample_indices(1030, 100, 10));
  }
  SUBCASE("oversized request") { CHECK_THROWS_AS(subsample(ds, 1031, 1), DataError); }
}

TEST_CASE("split") {
  SUBCASE("n = 1000") {
    auto s = split(1000, 0.8, 0.8, 3);
    CHECK(s.proper_train.size() == 640);
    CHECK(s.calibration.size() == 160);
    CHECK(s.test.size() == 200);
    std::set<std::size_t> all;
    all.insert(s.proper_train.begin(), s.proper_train.end());
    all.insert(s.calibration.begin(), s.calibration.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 1000);  // disjoint and exhaustive
  }
  SUBCASE("n = 100") {
    auto s = split(100, 0.8, 0.8, 3);
    CHECK(s.proper_train.size() == 64);
    CHECK(s.calibration.size() == 16);
  }
  SUBCASE("synthetic training pool") {
    auto s = split_training(500, 0.8, 3);
    CHECK(s.proper_train.size() == 400);
    CHECK(s.calibration.size() == 100);
    CHECK(s.test.empty());
  }
  SUBCASE("empty splits are rejected") {
    CHECK_THROWS_AS(split(2, 0.8, 0.8, 1), DataError);
    CHECK_THROWS_AS(split(100, 1.0, 0.8, 1), DataError);
    CHECK_THROWS_AS(split_training(1, 0.8, 1), DataError);
  }
}
