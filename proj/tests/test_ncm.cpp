#include <cmath>
#include <numbers>

#include "cplab/ncm.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cplab;

TEST_CASE("absolute score") {
  CHECK(score_absolute(3.0, 1.5) == 1.5);
  CHECK(score_absolute(2.0, 2.0) == 0.0);
  CHECK(score_absolute(-1.0, 2.0) == 3.0);
}

TEST_CASE("normalized score") {
  CHECK(score_normalized(2.0, 1.0, 0.5) == 2.0);
  CHECK(score_normalized(2.0, 1.0, 1.0) == 1.0);
  CHECK(score_normalized(2.0, 1.0, 1e-12) == doctest::Approx(1.0 / kSigmaFloor));
  CHECK_THROWS(score_normalized(2.0, 1.0, 0.0));
  CHECK_THROWS(score_normalized(2.0, 1.0, -1.0));
}

TEST_CASE("quantile score is signed") {
  CHECK(score_quantile(0.5, 1.0, 3.0) == 0.5);
  CHECK(score_quantile(2.0, 1.0, 3.0) == -1.0);
  CHECK(score_quantile(4.0, 1.0, 3.0) == 1.0);
}

TEST_CASE("interval construction") {
  SUBCASE("absolute") {
    const auto iv = build_interval(Ncm::absolute(), {0.0, 1.0, 0.0, 0.0}, 1.71);
    CHECK(iv.lo == -1.71);
    CHECK(iv.hi == 1.71);
    CHECK(iv.width() == doctest::Approx(3.42));
  }
  SUBCASE("normalized") {
    const auto iv = build_interval(Ncm::normalized(), {0.0, 2.0, 0.0, 0.0}, 1.0);
    CHECK(iv.lo == -2.0);
    CHECK(iv.hi == 2.0);
  }
  SUBCASE("quantile with a negative threshold shrinks the band") {
    const auto iv = build_interval(Ncm::quantile(0.05, 0.95), {0.0, 1.0, 1.0, 3.0}, -0.25);
    CHECK(iv.lo == 1.25);
    CHECK(iv.hi == 2.75);
  }
  SUBCASE("over-shrunk band is empty with zero width") {
    const auto iv = build_interval(Ncm::quantile(0.05, 0.95), {0.0, 1.0, 1.0, 3.0}, -1.5);
    CHECK(iv.width() == 0.0);
    CHECK(iv.degenerate());
    CHECK_FALSE(iv.contains(2.0));
  }
}

TEST_CASE("interval membership is closed") {
  const auto iv = Interval::bounded(-1.0, 2.0);
  CHECK(iv.contains(2.0));
  CHECK(iv.contains(-1.0));
  CHECK_FALSE(iv.contains(std::nextafter(2.0, 3.0)));
  CHECK(Interval::unbounded().contains(1e300));
  CHECK(std::isinf(Interval::unbounded().width()));
}

TEST_CASE("score and interval are inverse for every kind") {
  const Forecast f{1.2, 0.7, 0.4, 2.1};
  for (const Ncm& ncm : {Ncm::absolute(), Ncm::normalized(), Ncm::quantile(0.1, 0.9)}) {
    for (double y : {-3.0, 0.0, 0.9, 1.2, 2.5, 6.0}) {
      const double s = score(ncm, y, f);
      const auto iv = build_interval(ncm, f, s);
      // y sits on the boundary of the interval built from its own score.
      const bool on_edge = std::abs(y - iv.lo) < 1e-12 || std::abs(y - iv.hi) < 1e-12;
      CHECK(on_edge);
    }
  }
}

TEST_CASE("ncm names and validation") {
  CHECK(to_string(NcmKind::Absolute) == "NCM");
  CHECK(to_string(NcmKind::Normalized) == "normNCM");
  CHECK(to_string(NcmKind::Quantile) == "qNCM");
  CHECK(parse_ncm_kind("normNCM") == NcmKind::Normalized);
  CHECK(parse_ncm_kind("quantile") == NcmKind::Quantile);
  CHECK_THROWS(parse_ncm_kind("weird"));
  CHECK_THROWS(Ncm::quantile(0.9, 0.1));
  CHECK_THROWS(Ncm::quantile(0.0, 0.9));
  const auto q = Ncm::quantile_for(0.1);
  CHECK(q.eps_low == doctest::Approx(0.05));
  CHECK(q.eps_high == doctest::Approx(0.95));
}

TEST_CASE("sigma model on constant log-residual targets recovers e") {
  // A near-constant GP predicts ~0, so every residual is +-e and every
  // log-residual target is 1.
  const int n = 40;
  Dataset ds;
  ds.features.resize(n, 1);
  ds.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    ds.features(i, 0) = 0.25 * i;
    ds.targets(i) = (i % 2 == 0 ? 1.0 : -1.0) * std::numbers::e;
  }
  GpHyperparameters hp;
  hp.signal_variance = 1e-12;
  hp.noise_variance = 1.0;
  TrainedModel primary(GpModel::condition(ds, hp, 1e-8), {});
  const Eigen::VectorXd fitted = primary.predict_point(ds.features);
  REQUIRE(fitted.cwiseAbs().maxCoeff() < 1e-9);

  TrainConfig cfg;
  cfg.gp_steps = 50;
  const auto sigma_model = fit_sigma_model(ds, primary, cfg);
  CHECK(sigma_model.kind() == ModelKind::GP);
  const Eigen::VectorXd sigma = predict_sigma(sigma_model, ds.features);
  for (Eigen::Index i = 0; i < n; ++i) CHECK(sigma(i) == doctest::Approx(std::numbers::e).epsilon(1e-4));
}

TEST_CASE("sigma model handles exact-zero residuals via the floor") {
  Dataset ds = generate({1, 30, NoiseKind::HomoGauss, 0.0, 3});
  ds.targets.setConstant(2.0);
  TrainConfig cfg;
  cfg.gp_steps = 30;
  const auto primary = fit_gp(ds, cfg);
  const auto sigma_model = fit_sigma_model(ds, primary, cfg);
  const Eigen::VectorXd sigma = predict_sigma(sigma_model, ds.features);
  CHECK((sigma.array() > 0.0).all());
  CHECK(sigma.allFinite());
}

TEST_CASE("normalized NCM sigma follows the heteroscedastic structure") {
  const auto ds = generate({1, 1000, NoiseKind::HeteroGauss, 0.3, 31});
  TrainConfig cfg;
  cfg.seed = 31;
  const auto models = fit_ncm_models(Ncm::normalized(), ModelKind::MVNN, ds, cfg);
  REQUIRE(models.sigma);

  const int probes = 400;
  Eigen::MatrixXd grid(probes, 1);
  for (int i = 0; i < probes; ++i) grid(i, 0) = 0.1 + 9.8 * i / (probes - 1.0);
  const Eigen::VectorXd sigma = predict_sigma(*models.sigma, grid);
  std::vector<double> s(sigma.data(), sigma.data() + probes), mag;
  for (int i = 0; i < probes; ++i) mag.push_back(std::abs(signal(grid.row(i))));
  CHECK((sigma.array() > 0.0).all());
  CHECK(cplab::testing::spearman(s, mag) > 0.3);

  const auto forecasts = models.forecast(grid);
  for (int i = 0; i < probes; ++i) CHECK(forecasts[static_cast<std::size_t>(i)].scale == sigma(i));
}

TEST_CASE("quantile NCM forecasts carry an ordered band") {
  const auto ds = generate({1, 300, NoiseKind::HeteroNonGauss, 0.3, 9});
  TrainConfig cfg;
  const auto models = fit_ncm_models(Ncm::quantile_for(0.2), ModelKind::GBQR, ds, cfg);
  CHECK(models.point->kind() == ModelKind::GBQR);
  CHECK_FALSE(models.sigma);
  for (const auto& f : models.forecast(ds.features)) CHECK(f.q_low <= f.q_high);
}
