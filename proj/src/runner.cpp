#include "cplab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include <fmt/format.h>
#include <omp.h>
#include <spdlog/spdlog.h>

#include "cplab/icp.hpp"
#include "cplab/rng.hpp"

namespace cplab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// A fit shared by every record of a task that needs it; errors are cached too
// so a failing model is not refit for each miscoverage level.
struct SharedFit {
  std::shared_ptr<const TrainedModel> model;
  double seconds = 0.0;
  std::string error;
};

template <typename Fn>
SharedFit timed_fit(Fn&& fit) {
  SharedFit f;
  const auto t0 = Clock::now();
  try {
    f.model = std::make_shared<const TrainedModel>(fit());
  } catch (const std::exception& e) {
    f.error = e.what();
  }
  f.seconds = seconds_since(t0);
  return f;
}

// Everything one pair needs at every miscoverage level, computed once.
struct PairForecasts {
  std::vector<Forecast> calibration;
  std::vector<Forecast> test;
  double seconds = 0.0;
  std::string error;
};

struct TaskData {
  Dataset proper, calibration, test;
  double length_scale = 1.0;  // widths back to the caller's target units
};

}  // namespace

std::string DataCell::id() const { return fmt::format("{}/{}/d{}/n{}", dataset, noise, d, n); }

std::uint64_t repetition_seed(std::uint64_t base_seed, const DataCell& cell, std::size_t rep) {
  return base_seed + fnv1a(fmt::format("{}/rep{}", cell.id(), rep));
}

std::vector<CellKey> enumerate_cells(const ExperimentConfig& cfg, int csv_dim) {
  std::vector<CellKey> cells;
  auto add = [&](const std::string& noise, int d) {
    for (const auto& p : cfg.pairs)
      for (auto n : cfg.sizes)
        for (double eps : cfg.epsilons)
          cells.push_back({std::string(to_string(p.ncm)), std::string(to_string(p.model)), cfg.dataset_name(), noise,
                           d, n, eps});
  };
  if (cfg.synthetic()) {
    for (auto noise : cfg.noises)
      for (int d : cfg.dims) add(std::string(to_string(noise)), d);
  } else {
    add("-", csv_dim);
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

Runner::Runner(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.csv) {
    auto ds = load_csv(cfg_.csv->path, cfg_.csv->target, cfg_.csv->features);
    const auto largest = *std::max_element(cfg_.sizes.begin(), cfg_.sizes.end());
    if (largest > ds.rows())
      throw ConfigError(fmt::format("size {} exceeds the {} rows of '{}'", largest, ds.rows(), cfg_.csv->name));
    source_ = std::make_shared<const Dataset>(std::move(ds));
  }
}

std::vector<CellKey> Runner::cells() const {
  return enumerate_cells(cfg_, source_ ? static_cast<int>(source_->dim()) : 0);
}

DataCell Runner::data_cell_of(const CellKey& key) const { return {key.dataset, key.noise, key.d, key.n}; }

std::vector<MetricsRecord> Runner::run_task(const DataCell& cell, std::size_t rep,
                                            const std::vector<Wanted>& wanted) const {
  const std::uint64_t seed = repetition_seed(cfg_.base_seed, cell, rep);
  std::vector<MetricsRecord> out;
  for (const auto& w : wanted) {
    MetricsRecord r;
    r.cell = {std::string(to_string(w.pair.ncm)), std::string(to_string(w.pair.model)), cell.dataset, cell.noise,
              cell.d, cell.n, w.epsilon};
    r.rep = rep;
    r.seed = seed;
    out.push_back(std::move(r));
  }
  auto fail_all = [&](const std::string& msg) {
    for (auto& r : out)
      if (r.error.empty()) r.error = msg;
    return out;
  };

  TaskData data;
  try {
    const auto sp = split(cell.n, cfg_.train_fraction, cfg_.proper_fraction, seed);
    if (source_) {
      const auto pool = subsample(*source_, cell.n, derive_seed(seed, "subsample"));
      std::vector<std::size_t> fit_rows = sp.proper_train;
      fit_rows.insert(fit_rows.end(), sp.calibration.begin(), sp.calibration.end());
      const auto scaled = standardize(pool, fit_rows);
      data.proper = scaled.select(sp.proper_train);
      data.calibration = scaled.select(sp.calibration);
      data.test = scaled.select(sp.test);
      data.length_scale = scaled.standardization->target_scale;
    } else {
      // The pool's own test share is dropped in favor of a fresh, larger
      // test set drawn from the same process.
      const auto noise = parse_noise_kind(cell.noise);
      const auto pool = generate({cell.d, cell.n, noise, cfg_.noise_level, derive_seed(seed, "pool")});
      data.proper = pool.select(sp.proper_train);
      data.calibration = pool.select(sp.calibration);
      data.test = generate({cell.d, cfg_.test_size, noise, cfg_.noise_level, derive_seed(seed, "test")});
    }
  } catch (const std::exception& e) {
    return fail_all(fmt::format("data: {}", e.what()));
  }

  TrainConfig tc = cfg_.train;
  tc.seed = derive_seed(seed, "train");
  const std::size_t cal_size = data.calibration.rows();

  std::map<ModelKind, SharedFit> point_fits, sigma_fits;
  std::map<std::pair<NcmKind, ModelKind>, PairForecasts> forecasts;

  auto point_fit = [&](ModelKind kind) -> const SharedFit& {
    auto it = point_fits.find(kind);
    if (it == point_fits.end())
      it = point_fits.emplace(kind, timed_fit([&] { return fit_point_model(kind, data.proper, tc); })).first;
    return it->second;
  };
  auto sigma_fit = [&](ModelKind kind) -> const SharedFit& {
    auto it = sigma_fits.find(kind);
    if (it == sigma_fits.end()) {
      const auto& primary = point_fit(kind);
      SharedFit f;
      if (!primary.model) f.error = primary.error;
      else f = timed_fit([&] { return fit_sigma_model(data.proper, *primary.model, tc); });
      it = sigma_fits.emplace(kind, std::move(f)).first;
    }
    return it->second;
  };
  auto pair_forecasts = [&](const PairSpec& p) -> const PairForecasts& {
    const auto key = std::make_pair(p.ncm, p.model);
    auto it = forecasts.find(key);
    if (it != forecasts.end()) return it->second;
    PairForecasts pf;
    NcmModels m;
    m.ncm = p.ncm == NcmKind::Normalized ? Ncm::normalized() : Ncm::absolute();
    const auto& pt = point_fit(p.model);
    m.point = pt.model;
    pf.seconds = pt.seconds;
    pf.error = pt.error;
    if (pf.error.empty() && p.ncm == NcmKind::Normalized) {
      const auto& sg = sigma_fit(p.model);
      m.sigma = sg.model;
      pf.seconds += sg.seconds;
      pf.error = sg.error;
    }
    if (pf.error.empty()) {
      try {
        pf.calibration = m.forecast(data.calibration.features);
        pf.test = m.forecast(data.test.features);
      } catch (const std::exception& e) {
        pf.error = e.what();
      }
    }
    return forecasts.emplace(key, std::move(pf)).first->second;
  };

  auto score_intervals = [&](MetricsRecord& r, const Ncm& ncm, const std::vector<Forecast>& cal_fc,
                             const std::vector<Forecast>& test_fc) {
    const auto scores = calibration_scores(ncm, cal_fc, data.calibration.targets);
    const auto cp = CalibratedPredictor::from_scores(ncm, scores, r.cell.epsilon);
    std::vector<Interval> ivs;
    ivs.reserve(test_fc.size());
    for (const auto& f : test_fc) ivs.push_back(cp.interval_for(f));
    r.validity = validity(ivs, data.test.targets);
    r.efficiency = efficiency(ivs) * data.length_scale;
    r.zero_width_count = zero_width_count(ivs);
  };

  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& r = out[i];
    const auto& w = wanted[i];
    if (!calibration_feasible(cal_size, w.epsilon)) {
      r.infeasible = true;
      r.validity = 1.0;
      r.efficiency = std::numeric_limits<double>::infinity();
      continue;
    }
    try {
      if (w.pair.ncm == NcmKind::Quantile) {
        const Ncm ncm = Ncm::quantile_for(w.epsilon);
        const double levels[] = {ncm.eps_low, ncm.eps_high};
        const auto fit = timed_fit([&] { return fit_gbqr(data.proper, tc, levels); });
        r.fit_seconds = fit.seconds;
        if (!fit.model) {
          r.error = fit.error;
          continue;
        }
        NcmModels m{ncm, fit.model, nullptr};
        score_intervals(r, ncm, m.forecast(data.calibration.features), m.forecast(data.test.features));
      } else {
        const auto& pf = pair_forecasts(w.pair);
        r.fit_seconds = pf.seconds;
        if (!pf.error.empty()) {
          r.error = pf.error;
          continue;
        }
        const Ncm ncm = w.pair.ncm == NcmKind::Normalized ? Ncm::normalized() : Ncm::absolute();
        score_intervals(r, ncm, pf.calibration, pf.test);
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  }
  for (auto& r : out)
    if (!r.error.empty()) {
      r.validity = std::numeric_limits<double>::quiet_NaN();
      r.efficiency = std::numeric_limits<double>::quiet_NaN();
    }
  return out;
}

MetricsRecord Runner::run_cell(const CellKey& cell, std::size_t rep) const {
  const PairSpec pair{parse_ncm_kind(cell.ncm), parse_model_kind(cell.model)};
  return run_task(data_cell_of(cell), rep, {{pair, cell.epsilon}}).front();
}

SweepResult Runner::run_sweep(bool write_outputs) const {
  const auto& dir = cfg_.output_dir;
  const auto raw_path = dir / "raw.csv";
  const auto failures_path = dir / "failures.csv";

  // Completed rows from an earlier, interrupted invocation.
  std::map<std::string, MetricsRecord> done;
  if (write_outputs && cfg_.resume && std::filesystem::exists(raw_path)) {
    for (auto& r : read_raw_csv(raw_path)) done.emplace(r.run_id(), std::move(r));
    spdlog::info("resuming: {} completed rows in {}", done.size(), raw_path.string());
  }

  const auto cells = this->cells();
  std::map<DataCell, std::vector<Wanted>> grouped;
  for (const auto& c : cells)
    grouped[data_cell_of(c)].push_back({{parse_ncm_kind(c.ncm), parse_model_kind(c.model)}, c.epsilon});

  struct Task {
    DataCell cell;
    std::size_t rep;
    const std::vector<Wanted>* wanted;
  };
  std::vector<Task> tasks;
  std::vector<MetricsRecord> kept;
  SweepResult result;
  for (const auto& [cell, wanted] : grouped) {
    for (std::size_t rep = 0; rep < cfg_.repetitions; ++rep) {
      std::vector<MetricsRecord> found;
      for (const auto& w : wanted) {
        MetricsRecord probe;
        probe.cell = {std::string(to_string(w.pair.ncm)), std::string(to_string(w.pair.model)), cell.dataset,
                      cell.noise, cell.d, cell.n, w.epsilon};
        probe.rep = rep;
        if (auto it = done.find(probe.run_id()); it != done.end()) found.push_back(it->second);
      }
      if (found.size() == wanted.size()) {
        kept.insert(kept.end(), found.begin(), found.end());
        ++result.tasks_skipped;
      } else {
        tasks.push_back({cell, rep, &wanted});
      }
    }
  }

  std::vector<std::vector<MetricsRecord>> produced(tasks.size());
  std::size_t finished = 0;
  const auto total = tasks.size();
  auto execute = [&](std::size_t t) {
    produced[t] = run_task(tasks[t].cell, tasks[t].rep, *tasks[t].wanted);
    std::size_t now;
#pragma omp atomic capture
    now = ++finished;
    if (progress_) {
#pragma omp critical(cplab_progress)
      progress_(now, total);
    }
  };
  if (cfg_.workers == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) execute(t);
  } else {
    const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for num_threads(cfg_.workers) schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < n; ++t) execute(static_cast<std::size_t>(t));
  }
  result.tasks_run = tasks.size();

  result.records = std::move(kept);
  for (auto& batch : produced)
    for (auto& r : batch) (r.error.empty() ? result.records : result.failures).push_back(std::move(r));
  sort_records(result.records);
  sort_records(result.failures);
  for (const auto& f : result.failures)
    spdlog::warn("{} rep {} failed: {}", f.cell.id(), f.rep, f.error);

  result.summaries = summarize_all(result.records);
  result.convergence = convergence_report(result.records);
  result.outliers = outlier_report(result.records);

  if (write_outputs) {
    std::filesystem::create_directories(dir);
    write_raw_csv(raw_path, result.records);
    write_failures_csv(failures_path, result.failures);
    write_summary_csv(dir / "summary.csv", result.summaries);
    write_convergence_csv(dir / "convergence.csv", result.convergence);
    write_outliers_csv(dir / "outliers.csv", result.outliers);
  }
  return result;
}

}  // namespace cplab
