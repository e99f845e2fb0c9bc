#include "cplab/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace cplab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr const char* kRawHeader =
    "run_id,ncm,model,dataset,noise,d,n,epsilon,rep,seed,validity,efficiency,infeasible,zero_width_count,"
    "fit_seconds";
constexpr const char* kFailureHeader = "run_id,ncm,model,dataset,noise,d,n,epsilon,rep,seed,error";

std::string cell_columns(const CellKey& c) {
  return fmt::format("{},{},{},{},{},{},{}", c.ncm, c.model, c.dataset, c.noise, c.d, c.n, c.epsilon);
}

// Files are written next to their final name and renamed into place, so an
// interrupted run never leaves a truncated CSV behind.
template <typename Fn>
void write_atomically(const std::filesystem::path& path, Fn&& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw EvalError(fmt::format("cannot write '{}'", tmp.string()));
    body(out);
    if (!out) throw EvalError(fmt::format("write failed for '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw EvalError(fmt::format("{}:{}: cannot parse '{}'", path.string(), line, s));
  return v;
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw EvalError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw EvalError(fmt::format("'{}' does not have the expected header", path.string()));
  const auto width = split_line(std::string(header)).size();
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != width) throw EvalError(fmt::format("{}:{}: expected {} fields", path.string(), lineno, width));
    rows.push_back(std::move(f));
  }
  return rows;
}

MetricsRecord parse_key_fields(const std::vector<std::string>& f, const std::filesystem::path& path,
                               std::size_t line) {
  MetricsRecord r;
  r.cell.ncm = f[1];
  r.cell.model = f[2];
  r.cell.dataset = f[3];
  r.cell.noise = f[4];
  r.cell.d = parse_number<int>(f[5], path, line);
  r.cell.n = parse_number<std::size_t>(f[6], path, line);
  r.cell.epsilon = parse_number<double>(f[7], path, line);
  r.rep = parse_number<std::size_t>(f[8], path, line);
  r.seed = parse_number<std::uint64_t>(f[9], path, line);
  return r;
}

std::string opt_size(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string(); }

template <typename Key, typename Fn>
auto group_by(std::span<const MetricsRecord> records, Fn&& key) {
  std::map<Key, std::vector<MetricsRecord>> groups;
  for (const auto& r : records) groups[key(r)].push_back(r);
  return groups;
}

}  // namespace

void sort_records(std::vector<MetricsRecord>& records) {
  std::sort(records.begin(), records.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.rep < b.rep;
  });
}

std::vector<CellSummary> summarize_all(std::span<const MetricsRecord> records) {
  std::vector<CellSummary> out;
  for (auto& [cell, recs] : group_by<CellKey>(records, [](const auto& r) { return r.cell; })) {
    if (recs.size() >= 2) {
      out.push_back(summarize(recs));
      continue;
    }
    const auto& r = recs.front();
    CellSummary s;
    s.cell = cell;
    s.repetitions = 1;
    s.feasible_repetitions = r.infeasible ? 0 : 1;
    s.validity = {r.validity, kNaN};
    s.efficiency = {r.efficiency, kNaN};
    s.corrected_efficiency = s.efficiency;
    s.zero_width_total = r.zero_width_count;
    out.push_back(s);
  }
  return out;
}

std::vector<ConvergenceSeries> convergence_report(std::span<const MetricsRecord> records) {
  auto series_key = [](const MetricsRecord& r) {
    CellKey k = r.cell;
    k.n = 0;
    return k;
  };
  std::vector<ConvergenceSeries> out;
  for (auto& [key, recs] : group_by<CellKey>(records, series_key)) {
    ConvergenceSeries s;
    s.cell = key;
    std::map<std::size_t, std::vector<double>> by_size;
    for (const auto& r : recs) by_size[r.cell.n].push_back(std::abs(r.validity - (1.0 - r.cell.epsilon)));
    std::vector<double> means;
    for (auto& [n, gaps] : by_size) {
      s.sizes.push_back(n);
      s.repetitions.push_back(gaps.size());
      s.gaps.push_back(gaps.size() >= 2 ? mean_se(gaps) : MeanSe{gaps.front(), kNaN});
      means.push_back(s.gaps.back().mean);
    }
    s.converged_at = convergence_size(means, s.sizes);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<OutlierRow> outlier_report(std::span<const MetricsRecord> records) {
  std::vector<OutlierRow> out;
  for (auto& [cell, recs] : group_by<CellKey>(records, [](const auto& r) { return r.cell; })) {
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.rep < b.rep; });
    std::vector<double> eff;
    std::vector<std::size_t> reps;
    for (const auto& r : recs) {
      if (r.infeasible || !std::isfinite(r.efficiency) || !(r.efficiency > 0.0)) continue;
      eff.push_back(r.efficiency);
      reps.push_back(r.rep);
    }
    if (eff.size() < 4) continue;
    OutlierRow row;
    row.cell = cell;
    row.feasible_repetitions = eff.size();
    row.report = detect_outliers(eff);
    for (auto i : row.report.outliers) row.outlier_reps.push_back(reps[i]);
    out.push_back(std::move(row));
  }
  return out;
}

void write_raw_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
  write_atomically(path, [&](std::ofstream& out) {
    out << kRawHeader << '\n';
    for (const auto& r : records)
      out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.run_id(), cell_columns(r.cell), r.rep, r.seed,
                         r.validity, r.efficiency, r.infeasible ? 1 : 0, r.zero_width_count, r.fit_seconds);
  });
}

std::vector<MetricsRecord> read_raw_csv(const std::filesystem::path& path) {
  std::vector<MetricsRecord> out;
  std::size_t line = 1;
  for (const auto& f : read_table(path, kRawHeader)) {
    ++line;
    auto r = parse_key_fields(f, path, line);
    r.validity = parse_number<double>(f[10], path, line);
    r.efficiency = parse_number<double>(f[11], path, line);
    r.infeasible = f[12] == "1";
    r.zero_width_count = parse_number<std::size_t>(f[13], path, line);
    r.fit_seconds = parse_number<double>(f[14], path, line);
    if (r.run_id() != f[0]) throw EvalError(fmt::format("{}:{}: run_id does not match the row", path.string(), line));
    out.push_back(std::move(r));
  }
  return out;
}

void write_failures_csv(const std::filesystem::path& path, std::span<const MetricsRecord> failures) {
  write_atomically(path, [&](std::ofstream& out) {
    out << kFailureHeader << '\n';
    for (const auto& r : failures) {
      std::string msg = r.error;
      std::replace_if(msg.begin(), msg.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
      out << fmt::format("{},{},{},{},{}\n", r.run_id(), cell_columns(r.cell), r.rep, r.seed, msg);
    }
  });
}

std::vector<MetricsRecord> read_failures_csv(const std::filesystem::path& path) {
  std::vector<MetricsRecord> out;
  std::size_t line = 1;
  for (const auto& f : read_table(path, kFailureHeader)) {
    ++line;
    auto r = parse_key_fields(f, path, line);
    r.validity = kNaN;
    r.efficiency = kNaN;
    r.error = f[10];
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path, std::span<const CellSummary> summaries) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "ncm,model,dataset,noise,d,n,epsilon,target_coverage,repetitions,feasible_repetitions,"
           "validity_mean,validity_se,efficiency_mean,efficiency_se,outliers,corrected_efficiency_mean,"
           "corrected_efficiency_se,zero_width_total\n";
    for (const auto& s : summaries)
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", cell_columns(s.cell), 1.0 - s.cell.epsilon,
                         s.repetitions, s.feasible_repetitions, s.validity.mean, s.validity.se, s.efficiency.mean,
                         s.efficiency.se, s.outlier_reps.size(), s.corrected_efficiency.mean,
                         s.corrected_efficiency.se, s.zero_width_total);
  });
}

void write_convergence_csv(const std::filesystem::path& path, std::span<const ConvergenceSeries> series) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "ncm,model,dataset,noise,d,epsilon,n,repetitions,gap_mean,gap_se,converged_at\n";
    for (const auto& s : series) {
      const auto& c = s.cell;
      for (std::size_t j = 0; j < s.sizes.size(); ++j)
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", c.ncm, c.model, c.dataset, c.noise, c.d,
                           c.epsilon, s.sizes[j], s.repetitions[j], s.gaps[j].mean, s.gaps[j].se,
                           opt_size(s.converged_at));
    }
  });
}

void write_outliers_csv(const std::filesystem::path& path, std::span<const OutlierRow> rows) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "ncm,model,dataset,noise,d,n,epsilon,feasible_repetitions,outliers,outlier_reps,log_q1,log_q3,"
           "log_fence,raw_mean,raw_se,corrected_mean,corrected_se\n";
    for (const auto& r : rows) {
      const auto& o = r.report;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", cell_columns(r.cell), r.feasible_repetitions,
                         r.outlier_reps.size(), fmt::join(r.outlier_reps, ";"), o.lower_quartile,
                         o.upper_quartile, o.fence, o.raw.mean, o.raw.se, o.corrected.mean, o.corrected.se);
    }
  });
}

}  // namespace cplab
