#include "h3d/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "h3d/error.hpp"

namespace h3d {

namespace {

constexpr std::string_view kCsvHeader = "site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr";

constexpr std::string_view kTable2Csv =
    "site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr\n"
    "Choto Sona Mosque,11.5,35,46.5,4,6\n"
    "Shaheed Minar,10.8,32,42.8,3,5\n"
    "Paharpur Buddhist Bihar,12.1,38,50.1,6,8\n"
    "Puthia Temple Complex,9.9,30,39.9,4,6\n"
    "Ahsan Manzil Museum,10.2,34,44.2,4,6\n"
    "Mohera Rajbari,10.5,33,43.5,3,5\n"
    "Buddha Dhatu Jadi,11.8,36,47.8,5,7\n"
    "Durjoy Mur Bhairab,10.7,31,41.7,3,4\n";

bool close(double a, double b) { return std::abs(a - b) <= kRowSumTolerance; }

// Integral hour counts print without a decimal ("4"), everything else to tenths.
std::string format_hours(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e9) return std::to_string(static_cast<long long>(v));
  return format_tenths(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void check_row(const MetricsRow& row) {
  for (double v : {row.t2d, row.t3d, row.total, row.baseline_low, row.baseline_high}) {
    if (!std::isfinite(v) || v < 0) {
      throw Error(ErrorCode::kInvalidArgument, "row '" + row.site_name + "' has a negative or non-finite value");
    }
  }
  if (!close(row.total, row.t2d + row.t3d)) {
    throw Error(ErrorCode::kInvalidArgument, "row '" + row.site_name + "': total != t2d + t3d");
  }
  if (row.baseline_low > row.baseline_high) {
    throw Error(ErrorCode::kInvalidArgument, "row '" + row.site_name + "': baseline low exceeds high");
  }
}

SpeedupRange speedup(double total_seconds, double baseline_low_hours, double baseline_high_hours) {
  if (!(total_seconds > 0) || !(baseline_low_hours > 0) || !(baseline_high_hours >= baseline_low_hours)) {
    throw Error(ErrorCode::kInvalidArgument, "speedup needs total > 0 and 0 < low <= high");
  }
  return {baseline_low_hours * 3600.0 / total_seconds, baseline_high_hours * 3600.0 / total_seconds};
}

MetricsSummary aggregate(std::span<const MetricsRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "no metrics rows to aggregate");
  // Sum in a fixed order so that permuted inputs give identical means.
  std::vector<MetricsRow> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.site_name, a.t2d, a.t3d, a.total, a.baseline_low, a.baseline_high) <
           std::tie(b.site_name, b.t2d, b.t3d, b.total, b.baseline_low, b.baseline_high);
  });
  MetricsSummary s;
  s.rows = sorted.size();
  bool baselines = true;
  for (const auto& r : sorted) {
    check_row(r);
    s.mean_t2d += r.t2d;
    s.mean_t3d += r.t3d;
    s.mean_total += r.total;
    s.mean_baseline_low += r.baseline_low;
    s.mean_baseline_high += r.baseline_high;
    s.mean_baseline_mid += (r.baseline_low + r.baseline_high) / 2.0;
    baselines = baselines && r.baseline_low > 0;
  }
  auto n = static_cast<double>(s.rows);
  s.mean_t2d /= n;
  s.mean_t3d /= n;
  s.mean_total /= n;
  s.mean_baseline_low /= n;
  s.mean_baseline_high /= n;
  s.mean_baseline_mid /= n;
  if (baselines && s.mean_total > 0) s.speedup = speedup(s.mean_total, s.mean_baseline_low, s.mean_baseline_high);
  return s;
}

std::string format_tenths(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::kInvalidArgument, "cannot render a non-finite value");
  // The epsilon keeps decimal halves such as 10.35 (stored just below) rounding up.
  double r = std::floor(value * 10.0 + 0.5 + 1e-9) / 10.0;
  if (r == 0) r = 0;  // no "-0.0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", r);
  return buf;
}

std::string emit_report(std::span<const MetricsRow> rows, const MetricsSummary& summary, ReportFormat format) {
  auto expected = aggregate(rows);
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
  if (expected.rows != summary.rows || !same(expected.mean_t2d, summary.mean_t2d) ||
      !same(expected.mean_t3d, summary.mean_t3d) || !same(expected.mean_total, summary.mean_total) ||
      !same(expected.mean_baseline_mid, summary.mean_baseline_mid)) {
    throw Error(ErrorCode::kMismatchedSummary, "summary does not match the rows it is rendered with");
  }

  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
      out << csv_field(r.site_name) << ',' << format_tenths(r.t2d) << ',' << format_tenths(r.t3d) << ','
          << format_tenths(r.total) << ',' << format_tenths(r.baseline_low) << ',' << format_tenths(r.baseline_high)
          << '\n';
    }
    out << "Average," << format_tenths(summary.mean_t2d) << ',' << format_tenths(summary.mean_t3d) << ','
        << format_tenths(summary.mean_total) << ',' << format_tenths(summary.mean_baseline_low) << ','
        << format_tenths(summary.mean_baseline_high) << '\n';
    return out.str();
  }

  out << "| Site | 2D (s) | 3D (s) | Total (s) | SfM (hr) |\n";
  out << "|:-----|-------:|-------:|----------:|---------:|\n";
  for (const auto& r : rows) {
    out << "| " << r.site_name << " | " << format_tenths(r.t2d) << " | " << format_tenths(r.t3d) << " | "
        << format_tenths(r.total) << " | " << format_hours(r.baseline_low) << "–" << format_hours(r.baseline_high)
        << " |\n";
  }
  out << "| **Average** | " << format_tenths(summary.mean_t2d) << " | " << format_tenths(summary.mean_t3d) << " | "
      << format_tenths(summary.mean_total) << " | " << format_tenths(summary.mean_baseline_mid) << "* |\n";
  out << "\n* Mean of the per-site range midpoints.\n";
  if (summary.speedup) {
    out << "\nSpeedup at the mean total: " << format_tenths(summary.speedup->low) << "x to "
        << format_tenths(summary.speedup->high) << "x\n";
  }
  return out.str();
}

std::vector<MetricsRow> parse_metrics_csv(std::string_view text) {
  std::vector<MetricsRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = false;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header) {
      if (line != kCsvHeader) throw Error(ErrorCode::kInvalidArgument, "unexpected metrics CSV header");
      header = true;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 6) {
      throw Error(ErrorCode::kInvalidArgument, "line " + std::to_string(line_no) + ": expected 6 fields");
    }
    if (f[0] == "Average") continue;
    MetricsRow r{f[0],
                 parse_number(f[1], line_no),
                 parse_number(f[2], line_no),
                 parse_number(f[3], line_no),
                 parse_number(f[4], line_no),
                 parse_number(f[5], line_no)};
    check_row(r);
    rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorCode::kEmptyInput, "metrics CSV is empty");
  return rows;
}

std::string_view table2_fixture_csv() { return kTable2Csv; }

std::vector<MetricsRow> table2_rows() { return parse_metrics_csv(kTable2Csv); }

std::vector<MetricsRow> rows_from_jobs(std::span<const GenerationJob> jobs, std::span<const SiteRecord> sites) {
  std::map<std::string, const SiteRecord*> by_id;
  for (const auto& s : sites) by_id[s.site_id] = &s;
  std::vector<const GenerationJob*> done;
  for (const auto& j : jobs) {
    if (j.stage == Stage::kDone && j.elapsed_of(Stage::kSynthesize2D) && j.elapsed_of(Stage::kGenerate3D)) {
      done.push_back(&j);
    }
  }
  std::sort(done.begin(), done.end(), [](const GenerationJob* a, const GenerationJob* b) {
    return std::tie(a->created_at, a->job_id) < std::tie(b->created_at, b->job_id);
  });
  std::vector<MetricsRow> rows;
  for (const auto* j : done) {
    MetricsRow r;
    auto it = by_id.find(j->site_id);
    r.site_name = it != by_id.end() ? it->second->name : j->site_id;
    r.t2d = *j->elapsed_of(Stage::kSynthesize2D);
    r.t3d = *j->elapsed_of(Stage::kGenerate3D);
    r.total = r.t2d + r.t3d;
    if (it != by_id.end() && it->second->baseline) {
      r.baseline_low = it->second->baseline->low;
      r.baseline_high = it->second->baseline->high;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace h3d
