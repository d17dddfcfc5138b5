#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "h3d/bytes.hpp"
#include "h3d/job.hpp"

namespace h3d {

struct MetricsRow {
  std::string site_name;
  double t2d = 0.0;  // seconds
  double t3d = 0.0;  // seconds
  double total = 0.0;  // seconds
  double baseline_low = 0.0;  // hours
  double baseline_high = 0.0;  // hours

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct SpeedupRange {
  double low = 0.0;
  double high = 0.0;
};

struct MetricsSummary {
  std::size_t rows = 0;
  double mean_t2d = 0.0;
  double mean_t3d = 0.0;
  double mean_total = 0.0;
  double mean_baseline_low = 0.0;
  double mean_baseline_high = 0.0;
  double mean_baseline_mid = 0.0;
  // Present when every row carries a positive baseline.
  std::optional<SpeedupRange> speedup;
};

// Tolerance for the total == t2d + t3d check; inputs are decimal strings so
// exact equality holds up to the binary representation of one decimal place.
inline constexpr double kRowSumTolerance = 1e-9;

void check_row(const MetricsRow& row);
MetricsSummary aggregate(std::span<const MetricsRow> rows);

// ratio = baseline_hours * 3600 / total_seconds for each end of the range.
SpeedupRange speedup(double total_seconds, double baseline_low_hours, double baseline_high_hours);

enum class ReportFormat { kCsv, kMarkdown };

std::string emit_report(std::span<const MetricsRow> rows, const MetricsSummary& summary,
                        ReportFormat format);

// Half-up rounding to one decimal place, as text ("44.5625" -> "44.6").
std::string format_tenths(double value);

// CSV with header site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr.
std::vector<MetricsRow> parse_metrics_csv(std::string_view text);

// The eight heritage-site rows with their published timings and
// photogrammetry baseline ranges.
std::string_view table2_fixture_csv();
std::vector<MetricsRow> table2_rows();

// Rows built from finished jobs: t2d and t3d from the Synthesize2D and
// Generate3D stage timings, baselines from the site record.
std::vector<MetricsRow> rows_from_jobs(std::span<const GenerationJob> jobs,
                                       std::span<const SiteRecord> sites);

}  // namespace h3d
