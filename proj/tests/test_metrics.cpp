#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "h3d/bytes.hpp"
#include "h3d/error.hpp"
#include "h3d/metrics.hpp"

using namespace h3d;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInternal;
}

MetricsRow row(std::string name, double t2d, double t3d, double lo, double hi) {
  return {std::move(name), t2d, t3d, t2d + t3d, lo, hi};
}

// Column sums of the eight published rows, added up by hand.
constexpr double kSum2d = 87.5;
constexpr double kSum3d = 269.0;
constexpr double kSumTotal = 356.5;
constexpr double kSumLow = 32.0;
constexpr double kSumHigh = 47.0;

// Half-up rounding of n/100 to tenths using integer arithmetic only.
std::string tenths_oracle(long long hundredths) {
  bool neg = hundredths < 0;
  long long a = neg ? -hundredths : hundredths;
  // Half-up means toward +infinity at the midpoint, so negatives round half toward zero.
  long long t = neg ? (a + 4) / 10 : (a + 5) / 10;
  std::string s = std::to_string(t / 10) + "." + std::to_string(t % 10);
  return (neg && t != 0) ? "-" + s : s;
}

}  // namespace

TEST(TimingFixture, FixtureRowsMatchPublishedTable) {
  auto rows = table2_rows();
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], (MetricsRow{"Choto Sona Mosque", 11.5, 35, 46.5, 4, 6}));
  EXPECT_EQ(rows[4], (MetricsRow{"Ahsan Manzil Museum", 10.2, 34, 44.2, 4, 6}));
  EXPECT_EQ(rows[7], (MetricsRow{"Durjoy Mur Bhairab", 10.7, 31, 41.7, 3, 4}));
  for (const auto& r : rows) {
    EXPECT_NO_THROW(check_row(r)) << r.site_name;
    EXPECT_NEAR(r.total - (r.t2d + r.t3d), 0.0, kRowSumTolerance) << r.site_name;
  }
}

TEST(TimingFixture, ShippedCsvMatchesEmbeddedCopy) {
  auto text = to_string(read_file(std::filesystem::path(H3D_SOURCE_DIR) / "data/fixtures/metrics.csv"));
  EXPECT_EQ(text, table2_fixture_csv());
  EXPECT_EQ(parse_metrics_csv(text), table2_rows());
}

TEST(Aggregate, Table2Means) {
  auto rows = table2_rows();
  auto s = aggregate(rows);
  EXPECT_EQ(s.rows, 8u);
  EXPECT_NEAR(s.mean_t2d, kSum2d / 8, 1e-12);
  EXPECT_NEAR(s.mean_t3d, kSum3d / 8, 1e-12);
  EXPECT_NEAR(s.mean_total, kSumTotal / 8, 1e-12);
  EXPECT_NEAR(s.mean_baseline_low, kSumLow / 8, 1e-12);
  EXPECT_NEAR(s.mean_baseline_high, kSumHigh / 8, 1e-12);
  EXPECT_NEAR(s.mean_baseline_mid, (kSumLow + kSumHigh) / 16, 1e-12);
  // Published averages are 10.9, 33.6 and 44.5, within a tenth.
  EXPECT_NEAR(s.mean_t2d, 10.9, 0.1);
  EXPECT_NEAR(s.mean_t3d, 33.6, 0.1);
  EXPECT_NEAR(s.mean_total, 44.5, 0.1);
  ASSERT_TRUE(s.speedup);
  EXPECT_LE(s.speedup->low, s.speedup->high);
}

TEST(Aggregate, SingletonIsIdentity) {
  std::vector<MetricsRow> rows{row("x", 10, 30, 1, 2)};
  auto s = aggregate(rows);
  EXPECT_EQ(s.mean_t2d, 10);
  EXPECT_EQ(s.mean_t3d, 30);
  EXPECT_EQ(s.mean_total, 40);
}

TEST(Aggregate, EmptyIsAnError) {
  std::vector<MetricsRow> rows;
  EXPECT_EQ(code_of([&] { aggregate(rows); }), ErrorCode::kEmptyInput);
}

TEST(Aggregate, NoSpeedupWithoutBaselines) {
  std::vector<MetricsRow> rows{row("x", 10, 30, 0, 0)};
  EXPECT_FALSE(aggregate(rows).speedup);
}

TEST(Aggregate, RejectsInconsistentRows) {
  std::vector<MetricsRow> bad_sum{{"x", 10, 30, 41, 1, 2}};
  EXPECT_EQ(code_of([&] { aggregate(bad_sum); }), ErrorCode::kInvalidArgument);
  std::vector<MetricsRow> bad_range{row("x", 10, 30, 5, 2)};
  EXPECT_EQ(code_of([&] { aggregate(bad_range); }), ErrorCode::kInvalidArgument);
}

TEST(Speedup, Examples) {
  auto a = speedup(46.5, 4, 6);
  EXPECT_NEAR(a.low, 14400 / 46.5, 1e-9);
  EXPECT_NEAR(a.high, 21600 / 46.5, 1e-9);
  EXPECT_EQ(format_tenths(a.low), "309.7");
  EXPECT_EQ(format_tenths(a.high), "464.5");
  auto unit = speedup(3600, 1, 1);
  EXPECT_DOUBLE_EQ(unit.low, 1.0);
  EXPECT_DOUBLE_EQ(unit.high, 1.0);
  auto at_published_mean = speedup(44.5, 4, 6);
  EXPECT_EQ(format_tenths(at_published_mean.low), "323.6");
  EXPECT_GE(at_published_mean.low, 250);
}

TEST(Speedup, RejectsNonPositive) {
  EXPECT_EQ(code_of([] { speedup(0, 1, 2); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { speedup(10, 0, 2); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { speedup(10, 3, 2); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { speedup(-1, 1, 2); }), ErrorCode::kInvalidArgument);
}

TEST(Speedup, PerRowLowEndAgainst250) {
  // Worked by hand: low-end hours * 3600 / total. Mohera Rajbari is
  // 10800 / 43.5 = 248.3, the only row under 250.
  const std::vector<std::string> below = {"Mohera Rajbari"};
  for (const auto& r : table2_rows()) {
    double low = speedup(r.total, r.baseline_low, r.baseline_high).low;
    bool expect_below = std::find(below.begin(), below.end(), r.site_name) != below.end();
    EXPECT_EQ(low < 250, expect_below) << r.site_name << " " << low;
  }
  auto durjoy = table2_rows()[7];
  EXPECT_EQ(format_tenths(speedup(durjoy.total, 3, 4).low), "259.0");
}

TEST(SpeedupProperty, AntitoneInTimeMonotoneInHours) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(0.1, 1000), h(0.1, 50);
  for (int i = 0; i < 1000; ++i) {
    double t1 = t(rng), t2 = t(rng), lo = h(rng), hi = lo + h(rng), bump = h(rng);
    if (t1 > t2) std::swap(t1, t2);
    auto fast = speedup(t1, lo, hi), slow = speedup(t2, lo, hi);
    ASSERT_GE(fast.low, slow.low);
    ASSERT_GE(fast.high, slow.high);
    auto more = speedup(t1, lo + bump, hi + bump);
    ASSERT_GE(more.low, fast.low);
    ASSERT_GE(more.high, fast.high);
    ASSERT_LE(fast.low, fast.high);
  }
}

TEST(FormatTenths, Examples) {
  EXPECT_EQ(format_tenths(44.5625), "44.6");
  EXPECT_EQ(format_tenths(10.9375), "10.9");
  EXPECT_EQ(format_tenths(33.625), "33.6");
  EXPECT_EQ(format_tenths(10.35), "10.4");
  EXPECT_EQ(format_tenths(0.05), "0.1");
  EXPECT_EQ(format_tenths(35), "35.0");
  EXPECT_EQ(format_tenths(-0.04), "0.0");
}

TEST(FormatTenths, MatchesIntegerOracleOnDecimalInputs) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long long> n(0, 10'000'000);
  for (int i = 0; i < 20'000; ++i) {
    long long h = n(rng);
    ASSERT_EQ(format_tenths(static_cast<double>(h) / 100.0), tenths_oracle(h)) << h;
  }
}

TEST(Report, MarkdownMirrorsTableLayout) {
  auto rows = table2_rows();
  auto md = emit_report(rows, aggregate(rows), ReportFormat::kMarkdown);
  EXPECT_EQ(md.rfind("| Site | 2D (s) | 3D (s) | Total (s) | SfM (hr) |\n", 0), 0u);
  EXPECT_NE(md.find("| Choto Sona Mosque | 11.5 | 35.0 | 46.5 | 4–6 |\n"), std::string::npos);
  EXPECT_NE(md.find("| Durjoy Mur Bhairab | 10.7 | 31.0 | 41.7 | 3–4 |\n"), std::string::npos);
  EXPECT_NE(md.find("| **Average** | 10.9 | 33.6 | 44.6 | 4.9* |\n"), std::string::npos);
  EXPECT_NE(md.find("* Mean of the per-site range midpoints."), std::string::npos);
  // 4 * 3600 / 44.5625 and 5.875 * 3600 / 44.5625.
  EXPECT_NE(md.find("323.1x to 474.6x"), std::string::npos);
}

TEST(Report, CsvTrivialRow) {
  std::vector<MetricsRow> rows{row("Tiny", 1, 2, 1, 1)};
  auto csv = emit_report(rows, aggregate(rows), ReportFormat::kCsv);
  EXPECT_EQ(csv,
            "site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr\n"
            "Tiny,1.0,2.0,3.0,1.0,1.0\n"
            "Average,1.0,2.0,3.0,1.0,1.0\n");
}

TEST(Report, CsvQuotesAwkwardNames) {
  std::vector<MetricsRow> rows{row("Gaur, \"old\" city", 1, 2, 1, 1)};
  auto csv = emit_report(rows, aggregate(rows), ReportFormat::kCsv);
  EXPECT_NE(csv.find("\"Gaur, \"\"old\"\" city\",1.0"), std::string::npos);
  EXPECT_EQ(parse_metrics_csv(csv), rows);
}

TEST(Report, Deterministic) {
  auto rows = table2_rows();
  auto s = aggregate(rows);
  for (auto f : {ReportFormat::kCsv, ReportFormat::kMarkdown}) {
    EXPECT_EQ(emit_report(rows, s, f), emit_report(rows, s, f));
  }
}

TEST(Report, MismatchedSummaryIsRejected) {
  auto rows = table2_rows();
  auto s = aggregate(rows);
  s.mean_total += 1;
  EXPECT_EQ(code_of([&] { emit_report(rows, s, ReportFormat::kMarkdown); }), ErrorCode::kMismatchedSummary);
  auto other = aggregate(std::vector<MetricsRow>{row("x", 1, 2, 1, 1)});
  EXPECT_EQ(code_of([&] { emit_report(rows, other, ReportFormat::kCsv); }), ErrorCode::kMismatchedSummary);
}

TEST(Csv, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_metrics_csv(""); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([] { parse_metrics_csv("a,b\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_metrics_csv("site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr\nx,1,2\n"); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_metrics_csv("site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr\nx,1,2,x,1,1\n"); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_metrics_csv("site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr\nx,1,2,4,1,1\n"); }),
            ErrorCode::kInvalidArgument);
}

namespace {

// Rows with one-decimal timings, so sums are exact in decimal.
MetricsRow random_row(std::mt19937_64& rng, int i) {
  std::uniform_int_distribution<int> tenths(1, 1000), hours(1, 10);
  double t2d = tenths(rng) / 10.0, t3d = tenths(rng) / 10.0;
  int lo = hours(rng);
  return {"site-" + std::to_string(i), t2d, t3d, t2d + t3d, static_cast<double>(lo),
          static_cast<double>(lo + hours(rng))};
}

}  // namespace

TEST(AggregateProperty, PermutationInvariant) {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<MetricsRow> rows;
    int n = std::uniform_int_distribution<int>(1, 20)(rng);
    for (int i = 0; i < n; ++i) rows.push_back(random_row(rng, i));
    auto a = aggregate(rows);
    std::shuffle(rows.begin(), rows.end(), rng);
    auto b = aggregate(rows);
    ASSERT_EQ(a.mean_t2d, b.mean_t2d);
    ASSERT_EQ(a.mean_t3d, b.mean_t3d);
    ASSERT_EQ(a.mean_total, b.mean_total);
    ASSERT_EQ(a.mean_baseline_mid, b.mean_baseline_mid);
    ASSERT_EQ(a.speedup->low, b.speedup->low);
    ASSERT_EQ(a.speedup->high, b.speedup->high);
    ASSERT_LE(a.speedup->low, a.speedup->high);
  }
}

TEST(AggregateProperty, CsvRoundTripPreservesRows) {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<MetricsRow> rows;
    int n = std::uniform_int_distribution<int>(1, 10)(rng);
    for (int i = 0; i < n; ++i) rows.push_back(random_row(rng, i));
    auto back = parse_metrics_csv(emit_report(rows, aggregate(rows), ReportFormat::kCsv));
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ASSERT_EQ(back[i].site_name, rows[i].site_name);
      ASSERT_NEAR(back[i].t2d, rows[i].t2d, 1e-9);
      ASSERT_NEAR(back[i].total, rows[i].total, 1e-9);
      ASSERT_EQ(back[i].baseline_high, rows[i].baseline_high);
    }
  }
}

TEST(RowsFromJobs, UsesStageTimingsAndSiteBaselines) {
  auto job = [](std::string id, std::string site, std::string created, Stage stage, double t2d, double t3d) {
    GenerationJob j;
    j.job_id = std::move(id);
    j.site_id = std::move(site);
    j.created_at = std::move(created);
    j.stage = stage;
    j.timings = {{Stage::kAcquire, 0.1, "", true},
                 {Stage::kPrompt, 0.1, "", true},
                 {Stage::kSynthesize2D, t2d, "", true},
                 {Stage::kGenerate3D, t3d, "", true},
                 {Stage::kPublish, 0.5, "", true}};
    return j;
  };
  std::vector<GenerationJob> jobs{
      job("job-b", "ahsan", "2026-01-02T00:00:00.000Z", Stage::kDone, 10.2, 34),
      job("job-a", "choto", "2026-01-01T00:00:00.000Z", Stage::kDone, 11.5, 35),
      job("job-c", "choto", "2026-01-03T00:00:00.000Z", Stage::kFailed, 1, 1),
  };
  SiteRecord choto;
  choto.site_id = "choto";
  choto.name = "Choto Sona Mosque";
  choto.baseline = BaselineHours{4, 6};
  SiteRecord ahsan;
  ahsan.site_id = "ahsan";
  ahsan.name = "Ahsan Manzil Museum";
  std::vector<SiteRecord> sites{choto, ahsan};

  auto rows = rows_from_jobs(jobs, sites);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (MetricsRow{"Choto Sona Mosque", 11.5, 35, 46.5, 4, 6}));
  EXPECT_EQ(rows[1].site_name, "Ahsan Manzil Museum");
  // Publish time stays out of the total.
  EXPECT_NEAR(rows[1].total, 44.2, 1e-9);
  EXPECT_EQ(rows[1].baseline_low, 0);
}
