#include <gtest/gtest.h>

#include <filesystem>

#include "forge/adoption.hpp"
#include "support/synthetic.hpp"

using namespace forge;
using namespace forge::adoption;

namespace {

CompletionLogEntry entry(Timestamp ts, std::string pred, std::string ref, bool adopted) {
  CompletionLogEntry e;
  e.timestamp = ts;
  e.trigger_point = "x = ";
  e.language = "c";
  e.prediction = std::move(pred);
  e.reference = std::move(ref);
  e.context = "int x = \n";
  e.adopted = adopted;
  return e;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("forge_adoption_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) { return text::read_file(p); }

}  // namespace

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

TEST(Rfc3339, Parses) {
  EXPECT_EQ(parse_rfc3339("2024-01-01T00:00:00Z"), synthetic::kEpoch2024);
  EXPECT_EQ(parse_rfc3339("2024-01-01T00:00:00.250Z"), synthetic::kEpoch2024 + 250);
  EXPECT_EQ(parse_rfc3339("2024-01-01T02:00:00+02:00"), synthetic::kEpoch2024);
  EXPECT_EQ(parse_rfc3339("2023-12-31T19:00:00-05:00"), synthetic::kEpoch2024);
  EXPECT_FALSE(parse_rfc3339("2024-13-01T00:00:00Z"));
  EXPECT_FALSE(parse_rfc3339("2024-01-01 00:00:00"));
  EXPECT_FALSE(parse_rfc3339("yesterday"));
  EXPECT_EQ(utc_date(synthetic::kEpoch2024 - 1), "2023-12-31");
  EXPECT_EQ(utc_date(synthetic::kEpoch2024 + 59 * synthetic::kDayMs), "2024-02-29");
}

TEST(Ingest, WellFormedLinesSortedByTime) {
  std::vector<CompletionLogEntry> es = {entry(synthetic::kEpoch2024 + 3000, "a", "a", true),
                                        entry(synthetic::kEpoch2024 + 1000, "b", "b", false),
                                        entry(synthetic::kEpoch2024 + 2000, "c", "c", true)};
  const auto r = parse_logs(synthetic::to_jsonl(es));
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.malformed, 0u);
  EXPECT_EQ(r.entries[0].prediction, "b");
  EXPECT_EQ(r.entries[2].prediction, "a");
}

TEST(Ingest, MalformedLinesCounted) {
  const std::string body =
      "{\"ts\":\"2024-01-01T00:00:00Z\",\"trigger\":\"t\",\"lang\":\"c\",\"prediction\":\"p\",\"context\":\"c\","
      "\"reference\":\"r\",\"adopted\":true}\n"
      "{\"ts\":\"2024-01-01T00:00:00Z\",\"trigger\":\"t\",\"lang\":\"c\",\"prediction\":\"p\",\"context\":\"c\","
      "\"adopted\":true}\n"
      "{\"ts\":\"bad\",\"trigger\":\"t\",\"lang\":\"c\",\"prediction\":\"p\",\"context\":\"c\",\"reference\":\"r\","
      "\"adopted\":true}\n"
      "{\"ts\":\"2024-01-01T00:00:00Z\",\"trigger\":\"t\",\"lang\":\"c\",\"prediction\":\"p\",\"context\":\"c\","
      "\"reference\":\"  \",\"adopted\":true}\n"
      "{\"ts\":\"2024-01-01T00:00:00Z\",\"trigger\":\"t\",\"lang\":\"c\",\"prediction\":\"p\",\"context\":\"c\","
      "\"reference\":\"r\",\"adopted\":\"yes\"}\n"
      "not json\n"
      "\n";
  const auto r = parse_logs(body);
  EXPECT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.lines, 6u);
  EXPECT_EQ(r.malformed, 5u);
}

TEST(Ingest, MissingFileIsUnreadable) {
  try {
    ingest_logs("/nonexistent/forge/logs.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnreadableSource);
  }
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

TEST(Preprocess, DuplicatesKeepEarliest) {
  auto late = entry(synthetic::kEpoch2024 + 5, "p", "r", true);
  auto early = entry(synthetic::kEpoch2024, "p", "r", false);
  const auto out = preprocess({late, early});
  ASSERT_EQ(out.entries.size(), 1u);
  EXPECT_FALSE(out.entries[0].adopted);
  EXPECT_EQ(out.report.duplicates_removed, 1u);
  EXPECT_EQ(out.report.input, 2u);
  EXPECT_EQ(out.report.kept, 1u);
}

TEST(Preprocess, ContradictionProxy) {
  auto hit = entry(synthetic::kEpoch2024, "y + 1;", "return y + 1;", true);
  hit.trigger_point = "y = ";
  hit.context = "int f(int y) {\n  y = \n  return y + 1;\n}\n";
  EXPECT_TRUE(contradicts_context(hit));
  auto clean = hit;
  clean.context = "int f(int y) {\n  y = \n  return 0;\n}\n";
  EXPECT_FALSE(contradicts_context(clean));
  auto absent = hit;
  absent.trigger_point = "z = ";
  EXPECT_FALSE(contradicts_context(absent));

  const auto out = preprocess({hit, clean});
  EXPECT_EQ(out.report.contradictions_removed, 1u);
  EXPECT_EQ(out.entries.size(), 1u);
  EXPECT_EQ(preprocess({hit, clean}, PreprocessOptions{false}).entries.size(), 2u);
}

// ---------------------------------------------------------------------------
// buckets
// ---------------------------------------------------------------------------

TEST(Buckets, AllExactGoToOneBucket) {
  std::vector<CompletionLogEntry> es;
  for (int i = 0; i < 10; ++i) es.push_back(entry(i, "same" + std::to_string(i), "same" + std::to_string(i), i < 3));
  const auto b = bucket_by_metric(score_entries(es), BucketMetric::ROUGE_LCP);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].label, "exact");
  EXPECT_EQ(b[0].count, 10u);
  EXPECT_DOUBLE_EQ(b[0].adoption_rate, 0.3);
}

TEST(Buckets, LcpBucketsAreIntegers) {
  const std::vector<CompletionLogEntry> es = {entry(0, "xyz", "abc", false), entry(1, "ayz", "abc", true),
                                              entry(2, "abz", "abc", true), entry(3, "abq", "abc", false)};
  const auto b = bucket_by_metric(score_entries(es), BucketMetric::LCP);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].key, 0);
  EXPECT_EQ(b[2].key, 2);
  EXPECT_EQ(b[2].count, 2u);
  EXPECT_DOUBLE_EQ(b[2].adoption_rate, 0.5);
}

TEST(Buckets, RougeBinPlacement) {
  // |R| = 20: lcp 13 -> 0.65, exactly on a bin edge
  const std::string ref = "abcdefghijklmnopqrst";
  const std::vector<CompletionLogEntry> es = {
      entry(0, ref.substr(0, 13) + "#", ref, false),  // 0.65 -> [0.65,0.70)
      entry(1, ref.substr(0, 12) + "#", ref, false),  // 0.60 -> [0.60,0.65)
      entry(2, ref + "12345", ref, false),            // 1.25 -> (1.00,1.25]
      entry(3, ref + "123456", ref, false),           // 1.30 -> (1.25,1.50]
      entry(4, ref + std::string(21, 'z'), ref, true),  // 2.05 -> >2.00
      entry(5, ref + std::string(20, 'z'), ref, true),  // 2.00 -> (1.75,2.00]
  };
  const auto b = bucket_by_metric(score_entries(es), BucketMetric::ROUGE_LCP);
  std::vector<std::string> labels;
  for (const auto& x : b) labels.push_back(x.label);
  EXPECT_EQ(labels, (std::vector<std::string>{"[0.60,0.65)", "[0.65,0.70)", "(1.00,1.25]", "(1.25,1.50]",
                                              "(1.75,2.00]", ">2.00"}));
}

TEST(Buckets, MonotoneAdoptionWithinBinomialTolerance) {
  const auto es = synthetic::monotone_log(20000, 10, 0.1, 5);
  const auto scored = score_entries(es, 4);
  const auto b = bucket_by_metric(scored, BucketMetric::LCP);
  ASSERT_EQ(b.size(), 11u);
  std::size_t total = 0;
  std::vector<double> keys, rates;
  for (const auto& x : b) {
    const double p = std::min(1.0, 0.1 * static_cast<double>(x.key));
    const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(x.count));
    EXPECT_NEAR(x.adoption_rate, p, 4 * sigma + 1e-12) << "lcp " << x.key;
    EXPECT_LE(x.adopted_count, x.count);
    total += x.count;
    keys.push_back(static_cast<double>(x.key));
    rates.push_back(x.adoption_rate);
  }
  EXPECT_EQ(total, scored.size());
  const auto corr = stats::pearson(keys, rates);
  EXPECT_GT(corr.r, 0.0);
  EXPECT_LT(corr.p_value, 0.05);
}

TEST(Buckets, Contract) {
  try {
    bucket_by_metric({}, BucketMetric::LCP);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  ScoredEntry empty_ref;
  try {
    bucket_by_metric({empty_ref}, BucketMetric::ROUGE_LCP);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyReference);
  }
  BinSpec odd;
  odd.width = 0.3;
  EXPECT_FALSE(odd.violations().empty());
}

// ---------------------------------------------------------------------------
// daily suite
// ---------------------------------------------------------------------------

TEST(DailySuite, LcpDrivesAdoption) {
  const auto suite = daily_correlation_suite(score_entries(synthetic::daily_study(), 4));
  EXPECT_EQ(suite.days.size(), 30u);
  EXPECT_EQ(strongest_metric(suite), "LCP");
  double lcp_r = 0, rouge_lcp_r = 0, rouge_l_r = 0;
  for (const auto& c : suite.correlations) {
    ASSERT_TRUE(c.result) << c.metric;
    if (c.metric == "LCP") {
      lcp_r = c.result->r;
      EXPECT_LT(c.result->p_value, 0.05);
    }
    if (c.metric == "ROUGE-LCP") rouge_lcp_r = c.result->r;
    if (c.metric == "ROUGE-L") rouge_l_r = c.result->r;
  }
  EXPECT_GT(lcp_r, 0.0);
  EXPECT_GT(rouge_lcp_r, rouge_l_r);
  ASSERT_EQ(suite.heatmap.size(), 6u);
  EXPECT_NEAR(*suite.heatmap[0][0], 1.0, 1e-12);
  EXPECT_EQ(suite.heatmap[0][5], suite.correlations[0].result->r);
}

TEST(DailySuite, SmallDayExcluded) {
  auto es = synthetic::daily_study({.days = 4, .min_per_day = 120, .extra_per_day = 10});
  const Timestamp day5 = synthetic::kEpoch2024 + 4 * synthetic::kDayMs;
  for (int i = 0; i < 50; ++i) es.push_back(entry(day5 + i, "p" + std::to_string(i), "r", i % 2));
  const auto suite = daily_correlation_suite(score_entries(es));
  EXPECT_EQ(suite.days.size(), 4u);
  EXPECT_EQ(suite.excluded, (std::vector<std::string>{"2024-01-05"}));
}

TEST(DailySuite, ConstantAdoptionIsDegeneratePerMetric) {
  std::vector<CompletionLogEntry> es;
  SplitMix64 rng(1);
  for (int d = 0; d < 3; ++d)
    for (int i = 0; i < 100; ++i) {
      const std::string ref = synthetic::random_text(rng, 10);
      es.push_back(entry(synthetic::kEpoch2024 + d * synthetic::kDayMs + i,
                         synthetic::prediction_with_lcp(rng, ref, rng.below(10), 2), ref, true));
    }
  const auto suite = daily_correlation_suite(score_entries(es));
  for (const auto& c : suite.correlations) {
    EXPECT_FALSE(c.result.has_value());
    EXPECT_NE(c.error.find("DegenerateInput"), std::string::npos) << c.error;
  }
  EXPECT_FALSE(strongest_metric(suite));
}

TEST(DailySuite, TooFewDays) {
  const auto es = synthetic::daily_study({.days = 2});
  try {
    daily_correlation_suite(score_entries(es));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientDays);
  }
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

TEST(Reports, EmptyInputGivesHeadersOnly) {
  const auto dir = scratch("empty");
  const auto report = analyze(IngestResult{}, 100, BinSpec{});
  emit_reports(report, dir);
  EXPECT_EQ(slurp(dir / "lcp_distribution.csv"), "lcp,count,adopted,adoption_rate\n");
  EXPECT_EQ(slurp(dir / "rouge_lcp_distribution.csv"), "bin,lo,hi,count,adopted,adoption_rate\n");
  EXPECT_EQ(slurp(dir / "daily_metrics.csv"), "date,n,lcp,rouge_lcp,lcs,rouge_l,em_rate,adoption_rate\n");
  EXPECT_EQ(slurp(dir / "correlation_heatmap.csv"), "metric,LCP,ROUGE-LCP,LCS,ROUGE-L,EM,adoption_rate\n");
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["n_entries"], 0);
  EXPECT_TRUE(summary.contains("daily_error"));
  EXPECT_TRUE(std::filesystem::exists(dir / "README.md"));
}

TEST(Reports, DeterministicAndSummarised) {
  auto es = synthetic::daily_study({.days = 5, .min_per_day = 100, .extra_per_day = 20});
  es.push_back(es.front());  // one duplicate
  const std::string body = synthetic::to_jsonl(es) + "garbage\n";
  const auto a = scratch("a"), b = scratch("b");
  const auto ingest = parse_logs(body);
  emit_reports(analyze(ingest, 100, BinSpec{}, {}, 1), a);
  emit_reports(analyze(parse_logs(body), 100, BinSpec{}, {}, 4), b);
  for (const char* f : {"lcp_distribution.csv", "rouge_lcp_distribution.csv", "daily_metrics.csv",
                        "correlation_heatmap.csv", "summary.json", "README.md"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(summary["malformed"], 1);
  EXPECT_EQ(summary["duplicates_removed"], 1);
  EXPECT_EQ(summary["n_entries"], es.size() - 1);
  EXPECT_EQ(summary["days_used"], 5);
  EXPECT_EQ(summary["correlations"].size(), 5u);
}
