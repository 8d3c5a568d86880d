#pragma once

// Completion-log ingestion, preprocessing, bucketed adoption rates and daily
// metric/adoption correlation.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "forge/csv.hpp"
#include "forge/error.hpp"
#include "forge/metrics.hpp"
#include "forge/parallel.hpp"
#include "forge/stats.hpp"
#include "forge/text.hpp"
#include "json.hpp"

namespace forge::adoption {

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

struct CompletionLogEntry {
  Timestamp timestamp = 0;
  std::string trigger_point;
  std::string language;
  std::string prediction;
  std::string context;
  std::string reference;
  bool adopted = false;
};

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return std::from_chars(s.data() + pos, s.data() + pos + len, out).ec == std::errc{};
}

}  // namespace detail

/// RFC 3339 date-time ("2024-03-01T12:00:00.250+08:00" or "...Z").
inline std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  int y, mo, d, h, mi, sec;
  if (!detail::read_int(s, 0, 4, y) || s.size() < 19 || s[4] != '-' || !detail::read_int(s, 5, 2, mo) ||
      s[7] != '-' || !detail::read_int(s, 8, 2, d) || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
      !detail::read_int(s, 11, 2, h) || s[13] != ':' || !detail::read_int(s, 14, 2, mi) || s[16] != ':' ||
      !detail::read_int(s, 17, 2, sec))
    return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start) return std::nullopt;
    std::int64_t scale = 100;
    for (std::size_t i = start; i < pos && scale > 0; ++i, scale /= 10) millis += (s[i] - '0') * scale;
  }
  std::int64_t offset_min = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int oh, om;
    if (!detail::read_int(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !detail::read_int(s, pos + 4, 2, om) || oh > 23 || om > 59)
      return std::nullopt;
    offset_min = (s[pos] == '-' ? -1 : 1) * (oh * 60 + om);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t seconds = days * 86400 + h * 3600 + mi * 60 + sec - offset_min * 60;
  return seconds * 1000 + millis;
}

/// UTC calendar date, "YYYY-MM-DD".
inline std::string utc_date(Timestamp ts) {
  using namespace std::chrono;
  const auto day_index = static_cast<std::int64_t>(std::floor(static_cast<double>(ts) / 86'400'000.0));
  const year_month_day ymd{sys_days{days{day_index}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

struct IngestResult {
  std::vector<CompletionLogEntry> entries;
  std::size_t lines = 0;
  std::size_t malformed = 0;
};

/// One record per line. Lines that are not objects, lack a field, carry a
/// wrong type, a bad timestamp, or an empty prediction/reference are counted
/// and skipped. Output is stably sorted by timestamp.
inline IngestResult parse_logs(std::string_view body) {
  IngestResult out;
  for (std::string_view line : text::split_lines(body)) {
    if (text::trim(line).empty()) continue;
    ++out.lines;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    auto str = [&](const char* key) -> const std::string* {
      if (!j.is_object()) return nullptr;
      const auto it = j.find(key);
      return it != j.end() && it->is_string() ? it->get_ptr<const std::string*>() : nullptr;
    };
    const auto* ts = str("ts");
    const auto* trigger = str("trigger");
    const auto* lang = str("lang");
    const auto* prediction = str("prediction");
    const auto* context = str("context");
    const auto* reference = str("reference");
    const bool has_adopted = j.is_object() && j.contains("adopted") && j["adopted"].is_boolean();
    std::optional<Timestamp> when = ts ? parse_rfc3339(*ts) : std::nullopt;
    if (!when || !trigger || !lang || !prediction || !context || !reference || !has_adopted ||
        text::rtrim(*prediction).empty() || text::rtrim(*reference).empty()) {
      ++out.malformed;
      continue;
    }
    out.entries.push_back({*when, *trigger, *lang, *prediction, *context, *reference, j["adopted"].get<bool>()});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const CompletionLogEntry& a, const CompletionLogEntry& b) { return a.timestamp < b.timestamp; });
  return out;
}

/// Throws UnreadableSource when the file cannot be read.
inline IngestResult ingest_logs(const std::filesystem::path& source) { return parse_logs(text::read_file(source)); }

struct PreprocessOptions {
  bool contradiction_proxy = true;
};

struct PreprocessReport {
  std::size_t input = 0;
  std::size_t duplicates_removed = 0;
  std::size_t contradictions_removed = 0;
  std::size_t kept = 0;
};

/// Heuristic for "context contradicts the reference": the line right after
/// the trigger point inside the context already equals the reference. The
/// trigger point is located at the end of its first occurrence in the
/// context; when it does not occur, the rule does not fire.
inline bool contradicts_context(const CompletionLogEntry& e) {
  const auto ref = text::trim(e.reference);
  if (ref.empty() || e.trigger_point.empty()) return false;
  const std::size_t at = e.context.find(e.trigger_point);
  if (at == std::string::npos) return false;
  const std::size_t cursor = at + e.trigger_point.size();
  const std::size_t eol = e.context.find('\n', cursor);
  if (eol == std::string::npos) return false;
  std::size_t next_end = e.context.find('\n', eol + 1);
  if (next_end == std::string::npos) next_end = e.context.size();
  return text::trim(std::string_view(e.context).substr(eol + 1, next_end - eol - 1)) == ref;
}

struct PreprocessResult {
  std::vector<CompletionLogEntry> entries;
  PreprocessReport report;
};

/// Drops exact duplicates of (context, prediction, reference), keeping the
/// earliest, then entries tripping the contradiction heuristic.
inline PreprocessResult preprocess(std::vector<CompletionLogEntry> entries, const PreprocessOptions& opts = {}) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const CompletionLogEntry& a, const CompletionLogEntry& b) { return a.timestamp < b.timestamp; });
  PreprocessResult out;
  out.report.input = entries.size();
  std::set<std::tuple<std::string_view, std::string_view, std::string_view>> seen;
  for (auto& e : entries) {
    if (!seen.emplace(e.context, e.prediction, e.reference).second) {
      ++out.report.duplicates_removed;
      continue;
    }
    if (opts.contradiction_proxy && contradicts_context(e)) {
      ++out.report.contradictions_removed;
      continue;
    }
    out.entries.push_back(e);  // copy: `seen` views into `entries`
  }
  out.report.kept = out.entries.size();
  return out;
}

struct ScoredEntry {
  Timestamp timestamp = 0;
  bool adopted = false;
  metrics::MetricValue m;
};

inline std::vector<ScoredEntry> score_entries(const std::vector<CompletionLogEntry>& entries, std::size_t jobs = 1) {
  std::vector<ScoredEntry> out(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t, std::size_t i) {
    out[i] = {entries[i].timestamp, entries[i].adopted, metrics::score(entries[i].prediction, entries[i].reference)};
  });
  return out;
}

enum class BucketMetric { LCP, ROUGE_LCP };

/// ROUGE-LCP binning: fixed-width bins over [0,1), an exact-match bucket at
/// 1, overflow bins of overflow_width over (1, overflow_max], and one bin
/// above overflow_max. Both widths must divide 1 evenly.
struct BinSpec {
  double width = 0.05;
  double overflow_width = 0.25;
  double overflow_max = 2.0;

  std::size_t bins() const { return static_cast<std::size_t>(std::llround(1.0 / width)); }
  std::size_t overflow_bins_per_unit() const { return static_cast<std::size_t>(std::llround(1.0 / overflow_width)); }
  std::size_t overflow_bins() const {
    return static_cast<std::size_t>(std::llround((overflow_max - 1.0) / overflow_width));
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto divides_one = [](double w) {
      if (!(w > 0.0 && w <= 1.0)) return false;
      const double k = std::round(1.0 / w);
      return std::abs(k * w - 1.0) < 1e-9;
    };
    if (!divides_one(width)) out.push_back("adoption.bin_width must be in (0,1] and divide 1 evenly");
    if (!divides_one(overflow_width)) out.push_back("adoption.overflow_width must be in (0,1] and divide 1 evenly");
    if (!(overflow_max > 1.0)) out.push_back("adoption.overflow_max must exceed 1");
    else if (divides_one(overflow_width)) {
      const double k = (overflow_max - 1.0) / overflow_width;
      if (std::abs(k - std::round(k)) > 1e-9) out.push_back("adoption.overflow_max must be 1 + a multiple of overflow_width");
    }
    return out;
  }
};

struct BucketedStats {
  std::string label;
  std::int64_t key = 0;  // LCP value, or ordinal bin index for ROUGE-LCP
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::size_t adopted_count = 0;
  double adoption_rate = 0.0;
};

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// Ordinal bin for a ROUGE-LCP value, computed from integer lengths so that
/// bin edges are exact.
inline std::size_t rouge_bin(const metrics::MetricValue& m, const BinSpec& spec) {
  const std::size_t nb = spec.bins();
  if (m.em) return nb;
  if (m.lcp < m.ref_len) return m.lcp * nb / m.ref_len;
  const std::size_t per_unit = spec.overflow_bins_per_unit();
  const std::size_t excess = m.s_ext_len;
  const std::size_t j = (excess * per_unit + m.ref_len - 1) / m.ref_len;  // ceil, >= 1
  return nb + std::min(j, spec.overflow_bins() + 1);
}

inline BucketedStats rouge_bucket_shape(std::size_t bin, const BinSpec& spec) {
  const std::size_t nb = spec.bins();
  BucketedStats b;
  b.key = static_cast<std::int64_t>(bin);
  if (bin < nb) {
    b.lo = static_cast<double>(bin) / static_cast<double>(nb);
    b.hi = static_cast<double>(bin + 1) / static_cast<double>(nb);
    b.label = "[" + fixed2(b.lo) + "," + fixed2(b.hi) + ")";
  } else if (bin == nb) {
    b.lo = b.hi = 1.0;
    b.label = "exact";
  } else if (bin - nb <= spec.overflow_bins()) {
    const double per = static_cast<double>(spec.overflow_bins_per_unit());
    b.lo = 1.0 + static_cast<double>(bin - nb - 1) / per;
    b.hi = 1.0 + static_cast<double>(bin - nb) / per;
    b.label = "(" + fixed2(b.lo) + "," + fixed2(b.hi) + "]";
  } else {
    b.lo = spec.overflow_max;
    b.hi = std::numeric_limits<double>::infinity();
    b.label = ">" + fixed2(spec.overflow_max);
  }
  return b;
}

}  // namespace detail

/// Non-empty buckets in ascending order. LCP buckets are integer valued.
inline std::vector<BucketedStats> bucket_by_metric(const std::vector<ScoredEntry>& entries, BucketMetric metric,
                                                   const BinSpec& spec = {}) {
  if (entries.empty()) throw Error(ErrorCode::EmptyInput, "no entries to bucket");
  if (auto v = spec.violations(); !v.empty()) throw ConfigError(std::move(v));
  std::map<std::size_t, BucketedStats> buckets;
  for (const auto& e : entries) {
    std::size_t key;
    if (metric == BucketMetric::LCP) {
      key = e.m.lcp;
    } else {
      if (e.m.ref_len == 0) throw Error(ErrorCode::EmptyReference, "ROUGE-LCP bucket needs |R| > 0");
      key = detail::rouge_bin(e.m, spec);
    }
    auto [it, inserted] = buckets.try_emplace(key);
    if (inserted) {
      if (metric == BucketMetric::LCP) {
        it->second.key = static_cast<std::int64_t>(key);
        it->second.lo = it->second.hi = static_cast<double>(key);
        it->second.label = std::to_string(key);
      } else {
        it->second = detail::rouge_bucket_shape(key, spec);
      }
    }
    ++it->second.count;
    it->second.adopted_count += e.adopted;
  }
  std::vector<BucketedStats> out;
  for (auto& [key, b] : buckets) {
    b.adoption_rate = static_cast<double>(b.adopted_count) / static_cast<double>(b.count);
    out.push_back(std::move(b));
  }
  return out;
}

inline constexpr std::array<std::string_view, 5> kDailyMetrics = {"LCP", "ROUGE-LCP", "LCS", "ROUGE-L", "EM"};

struct DayStats {
  std::string date;
  std::size_t n = 0;
  std::array<double, 5> means{};  // in kDailyMetrics order; EM is a rate
  double adoption_rate = 0.0;
};

struct MetricCorrelation {
  std::string metric;
  std::optional<stats::CorrelationResult> result;
  std::string error;  // set when the result is degenerate
};

struct DailySuite {
  std::vector<DayStats> days;           // qualifying days, ascending
  std::vector<std::string> excluded;    // days below min_daily
  std::vector<MetricCorrelation> correlations;
  std::vector<std::string> heatmap_labels;               // metrics then "adoption_rate"
  std::vector<std::vector<std::optional<double>>> heatmap;  // pairwise r, empty when degenerate
};

/// Per-UTC-day means of each metric and the day's adoption rate; days with
/// fewer than min_daily entries are excluded. Pearson r of each metric
/// against adoption is computed over the remaining days.
inline DailySuite daily_correlation_suite(const std::vector<ScoredEntry>& entries, std::size_t min_daily = 100) {
  std::map<std::string, std::vector<const ScoredEntry*>> by_day;
  for (const auto& e : entries) by_day[utc_date(e.timestamp)].push_back(&e);
  DailySuite suite;
  for (const auto& [date, list] : by_day) {
    if (list.size() < min_daily) {
      suite.excluded.push_back(date);
      continue;
    }
    DayStats d;
    d.date = date;
    d.n = list.size();
    std::size_t adopted = 0;
    for (const auto* e : list) {
      d.means[0] += static_cast<double>(e->m.lcp);
      d.means[1] += e->m.rouge_lcp;
      d.means[2] += static_cast<double>(e->m.lcs);
      d.means[3] += e->m.rouge_l;
      d.means[4] += e->m.em ? 1.0 : 0.0;
      adopted += e->adopted;
    }
    for (double& m : d.means) m /= static_cast<double>(d.n);
    d.adoption_rate = static_cast<double>(adopted) / static_cast<double>(d.n);
    suite.days.push_back(std::move(d));
  }
  if (suite.days.size() < 3)
    throw Error(ErrorCode::InsufficientDays, "need >= 3 days with at least " + std::to_string(min_daily) +
                                                 " completions, found " + std::to_string(suite.days.size()));

  std::vector<std::vector<double>> series(kDailyMetrics.size() + 1);
  for (const auto& d : suite.days) {
    for (std::size_t m = 0; m < kDailyMetrics.size(); ++m) series[m].push_back(d.means[m]);
    series.back().push_back(d.adoption_rate);
  }
  auto correlate = [&](std::size_t a, std::size_t b, std::string name) -> MetricCorrelation {
    MetricCorrelation mc;
    mc.metric = name;
    try {
      mc.result = stats::pearson(series[a], series[b], std::move(name));
    } catch (const Error& e) {
      mc.error = e.what();
    }
    return mc;
  };
  for (std::size_t m = 0; m < kDailyMetrics.size(); ++m)
    suite.correlations.push_back(correlate(m, kDailyMetrics.size(), std::string(kDailyMetrics[m])));

  for (auto name : kDailyMetrics) suite.heatmap_labels.emplace_back(name);
  suite.heatmap_labels.emplace_back("adoption_rate");
  const std::size_t k = series.size();
  suite.heatmap.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      auto mc = correlate(a, b, {});
      if (mc.result) suite.heatmap[a][b] = mc.result->r;
    }
  return suite;
}

/// Metric with the largest |r| among non-degenerate correlations.
inline std::optional<std::string> strongest_metric(const DailySuite& suite) {
  const MetricCorrelation* best = nullptr;
  for (const auto& c : suite.correlations)
    if (c.result && (!best || std::abs(c.result->r) > std::abs(best->result->r))) best = &c;
  if (!best) return std::nullopt;
  return best->metric;
}

struct AdoptionReport {
  std::size_t lines = 0;
  std::size_t malformed = 0;
  PreprocessReport preprocess;
  std::vector<BucketedStats> lcp_buckets;
  std::vector<BucketedStats> rouge_buckets;
  std::optional<DailySuite> daily;
  std::string daily_error;  // why the daily suite is absent
  std::size_t min_daily = 100;
  BinSpec bins;
};

/// ingest -> preprocess -> score -> bucket -> daily suite. Missing days or
/// an empty log do not abort; they leave the corresponding tables empty.
inline AdoptionReport analyze(const IngestResult& ingest, std::size_t min_daily, const BinSpec& bins,
                              const PreprocessOptions& popts = {}, std::size_t jobs = 1) {
  AdoptionReport report;
  report.lines = ingest.lines;
  report.malformed = ingest.malformed;
  report.min_daily = min_daily;
  report.bins = bins;
  auto pre = preprocess(ingest.entries, popts);
  report.preprocess = pre.report;
  const auto scored = score_entries(pre.entries, jobs);
  if (!scored.empty()) {
    report.lcp_buckets = bucket_by_metric(scored, BucketMetric::LCP, bins);
    report.rouge_buckets = bucket_by_metric(scored, BucketMetric::ROUGE_LCP, bins);
  }
  try {
    report.daily = daily_correlation_suite(scored, min_daily);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientDays) throw;
    report.daily_error = e.what();
  }
  return report;
}

namespace detail {

inline std::string buckets_csv(const std::vector<BucketedStats>& buckets, bool interval) {
  std::string out;
  csv::RowWriter w(out);
  if (interval) {
    w.field("bin").field("lo").field("hi");
  } else {
    w.field("lcp");
  }
  w.field("count").field("adopted").field("adoption_rate").end();
  for (const auto& b : buckets) {
    if (interval) {
      w.field(b.label).field(b.lo);
      if (std::isinf(b.hi)) w.field(std::string_view("inf"));
      else w.field(b.hi);
    } else {
      w.field(static_cast<std::uint64_t>(b.key));
    }
    w.field(static_cast<std::uint64_t>(b.count)).field(static_cast<std::uint64_t>(b.adopted_count)).field(b.adoption_rate).end();
  }
  return out;
}

inline constexpr std::string_view kReportReadme = R"(# Adoption report

lcp_distribution.csv
  lcp            longest common prefix length in characters
  count          completions in the bucket
  adopted        completions accepted with Tab
  adoption_rate  adopted / count

rouge_lcp_distribution.csv
  bin            [lo,hi) partial-match bin, "exact" for S = R, (lo,hi] extension bin, >max overflow
  lo, hi         bin edges ("inf" for the open top bin)
  count, adopted, adoption_rate  as above

daily_metrics.csv
  date           UTC calendar day
  n              completions that day (days under min_daily are omitted)
  lcp, rouge_lcp, lcs, rouge_l  daily means
  em_rate        fraction of exact matches
  adoption_rate  fraction adopted

correlation_heatmap.csv
  Pearson r between every pair of daily series; empty where a series is constant.

summary.json
  n_entries, malformed, removal tallies, per-metric r and p against adoption.
)";

}  // namespace detail

/// Writes the report files into out_dir. Throws IoFailure.
inline void emit_reports(const AdoptionReport& report, const std::filesystem::path& out_dir) {
  text::write_file(out_dir / "lcp_distribution.csv", detail::buckets_csv(report.lcp_buckets, false));
  text::write_file(out_dir / "rouge_lcp_distribution.csv", detail::buckets_csv(report.rouge_buckets, true));

  std::string daily_body, heat_body;
  csv::RowWriter daily(daily_body);
  daily.field("date").field("n").field("lcp").field("rouge_lcp").field("lcs").field("rouge_l").field("em_rate")
      .field("adoption_rate").end();
  csv::RowWriter heat(heat_body);
  heat.field("metric");
  for (auto name : kDailyMetrics) heat.field(name);
  heat.field("adoption_rate").end();
  nlohmann::ordered_json correlations = nlohmann::ordered_json::array();
  if (report.daily) {
    for (const auto& d : report.daily->days) {
      daily.field(d.date).field(static_cast<std::uint64_t>(d.n));
      for (double m : d.means) daily.field(m);
      daily.field(d.adoption_rate).end();
    }
    const auto& labels = report.daily->heatmap_labels;
    for (std::size_t a = 0; a < labels.size(); ++a) {
      heat.field(labels[a]);
      for (const auto& cell : report.daily->heatmap[a]) {
        if (cell) heat.field(*cell);
        else heat.field(std::string_view{});
      }
      heat.end();
    }
    for (const auto& c : report.daily->correlations) {
      nlohmann::ordered_json j;
      j["metric"] = c.metric;
      if (c.result) {
        j["r"] = c.result->r;
        j["p_value"] = c.result->p_value;
        j["n_points"] = c.result->n_points;
      } else {
        j["error"] = c.error;
      }
      correlations.push_back(std::move(j));
    }
  }
  text::write_file(out_dir / "daily_metrics.csv", daily_body);
  text::write_file(out_dir / "correlation_heatmap.csv", heat_body);

  nlohmann::ordered_json summary;
  summary["n_entries"] = report.preprocess.kept;
  summary["lines"] = report.lines;
  summary["malformed"] = report.malformed;
  summary["duplicates_removed"] = report.preprocess.duplicates_removed;
  summary["contradictions_removed"] = report.preprocess.contradictions_removed;
  summary["min_daily"] = report.min_daily;
  summary["bin_width"] = report.bins.width;
  summary["days_used"] = report.daily ? report.daily->days.size() : 0;
  summary["days_excluded"] = report.daily ? report.daily->excluded.size() : 0;
  summary["correlations"] = std::move(correlations);
  if (report.daily) {
    const auto best = strongest_metric(*report.daily);
    summary["strongest_metric"] = best ? nlohmann::ordered_json(*best) : nlohmann::ordered_json(nullptr);
  } else {
    summary["daily_error"] = report.daily_error;
  }
  text::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  text::write_file(out_dir / "README.md", detail::kReportReadme);
}

}  // namespace forge::adoption
