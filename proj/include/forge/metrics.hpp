#pragma once

// Completion metrics over Unicode scalar values, plus the conditional
// long-tail model for LCP lengths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge::metrics {

namespace detail {

inline std::u32string chars(std::string_view s) { return text::decode_utf8(s).code_points; }

inline std::size_t lcp(std::u32string_view s, std::u32string_view r) {
  const auto [a, b] = std::mismatch(s.begin(), s.end(), r.begin(), r.end());
  return static_cast<std::size_t>(a - s.begin());
}

inline std::size_t lcs(std::u32string_view s, std::u32string_view r) {
  if (s.size() < r.size()) std::swap(s, r);  // r is the shorter row
  std::vector<std::size_t> row(r.size() + 1, 0);
  for (char32_t cs : s) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= r.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = cs == r[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[r.size()];
}

}  // namespace detail

/// Length of the longest common prefix, in code points.
inline std::size_t lcp(std::string_view s, std::string_view r) {
  return detail::lcp(detail::chars(s), detail::chars(r));
}

struct RougeLcp {
  double value = 0.0;
  std::size_t lcp = 0;
  std::size_t s_ext_len = 0;  // |S| - |R| when R is a proper prefix of S
  bool exact = false;
};

/// Three-case ROUGE-LCP: lcp/|R| below a full match, 1 on equality, and
/// (lcp + |S_ext|)/|R| when the reference is a proper prefix of S.
inline RougeLcp rouge_lcp_detail(std::string_view s, std::string_view r) {
  const auto sc = detail::chars(s);
  const auto rc = detail::chars(r);
  if (rc.empty()) throw Error(ErrorCode::EmptyReference, "ROUGE-LCP needs a non-empty reference");
  RougeLcp out;
  out.lcp = detail::lcp(sc, rc);
  const double len = static_cast<double>(rc.size());
  if (out.lcp < rc.size()) {
    out.value = static_cast<double>(out.lcp) / len;
  } else if (sc.size() == rc.size()) {
    out.value = 1.0;
    out.exact = true;
  } else {
    out.s_ext_len = sc.size() - rc.size();
    out.value = static_cast<double>(out.lcp + out.s_ext_len) / len;
  }
  return out;
}

inline double rouge_lcp(std::string_view s, std::string_view r) { return rouge_lcp_detail(s, r).value; }

inline std::size_t lcs_len(std::string_view s, std::string_view r) {
  return detail::lcs(detail::chars(s), detail::chars(r));
}

enum class RougeLVariant { Recall, FMeasure };

/// LCS recall by default; F1 of LCS precision and recall when asked.
inline double rouge_l(std::string_view s, std::string_view r, RougeLVariant variant = RougeLVariant::Recall) {
  const auto sc = detail::chars(s);
  const auto rc = detail::chars(r);
  if (rc.empty()) throw Error(ErrorCode::EmptyReference, "ROUGE-L needs a non-empty reference");
  const double l = static_cast<double>(detail::lcs(sc, rc));
  const double recall = l / static_cast<double>(rc.size());
  if (variant == RougeLVariant::Recall) return recall;
  if (l == 0.0) return 0.0;
  const double precision = l / static_cast<double>(sc.size());
  return 2.0 * precision * recall / (precision + recall);
}

/// Equality after stripping trailing whitespace.
inline bool exact_match(std::string_view s, std::string_view r) { return text::rtrim(s) == text::rtrim(r); }

/// Token BLEU with uniform weights up to max_n and a brevity penalty.
/// Orders n >= 2 use add-one smoothing; unigram precision is unsmoothed, so
/// streams sharing no token score 0. Two empty streams score 1.
inline double bleu(std::string_view s, std::string_view r, std::size_t max_n = 4) {
  if (max_n == 0) throw Error(ErrorCode::InvalidArgument, "bleu max_n must be >= 1");
  const auto cand = text::token_views(s);
  const auto ref = text::token_views(r);
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::map<std::vector<std::string_view>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i)
      ++ref_counts[std::vector<std::string_view>(ref.begin() + i, ref.begin() + i + n)];
    std::map<std::vector<std::string_view>, std::size_t> cand_counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i + n <= cand.size(); ++i, ++total)
      ++cand_counts[std::vector<std::string_view>(cand.begin() + i, cand.begin() + i + n)];
    std::size_t matched = 0;
    for (const auto& [gram, c] : cand_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(c, it->second);
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(cand.size());
  const double rl = static_cast<double>(ref.size());
  const double bp = c > rl ? 1.0 : std::exp(1.0 - rl / c);
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

/// All metrics for one (prediction, reference) pair. Inputs are compared
/// after trailing-whitespace normalization, the same normalization EM uses,
/// so em holds exactly when rouge_lcp is 1. The ROUGE fields are NaN when the
/// normalized reference is empty.
struct MetricValue {
  std::size_t lcp = 0;
  double rouge_lcp = 0.0;
  std::size_t lcs = 0;
  double rouge_l = 0.0;
  bool em = false;
  double bleu = 0.0;
  std::size_t s_ext_len = 0;
  std::size_t ref_len = 0;   // |R| in code points
  std::size_t pred_len = 0;  // |S| in code points
};

inline MetricValue score(std::string_view prediction, std::string_view reference,
                         RougeLVariant variant = RougeLVariant::Recall) {
  const auto s = text::rtrim(prediction);
  const auto r = text::rtrim(reference);
  const auto sc = detail::chars(s);
  const auto rc = detail::chars(r);
  MetricValue v;
  v.pred_len = sc.size();
  v.ref_len = rc.size();
  v.lcp = detail::lcp(sc, rc);
  v.lcs = detail::lcs(sc, rc);
  v.em = sc == rc;
  v.bleu = bleu(s, r);
  if (rc.empty()) {
    v.rouge_lcp = v.rouge_l = std::nan("");
    return v;
  }
  const double len = static_cast<double>(rc.size());
  if (v.lcp == rc.size() && !v.em) v.s_ext_len = sc.size() - rc.size();
  v.rouge_lcp = v.em ? 1.0 : static_cast<double>(v.lcp + v.s_ext_len) / len;
  if (variant == RougeLVariant::Recall) {
    v.rouge_l = static_cast<double>(v.lcs) / len;
  } else {
    v.rouge_l = rouge_l(s, r, variant);
  }
  return v;
}

/// p_t = P(s_t = r_t | all earlier characters correct), t = 1..T.
class LcpDistributionModel {
 public:
  explicit LcpDistributionModel(std::vector<double> cond_probs) : p_(std::move(cond_probs)) {
    for (double p : p_)
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "conditional probability outside [0,1]");
  }

  std::span<const double> cond_probs() const noexcept { return p_; }
  std::size_t horizon() const noexcept { return p_.size(); }

 private:
  std::vector<double> p_;
};

/// P(n = k) = (p_1 ... p_k)(1 - p_{k+1}), for k < T.
inline double lcp_pmf(const LcpDistributionModel& model, std::size_t k) {
  const auto p = model.cond_probs();
  if (k >= p.size()) throw Error(ErrorCode::IndexOutOfRange, "k must be below the model horizon");
  double prod = 1.0;
  for (std::size_t t = 0; t < k; ++t) prod *= p[t];
  return prod * (1.0 - p[k]);
}

/// Probability that every one of the T characters matches.
inline double lcp_survival(const LcpDistributionModel& model) {
  double prod = 1.0;
  for (double p : model.cond_probs()) prod *= p;
  return prod;
}

}  // namespace forge::metrics
