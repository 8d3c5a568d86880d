#pragma once

// Corpus filtering, cleaning and two-stage (exact, then MinHash) deduplication.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "forge/csv.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/parallel.hpp"
#include "forge/text.hpp"
#include "json.hpp"

namespace forge::pipeline {

enum class Language { C, CPP, Other };

constexpr std::string_view to_string(Language lang) noexcept {
  switch (lang) {
    case Language::C: return "C";
    case Language::CPP: return "CPP";
    case Language::Other: return "Other";
  }
  return "Other";
}

inline std::optional<Language> language_from_string(std::string_view s) {
  if (s == "C") return Language::C;
  if (s == "CPP") return Language::CPP;
  if (s == "Other") return Language::Other;
  return std::nullopt;
}

// `.h` is parsed with the C++ grammar: it accepts nearly all C headers and
// C++ headers commonly use the same extension.
inline Language language_from_path(std::string_view path) {
  static const std::set<std::string, std::less<>> kC = {"c"};
  static const std::set<std::string, std::less<>> kCpp = {"cc", "cpp", "cxx", "c++", "h", "hh",
                                                          "hpp", "hxx", "h++", "ipp", "inl", "tpp"};
  const std::string ext = text::extension_of(path);
  if (kC.contains(ext)) return Language::C;
  if (kCpp.contains(ext)) return Language::CPP;
  return Language::Other;
}

struct RawFile {
  std::string path;
  std::string content;
  Language language = Language::Other;
  bool lossy = false;  // input bytes were not valid UTF-8 and were replaced

  static RawFile from_bytes(std::string path, std::string_view bytes) {
    if (path.empty()) throw Error(ErrorCode::InvalidArgument, "file path must be non-empty");
    auto sanitized = text::sanitize_utf8(bytes);
    RawFile f;
    f.language = language_from_path(path);
    f.path = std::move(path);
    f.content = std::move(sanitized.text);
    f.lossy = sanitized.lossy;
    return f;
  }
};

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

struct FilterConfig {
  std::size_t max_line_len = 1000;
  std::size_t min_line_len = 1;
  double max_avg_line_len = 100.0;
  double min_alnum_ratio = 0.25;
  std::size_t min_total_chars = 50;
  std::set<std::string> excluded_extensions = {"xml", "html", "json", "md"};

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (max_line_len == 0) out.push_back("pipeline.max_line_len must be positive");
    if (min_line_len > max_line_len) out.push_back("pipeline.min_line_len must not exceed max_line_len");
    if (!(max_avg_line_len > 0.0)) out.push_back("pipeline.max_avg_line_len must be positive");
    if (!(min_alnum_ratio >= 0.0 && min_alnum_ratio <= 1.0))
      out.push_back("pipeline.min_alnum_ratio must lie in [0, 1]");
    return out;
  }
};

enum class RejectReason { LineLength, AvgLineLength, AlnumRatio, TotalChars, FileType };

constexpr std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::LineLength: return "LineLength";
    case RejectReason::AvgLineLength: return "AvgLineLength";
    case RejectReason::AlnumRatio: return "AlnumRatio";
    case RejectReason::TotalChars: return "TotalChars";
    case RejectReason::FileType: return "FileType";
  }
  return "Unknown";
}

struct FilterVerdict {
  std::optional<RejectReason> reason;

  bool passed() const noexcept { return !reason.has_value(); }
  static FilterVerdict pass() { return {}; }
  static FilterVerdict reject(RejectReason r) { return {r}; }
  friend bool operator==(const FilterVerdict&, const FilterVerdict&) = default;
};

/// Rules run in a fixed order and the first failing rule is reported.
/// Line lengths are in code points; blank lines are exempt from the minimum
/// length so that ordinary spacing between blocks does not reject a file.
/// The alphanumeric ratio is taken over non-whitespace characters.
inline FilterVerdict filter_file(const RawFile& file, const FilterConfig& cfg) {
  const auto lines = text::split_lines(file.content);
  std::size_t total_line_chars = 0;
  for (std::string_view line : lines) {
    const std::size_t len = text::utf8_length(line);
    total_line_chars += len;
    if (len > cfg.max_line_len) return FilterVerdict::reject(RejectReason::LineLength);
    if (!text::rtrim(line).empty() && len < cfg.min_line_len)
      return FilterVerdict::reject(RejectReason::LineLength);
  }

  const double avg = lines.empty() ? 0.0 : static_cast<double>(total_line_chars) / lines.size();
  if (avg > cfg.max_avg_line_len) return FilterVerdict::reject(RejectReason::AvgLineLength);

  std::size_t visible = 0;
  std::size_t alnum = 0;
  for (unsigned char c : file.content) {
    if ((c & 0xC0) == 0x80 || text::is_space_byte(c)) continue;
    ++visible;
    if (std::isalnum(c)) ++alnum;
  }
  const double ratio = visible == 0 ? 0.0 : static_cast<double>(alnum) / visible;
  if (ratio < cfg.min_alnum_ratio) return FilterVerdict::reject(RejectReason::AlnumRatio);

  if (text::utf8_length(file.content) < cfg.min_total_chars)
    return FilterVerdict::reject(RejectReason::TotalChars);

  if (cfg.excluded_extensions.contains(text::extension_of(file.path)))
    return FilterVerdict::reject(RejectReason::FileType);

  return FilterVerdict::pass();
}

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

struct CleanOptions {
  bool strip_comments = false;
};

/// Removes // and /* */ comments from C/C++ source with LF line endings.
/// String, character and raw-string literals are honoured. A comment that
/// spans lines is replaced by its newlines only, an inline block comment by a
/// single space, so every surviving byte keeps its line number.
/// Throws ParseFailure on unterminated comments or literals.
inline std::string strip_comments(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  const std::size_t n = src.size();
  std::size_t i = 0;
  std::size_t line = 1;
  bool in_word = false;
  bool in_number = false;
  bool line_start = true;  // only whitespace seen since the last newline

  auto fail = [&](const char* what) {
    throw Error(ErrorCode::ParseFailure, std::string(what) + " at line " + std::to_string(line));
  };
  auto at = [&](std::size_t k) -> char { return k < n ? src[k] : '\0'; };

  // Copies a quoted literal starting at the opening quote.
  auto copy_quoted = [&](char quote) {
    const std::size_t start_line = line;
    out += src[i++];
    while (true) {
      if (i >= n) {
        line = start_line;
        fail(quote == '"' ? "unterminated string literal" : "unterminated character literal");
      }
      const char c = src[i];
      if (c == '\\' && i + 1 < n) {
        if (src[i + 1] == '\n') ++line;
        out += c;
        out += src[i + 1];
        i += 2;
        continue;
      }
      if (c == '\n') fail(quote == '"' ? "unterminated string literal" : "unterminated character literal");
      out += c;
      ++i;
      if (c == quote) return;
    }
  };

  while (i < n) {
    const char c = src[i];

    if (c == '\n') {
      out += c;
      ++i;
      ++line;
      in_word = in_number = false;
      line_start = true;
      continue;
    }

    // `#error` / `#warning` payloads are free text (apostrophes included).
    if (line_start && c == '#') {
      std::size_t j = i + 1;
      while (j < n && (src[j] == ' ' || src[j] == '\t')) ++j;
      std::size_t k = j;
      while (k < n && std::isalpha(static_cast<unsigned char>(src[k]))) ++k;
      const std::string_view directive = src.substr(j, k - j);
      if (directive == "error" || directive == "warning") {
        while (i < n && !(src[i] == '\n' && at(i - 1) != '\\')) {
          if (src[i] == '\n') ++line;
          out += src[i++];
        }
        continue;
      }
    }

    if (c == '/' && at(i + 1) == '/') {
      // Line comment, extended by backslash-newline splices.
      i += 2;
      while (i < n && src[i] != '\n') {
        if (src[i] == '\\' && at(i + 1) == '\n') {
          out += '\n';
          ++line;
          i += 2;
          continue;
        }
        ++i;
      }
      in_word = in_number = false;
      continue;
    }

    if (c == '/' && at(i + 1) == '*') {
      const std::size_t start_line = line;
      const std::size_t close = src.find("*/", i + 2);
      if (close == std::string_view::npos) fail("unterminated block comment");
      std::size_t newlines = 0;
      for (std::size_t k = i + 2; k < close; ++k) newlines += src[k] == '\n';
      if (newlines == 0) {
        out += ' ';
      } else {
        out.append(newlines, '\n');
        line = start_line + newlines;
      }
      i = close + 2;
      in_word = in_number = false;
      continue;
    }

    if (!text::is_space_byte(static_cast<unsigned char>(c))) line_start = false;

    if (c == '"') {
      // Raw string: optional encoding prefix immediately followed by R.
      if (in_word && !in_number && i > 0 && src[i - 1] == 'R') {
        std::size_t p = i - 1;
        std::size_t word_begin = p;
        while (word_begin > 0 && text::is_word_byte(static_cast<unsigned char>(src[word_begin - 1])))
          --word_begin;
        const std::string_view prefix = src.substr(word_begin, p - word_begin);
        if (prefix.empty() || prefix == "u8" || prefix == "u" || prefix == "U" || prefix == "L") {
          const std::size_t open = src.find('(', i + 1);
          if (open == std::string_view::npos || open - i - 1 > 16) fail("malformed raw string literal");
          const std::string terminator = ")" + std::string(src.substr(i + 1, open - i - 1)) + "\"";
          const std::size_t close = src.find(terminator, open + 1);
          if (close == std::string_view::npos) fail("unterminated raw string literal");
          const std::size_t end = close + terminator.size();
          for (std::size_t k = i; k < end; ++k) line += src[k] == '\n';
          out.append(src.substr(i, end - i));
          i = end;
          in_word = in_number = false;
          continue;
        }
      }
      copy_quoted('"');
      in_word = in_number = false;
      continue;
    }

    if (c == '\'') {
      if (in_number && text::is_word_byte(static_cast<unsigned char>(at(i + 1)))) {
        out += c;  // digit separator
        ++i;
        continue;
      }
      copy_quoted('\'');
      in_word = in_number = false;
      continue;
    }

    const auto uc = static_cast<unsigned char>(c);
    if (text::is_word_byte(uc) || (c == '.' && (in_number || std::isdigit(static_cast<unsigned char>(at(i + 1)))))) {
      if (!in_word) in_number = std::isdigit(uc) || c == '.';
      in_word = true;
    } else if (in_number && (c == '+' || c == '-') &&
               (at(i - 1) == 'e' || at(i - 1) == 'E' || at(i - 1) == 'p' || at(i - 1) == 'P')) {
      // exponent sign stays inside the number
    } else {
      in_word = in_number = false;
    }
    out += c;
    ++i;
  }
  return out;
}

/// CRLF / CR to LF, trailing whitespace removed per line, and runs of more
/// than two blank lines collapsed to one. A final newline is preserved.
inline std::string normalize_whitespace(std::string_view src) {
  std::string lf;
  lf.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == '\r') {
      lf += '\n';
      if (i + 1 < src.size() && src[i + 1] == '\n') ++i;
    } else {
      lf += src[i];
    }
  }

  const bool final_newline = !lf.empty() && lf.back() == '\n';
  std::vector<std::string_view> lines;
  {
    std::string_view rest(lf);
    if (final_newline) rest.remove_suffix(1);
    std::size_t start = 0;
    while (true) {
      const std::size_t nl = rest.find('\n', start);
      if (nl == std::string_view::npos) {
        lines.push_back(text::rtrim(rest.substr(start)));
        break;
      }
      lines.push_back(text::rtrim(rest.substr(start, nl - start)));
      start = nl + 1;
    }
    if (lf.empty()) lines.clear();
  }

  std::string out;
  out.reserve(lf.size());
  std::size_t i = 0;
  bool first = true;
  auto emit = [&](std::string_view line) {
    if (!first) out += '\n';
    out += line;
    first = false;
  };
  while (i < lines.size()) {
    if (!lines[i].empty()) {
      emit(lines[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < lines.size() && lines[j].empty()) ++j;
    const std::size_t run = j - i;
    for (std::size_t k = 0; k < (run > 2 ? 1 : run); ++k) emit("");
    i = j;
  }
  if (final_newline) out += '\n';
  return out;
}

/// Throws ParseFailure when comment stripping is requested on untokenizable input.
inline RawFile clean_file(RawFile file, const CleanOptions& opts) {
  std::string content = normalize_whitespace(file.content);
  if (opts.strip_comments) content = normalize_whitespace(strip_comments(content));
  file.content = std::move(content);
  return file;
}

// ---------------------------------------------------------------------------
// Deduplication
// ---------------------------------------------------------------------------

enum class Verdict { Keep, ExactDuplicate, FuzzyDuplicate };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Keep: return "Keep";
    case Verdict::ExactDuplicate: return "ExactDuplicateOf";
    case Verdict::FuzzyDuplicate: return "FuzzyDuplicateOf";
  }
  return "Keep";
}

struct DedupDecision {
  std::string file;
  Verdict verdict = Verdict::Keep;
  std::string duplicate_of;               // empty for Keep
  std::optional<double> similarity;       // fuzzy verdicts only

  static DedupDecision keep(std::string f) { return {std::move(f), Verdict::Keep, {}, std::nullopt}; }
  friend bool operator==(const DedupDecision&, const DedupDecision&) = default;
};

namespace detail {

inline std::vector<std::size_t> path_order(std::span<const RawFile> files) {
  std::vector<std::size_t> order(files.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return files[a].path < files[b].path; });
  return order;
}

}  // namespace detail

/// SHA-256 over content bytes. Within each identical-content group the
/// lexicographically smallest path is kept. Output is in path order.
inline std::vector<DedupDecision> exact_dedup(std::span<const RawFile> files) {
  std::vector<DedupDecision> out;
  out.reserve(files.size());
  std::map<std::string, std::string> first_by_hash;
  for (std::size_t idx : detail::path_order(files)) {
    const RawFile& f = files[idx];
    auto [it, inserted] = first_by_hash.emplace(sha256_hex(f.content), f.path);
    if (inserted) {
      out.push_back(DedupDecision::keep(f.path));
    } else {
      out.push_back({f.path, Verdict::ExactDuplicate, it->second, std::nullopt});
    }
  }
  return out;
}

struct MinHashConfig {
  std::size_t shingle_k = 5;
  std::size_t num_perms = 128;
  std::uint64_t seed = 0x5eed;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (shingle_k == 0) out.push_back("pipeline.shingle_k must be >= 1");
    if (num_perms == 0) out.push_back("pipeline.num_perms must be >= 1");
    return out;
  }
};

using Signature = std::vector<std::uint64_t>;

/// Hashes of every k-token shingle (tokens per text::tokenize). The result is
/// a set: sorted and unique. Throws EmptyContent with fewer than k tokens.
inline std::vector<std::uint64_t> shingle_set(std::string_view content, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "shingle_k must be >= 1");
  const auto tokens = text::token_views(content);
  if (tokens.size() < k)
    throw Error(ErrorCode::EmptyContent, "content has " + std::to_string(tokens.size()) +
                                             " tokens, fewer than shingle_k=" + std::to_string(k));
  std::vector<std::uint64_t> out;
  out.reserve(tokens.size() - k + 1);
  for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t j = 0; j < k; ++j) {
      h = fnv1a64(tokens[i + j], h);
      h = fnv1a64("\x1f", h);
    }
    out.push_back(mix64(h));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// One salt per permutation, derived from the seed; permutation i maps a
/// shingle hash x to mix64(x ^ salt_i).
inline std::vector<std::uint64_t> permutation_salts(const MinHashConfig& cfg) {
  std::vector<std::uint64_t> salts(cfg.num_perms);
  SplitMix64 rng(cfg.seed);
  for (auto& s : salts) s = rng.next();
  return salts;
}

inline Signature minhash_of_set(std::span<const std::uint64_t> shingles, const MinHashConfig& cfg) {
  if (cfg.num_perms == 0) throw Error(ErrorCode::InvalidArgument, "num_perms must be >= 1");
  const auto salts = permutation_salts(cfg);
  Signature sig(cfg.num_perms, std::numeric_limits<std::uint64_t>::max());
  for (std::uint64_t x : shingles) {
    for (std::size_t p = 0; p < salts.size(); ++p) sig[p] = std::min(sig[p], mix64(x ^ salts[p]));
  }
  return sig;
}

inline Signature minhash_signature(std::string_view content, const MinHashConfig& cfg) {
  return minhash_of_set(shingle_set(content, cfg.shingle_k), cfg);
}

/// Fraction of matching components.
inline double estimate_jaccard(const Signature& a, const Signature& b) {
  if (a.size() != b.size() || a.empty())
    throw Error(ErrorCode::InvalidArgument, "signatures must be non-empty and of equal length");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / a.size();
}

/// Compares each file (in path order) against every earlier kept file and
/// marks it a fuzzy duplicate of the most similar one when the estimate
/// reaches `threshold`. Files too short to shingle are kept.
// TODO: add LSH banding for candidate generation once corpora outgrow the
// quadratic scan; the verdicts must stay identical to this exhaustive pass.
inline std::vector<DedupDecision> fuzzy_dedup(std::span<const RawFile> files, const MinHashConfig& cfg,
                                              double threshold, std::size_t jobs = 1) {
  const auto order = detail::path_order(files);
  std::vector<std::optional<Signature>> sigs(files.size());
  parallel_for(order.size(), jobs, [&](std::size_t, std::size_t i) {
    try {
      sigs[order[i]] = minhash_signature(files[order[i]].content, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyContent) throw;
    }
  });

  std::vector<DedupDecision> out;
  out.reserve(files.size());
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const RawFile& f = files[idx];
    if (!sigs[idx]) {
      out.push_back(DedupDecision::keep(f.path));
      continue;
    }
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t k : kept) {
      const double sim = estimate_jaccard(*sigs[idx], *sigs[k]);
      if (sim > best) best = sim, best_idx = k;
    }
    if (best >= threshold) {
      out.push_back({f.path, Verdict::FuzzyDuplicate, files[best_idx].path, best});
    } else {
      out.push_back(DedupDecision::keep(f.path));
      kept.push_back(idx);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole-stage driver and I/O
// ---------------------------------------------------------------------------

struct PipelineOptions {
  FilterConfig filter;
  CleanOptions clean;
  MinHashConfig minhash;
  double fuzzy_threshold = 0.85;
  std::size_t jobs = 1;
};

struct FileReport {
  std::string path;
  std::string status;  // "Pass", a RejectReason name, or "CleanFailure"
};

struct PipelineResult {
  std::vector<RawFile> kept;  // path order
  std::vector<FileReport> filter_report;
  std::vector<DedupDecision> dedup;
  std::size_t files_seen = 0;
  std::size_t rejected = 0;
  std::size_t exact_duplicates = 0;
  std::size_t fuzzy_duplicates = 0;
  std::size_t lossy_inputs = 0;
};

/// filter -> clean -> exact dedup -> fuzzy dedup. Hashing is over cleaned
/// content. Output does not depend on input order.
inline PipelineResult run_pipeline(std::vector<RawFile> inputs, const PipelineOptions& opts) {
  PipelineResult result;
  result.files_seen = inputs.size();
  std::sort(inputs.begin(), inputs.end(), [](const RawFile& a, const RawFile& b) { return a.path < b.path; });

  std::vector<FileReport> reports(inputs.size());
  std::vector<std::optional<RawFile>> cleaned(inputs.size());
  parallel_for(inputs.size(), opts.jobs, [&](std::size_t, std::size_t i) {
    const RawFile& f = inputs[i];
    reports[i].path = f.path;
    const FilterVerdict v = filter_file(f, opts.filter);
    if (!v.passed()) {
      reports[i].status = std::string(to_string(*v.reason));
      return;
    }
    try {
      cleaned[i] = clean_file(f, opts.clean);
      reports[i].status = "Pass";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseFailure) throw;
      reports[i].status = "CleanFailure";
    }
  });

  std::vector<RawFile> survivors;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    result.lossy_inputs += inputs[i].lossy;
    if (cleaned[i]) {
      survivors.push_back(std::move(*cleaned[i]));
    } else {
      ++result.rejected;
    }
  }
  result.filter_report = std::move(reports);

  const auto exact = exact_dedup(survivors);
  std::map<std::string, const RawFile*> by_path;
  for (const auto& f : survivors) by_path[f.path] = &f;
  std::vector<RawFile> unique;
  for (const auto& d : exact) {
    if (d.verdict == Verdict::Keep) unique.push_back(*by_path.at(d.file));
  }
  const auto fuzzy = fuzzy_dedup(unique, opts.minhash, opts.fuzzy_threshold, opts.jobs);

  std::map<std::string, DedupDecision> merged;
  for (const auto& d : exact) merged[d.file] = d;
  for (const auto& d : fuzzy) merged[d.file] = d;
  for (auto& [path, d] : merged) {
    if (d.verdict == Verdict::ExactDuplicate) ++result.exact_duplicates;
    if (d.verdict == Verdict::FuzzyDuplicate) ++result.fuzzy_duplicates;
    if (d.verdict == Verdict::Keep) result.kept.push_back(*by_path.at(path));
    result.dedup.push_back(std::move(d));
  }
  return result;
}

/// Regular files under `root` with repository-relative '/' paths, sorted.
/// Hidden entries (leading '.') are skipped.
inline std::vector<RawFile> load_tree(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::UnreadableSource, "not a directory: " + root.string());
  std::vector<fs::path> paths;
  fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
  if (ec) throw Error(ErrorCode::UnreadableSource, "cannot list " + root.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw Error(ErrorCode::UnreadableSource, "cannot list " + root.string() + ": " + ec.message());
    const std::string name = it->path().filename().string();
    if (!name.empty() && name[0] == '.') {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) paths.push_back(it->path());
  }
  std::vector<RawFile> files;
  files.reserve(paths.size());
  for (const auto& p : paths) {
    files.push_back(RawFile::from_bytes(fs::relative(p, root).generic_string(), text::read_file(p)));
  }
  std::sort(files.begin(), files.end(), [](const RawFile& a, const RawFile& b) { return a.path < b.path; });
  return files;
}

/// One path per line, relative to the manifest's directory unless absolute.
inline std::vector<RawFile> load_manifest(const std::filesystem::path& manifest) {
  const std::string body = text::read_file(manifest);
  const auto base = manifest.parent_path();
  std::vector<RawFile> files;
  for (std::string_view line : text::split_lines(body)) {
    line = text::trim(line);
    if (line.empty()) continue;
    std::filesystem::path p(line);
    const auto full = p.is_absolute() ? p : base / p;
    files.push_back(RawFile::from_bytes(std::string(line), text::read_file(full)));
  }
  return files;
}

inline std::string corpus_jsonl(std::span<const RawFile> files) {
  std::string out;
  for (const auto& f : files) {
    nlohmann::ordered_json rec;
    rec["path"] = f.path;
    rec["content"] = f.content;
    rec["language"] = to_string(f.language);
    rec["sha256"] = sha256_hex(f.content);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

/// Reads corpus.jsonl records back; throws UnreadableSource on malformed lines.
inline std::vector<RawFile> parse_corpus_jsonl(std::string_view body) {
  std::vector<RawFile> files;
  std::size_t lineno = 0;
  for (std::string_view line : text::split_lines(body)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      RawFile f;
      f.path = rec.at("path").get<std::string>();
      f.content = rec.at("content").get<std::string>();
      const auto lang = language_from_string(rec.value("language", std::string("Other")));
      f.language = lang.value_or(language_from_path(f.path));
      if (f.path.empty()) throw Error(ErrorCode::InvalidArgument, "empty path");
      files.push_back(std::move(f));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::UnreadableSource,
                  "corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return files;
}

inline std::string dedup_report_csv(std::span<const DedupDecision> decisions) {
  std::string out = "path,verdict,duplicate_of,similarity\n";
  csv::RowWriter row(out);
  for (const auto& d : decisions) {
    row.field(d.file).field(to_string(d.verdict)).field(d.duplicate_of);
    if (d.similarity) {
      row.field(*d.similarity);
    } else {
      row.field(std::string_view{});
    }
    row.end();
  }
  return out;
}

inline std::string filter_report_csv(std::span<const FileReport> reports) {
  std::string out = "path,status\n";
  csv::RowWriter row(out);
  for (const auto& r : reports) {
    row.field(r.path).field(r.status);
    row.end();
  }
  return out;
}

}  // namespace forge::pipeline
