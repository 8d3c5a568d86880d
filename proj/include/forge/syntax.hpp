#pragma once

// Thin RAII layer over the tree-sitter runtime with the C and C++ grammars.

#include <tree_sitter/api.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"

extern "C" {
const TSLanguage* tree_sitter_c(void);
const TSLanguage* tree_sitter_cpp(void);
}

namespace forge::syntax {

using pipeline::Language;

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return end <= begin; }
  bool contains(const ByteSpan& o) const noexcept { return begin <= o.begin && o.end <= end; }
  bool overlaps(const ByteSpan& o) const noexcept {
    // Zero-width spans (MISSING nodes) overlap anything that touches them.
    if (o.empty() || empty()) return o.begin >= begin && o.begin <= end && begin <= o.end;
    return begin < o.end && o.begin < end;
  }
  friend auto operator<=>(const ByteSpan&, const ByteSpan&) = default;
};

/// Counts basic operations (node visits) performed by segmentation passes.
struct OpCounter {
  std::uint64_t ops = 0;
  void tick(std::uint64_t n = 1) noexcept { ops += n; }
};

inline const TSLanguage* grammar_for(Language lang) {
  switch (lang) {
    case Language::C: return tree_sitter_c();
    case Language::CPP: return tree_sitter_cpp();
    case Language::Other: break;
  }
  throw Error(ErrorCode::UnsupportedLanguage, "no grammar for language Other");
}

inline std::string_view node_type(TSNode n) { return ts_node_type(n); }

inline ByteSpan node_span(TSNode n) { return {ts_node_start_byte(n), ts_node_end_byte(n)}; }

inline TSNode field(TSNode n, std::string_view name) {
  return ts_node_child_by_field_name(n, name.data(), static_cast<std::uint32_t>(name.size()));
}

inline std::string_view node_text(TSNode n, std::string_view source) {
  const ByteSpan s = node_span(n);
  if (s.end > source.size() || s.begin > s.end) return {};
  return source.substr(s.begin, s.size());
}

/// Parser bound to one grammar. Not thread-safe; use one per worker.
class Parser {
 public:
  explicit Parser(Language lang) : lang_(lang), parser_(ts_parser_new(), &ts_parser_delete) {
    if (!ts_parser_set_language(parser_.get(), grammar_for(lang)))
      throw Error(ErrorCode::UnsupportedLanguage, "grammar ABI mismatch");
  }

  Language language() const noexcept { return lang_; }
  TSParser* get() const noexcept { return parser_.get(); }

  /// Worker-local parser for `lang`.
  static Parser& for_thread(Language lang) {
    thread_local Parser c_parser(Language::C);
    thread_local Parser cpp_parser(Language::CPP);
    if (lang == Language::C) return c_parser;
    if (lang == Language::CPP) return cpp_parser;
    throw Error(ErrorCode::UnsupportedLanguage, "no grammar for language Other");
  }

 private:
  Language lang_;
  std::unique_ptr<TSParser, decltype(&ts_parser_delete)> parser_;
};

using TreeHandle = std::unique_ptr<TSTree, decltype(&ts_tree_delete)>;

inline TreeHandle parse_source(Parser& parser, std::string_view source) {
  TSTree* tree = ts_parser_parse_string(parser.get(), nullptr, source.data(),
                                        static_cast<std::uint32_t>(source.size()));
  if (tree == nullptr) throw Error(ErrorCode::ParseFailure, "parser returned no tree");
  return TreeHandle(tree, &ts_tree_delete);
}

struct ErrorSite {
  ByteSpan span;
  bool missing = false;  // MISSING token inserted by recovery, rather than an ERROR node
  friend auto operator<=>(const ErrorSite&, const ErrorSite&) = default;
};

/// ERROR and MISSING nodes under `root`. Only subtrees flagged as containing
/// errors are entered, so a clean tree costs one visit.
inline std::vector<ErrorSite> collect_errors(TSNode root, OpCounter* ops = nullptr) {
  std::vector<ErrorSite> out;
  std::vector<TSNode> stack{root};
  while (!stack.empty()) {
    TSNode n = stack.back();
    stack.pop_back();
    if (ops) ops->tick();
    if (ts_node_is_missing(n)) {
      out.push_back({node_span(n), true});
      continue;
    }
    if (ts_node_is_error(n)) out.push_back({node_span(n), false});
    if (!ts_node_has_error(n)) continue;
    const std::uint32_t count = ts_node_child_count(n);
    for (std::uint32_t i = count; i-- > 0;) {
      TSNode c = ts_node_child(n, i);
      if (ts_node_has_error(c) || ts_node_is_missing(c) || ts_node_is_error(c)) stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Parsed source plus its concrete syntax tree. Error nodes are recorded,
/// never fatal.
class SyntaxTree {
 public:
  SyntaxTree(std::string path, std::string source, Language lang, TreeHandle tree)
      : path_(std::move(path)), source_(std::move(source)), lang_(lang), tree_(std::move(tree)) {
    line_starts_.push_back(0);
    for (std::size_t i = 0; i < source_.size(); ++i)
      if (source_[i] == '\n') line_starts_.push_back(i + 1);
    count_nodes();
    errors_ = collect_errors(root());
  }

  const std::string& path() const noexcept { return path_; }
  const std::string& source() const noexcept { return source_; }
  Language language() const noexcept { return lang_; }
  TSNode root() const { return ts_tree_root_node(tree_.get()); }
  const TSTree* raw() const noexcept { return tree_.get(); }

  /// All nodes, named and anonymous (|V| of the concrete tree).
  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t named_node_count() const noexcept { return named_count_; }
  std::size_t edge_count() const noexcept { return node_count_ == 0 ? 0 : node_count_ - 1; }
  const std::vector<ErrorSite>& errors() const noexcept { return errors_; }
  bool has_errors() const noexcept { return !errors_.empty(); }

  /// Row/column (bytes) of a byte offset, as tree-sitter expects in edits.
  TSPoint point_at(std::size_t offset) const {
    const auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
    const std::size_t row = static_cast<std::size_t>(it - line_starts_.begin()) - 1;
    return {static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(offset - line_starts_[row])};
  }

  std::string_view text(ByteSpan s) const { return std::string_view(source_).substr(s.begin, s.size()); }

 private:
  void count_nodes() {
    TSTreeCursor cursor = ts_tree_cursor_new(root());
    bool done = false;
    while (!done) {
      TSNode n = ts_tree_cursor_current_node(&cursor);
      ++node_count_;
      named_count_ += ts_node_is_named(n);
      if (ts_tree_cursor_goto_first_child(&cursor)) continue;
      while (!ts_tree_cursor_goto_next_sibling(&cursor)) {
        if (!ts_tree_cursor_goto_parent(&cursor)) {
          done = true;
          break;
        }
      }
    }
    ts_tree_cursor_delete(&cursor);
  }

  std::string path_;
  std::string source_;
  Language lang_;
  TreeHandle tree_;
  std::vector<std::size_t> line_starts_;
  std::size_t node_count_ = 0;
  std::size_t named_count_ = 0;
  std::vector<ErrorSite> errors_;
};

inline SyntaxTree parse_text(std::string path, std::string source, Language lang) {
  Parser& parser = Parser::for_thread(lang);
  TreeHandle tree = parse_source(parser, source);
  return SyntaxTree(std::move(path), std::move(source), lang, std::move(tree));
}

/// Throws UnsupportedLanguage unless the file is C or C++.
inline SyntaxTree parse_to_ast(const pipeline::RawFile& file) {
  if (file.language == Language::Other)
    throw Error(ErrorCode::UnsupportedLanguage, file.path + " is not C or C++");
  return parse_text(file.path, file.content, file.language);
}

}  // namespace forge::syntax
