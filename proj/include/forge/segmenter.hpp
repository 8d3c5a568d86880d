#pragma once

// Semantic-unit extraction over the concrete syntax tree and
// structure-aligned fill-in-the-middle sample construction.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/pipeline.hpp"
#include "forge/syntax.hpp"
#include "forge/text.hpp"
#include "json.hpp"

namespace forge::segment {

using syntax::ByteSpan;
using syntax::OpCounter;
using syntax::SyntaxTree;

enum class UnitKind { FunctionDef, RecordTypeDef, ClassDef, ConditionalBranch, LoopBody, MacroDef };

constexpr std::string_view to_string(UnitKind k) noexcept {
  switch (k) {
    case UnitKind::FunctionDef: return "FunctionDef";
    case UnitKind::RecordTypeDef: return "RecordTypeDef";
    case UnitKind::ClassDef: return "ClassDef";
    case UnitKind::ConditionalBranch: return "ConditionalBranch";
    case UnitKind::LoopBody: return "LoopBody";
    case UnitKind::MacroDef: return "MacroDef";
  }
  return "FunctionDef";
}

inline std::optional<UnitKind> unit_kind_from_string(std::string_view s) {
  for (auto k : {UnitKind::FunctionDef, UnitKind::RecordTypeDef, UnitKind::ClassDef,
                 UnitKind::ConditionalBranch, UnitKind::LoopBody, UnitKind::MacroDef}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Statement-level kinds occupy a statement slot; the others are declarations.
constexpr bool is_statement_kind(UnitKind k) noexcept {
  return k == UnitKind::ConditionalBranch || k == UnitKind::LoopBody;
}

struct SemanticUnit {
  std::string id;
  UnitKind kind = UnitKind::FunctionDef;
  std::string file;
  ByteSpan span;
  std::optional<std::string> name;
  std::size_t node_count = 0;   // named nodes in the subtree
  std::size_t token_count = 0;

  static std::string make_id(std::string_view file, ByteSpan span) {
    return std::string(file) + ":" + std::to_string(span.begin) + "-" + std::to_string(span.end);
  }
};

namespace detail {

inline bool is_name_node(std::string_view t) {
  return t == "identifier" || t == "field_identifier" || t == "type_identifier" ||
         t == "destructor_name" || t == "operator_name" || t == "namespace_identifier" ||
         t == "primitive_type";
}

/// Innermost simple name of a (possibly qualified or templated) name node.
inline std::optional<std::string> last_name(TSNode n, std::string_view src) {
  for (int guard = 0; guard < 64 && !ts_node_is_null(n); ++guard) {
    const std::string_view t = syntax::node_type(n);
    if (is_name_node(t)) return std::string(syntax::node_text(n, src));
    if (t == "qualified_identifier" || t == "template_function" || t == "template_type" ||
        t == "template_method") {
      n = syntax::field(n, "name");
      continue;
    }
    if (ts_node_named_child_count(n) == 0) return std::nullopt;
    TSNode inner = syntax::field(n, "declarator");
    n = ts_node_is_null(inner) ? ts_node_named_child(n, 0) : inner;
  }
  return std::nullopt;
}

inline std::optional<std::string> function_name(TSNode fn, std::string_view src) {
  TSNode d = syntax::field(fn, "declarator");
  for (int guard = 0; guard < 64 && !ts_node_is_null(d); ++guard) {
    const std::string_view t = syntax::node_type(d);
    if (t == "function_declarator") return last_name(syntax::field(d, "declarator"), src);
    TSNode inner = syntax::field(d, "declarator");
    if (ts_node_is_null(inner)) {
      if (ts_node_named_child_count(d) == 0) break;
      inner = ts_node_named_child(d, 0);
    }
    d = inner;
  }
  return std::nullopt;
}

inline std::optional<std::string> record_name(TSNode rec, TSNode parent, std::string_view parent_type,
                                              std::string_view src) {
  TSNode name = syntax::field(rec, "name");
  if (!ts_node_is_null(name)) return last_name(name, src);
  if (parent_type == "type_definition") return last_name(syntax::field(parent, "declarator"), src);
  return std::nullopt;
}

inline bool is_record_type(std::string_view t) {
  return t == "struct_specifier" || t == "union_specifier" || t == "enum_specifier";
}

struct Classified {
  UnitKind kind;
  std::optional<std::string> name;
};

/// Kind of a node that roots a semantic unit, if any.
inline std::optional<Classified> classify(TSNode n, std::string_view type, TSNode parent,
                                          std::string_view parent_type, std::string_view src) {
  if (type == "function_definition") return Classified{UnitKind::FunctionDef, function_name(n, src)};
  if (is_record_type(type) && !ts_node_is_null(syntax::field(n, "body")))
    return Classified{UnitKind::RecordTypeDef, record_name(n, parent, parent_type, src)};
  if (type == "class_specifier" && !ts_node_is_null(syntax::field(n, "body")))
    return Classified{UnitKind::ClassDef, record_name(n, parent, parent_type, src)};
  if (type == "if_statement" || type == "switch_statement")
    return Classified{UnitKind::ConditionalBranch, std::nullopt};
  if (type == "for_statement" || type == "for_range_loop" || type == "while_statement" ||
      type == "do_statement")
    return Classified{UnitKind::LoopBody, std::nullopt};
  if (type == "preproc_def" || type == "preproc_function_def")
    return Classified{UnitKind::MacroDef, last_name(syntax::field(n, "name"), src)};
  return std::nullopt;
}

/// Entity declared by a template_declaration (its last named child).
inline TSNode template_entity(TSNode tmpl) {
  const std::uint32_t count = ts_node_named_child_count(tmpl);
  return count == 0 ? TSNode{} : ts_node_named_child(tmpl, count - 1);
}

inline std::size_t count_tokens(const std::vector<std::size_t>& token_begins, ByteSpan span) {
  const auto lo = std::lower_bound(token_begins.begin(), token_begins.end(), span.begin);
  const auto hi = std::lower_bound(lo, token_begins.end(), span.end);
  return static_cast<std::size_t>(hi - lo);
}

}  // namespace detail

/// Depth-first (document-order) walk collecting semantically closed
/// subtrees. Units whose subtree contains a parse error are skipped, their
/// descendants are still visited. Templates contribute their full
/// `template <...>` span to the unit they declare.
inline std::vector<SemanticUnit> extract_semantic_units(const SyntaxTree& tree, OpCounter* ops = nullptr) {
  const std::string_view src = tree.source();
  std::vector<std::size_t> token_begins;
  for (const auto& t : text::tokenize(src)) token_begins.push_back(t.begin);

  struct Frame {
    TSNode node;
    std::string_view type;
    std::size_t unit = std::numeric_limits<std::size_t>::max();
    std::size_t named = 0;
    bool claimed_by_template = false;
  };
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::vector<SemanticUnit> units;
  std::vector<Frame> stack;

  auto enter = [&](TSNode n) {
    if (ops) ops->tick();
    Frame f{n, syntax::node_type(n)};
    const bool has_parent = !stack.empty();
    const Frame* parent = has_parent ? &stack.back() : nullptr;
    const bool inside_claimed_template = parent && parent->claimed_by_template;
    if (!ts_node_has_error(n) && !inside_claimed_template) {
      TSNode subject = n;
      std::string_view subject_type = f.type;
      if (f.type == "template_declaration") {
        subject = detail::template_entity(n);
        subject_type = ts_node_is_null(subject) ? std::string_view{} : syntax::node_type(subject);
      }
      std::optional<detail::Classified> c;
      if (!ts_node_is_null(subject))
        c = detail::classify(subject, subject_type, parent ? parent->node : TSNode{},
                             parent ? parent->type : std::string_view{}, src);
      if (c && (f.type != "template_declaration" || c->kind == UnitKind::FunctionDef ||
                c->kind == UnitKind::ClassDef || c->kind == UnitKind::RecordTypeDef)) {
        ByteSpan span = syntax::node_span(n);
        if (c->kind == UnitKind::MacroDef) {
          while (span.end > span.begin && text::is_space_byte(static_cast<unsigned char>(src[span.end - 1])))
            --span.end;
        }
        if (!span.empty() && (units.empty() || units.back().span != span)) {
          SemanticUnit u;
          u.kind = c->kind;
          u.file = tree.path();
          u.span = span;
          u.id = SemanticUnit::make_id(u.file, span);
          u.name = std::move(c->name);
          u.token_count = detail::count_tokens(token_begins, span);
          f.unit = units.size();
          units.push_back(std::move(u));
          f.claimed_by_template = f.type == "template_declaration";
        }
      }
    }
    stack.push_back(f);
  };

  auto finish_top = [&] {
    Frame f = stack.back();
    stack.pop_back();
    f.named += ts_node_is_named(f.node);
    if (f.unit != kNone) units[f.unit].node_count = std::max<std::size_t>(f.named, 1);
    if (!stack.empty()) stack.back().named += f.named;
  };

  TSTreeCursor cursor = ts_tree_cursor_new(tree.root());
  enter(ts_tree_cursor_current_node(&cursor));
  bool done = false;
  while (!done) {
    if (ts_tree_cursor_goto_first_child(&cursor)) {
      enter(ts_tree_cursor_current_node(&cursor));
      continue;
    }
    while (true) {
      finish_top();
      if (ts_tree_cursor_goto_next_sibling(&cursor)) {
        enter(ts_tree_cursor_current_node(&cursor));
        break;
      }
      if (!ts_tree_cursor_goto_parent(&cursor)) {
        done = true;
        break;
      }
    }
  }
  ts_tree_cursor_delete(&cursor);
  return units;
}

// ---------------------------------------------------------------------------
// Completeness
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDefaultMaskToken = "<mask>";
inline constexpr std::string_view kMaskIdentifier = "__fim_mask__";

/// Text that fills a masked hole when the remainder is re-parsed: the mask
/// token inside a comment, preceded by a placeholder of the unit's syntactic
/// category (`struct __fim_mask__` for record types, `;` for statements, and
/// nothing for other declarations).
inline std::string mask_stand_in(UnitKind kind, std::string_view unit_text, std::string_view mask_token) {
  std::string comment = "/*";
  for (std::size_t i = 0; i < mask_token.size(); ++i) {
    comment += mask_token[i];
    if (mask_token[i] == '*' && i + 1 < mask_token.size() && mask_token[i + 1] == '/') comment += ' ';
  }
  comment += "*/";
  if (is_statement_kind(kind)) return comment + ";";
  if (kind == UnitKind::RecordTypeDef || kind == UnitKind::ClassDef) {
    std::string keyword = kind == UnitKind::ClassDef ? "class" : "struct";
    for (std::string_view tok : text::token_views(unit_text)) {
      if (tok == "struct" || tok == "union" || tok == "enum" || tok == "class") {
        keyword = std::string(tok);
        break;
      }
    }
    return keyword + " " + std::string(kMaskIdentifier) + " " + comment;
  }
  return comment;
}

namespace detail {

struct PieceReader {
  std::string_view parts[3];

  static const char* read(void* payload, std::uint32_t byte_index, TSPoint, std::uint32_t* bytes_read) {
    auto* self = static_cast<PieceReader*>(payload);
    std::size_t offset = byte_index;
    for (std::string_view part : self->parts) {
      if (offset < part.size()) {
        *bytes_read = static_cast<std::uint32_t>(part.size() - offset);
        return part.data() + offset;
      }
      offset -= part.size();
    }
    *bytes_read = 0;
    return "";
  }
};

}  // namespace detail

/// True iff replacing the unit's span by the mask stand-in and re-parsing
/// introduces no error node that was not already present. Errors that
/// existed before the edit (shifted past it) are tolerated unless they now
/// reach into the masked region. Uses an incremental re-parse of the
/// original tree.
inline bool check_completeness(const SyntaxTree& tree, const SemanticUnit& unit, std::string_view mask_token,
                               OpCounter* ops = nullptr) {
  const std::string_view src = tree.source();
  const ByteSpan span = unit.span;
  if (span.empty() || span.end > src.size()) return false;
  if (ops) ops->tick();

  const std::string stand_in = mask_stand_in(unit.kind, src.substr(span.begin, span.size()), mask_token);
  const auto delta = static_cast<std::int64_t>(stand_in.size()) - static_cast<std::int64_t>(span.size());
  const ByteSpan hole{span.begin, span.begin + stand_in.size()};

  TSInputEdit edit{};
  edit.start_byte = static_cast<std::uint32_t>(span.begin);
  edit.old_end_byte = static_cast<std::uint32_t>(span.end);
  edit.new_end_byte = static_cast<std::uint32_t>(hole.end);
  edit.start_point = tree.point_at(span.begin);
  edit.old_end_point = tree.point_at(span.end);
  edit.new_end_point = {edit.start_point.row,
                        edit.start_point.column + static_cast<std::uint32_t>(stand_in.size())};

  syntax::TreeHandle edited(ts_tree_copy(tree.raw()), &ts_tree_delete);
  ts_tree_edit(edited.get(), &edit);

  detail::PieceReader reader{{src.substr(0, span.begin), stand_in, src.substr(span.end)}};
  TSInput input{&reader, &detail::PieceReader::read, TSInputEncodingUTF8};
  syntax::Parser& parser = syntax::Parser::for_thread(tree.language());
  syntax::TreeHandle reparsed(ts_parser_parse(parser.get(), edited.get(), input), &ts_tree_delete);
  if (!reparsed) return false;

  std::vector<ByteSpan> surviving;
  for (const auto& e : tree.errors()) {
    if (e.span.end <= span.begin && !(e.span.empty() && e.span.begin == span.begin)) {
      surviving.push_back(e.span);
    } else if (e.span.begin >= span.end && !(e.span.empty() && e.span.begin == span.end)) {
      surviving.push_back({static_cast<std::size_t>(static_cast<std::int64_t>(e.span.begin) + delta),
                           static_cast<std::size_t>(static_cast<std::int64_t>(e.span.end) + delta)});
    }
  }

  for (const auto& e : syntax::collect_errors(ts_tree_root_node(reparsed.get()), ops)) {
    if (e.span.overlaps(hole) || hole.overlaps(e.span)) return false;
    const bool pre_existing = std::any_of(surviving.begin(), surviving.end(), [&](const ByteSpan& s) {
      return s.overlaps(e.span) || e.span.overlaps(s);
    });
    if (!pre_existing) return false;
  }
  return true;
}

/// Parses `file_text` and checks `unit` against it.
inline bool check_completeness(std::string_view file_text, const SemanticUnit& unit, std::string_view mask_token,
                               pipeline::Language lang) {
  const SyntaxTree tree = syntax::parse_text(unit.file, std::string(file_text), lang);
  return check_completeness(tree, unit, mask_token);
}

/// True iff `unit_text` on its own parses without errors as one construct of
/// `kind`. Statements are wrapped in a function body; record and class
/// definitions get their terminating semicolon.
inline bool reparses_as_closed_unit(std::string_view unit_text, UnitKind kind, pipeline::Language lang) {
  std::string probe;
  if (is_statement_kind(kind)) {
    probe = "void __forge_probe(void) {\n" + std::string(unit_text) + "\n}\n";
  } else if (kind == UnitKind::RecordTypeDef || kind == UnitKind::ClassDef) {
    probe = std::string(unit_text) + ";\n";
  } else {
    probe = std::string(unit_text) + "\n";
  }
  const SyntaxTree tree = syntax::parse_text("<probe>", probe, lang);
  if (tree.has_errors()) return false;
  const auto units = extract_semantic_units(tree);
  const std::size_t expected_begin = is_statement_kind(kind) ? probe.find('{') + 2 : 0;
  for (const auto& u : units) {
    if (u.kind == kind && u.span.begin == expected_begin && u.span.size() == text::rtrim(unit_text).size())
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// FIM sample construction
// ---------------------------------------------------------------------------

enum class SizeUnit { Tokens, Nodes };

struct GranularityRange {
  std::size_t theta_min = 8;
  std::size_t theta_max = 512;
  SizeUnit unit = SizeUnit::Tokens;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (theta_min == 0) out.push_back("fim.theta_min must be > 0");
    if (theta_min > theta_max) out.push_back("fim.theta_min must not exceed fim.theta_max");
    return out;
  }
};

struct FimSample {
  std::string prefix;
  std::string target;
  std::string suffix;
  std::string mask_token;
  std::string source_file;
  std::string unit_id;               // empty for greedy windows
  std::optional<UnitKind> unit_kind;
  ByteSpan span;

  std::string input() const { return prefix + mask_token + suffix; }
  std::string reconstruct() const { return prefix + target + suffix; }
  friend bool operator==(const FimSample&, const FimSample&) = default;
};

inline FimSample make_sample(std::string_view source, ByteSpan span, std::string_view mask_token,
                             std::string_view path) {
  FimSample s;
  s.prefix = std::string(source.substr(0, span.begin));
  s.target = std::string(source.substr(span.begin, span.size()));
  s.suffix = std::string(source.substr(span.end));
  s.mask_token = std::string(mask_token);
  s.source_file = std::string(path);
  s.span = span;
  return s;
}

struct CutOptions {
  double sampling_rate = 1.0;  // Bernoulli keep-probability for eligible units
};

struct FimCutResult {
  std::vector<FimSample> samples;
  std::size_t units = 0;
  std::size_t size_rejected = 0;
  std::size_t incomplete = 0;
  bool no_eligible_units = false;  // informational; samples is empty
  std::uint64_t ops = 0;
  std::size_t tree_nodes = 0;
};

inline std::size_t unit_size(const SemanticUnit& u, SizeUnit unit) {
  return unit == SizeUnit::Tokens ? u.token_count : u.node_count;
}

/// Visits every semantic unit; for each one a granularity cap theta is drawn
/// uniformly from [theta_min, theta_max] and the unit is eligible when
/// theta_min <= size <= theta and masking it leaves a complete tree.
/// Eligible units are kept with probability `sampling_rate`. The random
/// stream is seeded from `seed` and the file path only.
inline FimCutResult cut_fim_samples(const SyntaxTree& tree, const GranularityRange& range,
                                    std::string_view mask_token, std::uint64_t seed, const CutOptions& opts = {}) {
  FimCutResult result;
  result.tree_nodes = tree.node_count();
  OpCounter ops;
  const auto units = extract_semantic_units(tree, &ops);
  result.units = units.size();
  SplitMix64 rng(mix64(seed ^ fnv1a64(tree.path())));

  std::size_t eligible = 0;
  for (const auto& u : units) {
    ops.tick();
    const std::size_t theta = rng.between(range.theta_min, range.theta_max);
    const std::size_t size = unit_size(u, range.unit);
    if (size < range.theta_min || size > theta) {
      ++result.size_rejected;
      continue;
    }
    if (!check_completeness(tree, u, mask_token, &ops)) {
      ++result.incomplete;
      continue;
    }
    ++eligible;
    if (opts.sampling_rate < 1.0 && !rng.bernoulli(opts.sampling_rate)) continue;
    FimSample s = make_sample(tree.source(), u.span, mask_token, tree.path());
    s.unit_id = u.id;
    s.unit_kind = u.kind;
    result.samples.push_back(std::move(s));
  }
  result.no_eligible_units = eligible == 0;
  result.ops = ops.ops;
  return result;
}

inline FimCutResult cut_fim_samples(const pipeline::RawFile& file, const GranularityRange& range,
                                    std::string_view mask_token, std::uint64_t seed, const CutOptions& opts = {}) {
  return cut_fim_samples(syntax::parse_to_ast(file), range, mask_token, seed, opts);
}

/// Fixed-window baseline: the token stream is split into ceil(L / window)
/// contiguous segments and each segment is one sample's target.
inline std::vector<FimSample> greedy_cut_baseline(std::string_view source, std::size_t window,
                                                  std::string_view path = {},
                                                  std::string_view mask_token = kDefaultMaskToken) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "greedy window must be >= 1");
  const auto tokens = text::tokenize(source);
  std::vector<FimSample> out;
  for (std::size_t first = 0; first < tokens.size(); first += window) {
    const std::size_t last = std::min(first + window, tokens.size()) - 1;
    out.push_back(make_sample(source, {tokens[first].begin, tokens[last].end}, mask_token, path));
  }
  return out;
}

/// Fraction of samples whose target (ignoring surrounding whitespace) is
/// exactly one semantic unit or a whitespace-separated run of whole units.
/// An empty sample list is vacuously 1.
inline double structural_preservation_rate(std::span<const FimSample> samples, const SyntaxTree& tree) {
  if (samples.empty()) return 1.0;
  const std::string_view src = tree.source();
  auto units = extract_semantic_units(tree);
  // Largest unit first among those sharing a start offset.
  std::sort(units.begin(), units.end(), [](const SemanticUnit& a, const SemanticUnit& b) {
    return a.span.begin != b.span.begin ? a.span.begin < b.span.begin : a.span.end > b.span.end;
  });

  auto tiles = [&](ByteSpan target) {
    while (target.begin < target.end && text::is_space_byte(static_cast<unsigned char>(src[target.begin])))
      ++target.begin;
    while (target.end > target.begin && text::is_space_byte(static_cast<unsigned char>(src[target.end - 1])))
      --target.end;
    if (target.empty()) return false;
    std::size_t pos = target.begin;
    while (pos < target.end) {
      auto it = std::lower_bound(units.begin(), units.end(), pos,
                                 [](const SemanticUnit& u, std::size_t p) { return u.span.begin < p; });
      while (it != units.end() && it->span.begin == pos && it->span.end > target.end) ++it;
      if (it == units.end() || it->span.begin != pos) return false;
      pos = it->span.end;
      while (pos < target.end && text::is_space_byte(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    return pos == target.end;
  };

  std::size_t preserved = 0;
  for (const auto& s : samples) {
    if (s.span.end <= src.size() && tiles(s.span)) ++preserved;
  }
  return static_cast<double>(preserved) / samples.size();
}

inline nlohmann::ordered_json fim_sample_json(const FimSample& s) {
  nlohmann::ordered_json j;
  j["input"] = s.input();
  j["target"] = s.target;
  j["source_file"] = s.source_file;
  j["unit_kind"] = s.unit_kind ? std::string(to_string(*s.unit_kind)) : std::string("GreedyWindow");
  j["unit_span"] = {s.span.begin, s.span.end};
  return j;
}

}  // namespace forge::segment
