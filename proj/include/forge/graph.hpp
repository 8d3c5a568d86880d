#pragma once

// Code graph over top-level semantic units, bounded path enumeration and
// structure-aware rendering of paths into training samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/pipeline.hpp"
#include "forge/segmenter.hpp"
#include "forge/syntax.hpp"
#include "forge/text.hpp"
#include "json.hpp"

namespace forge::graph {

using segment::SemanticUnit;
using segment::UnitKind;
using syntax::ByteSpan;

enum class EdgeKind { DirectCall, MemberReference, TypeUsage, MacroExpansion, IncludeDependency };

inline constexpr EdgeKind kAllEdgeKinds[] = {EdgeKind::DirectCall, EdgeKind::MemberReference, EdgeKind::TypeUsage,
                                             EdgeKind::MacroExpansion, EdgeKind::IncludeDependency};

constexpr std::string_view to_string(EdgeKind k) noexcept {
  switch (k) {
    case EdgeKind::DirectCall: return "DirectCall";
    case EdgeKind::MemberReference: return "MemberReference";
    case EdgeKind::TypeUsage: return "TypeUsage";
    case EdgeKind::MacroExpansion: return "MacroExpansion";
    case EdgeKind::IncludeDependency: return "IncludeDependency";
  }
  return "DirectCall";
}

enum class PathStrategy { ForwardCall, FieldAccess, HeaderInclusion };

constexpr std::string_view to_string(PathStrategy s) noexcept {
  switch (s) {
    case PathStrategy::ForwardCall: return "forward-call";
    case PathStrategy::FieldAccess: return "field-access";
    case PathStrategy::HeaderInclusion: return "header-inclusion";
  }
  return "forward-call";
}

inline std::optional<PathStrategy> strategy_from_string(std::string_view s) {
  for (auto st : {PathStrategy::ForwardCall, PathStrategy::FieldAccess, PathStrategy::HeaderInclusion})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

/// Lower rank is followed first.
constexpr int edge_rank(EdgeKind k, PathStrategy s) noexcept {
  switch (s) {
    case PathStrategy::ForwardCall:
      switch (k) {
        case EdgeKind::DirectCall: return 0;
        case EdgeKind::MacroExpansion: return 1;
        case EdgeKind::TypeUsage: return 2;
        case EdgeKind::MemberReference: return 3;
        case EdgeKind::IncludeDependency: return 4;
      }
      break;
    case PathStrategy::FieldAccess:
      switch (k) {
        case EdgeKind::MemberReference: return 0;
        case EdgeKind::TypeUsage: return 1;
        case EdgeKind::DirectCall: return 2;
        case EdgeKind::MacroExpansion: return 3;
        case EdgeKind::IncludeDependency: return 4;
      }
      break;
    case PathStrategy::HeaderInclusion:
      switch (k) {
        case EdgeKind::IncludeDependency: return 0;
        case EdgeKind::DirectCall: return 1;
        case EdgeKind::MacroExpansion: return 2;
        case EdgeKind::TypeUsage: return 3;
        case EdgeKind::MemberReference: return 4;
      }
      break;
  }
  return 5;
}

struct Node {
  std::string id;
  UnitKind kind = UnitKind::FunctionDef;
  std::string file;
  ByteSpan span;
  std::optional<std::string> name;
  std::size_t line = 0;     // 1-based definition line
  std::string module;       // directory of the file, "." at the root
};

/// Directed, typed edge between node indices. `site` is the byte offset of
/// the first reference inside the source node; include edges sort last.
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  EdgeKind kind = EdgeKind::DirectCall;
  std::size_t site = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Diagnostics {
  std::size_t unresolved_calls = 0;
  std::size_t unresolved_types = 0;
  std::size_t unresolved_members = 0;
  std::size_t unresolved_includes = 0;
  std::size_t ambiguous_references = 0;
  std::size_t self_edges = 0;
};

class CodeGraph {
 public:
  CodeGraph() = default;

  /// Nodes are re-ordered by (file, span start); the returned graph owns them.
  explicit CodeGraph(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    std::sort(nodes_.begin(), nodes_.end(), [](const Node& a, const Node& b) {
      return std::tie(a.file, a.span.begin, a.span.end) < std::tie(b.file, b.span.begin, b.span.end);
    });
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i].id, i);
    out_.resize(nodes_.size());
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::optional<std::size_t> find(std::string_view id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Adds an edge; duplicates of (from, to, kind) keep the earliest site.
  /// Returns false when the edge was already present.
  bool add_edge(std::size_t from, std::size_t to, EdgeKind kind, std::size_t site) {
    if (from >= nodes_.size() || to >= nodes_.size())
      throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    for (std::size_t e : out_[from]) {
      Edge& existing = edges_[e];
      if (existing.to == to && existing.kind == kind) {
        existing.site = std::min(existing.site, site);
        return false;
      }
    }
    out_[from].push_back(edges_.size());
    edges_.push_back({from, to, kind, site});
    return true;
  }

  std::vector<Edge> out_edges(std::size_t from) const {
    std::vector<Edge> out;
    for (std::size_t e : out_.at(from)) out.push_back(edges_[e]);
    return out;
  }

  /// Edges ordered (from, to, kind); convenient for equality checks.
  std::vector<std::tuple<std::string, std::string, EdgeKind>> edge_list() const {
    std::vector<std::tuple<std::string, std::string, EdgeKind>> out;
    for (const auto& e : edges_) out.emplace_back(nodes_[e.from].id, nodes_[e.to].id, e.kind);
    std::sort(out.begin(), out.end());
    return out;
  }

  Diagnostics diagnostics;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

constexpr bool is_graph_kind(UnitKind k) noexcept {
  return k == UnitKind::FunctionDef || k == UnitKind::RecordTypeDef || k == UnitKind::ClassDef ||
         k == UnitKind::MacroDef;
}

/// Graph nodes: declaration-level units not nested in another such unit.
inline std::vector<SemanticUnit> top_level_units(std::span<const SemanticUnit> units) {
  std::vector<SemanticUnit> candidates;
  for (const auto& u : units)
    if (is_graph_kind(u.kind)) candidates.push_back(u);
  std::sort(candidates.begin(), candidates.end(), [](const SemanticUnit& a, const SemanticUnit& b) {
    return std::tie(a.file, a.span.begin) < std::tie(b.file, b.span.begin) ||
           (a.file == b.file && a.span.begin == b.span.begin && a.span.end > b.span.end);
  });
  std::vector<SemanticUnit> out;
  for (auto& u : candidates) {
    if (!out.empty() && out.back().file == u.file && out.back().span.contains(u.span)) continue;
    out.push_back(std::move(u));
  }
  return out;
}

namespace detail {

using SourceMap = std::map<std::string, const pipeline::RawFile*, std::less<>>;

struct NameRef {
  std::size_t owner;
  std::string name;
  std::size_t site;
};

struct MemberChain {
  std::size_t owner;
  std::string base;  // variable name or "this"
  std::vector<std::string> fields;
  std::size_t site;
};

/// Raw references found in one file, attributed to the node that encloses them.
struct FileRefs {
  std::vector<NameRef> calls;
  std::vector<NameRef> idents;
  std::vector<NameRef> types;
  std::vector<MemberChain> chains;
  std::map<std::pair<std::size_t, std::string>, std::string> locals;        // (owner, var) -> type
  std::map<std::pair<std::size_t, std::string>, std::string> record_fields; // (record, field) -> type
  std::vector<std::string> includes;
};

inline std::string_view strip_quotes(std::string_view s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '<' && s.back() == '>')))
    return s.substr(1, s.size() - 2);
  return s;
}

/// Name of the record-ish type named by a declaration's `type` field.
inline std::optional<std::string> type_name(TSNode type, std::string_view src) {
  if (ts_node_is_null(type)) return std::nullopt;
  const std::string_view t = syntax::node_type(type);
  if (t == "primitive_type" || t == "placeholder_type_specifier" || t == "sized_type_specifier")
    return std::nullopt;
  if (t == "struct_specifier" || t == "class_specifier" || t == "union_specifier" || t == "enum_specifier") {
    TSNode name = syntax::field(type, "name");
    if (ts_node_is_null(name)) return std::nullopt;
    return segment::detail::last_name(name, src);
  }
  return segment::detail::last_name(type, src);
}

/// Variable name introduced by a declarator, or nothing for function declarators.
inline std::optional<std::string> declarator_name(TSNode d, std::string_view src) {
  for (int guard = 0; guard < 32 && !ts_node_is_null(d); ++guard) {
    const std::string_view t = syntax::node_type(d);
    if (t == "identifier" || t == "field_identifier") return std::string(syntax::node_text(d, src));
    if (t == "function_declarator" || t == "abstract_function_declarator") return std::nullopt;
    TSNode inner = syntax::field(d, "declarator");
    if (ts_node_is_null(inner)) {
      if (ts_node_named_child_count(d) == 0) return std::nullopt;
      inner = ts_node_named_child(d, 0);
    }
    d = inner;
  }
  return std::nullopt;
}

inline std::vector<TSNode> children_with_field(TSNode n, std::string_view field_name) {
  std::vector<TSNode> out;
  TSTreeCursor c = ts_tree_cursor_new(n);
  if (ts_tree_cursor_goto_first_child(&c)) {
    do {
      const char* f = ts_tree_cursor_current_field_name(&c);
      if (f != nullptr && field_name == f) out.push_back(ts_tree_cursor_current_node(&c));
    } while (ts_tree_cursor_goto_next_sibling(&c));
  }
  ts_tree_cursor_delete(&c);
  return out;
}

/// Walks one file's tree once. `spans` are the file's node spans (sorted,
/// disjoint) and `ids` the matching global node indices.
inline FileRefs extract_refs(const syntax::SyntaxTree& tree, const std::vector<ByteSpan>& spans,
                             const std::vector<std::size_t>& ids) {
  const std::string_view src = tree.source();
  FileRefs refs;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  auto owner_of = [&](std::size_t offset) -> std::size_t {
    auto it = std::upper_bound(spans.begin(), spans.end(), offset,
                               [](std::size_t off, const ByteSpan& s) { return off < s.begin; });
    if (it == spans.begin()) return kNone;
    --it;
    if (offset >= it->end) return kNone;
    return ids[static_cast<std::size_t>(it - spans.begin())];
  };

  struct Frame {
    std::string_view type;
    std::string_view field;
  };
  std::vector<Frame> stack;

  auto visit = [&](TSNode n, std::string_view field_name) {
    const std::string_view type = syntax::node_type(n);
    const std::string_view parent = stack.empty() ? std::string_view{} : stack.back().type;
    const std::size_t start = ts_node_start_byte(n);

    if (type == "preproc_include") {
      TSNode path = syntax::field(n, "path");
      if (!ts_node_is_null(path)) refs.includes.emplace_back(strip_quotes(syntax::node_text(path, src)));
      return;
    }
    const std::size_t owner = owner_of(start);
    if (owner == kNone) return;

    if (type == "call_expression") {
      TSNode fn = syntax::field(n, "function");
      std::optional<std::string> name;
      if (!ts_node_is_null(fn)) {
        if (syntax::node_type(fn) == "field_expression") {
          TSNode f = syntax::field(fn, "field");
          if (!ts_node_is_null(f)) name = segment::detail::last_name(f, src);
        } else {
          name = segment::detail::last_name(fn, src);
        }
      }
      if (name) refs.calls.push_back({owner, *name, start});
    } else if (type == "identifier") {
      const bool macro_name = field_name == "name" && (parent == "preproc_def" || parent == "preproc_function_def");
      if (!macro_name) refs.idents.push_back({owner, std::string(syntax::node_text(n, src)), start});
    } else if (type == "type_identifier") {
      refs.types.push_back({owner, std::string(syntax::node_text(n, src)), start});
      refs.idents.push_back({owner, std::string(syntax::node_text(n, src)), start});
    } else if (type == "declaration" || type == "parameter_declaration" || type == "field_declaration" ||
               type == "optional_parameter_declaration") {
      if (auto tname = type_name(syntax::field(n, "type"), src)) {
        for (TSNode d : children_with_field(n, "declarator")) {
          auto var = declarator_name(d, src);
          if (!var) continue;
          if (type == "field_declaration") {
            refs.record_fields[{owner, *var}] = *tname;
          } else {
            refs.locals[{owner, *var}] = *tname;
          }
        }
      }
    } else if (type == "field_expression" && !(parent == "field_expression" && field_name == "argument")) {
      MemberChain chain{owner, {}, {}, start};
      TSNode e = n;
      for (int guard = 0; guard < 64 && !ts_node_is_null(e); ++guard) {
        const std::string_view et = syntax::node_type(e);
        if (et == "field_expression") {
          TSNode f = syntax::field(e, "field");
          if (!ts_node_is_null(f)) chain.fields.insert(chain.fields.begin(), std::string(syntax::node_text(f, src)));
          e = syntax::field(e, "argument");
        } else if (et == "parenthesized_expression" || et == "pointer_expression" ||
                   et == "subscript_expression") {
          TSNode inner = syntax::field(e, "argument");
          e = ts_node_is_null(inner) ? ts_node_named_child(e, 0) : inner;
        } else {
          if (et == "identifier") chain.base = std::string(syntax::node_text(e, src));
          if (et == "this") chain.base = "this";
          break;
        }
      }
      refs.chains.push_back(std::move(chain));
    }
  };

  TSTreeCursor cursor = ts_tree_cursor_new(tree.root());
  auto current_field = [&] {
    const char* f = ts_tree_cursor_current_field_name(&cursor);
    return f == nullptr ? std::string_view{} : std::string_view(f);
  };
  visit(ts_tree_cursor_current_node(&cursor), {});
  stack.push_back({syntax::node_type(ts_tree_cursor_current_node(&cursor)), {}});
  bool done = false;
  while (!done) {
    if (ts_tree_cursor_goto_first_child(&cursor)) {
      TSNode n = ts_tree_cursor_current_node(&cursor);
      visit(n, current_field());
      stack.push_back({syntax::node_type(n), current_field()});
      continue;
    }
    while (true) {
      stack.pop_back();
      if (ts_tree_cursor_goto_next_sibling(&cursor)) {
        TSNode n = ts_tree_cursor_current_node(&cursor);
        visit(n, current_field());
        stack.push_back({syntax::node_type(n), current_field()});
        break;
      }
      if (!ts_tree_cursor_goto_parent(&cursor)) {
        done = true;
        break;
      }
    }
  }
  ts_tree_cursor_delete(&cursor);
  return refs;
}

inline std::string normalize_path(std::string_view p) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= p.size()) {
    std::size_t slash = p.find('/', start);
    if (slash == std::string_view::npos) slash = p.size();
    const std::string_view part = p.substr(start, slash - start);
    if (part == "..") {
      if (!parts.empty()) parts.pop_back();
    } else if (!part.empty() && part != ".") {
      parts.push_back(part);
    }
    start = slash + 1;
  }
  std::string out;
  for (auto part : parts) {
    if (!out.empty()) out += '/';
    out += part;
  }
  return out;
}

inline std::string dirname(std::string_view path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string_view::npos ? std::string{} : std::string(path.substr(0, slash));
}

/// Resolves an include spelling to a corpus path: relative to the including
/// file, then relative to the root, then the shortest path with that suffix.
inline std::optional<std::string> resolve_include(std::string_view from_file, std::string_view spelled,
                                                  const std::set<std::string, std::less<>>& corpus_paths) {
  const std::string dir = dirname(from_file);
  const std::string relative = normalize_path(dir.empty() ? std::string(spelled) : dir + "/" + std::string(spelled));
  if (corpus_paths.contains(relative)) return relative;
  const std::string rooted = normalize_path(spelled);
  if (corpus_paths.contains(rooted)) return rooted;
  std::optional<std::string> best;
  const std::string suffix = "/" + rooted;
  for (const auto& p : corpus_paths) {
    if (p.size() > suffix.size() && p.compare(p.size() - suffix.size(), suffix.size(), suffix) == 0) {
      if (!best || p.size() < best->size()) best = p;
    }
  }
  return best;
}

}  // namespace detail

/// Builds the graph over the top-level declaration units of `units`.
/// References are linked by name: same file first, then files reachable
/// through includes, then any match in the corpus (every candidate when
/// ambiguous). Unresolvable references are tallied in diagnostics.
inline CodeGraph build_graph(std::span<const SemanticUnit> units, std::span<const pipeline::RawFile> files,
                             std::size_t jobs = 1) {
  detail::SourceMap sources;
  for (const auto& f : files) sources.emplace(f.path, &f);

  std::vector<Node> nodes;
  for (const auto& u : top_level_units(units)) {
    const auto it = sources.find(u.file);
    if (it == sources.end()) throw Error(ErrorCode::MissingSource, "no source for unit " + u.id);
    const std::string_view content = it->second->content;
    if (u.span.end > content.size()) throw Error(ErrorCode::InvalidArgument, "unit span outside file: " + u.id);
    Node n;
    n.id = u.id;
    n.kind = u.kind;
    n.file = u.file;
    n.span = u.span;
    n.name = u.name;
    n.line = 1 + static_cast<std::size_t>(std::count(content.begin(), content.begin() + u.span.begin, '\n'));
    const std::string dir = detail::dirname(u.file);
    n.module = dir.empty() ? "." : dir;
    nodes.push_back(std::move(n));
  }
  CodeGraph graph(std::move(nodes));

  // Per-file node lists.
  std::map<std::string, std::pair<std::vector<ByteSpan>, std::vector<std::size_t>>, std::less<>> by_file;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    auto& entry = by_file[graph.node(i).file];
    entry.first.push_back(graph.node(i).span);
    entry.second.push_back(i);
  }

  std::vector<const pipeline::RawFile*> parsed;
  for (const auto& f : files)
    if (f.language != pipeline::Language::Other) parsed.push_back(&f);
  std::sort(parsed.begin(), parsed.end(),
            [](const pipeline::RawFile* a, const pipeline::RawFile* b) { return a->path < b->path; });

  std::vector<detail::FileRefs> refs(parsed.size());
  parallel_for(parsed.size(), jobs, [&](std::size_t, std::size_t i) {
    const auto tree = syntax::parse_to_ast(*parsed[i]);
    static const std::pair<std::vector<ByteSpan>, std::vector<std::size_t>> kEmpty;
    const auto it = by_file.find(parsed[i]->path);
    const auto& lists = it == by_file.end() ? kEmpty : it->second;
    refs[i] = detail::extract_refs(tree, lists.first, lists.second);
  });

  // Include graph between files.
  std::set<std::string, std::less<>> corpus_paths;
  for (const auto& f : files) corpus_paths.insert(f.path);
  std::map<std::string, std::vector<std::string>, std::less<>> includes;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    auto& list = includes[parsed[i]->path];
    for (const auto& spelled : refs[i].includes) {
      if (auto target = detail::resolve_include(parsed[i]->path, spelled, corpus_paths)) {
        if (*target != parsed[i]->path && std::find(list.begin(), list.end(), *target) == list.end())
          list.push_back(*target);
      } else {
        ++graph.diagnostics.unresolved_includes;
      }
    }
  }
  std::map<std::string, std::set<std::string>, std::less<>> reachable_cache;
  auto reachable = [&](const std::string& file) -> const std::set<std::string>& {
    auto [it, inserted] = reachable_cache.try_emplace(file);
    if (!inserted) return it->second;
    std::deque<std::string> queue{file};
    std::set<std::string> seen{file};
    while (!queue.empty()) {
      const std::string cur = queue.front();
      queue.pop_front();
      const auto inc = includes.find(cur);
      if (inc == includes.end()) continue;
      for (const auto& next : inc->second)
        if (seen.insert(next).second) queue.push_back(next);
    }
    seen.erase(file);
    it->second = std::move(seen);
    return it->second;
  };

  std::map<std::string, std::vector<std::size_t>, std::less<>> functions, records, macros;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.node(i);
    if (!n.name) continue;
    switch (n.kind) {
      case UnitKind::FunctionDef: functions[*n.name].push_back(i); break;
      case UnitKind::RecordTypeDef:
      case UnitKind::ClassDef: records[*n.name].push_back(i); break;
      case UnitKind::MacroDef: macros[*n.name].push_back(i); break;
      default: break;
    }
  }

  auto resolve = [&](const std::map<std::string, std::vector<std::size_t>, std::less<>>& table,
                     std::string_view name, std::size_t from) -> std::vector<std::size_t> {
    const auto it = table.find(name);
    if (it == table.end()) return {};
    const std::string& file = graph.node(from).file;
    std::vector<std::size_t> same, via_include;
    const auto& reach = reachable(file);
    for (std::size_t c : it->second) {
      if (graph.node(c).file == file) same.push_back(c);
      else if (reach.contains(graph.node(c).file)) via_include.push_back(c);
    }
    const auto& chosen = !same.empty() ? same : !via_include.empty() ? via_include : it->second;
    if (chosen.size() > 1) ++graph.diagnostics.ambiguous_references;
    return chosen;
  };

  auto link = [&](std::size_t from, std::size_t to, EdgeKind kind, std::size_t site) {
    if (from == to) {
      if (kind != EdgeKind::DirectCall) return;
      if (graph.add_edge(from, to, kind, site)) ++graph.diagnostics.self_edges;
      return;
    }
    graph.add_edge(from, to, kind, site);
  };

  std::map<std::pair<std::size_t, std::string>, std::string> record_fields;
  for (const auto& r : refs) record_fields.insert(r.record_fields.begin(), r.record_fields.end());

  for (std::size_t fi = 0; fi < parsed.size(); ++fi) {
    const auto& r = refs[fi];
    for (const auto& call : r.calls) {
      auto targets = resolve(macros, call.name, call.owner);
      const EdgeKind kind = targets.empty() ? EdgeKind::DirectCall : EdgeKind::MacroExpansion;
      if (targets.empty()) targets = resolve(functions, call.name, call.owner);
      if (targets.empty()) ++graph.diagnostics.unresolved_calls;
      for (std::size_t t : targets) link(call.owner, t, kind, call.site);
    }
    for (const auto& id : r.idents) {
      for (std::size_t t : resolve(macros, id.name, id.owner)) link(id.owner, t, EdgeKind::MacroExpansion, id.site);
    }
    for (const auto& ty : r.types) {
      const auto targets = resolve(records, ty.name, ty.owner);
      if (targets.empty() && !macros.contains(ty.name)) ++graph.diagnostics.unresolved_types;
      for (std::size_t t : targets) link(ty.owner, t, EdgeKind::TypeUsage, ty.site);
    }
    for (const auto& chain : r.chains) {
      std::optional<std::string> type;
      if (chain.base == "this") {
        type = graph.node(chain.owner).name;
      } else if (!chain.base.empty()) {
        const auto it = r.locals.find({chain.owner, chain.base});
        if (it != r.locals.end()) type = it->second;
      }
      if (!type) {
        ++graph.diagnostics.unresolved_members;
        continue;
      }
      for (const auto& field_name : chain.fields) {
        const auto targets = resolve(records, *type, chain.owner);
        if (targets.empty()) {
          ++graph.diagnostics.unresolved_members;
          break;
        }
        std::optional<std::string> next;
        for (std::size_t t : targets) {
          link(chain.owner, t, EdgeKind::MemberReference, chain.site);
          if (!next) {
            const auto f = record_fields.find({t, field_name});
            if (f != record_fields.end()) next = f->second;
          }
        }
        if (!next) break;
        type = next;
      }
    }
  }

  // File-level include dependencies, lifted to every unit pair.
  for (std::size_t fi = 0; fi < parsed.size(); ++fi) {
    const auto from_it = by_file.find(parsed[fi]->path);
    if (from_it == by_file.end()) continue;
    for (const auto& target : includes[parsed[fi]->path]) {
      const auto to_it = by_file.find(target);
      if (to_it == by_file.end()) continue;
      for (std::size_t u : from_it->second.second)
        for (std::size_t v : to_it->second.second)
          link(u, v, EdgeKind::IncludeDependency, std::numeric_limits<std::size_t>::max());
    }
  }
  return graph;
}

/// Extracts units from every C/C++ file and builds the graph over them.
inline CodeGraph build_graph(std::span<const pipeline::RawFile> files, std::size_t jobs = 1) {
  std::vector<std::vector<SemanticUnit>> per_file(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t, std::size_t i) {
    if (files[i].language == pipeline::Language::Other) return;
    per_file[i] = segment::extract_semantic_units(syntax::parse_to_ast(files[i]));
  });
  std::vector<SemanticUnit> units;
  for (auto& v : per_file) std::move(v.begin(), v.end(), std::back_inserter(units));
  return build_graph(units, files, jobs);
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

/// Up to k outgoing edges to distinct targets, ranked by the strategy's
/// kind priority, then by reference site, then by target order. Self-edges
/// are never selected.
inline std::vector<Edge> select_edges(std::size_t node, const CodeGraph& graph, std::size_t k,
                                      PathStrategy strategy) {
  std::vector<Edge> edges = graph.out_edges(node);
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    return std::make_tuple(edge_rank(a.kind, strategy), a.site, a.to) <
           std::make_tuple(edge_rank(b.kind, strategy), b.site, b.to);
  });
  std::vector<Edge> out;
  std::set<std::size_t> seen;
  for (const Edge& e : edges) {
    if (out.size() >= k) break;
    if (e.to == node || !seen.insert(e.to).second) continue;
    out.push_back(e);
  }
  return out;
}

struct GraphPath {
  std::vector<std::size_t> nodes;

  std::size_t depth() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }
  friend auto operator<=>(const GraphPath&, const GraphPath&) = default;
};

/// Breadth-first enumeration of node-simple paths with depth <= max_depth,
/// following at most `breadth` selected edges from each node. Every node is
/// a depth-0 path. Output is grouped by depth.
inline std::vector<GraphPath> enumerate_paths(const CodeGraph& graph, std::size_t max_depth, std::size_t breadth,
                                              PathStrategy strategy) {
  if (breadth == 0) throw Error(ErrorCode::InvalidArgument, "breadth k must be >= 1");
  std::vector<std::vector<std::size_t>> successors(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (const Edge& e : select_edges(i, graph, breadth, strategy)) successors[i].push_back(e.to);

  std::vector<GraphPath> out;
  std::deque<GraphPath> queue;
  for (std::size_t i = 0; i < graph.size(); ++i) queue.push_back({{i}});
  while (!queue.empty()) {
    GraphPath p = std::move(queue.front());
    queue.pop_front();
    if (p.depth() < max_depth) {
      for (std::size_t next : successors[p.nodes.back()]) {
        if (std::find(p.nodes.begin(), p.nodes.end(), next) != p.nodes.end()) continue;
        GraphPath q = p;
        q.nodes.push_back(next);
        queue.push_back(std::move(q));
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct PathSample {
  std::string text;
  GraphPath path;
  std::size_t token_count = 0;
  std::vector<std::string> unit_ids;
  std::vector<std::string> files;
};

inline std::string file_annotation(std::string_view path) { return "/* file: " + std::string(path) + " */"; }

struct RenderOptions {
  bool dependency_first = false;  // reverse segment order
};

/// Concatenates unit code in path order, one blank line between segments.
/// A segment whose file differs from the previous segment's file is
/// preceded by a `/* file: <path> */` line. Throws MissingSource.
inline PathSample render_sample(const GraphPath& path, const CodeGraph& graph,
                                std::span<const pipeline::RawFile> corpus, const RenderOptions& opts = {}) {
  std::map<std::string_view, std::string_view> sources;
  for (const auto& f : corpus) sources.emplace(f.path, f.content);

  std::vector<std::size_t> order = path.nodes;
  if (opts.dependency_first) std::reverse(order.begin(), order.end());

  PathSample sample;
  sample.path = path;
  const std::string* prev_file = nullptr;
  for (std::size_t idx : order) {
    const Node& n = graph.node(idx);
    const auto it = sources.find(n.file);
    if (it == sources.end()) throw Error(ErrorCode::MissingSource, "source file missing: " + n.file);
    if (n.span.end > it->second.size()) throw Error(ErrorCode::MissingSource, "span outside source: " + n.id);
    if (prev_file != nullptr) sample.text += "\n\n";
    if (prev_file != nullptr && *prev_file != n.file) {
      sample.text += file_annotation(n.file);
      sample.text += '\n';
    }
    sample.text += it->second.substr(n.span.begin, n.span.size());
    prev_file = &n.file;
    sample.unit_ids.push_back(n.id);
    if (std::find(sample.files.begin(), sample.files.end(), n.file) == sample.files.end())
      sample.files.push_back(n.file);
  }
  sample.token_count = text::tokenize(sample.text).size();
  return sample;
}

struct ComplexityEstimate {
  std::size_t node_count = 0;
  double avg_outdegree = 0.0;
  double mean_path_len = 0.0;
  std::size_t depth = 0;
  double predicted_ops = 0.0;

  /// n + n*d + n*d^D*m
  static ComplexityEstimate from_terms(std::size_t n, double d, std::size_t depth, double m) {
    ComplexityEstimate e{n, d, m, depth, 0.0};
    const double nn = static_cast<double>(n);
    e.predicted_ops = nn + nn * d + nn * std::pow(d, static_cast<double>(depth)) * m;
    return e;
  }
};

/// Measured n, mean out-degree and mean path length (units per path).
inline ComplexityEstimate estimate_complexity(const CodeGraph& graph, std::size_t depth,
                                              std::span<const GraphPath> paths) {
  if (graph.size() == 0) return {};
  const double d = static_cast<double>(graph.edges().size()) / graph.size();
  double m = 0.0;
  if (!paths.empty()) {
    std::size_t total = 0;
    for (const auto& p : paths) total += p.nodes.size();
    m = static_cast<double>(total) / paths.size();
  }
  return ComplexityEstimate::from_terms(graph.size(), d, depth, m);
}

struct SpsrOptions {
  std::size_t depth = 1;
  std::size_t breadth = 4;
  PathStrategy strategy = PathStrategy::ForwardCall;
  std::size_t max_tokens = 0;  // 0 = unlimited
  bool dependency_first = false;
  std::size_t jobs = 1;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (breadth == 0) out.push_back("graph.breadth must be >= 1");
    return out;
  }
};

struct SpsrResult {
  CodeGraph graph;
  std::size_t path_count = 0;
  std::size_t truncated = 0;
  std::vector<PathSample> samples;
};

/// build_graph -> enumerate_paths -> render_sample. Samples above
/// max_tokens lose trailing units until they fit; a unit is never split and
/// the first unit always survives.
inline SpsrResult generate_spsr_corpus(std::span<const pipeline::RawFile> corpus, const SpsrOptions& opts) {
  SpsrResult result;
  result.graph = build_graph(corpus, opts.jobs);
  const auto paths = enumerate_paths(result.graph, opts.depth, opts.breadth, opts.strategy);
  result.path_count = paths.size();
  result.samples.resize(paths.size());
  const RenderOptions render{opts.dependency_first};
  std::vector<char> truncated(paths.size(), 0);
  parallel_for(paths.size(), opts.jobs, [&](std::size_t, std::size_t i) {
    GraphPath p = paths[i];
    PathSample s = render_sample(p, result.graph, corpus, render);
    while (opts.max_tokens > 0 && s.token_count > opts.max_tokens && p.nodes.size() > 1) {
      p.nodes.pop_back();
      s = render_sample(p, result.graph, corpus, render);
      truncated[i] = 1;
    }
    result.samples[i] = std::move(s);
  });
  result.truncated = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  return result;
}

inline nlohmann::ordered_json graph_json(const CodeGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes()) {
    nlohmann::ordered_json node;
    node["id"] = n.id;
    node["kind"] = segment::to_string(n.kind);
    node["file"] = n.file;
    node["span"] = {n.span.begin, n.span.end};
    node["name"] = n.name ? nlohmann::ordered_json(*n.name) : nlohmann::ordered_json(nullptr);
    node["line"] = n.line;
    node["module"] = n.module;
    j["nodes"].push_back(std::move(node));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) {
    j["edges"].push_back({{"from", g.node(e.from).id}, {"to", g.node(e.to).id}, {"kind", to_string(e.kind)}});
  }
  const auto& d = g.diagnostics;
  j["diagnostics"] = {{"unresolved_calls", d.unresolved_calls},
                      {"unresolved_types", d.unresolved_types},
                      {"unresolved_members", d.unresolved_members},
                      {"unresolved_includes", d.unresolved_includes},
                      {"ambiguous_references", d.ambiguous_references},
                      {"self_edges", d.self_edges}};
  return j;
}

inline nlohmann::ordered_json path_sample_json(const PathSample& s) {
  nlohmann::ordered_json j;
  j["text"] = s.text;
  j["unit_ids"] = s.unit_ids;
  j["files"] = s.files;
  j["depth"] = s.path.depth();
  return j;
}

}  // namespace forge::graph
