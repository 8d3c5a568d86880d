#pragma once

// Independent reference implementations used to check the library.
// None of these call into the code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "forge/graph.hpp"
#include "forge/hash.hpp"
#include "forge/syntax.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

inline bool is_subsequence(const std::u32string& needle, const std::u32string& hay) {
  std::size_t j = 0;
  for (char32_t c : hay)
    if (j < needle.size() && needle[j] == c) ++j;
  return j == needle.size();
}

/// Tries every subsequence of the shorter string. Exponential; keep inputs small.
inline std::size_t brute_force_lcs(const std::u32string& a, const std::u32string& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  const std::uint32_t limit = 1u << small.size();
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    std::u32string sub;
    for (std::size_t i = 0; i < small.size(); ++i)
      if (mask & (1u << i)) sub += small[i];
    if (is_subsequence(sub, big)) best = bits;
  }
  return best;
}

inline std::size_t naive_lcp(const std::u32string& a, const std::u32string& b) {
  std::size_t k = 0;
  while (k < a.size() && k < b.size() && a[k] == b[k]) ++k;
  return k;
}

// ---------------------------------------------------------------------------
// Sets
// ---------------------------------------------------------------------------

inline double exact_jaccard(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (auto x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// Two sets of `size` elements with |A ∩ B| chosen so that J = inter / (2 size - inter)
/// is as close as possible to `jaccard`. Returns the realised J.
inline double make_sets_with_jaccard(double jaccard, std::size_t size, forge::SplitMix64& rng,
                                     std::vector<std::uint64_t>& a, std::vector<std::uint64_t>& b) {
  const auto inter = static_cast<std::size_t>(std::llround(2.0 * jaccard * size / (1.0 + jaccard)));
  a.clear();
  b.clear();
  std::set<std::uint64_t> used;
  auto fresh = [&] {
    std::uint64_t v;
    do v = rng.next();
    while (!used.insert(v).second);
    return v;
  };
  for (std::size_t i = 0; i < inter; ++i) {
    const auto v = fresh();
    a.push_back(v);
    b.push_back(v);
  }
  for (std::size_t i = inter; i < size; ++i) a.push_back(fresh());
  for (std::size_t i = inter; i < size; ++i) b.push_back(fresh());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return static_cast<double>(inter) / static_cast<double>(2 * size - inter);
}

// ---------------------------------------------------------------------------
// Pearson in 50-digit arithmetic
// ---------------------------------------------------------------------------

using big = boost::multiprecision::cpp_bin_float_50;

struct BigPearson {
  double r;
  double p;
};

inline BigPearson pearson_reference(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  big mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += big(xs[i]);
    my += big(ys[i]);
  }
  mx /= n;
  my /= n;
  big sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const big dx = big(xs[i]) - mx;
    const big dy = big(ys[i]) - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const big r = sxy / sqrt(sxx * syy);
  // Student t with n-2 degrees of freedom, two-tailed.
  const big df = big(n - 2);
  const big t2 = r * r * df / (1 - r * r);
  const big x = df / (df + t2);
  const big p = boost::math::ibeta(df / 2, big(0.5), x);
  return {static_cast<double>(r), static_cast<double>(p)};
}

// ---------------------------------------------------------------------------
// Graph paths
// ---------------------------------------------------------------------------

struct RawEdge {
  std::size_t from;
  std::size_t to;
  forge::graph::EdgeKind kind;
  std::size_t site;
};

/// Kind priority for the forward-call strategy, restated here on purpose.
inline int forward_rank(forge::graph::EdgeKind k) {
  using K = forge::graph::EdgeKind;
  static const std::map<K, int> rank = {{K::DirectCall, 0}, {K::MacroExpansion, 1}, {K::TypeUsage, 2},
                                        {K::MemberReference, 3}, {K::IncludeDependency, 4}};
  return rank.at(k);
}

/// First k distinct, non-self targets of each node, in forward-call order.
inline std::vector<std::vector<std::size_t>> truncated_adjacency(std::size_t n, const std::vector<RawEdge>& edges,
                                                                 std::size_t k) {
  // Keep one entry per (from, to, kind) with the smallest site, as the graph does.
  std::map<std::tuple<std::size_t, std::size_t, forge::graph::EdgeKind>, std::size_t> unique;
  for (const auto& e : edges) {
    auto key = std::make_tuple(e.from, e.to, e.kind);
    auto it = unique.find(key);
    if (it == unique.end() || e.site < it->second) unique[key] = e.site;
  }
  std::vector<std::vector<std::tuple<int, std::size_t, std::size_t>>> ranked(n);
  for (const auto& [key, site] : unique) {
    const auto [from, to, kind] = key;
    if (from == to) continue;
    ranked[from].emplace_back(forward_rank(kind), site, to);
  }
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t u = 0; u < n; ++u) {
    std::sort(ranked[u].begin(), ranked[u].end());
    for (const auto& [rank, site, to] : ranked[u]) {
      if (adj[u].size() == k) break;
      if (std::find(adj[u].begin(), adj[u].end(), to) == adj[u].end()) adj[u].push_back(to);
    }
  }
  return adj;
}

/// Depth-first enumeration of every node-simple path of length <= depth.
inline std::vector<std::vector<std::size_t>> brute_force_paths(const std::vector<std::vector<std::size_t>>& adj,
                                                               std::size_t depth) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> path;
  auto dfs = [&](auto& self, std::size_t u) -> void {
    path.push_back(u);
    out.push_back(path);
    if (path.size() - 1 < depth) {
      for (std::size_t v : adj[u])
        if (std::find(path.begin(), path.end(), v) == path.end()) self(self, v);
    }
    path.pop_back();
  };
  for (std::size_t u = 0; u < adj.size(); ++u) dfs(dfs, u);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Comment stripping via the parser's own comment nodes
// ---------------------------------------------------------------------------

/// Removes every `comment` node the grammar reports: a comment spanning
/// lines keeps only its newlines, a single-line block comment followed by
/// more code on the line becomes one space, anything else disappears.
inline std::string strip_comments_via_parser(const std::string& src, forge::pipeline::Language lang) {
  const auto tree = forge::syntax::parse_text("oracle", src, lang);
  std::vector<forge::syntax::ByteSpan> comments;
  std::vector<TSNode> stack{tree.root()};
  while (!stack.empty()) {
    TSNode n = stack.back();
    stack.pop_back();
    if (forge::syntax::node_type(n) == "comment") {
      comments.push_back(forge::syntax::node_span(n));
      continue;
    }
    for (std::uint32_t i = 0; i < ts_node_child_count(n); ++i) stack.push_back(ts_node_child(n, i));
  }
  std::sort(comments.begin(), comments.end());
  std::string out;
  std::size_t pos = 0;
  for (const auto& c : comments) {
    out.append(src, pos, c.begin - pos);
    const std::string body = src.substr(c.begin, c.size());
    const auto newlines = std::count(body.begin(), body.end(), '\n');
    const bool block = body.rfind("/*", 0) == 0;
    if (newlines > 0) {
      out.append(static_cast<std::size_t>(newlines), '\n');
    } else if (block) {
      out += ' ';
    }
    pos = c.end;
  }
  out.append(src, pos, std::string::npos);
  return out;
}

}  // namespace oracle
