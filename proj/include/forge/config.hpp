#pragma once

// Build configuration: one JSON document with pipeline / fim / graph /
// adoption sections. Missing keys take defaults; unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forge/adoption.hpp"
#include "forge/error.hpp"
#include "forge/graph.hpp"
#include "forge/hash.hpp"
#include "forge/pipeline.hpp"
#include "forge/segmenter.hpp"
#include "forge/text.hpp"
#include "json.hpp"

namespace forge::config {

struct PipelineSection {
  pipeline::FilterConfig filter;
  pipeline::CleanOptions clean;
  pipeline::MinHashConfig minhash;
  double fuzzy_threshold = 0.85;
};

struct FimSection {
  segment::GranularityRange range;
  std::string mask_token = std::string(segment::kDefaultMaskToken);
  std::uint64_t seed = 0;
  double sampling_rate = 1.0;
  std::size_t greedy_window = 0;  // 0 = no baseline output
};

struct GraphSection {
  std::size_t depth = 1;
  std::size_t breadth = 4;
  graph::PathStrategy strategy = graph::PathStrategy::ForwardCall;
  std::size_t max_tokens = 0;
  bool dependency_first = false;
};

struct AdoptionSection {
  std::size_t min_daily = 100;
  adoption::BinSpec bins;
  bool contradiction_proxy = true;
};

struct ForgeConfig {
  PipelineSection pipeline;
  FimSection fim;
  GraphSection graph;
  AdoptionSection adoption;
  std::size_t jobs = 0;  // 0 = hardware concurrency

  std::size_t effective_jobs() const { return jobs == 0 ? default_jobs() : jobs; }

  pipeline::PipelineOptions pipeline_options() const {
    return {pipeline.filter, pipeline.clean, pipeline.minhash, pipeline.fuzzy_threshold, effective_jobs()};
  }

  graph::SpsrOptions spsr_options() const {
    return {graph.depth, graph.breadth, graph.strategy, graph.max_tokens, graph.dependency_first, effective_jobs()};
  }

  /// Every invariant violation across all sections.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto append = [&](std::vector<std::string> v) { out.insert(out.end(), v.begin(), v.end()); };
    append(pipeline.filter.violations());
    append(pipeline.minhash.violations());
    if (!(pipeline.fuzzy_threshold >= 0.0 && pipeline.fuzzy_threshold <= 1.0))
      out.push_back("pipeline.fuzzy_threshold must lie in [0, 1]");
    append(fim.range.violations());
    if (fim.mask_token.empty()) out.push_back("fim.mask_token must not be empty");
    if (!(fim.sampling_rate > 0.0 && fim.sampling_rate <= 1.0)) out.push_back("fim.sampling_rate must lie in (0, 1]");
    if (graph.breadth == 0) out.push_back("graph.breadth must be >= 1");
    if (adoption.min_daily == 0) out.push_back("adoption.min_daily must be >= 1");
    append(adoption.bins.violations());
    return out;
  }
};

/// Canonical JSON form of every effective value; the config hash is taken
/// over its compact dump.
inline nlohmann::ordered_json to_json(const ForgeConfig& c) {
  nlohmann::ordered_json j;
  const auto& f = c.pipeline.filter;
  j["pipeline"] = {{"max_line_len", f.max_line_len},
                   {"min_line_len", f.min_line_len},
                   {"max_avg_line_len", f.max_avg_line_len},
                   {"min_alnum_ratio", f.min_alnum_ratio},
                   {"min_total_chars", f.min_total_chars},
                   {"excluded_extensions", f.excluded_extensions},
                   {"strip_comments", c.pipeline.clean.strip_comments},
                   {"shingle_k", c.pipeline.minhash.shingle_k},
                   {"num_perms", c.pipeline.minhash.num_perms},
                   {"minhash_seed", c.pipeline.minhash.seed},
                   {"fuzzy_threshold", c.pipeline.fuzzy_threshold}};
  j["fim"] = {{"theta_min", c.fim.range.theta_min},
              {"theta_max", c.fim.range.theta_max},
              {"size_unit", c.fim.range.unit == segment::SizeUnit::Tokens ? "tokens" : "nodes"},
              {"mask_token", c.fim.mask_token},
              {"seed", c.fim.seed},
              {"sampling_rate", c.fim.sampling_rate},
              {"greedy_window", c.fim.greedy_window}};
  j["graph"] = {{"depth", c.graph.depth},
                {"breadth", c.graph.breadth},
                {"strategy", graph::to_string(c.graph.strategy)},
                {"max_tokens", c.graph.max_tokens},
                {"dependency_first", c.graph.dependency_first}};
  j["adoption"] = {{"min_daily", c.adoption.min_daily},
                   {"bin_width", c.adoption.bins.width},
                   {"overflow_width", c.adoption.bins.overflow_width},
                   {"overflow_max", c.adoption.bins.overflow_max},
                   {"contradiction_proxy", c.adoption.contradiction_proxy}};
  return j;
}

/// SHA-256 over the canonical dump. Worker count is excluded: it never
/// changes outputs.
inline std::string config_hash(const ForgeConfig& c) { return sha256_hex(to_json(c).dump()); }

namespace detail {

using Setter = std::function<void(const nlohmann::json&, const std::string& key, std::vector<std::string>& errors)>;

inline Setter count(std::size_t& dst) {
  return [&dst](const nlohmann::json& v, const std::string& key, std::vector<std::string>& errors) {
    if (v.is_number_unsigned()) dst = v.get<std::size_t>();
    else if (v.is_number_integer()) errors.push_back(key + " must be non-negative");
    else errors.push_back(key + " must be an integer");
  };
}

inline Setter u64(std::uint64_t& dst) {
  return [&dst](const nlohmann::json& v, const std::string& key, std::vector<std::string>& errors) {
    if (v.is_number_unsigned()) dst = v.get<std::uint64_t>();
    else errors.push_back(key + " must be a non-negative integer");
  };
}

inline Setter real(double& dst) {
  return [&dst](const nlohmann::json& v, const std::string& key, std::vector<std::string>& errors) {
    if (v.is_number()) dst = v.get<double>();
    else errors.push_back(key + " must be a number");
  };
}

inline Setter boolean(bool& dst) {
  return [&dst](const nlohmann::json& v, const std::string& key, std::vector<std::string>& errors) {
    if (v.is_boolean()) dst = v.get<bool>();
    else errors.push_back(key + " must be true or false");
  };
}

inline Setter string(std::string& dst) {
  return [&dst](const nlohmann::json& v, const std::string& key, std::vector<std::string>& errors) {
    if (v.is_string()) dst = v.get<std::string>();
    else errors.push_back(key + " must be a string");
  };
}

inline void apply_section(const nlohmann::json& section, const std::string& name,
                          const std::map<std::string, Setter>& setters, std::vector<std::string>& errors) {
  if (!section.is_object()) {
    errors.push_back(name + " must be an object");
    return;
  }
  for (const auto& [key, value] : section.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      errors.push_back("unknown key " + name + "." + key);
      continue;
    }
    it->second(value, name + "." + key, errors);
  }
}

}  // namespace detail

/// Parses a config document. Blank text yields defaults. Throws ConfigError
/// listing every problem found: syntax, unknown keys, types and invariants.
inline ForgeConfig parse_config(std::string_view body) {
  ForgeConfig cfg;
  if (text::trim(body).empty()) return cfg;
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw ConfigError({"config is not valid JSON"});
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object"});

  std::vector<std::string> errors;
  std::string size_unit, strategy;
  std::vector<std::string> excluded;
  bool excluded_set = false;

  auto& f = cfg.pipeline.filter;
  const std::map<std::string, detail::Setter> pipeline_keys = {
      {"max_line_len", detail::count(f.max_line_len)},
      {"min_line_len", detail::count(f.min_line_len)},
      {"max_avg_line_len", detail::real(f.max_avg_line_len)},
      {"min_alnum_ratio", detail::real(f.min_alnum_ratio)},
      {"min_total_chars", detail::count(f.min_total_chars)},
      {"excluded_extensions",
       [&](const nlohmann::json& v, const std::string& key, std::vector<std::string>& errs) {
         excluded_set = true;
         if (!v.is_array()) {
           errs.push_back(key + " must be an array of strings");
           return;
         }
         for (const auto& e : v) {
           if (e.is_string()) excluded.push_back(e.get<std::string>());
           else errs.push_back(key + " must be an array of strings");
         }
       }},
      {"strip_comments", detail::boolean(cfg.pipeline.clean.strip_comments)},
      {"shingle_k", detail::count(cfg.pipeline.minhash.shingle_k)},
      {"num_perms", detail::count(cfg.pipeline.minhash.num_perms)},
      {"minhash_seed", detail::u64(cfg.pipeline.minhash.seed)},
      {"fuzzy_threshold", detail::real(cfg.pipeline.fuzzy_threshold)},
  };
  const std::map<std::string, detail::Setter> fim_keys = {
      {"theta_min", detail::count(cfg.fim.range.theta_min)},
      {"theta_max", detail::count(cfg.fim.range.theta_max)},
      {"size_unit", detail::string(size_unit)},
      {"mask_token", detail::string(cfg.fim.mask_token)},
      {"seed", detail::u64(cfg.fim.seed)},
      {"sampling_rate", detail::real(cfg.fim.sampling_rate)},
      {"greedy_window", detail::count(cfg.fim.greedy_window)},
  };
  const std::map<std::string, detail::Setter> graph_keys = {
      {"depth", detail::count(cfg.graph.depth)},
      {"breadth", detail::count(cfg.graph.breadth)},
      {"strategy", detail::string(strategy)},
      {"max_tokens", detail::count(cfg.graph.max_tokens)},
      {"dependency_first", detail::boolean(cfg.graph.dependency_first)},
  };
  const std::map<std::string, detail::Setter> adoption_keys = {
      {"min_daily", detail::count(cfg.adoption.min_daily)},
      {"bin_width", detail::real(cfg.adoption.bins.width)},
      {"overflow_width", detail::real(cfg.adoption.bins.overflow_width)},
      {"overflow_max", detail::real(cfg.adoption.bins.overflow_max)},
      {"contradiction_proxy", detail::boolean(cfg.adoption.contradiction_proxy)},
  };

  for (const auto& [name, section] : doc.items()) {
    if (name == "pipeline") detail::apply_section(section, name, pipeline_keys, errors);
    else if (name == "fim") detail::apply_section(section, name, fim_keys, errors);
    else if (name == "graph") detail::apply_section(section, name, graph_keys, errors);
    else if (name == "adoption") detail::apply_section(section, name, adoption_keys, errors);
    else if (name == "jobs") detail::count(cfg.jobs)(section, name, errors);
    else errors.push_back("unknown key " + name);
  }

  if (excluded_set) {
    f.excluded_extensions.clear();
    for (auto& e : excluded) {
      if (!e.empty() && e.front() == '.') e.erase(0, 1);
      f.excluded_extensions.insert(text::to_lower(e));
    }
  }
  if (!size_unit.empty()) {
    if (size_unit == "tokens") cfg.fim.range.unit = segment::SizeUnit::Tokens;
    else if (size_unit == "nodes") cfg.fim.range.unit = segment::SizeUnit::Nodes;
    else errors.push_back("fim.size_unit must be \"tokens\" or \"nodes\"");
  }
  if (!strategy.empty()) {
    if (auto s = graph::strategy_from_string(strategy)) cfg.graph.strategy = *s;
    else errors.push_back("graph.strategy must be forward-call, field-access or header-inclusion");
  }

  const auto invariants = cfg.violations();
  errors.insert(errors.end(), invariants.begin(), invariants.end());
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

/// Reads and validates a config file. An unreadable file is a config error.
inline ForgeConfig validate_config(const std::filesystem::path& path) {
  std::string body;
  try {
    body = text::read_file(path);
  } catch (const Error& e) {
    throw ConfigError({std::string("cannot read config: ") + e.what()});
  }
  return parse_config(body);
}

}  // namespace forge::config
