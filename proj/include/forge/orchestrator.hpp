#pragma once

// End-to-end corpus build: pipeline -> fim -> graph, with a manifest.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/graph.hpp"
#include "forge/parallel.hpp"
#include "forge/pipeline.hpp"
#include "forge/segmenter.hpp"
#include "forge/text.hpp"
#include "json.hpp"

namespace forge::orchestrator {

enum class Stage { Pipeline, Fim, Graph };

inline constexpr Stage kAllStages[] = {Stage::Pipeline, Stage::Fim, Stage::Graph};

constexpr std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::Pipeline: return "pipeline";
    case Stage::Fim: return "fim";
    case Stage::Graph: return "graph";
  }
  return "pipeline";
}

inline std::optional<Stage> stage_from_string(std::string_view s) {
  for (Stage st : kAllStages)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

using StageSet = std::set<Stage>;

inline std::string utc_now_rfc3339() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct FimStageResult {
  std::vector<segment::FimSample> samples;
  std::vector<segment::FimSample> greedy;
  std::size_t files = 0;
  std::size_t units = 0;
  std::size_t size_rejected = 0;
  std::size_t incomplete = 0;
  std::size_t files_without_eligible = 0;
  std::size_t skipped_other_language = 0;
};

/// FIM cuts over every C/C++ file of the corpus, in corpus order.
inline FimStageResult run_fim(std::span<const pipeline::RawFile> corpus, const config::FimSection& cfg,
                              std::size_t jobs) {
  FimStageResult out;
  std::vector<segment::FimCutResult> cuts(corpus.size());
  std::vector<std::vector<segment::FimSample>> greedy(corpus.size());
  std::vector<char> parsed(corpus.size(), 0);
  const segment::CutOptions opts{cfg.sampling_rate};
  parallel_for(corpus.size(), jobs, [&](std::size_t, std::size_t i) {
    if (corpus[i].language == pipeline::Language::Other) return;
    parsed[i] = 1;
    cuts[i] = segment::cut_fim_samples(corpus[i], cfg.range, cfg.mask_token, cfg.seed, opts);
    if (cfg.greedy_window > 0)
      greedy[i] = segment::greedy_cut_baseline(corpus[i].content, cfg.greedy_window, corpus[i].path, cfg.mask_token);
  });
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!parsed[i]) {
      ++out.skipped_other_language;
      continue;
    }
    ++out.files;
    out.units += cuts[i].units;
    out.size_rejected += cuts[i].size_rejected;
    out.incomplete += cuts[i].incomplete;
    out.files_without_eligible += cuts[i].no_eligible_units;
    std::move(cuts[i].samples.begin(), cuts[i].samples.end(), std::back_inserter(out.samples));
    std::move(greedy[i].begin(), greedy[i].end(), std::back_inserter(out.greedy));
  }
  return out;
}

inline std::string fim_jsonl(std::span<const segment::FimSample> samples) {
  std::string out;
  for (const auto& s : samples) {
    out += segment::fim_sample_json(s).dump();
    out += '\n';
  }
  return out;
}

inline std::string spsr_jsonl(std::span<const graph::PathSample> samples) {
  std::string out;
  for (const auto& s : samples) {
    out += graph::path_sample_json(s).dump();
    out += '\n';
  }
  return out;
}

struct BuildManifest {
  nlohmann::ordered_json json;

  /// Manifest without the wall-clock field, for reproducibility checks.
  nlohmann::ordered_json without_timestamp() const {
    auto j = json;
    j.erase("generated_at");
    return j;
  }
};

struct BuildOptions {
  std::optional<std::string> generated_at;  // fixed timestamp; wall clock when unset
};

/// Runs the requested stages in the fixed order pipeline -> fim -> graph.
/// Later stages without a pipeline run in the same invocation read
/// out_dir/corpus.jsonl. On failure the manifest is still written with the
/// counts of completed stages, their outputs are left in place, and
/// StageError names the failing stage.
inline BuildManifest run_end_to_end(const std::filesystem::path& repo_dir, const std::filesystem::path& out_dir,
                                    const config::ForgeConfig& cfg, const StageSet& stages,
                                    const BuildOptions& opts = {}) {
  BuildManifest manifest;
  auto& m = manifest.json;
  m["generated_at"] = opts.generated_at.value_or(utc_now_rfc3339());
  m["config_hash"] = config::config_hash(cfg);
  m["stages"] = nlohmann::ordered_json::array();
  for (Stage s : kAllStages)
    if (stages.contains(s)) m["stages"].push_back(to_string(s));
  m["status"] = "ok";

  auto write_manifest = [&] { text::write_file(out_dir / "manifest.json", m.dump(2) + "\n"); };
  const std::size_t jobs = cfg.effective_jobs();
  std::optional<std::vector<pipeline::RawFile>> corpus;

  auto load_corpus = [&](Stage stage) -> const std::vector<pipeline::RawFile>& {
    if (!corpus) {
      const auto path = out_dir / "corpus.jsonl";
      if (!std::filesystem::exists(path))
        throw StageError(std::string(to_string(stage)), "no corpus.jsonl in output directory; run the pipeline stage");
      corpus = pipeline::parse_corpus_jsonl(text::read_file(path));
    }
    return *corpus;
  };

  auto run_stage = [&](Stage stage, auto&& body) {
    if (!stages.contains(stage)) return;
    try {
      body();
    } catch (const std::exception& e) {
      const auto* se = dynamic_cast<const StageError*>(&e);
      m["status"] = "failed";
      m["failed_stage"] = to_string(stage);
      m["error"] = e.what();
      try {
        write_manifest();
      } catch (const std::exception&) {
        // the stage failure is the error worth reporting
      }
      if (se) throw;
      throw StageError(std::string(to_string(stage)), e.what());
    }
  };

  run_stage(Stage::Pipeline, [&] {
    auto result = pipeline::run_pipeline(pipeline::load_tree(repo_dir), cfg.pipeline_options());
    text::write_file(out_dir / "corpus.jsonl", pipeline::corpus_jsonl(result.kept));
    text::write_file(out_dir / "dedup_report.csv", pipeline::dedup_report_csv(result.dedup));
    text::write_file(out_dir / "filter_report.csv", pipeline::filter_report_csv(result.filter_report));
    m["pipeline"] = {{"files_seen", result.files_seen},
                     {"kept", result.kept.size()},
                     {"rejected", result.rejected},
                     {"exact_duplicates", result.exact_duplicates},
                     {"fuzzy_duplicates", result.fuzzy_duplicates},
                     {"lossy_inputs", result.lossy_inputs}};
    corpus = std::move(result.kept);
  });

  run_stage(Stage::Fim, [&] {
    const auto fim = run_fim(load_corpus(Stage::Fim), cfg.fim, jobs);
    text::write_file(out_dir / "fim_samples.jsonl", fim_jsonl(fim.samples));
    if (cfg.fim.greedy_window > 0) text::write_file(out_dir / "greedy_samples.jsonl", fim_jsonl(fim.greedy));
    m["fim"] = {{"files", fim.files},
                {"units", fim.units},
                {"samples", fim.samples.size()},
                {"size_rejected", fim.size_rejected},
                {"incomplete", fim.incomplete},
                {"files_without_eligible_units", fim.files_without_eligible},
                {"skipped_other_language", fim.skipped_other_language}};
    if (cfg.fim.greedy_window > 0) m["fim"]["greedy_samples"] = fim.greedy.size();
  });

  run_stage(Stage::Graph, [&] {
    const auto spsr = graph::generate_spsr_corpus(load_corpus(Stage::Graph), cfg.spsr_options());
    text::write_file(out_dir / "graph.json", graph::graph_json(spsr.graph).dump(2) + "\n");
    text::write_file(out_dir / "spsr_samples.jsonl", spsr_jsonl(spsr.samples));
    const auto& d = spsr.graph.diagnostics;
    m["graph"] = {{"nodes", spsr.graph.size()},
                  {"edges", spsr.graph.edges().size()},
                  {"paths", spsr.path_count},
                  {"samples", spsr.samples.size()},
                  {"truncated", spsr.truncated},
                  {"self_edges", d.self_edges},
                  {"unresolved_calls", d.unresolved_calls},
                  {"unresolved_types", d.unresolved_types},
                  {"unresolved_members", d.unresolved_members},
                  {"unresolved_includes", d.unresolved_includes}};
  });

  write_manifest();
  return manifest;
}

}  // namespace forge::orchestrator
