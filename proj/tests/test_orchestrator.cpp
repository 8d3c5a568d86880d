#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "forge/orchestrator.hpp"

using namespace forge;
using namespace forge::orchestrator;
namespace fs = std::filesystem;

namespace {

const fs::path kMiniRepo = fs::path(FORGE_FIXTURE_DIR) / "mini_repo";

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("forge_build_" + name);
  fs::remove_all(dir);
  return dir;
}

StageSet all_stages() { return {std::begin(kAllStages), std::end(kAllStages)}; }

config::ForgeConfig seeded(std::uint64_t seed) {
  config::ForgeConfig cfg;
  cfg.fim.seed = seed;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FORGE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Build, PipelineOnlyWritesCorpusAndReports) {
  const auto out = scratch("pipeline_only");
  const auto m = run_end_to_end(kMiniRepo, out, seeded(7), {Stage::Pipeline});
  EXPECT_TRUE(fs::exists(out / "corpus.jsonl"));
  EXPECT_TRUE(fs::exists(out / "dedup_report.csv"));
  EXPECT_TRUE(fs::exists(out / "filter_report.csv"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_FALSE(fs::exists(out / "fim_samples.jsonl"));
  EXPECT_FALSE(m.json.contains("fim"));
  EXPECT_EQ(m.json["stages"], nlohmann::ordered_json::array({"pipeline"}));
}

TEST(Build, UnreadableRepoFailsPipelineStage) {
  const auto out = scratch("unreadable");
  try {
    run_end_to_end("/nonexistent/forge/repo", out, seeded(7), all_stages());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "pipeline");
  }
  const auto manifest = nlohmann::json::parse(text::read_file(out / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_EQ(manifest["failed_stage"], "pipeline");
}

TEST(Build, FimWithoutCorpusFails) {
  const auto out = scratch("no_corpus");
  try {
    run_end_to_end(kMiniRepo, out, seeded(7), {Stage::Fim});
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "fim");
  }
}

TEST(Build, LaterStagesReuseCorpus) {
  const auto out = scratch("split");
  run_end_to_end(kMiniRepo, out, seeded(7), {Stage::Pipeline});
  const auto m = run_end_to_end(kMiniRepo, out, seeded(7), {Stage::Fim, Stage::Graph});
  EXPECT_TRUE(fs::exists(out / "fim_samples.jsonl"));
  EXPECT_TRUE(fs::exists(out / "spsr_samples.jsonl"));
  EXPECT_EQ(m.json["fim"]["samples"], 220);
}

TEST(Build, GoldenManifestCounts) {
  const auto out = scratch("golden");
  const auto m = run_end_to_end(kMiniRepo, out, seeded(7), all_stages(), {"2024-01-01T00:00:00Z"}).json;
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["generated_at"], "2024-01-01T00:00:00Z");
  EXPECT_EQ(m["pipeline"]["files_seen"], 52);
  EXPECT_EQ(m["pipeline"]["kept"], 46);
  EXPECT_EQ(m["pipeline"]["rejected"], 4);
  EXPECT_EQ(m["pipeline"]["exact_duplicates"], 1);
  EXPECT_EQ(m["pipeline"]["fuzzy_duplicates"], 1);
  EXPECT_EQ(m["fim"]["files"], 46);
  EXPECT_EQ(m["fim"]["units"], 251);
  EXPECT_EQ(m["fim"]["samples"], 220);
  EXPECT_EQ(m["fim"]["size_rejected"], 30);
  EXPECT_EQ(m["fim"]["incomplete"], 1);
  EXPECT_EQ(m["graph"]["nodes"], 128);
  EXPECT_EQ(m["graph"]["edges"], 379);
  EXPECT_EQ(m["graph"]["paths"], 369);
}

TEST(Build, DeterministicAcrossRunsAndWorkerCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto one = seeded(3);
  one.jobs = 1;
  auto many = seeded(3);
  many.jobs = 4;
  const auto ma = run_end_to_end(kMiniRepo, a, one, all_stages());
  const auto mb = run_end_to_end(kMiniRepo, b, many, all_stages());
  EXPECT_EQ(ma.without_timestamp().dump(), mb.without_timestamp().dump());
  for (const char* f : {"corpus.jsonl", "fim_samples.jsonl", "spsr_samples.jsonl", "graph.json", "dedup_report.csv"})
    EXPECT_EQ(text::read_file(a / f), text::read_file(b / f)) << f;
}

TEST(Build, StageNames) {
  EXPECT_EQ(stage_from_string("graph"), Stage::Graph);
  EXPECT_FALSE(stage_from_string("deploy"));
  EXPECT_EQ(utc_now_rfc3339().size(), 20u);
}

// ---------------------------------------------------------------------------
// command line
// ---------------------------------------------------------------------------

TEST(Cli, ExitCodes) {
  const auto out = scratch("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("fim --in x --out y --theta-min 50 --theta-max 10"), 2);
  EXPECT_EQ(run_cli("graph --in x --out y --strategy sideways"), 2);
  EXPECT_EQ(run_cli("--config /nonexistent/cfg.json build --in x --out y"), 2);
  EXPECT_EQ(run_cli("build --in /nonexistent/repo --out " + out.string()), 3);
  EXPECT_EQ(run_cli("build --in " + kMiniRepo.string() + " --out " + out.string() + " --stages pipeline"), 0);
  EXPECT_EQ(run_cli("fim --in " + (out / "corpus.jsonl").string() + " --out " + out.string() + " --greedy-window 25"), 0);
  EXPECT_TRUE(fs::exists(out / "greedy_samples.jsonl"));
  EXPECT_EQ(run_cli("graph --in " + (out / "corpus.jsonl").string() + " --out " + out.string() + " -D 2 -k 2"), 0);
  EXPECT_TRUE(fs::exists(out / "graph.json"));
}

TEST(Cli, ScoreWritesCsv) {
  const auto dir = scratch("score");
  text::write_file(dir / "pred.txt", "abcXYZ\nabcd\n");
  text::write_file(dir / "ref.txt", "abc\nabcdef\n");
  ASSERT_EQ(run_cli("score --pred " + (dir / "pred.txt").string() + " --ref " + (dir / "ref.txt").string() +
                    " --out " + (dir / "m.csv").string()),
            0);
  const auto csv_body = text::read_file(dir / "m.csv");
  const auto lines = text::split_lines(csv_body);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "line,lcp,rouge_lcp,lcs,rouge_l,em,bleu,s_ext_len");
  EXPECT_EQ(lines[1].substr(0, 8), "1,3,2,3,");
  text::write_file(dir / "short.txt", "abc\n");
  EXPECT_EQ(run_cli("score --pred " + (dir / "pred.txt").string() + " --ref " + (dir / "short.txt").string() +
                    " --out " + (dir / "m2.csv").string()),
            3);
}

TEST(Cli, AdoptionWritesReports) {
  const auto dir = scratch("adoption");
  text::write_file(dir / "logs.jsonl",
                   "{\"ts\":\"2024-01-01T00:00:00Z\",\"trigger\":\"t\",\"lang\":\"c\",\"prediction\":\"ab\","
                   "\"context\":\"c\",\"reference\":\"abc\",\"adopted\":true}\n");
  EXPECT_EQ(run_cli("adoption --logs " + (dir / "logs.jsonl").string() + " --out " + (dir / "r").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "r" / "summary.json"));
  EXPECT_EQ(run_cli("adoption --logs " + (dir / "missing.jsonl").string() + " --out " + (dir / "r").string()), 3);
}
