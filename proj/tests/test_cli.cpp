#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "ctaf/ctaf.hpp"

using namespace ctaf;

namespace {

struct Run {
  int rc;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CTAF_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  const int st = ::pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

fs::path temp_path(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ctaf_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string q(const fs::path& p) { return shell_quote(p.string()); }

fs::path write_config(const fs::path& dir, const std::string& body) {
  const auto p = dir / "config.json";
  write_file(p, body);
  return p;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kOneMock = R"({"endpoints": [{"name": "m", "kind": "oracle_mock", "latency_s": 0.5, "max_parallel": 3}],
  "eval": {"strategies": ["ZS"], "protocols": ["direct"]}})";

}  // namespace

// --- gen -----------------------------------------------------------------------

TEST(CliGen, DefaultSummaryAndIdempotence) {
  const auto dir = temp_path("gen");
  const auto a = run("gen --out " + q(dir / "a"));
  ASSERT_EQ(a.rc, 0) << a.out;
  EXPECT_TRUE(str::contains(a.out, "100 scenarios (33/34/33), icl=6, test=94\n"));
  EXPECT_TRUE(str::contains(a.out, "binary test split: 31 nominal / 63 danger"));
  const auto stamp = fs::last_write_time(dir / "a" / "dataset" / "manifest.csv");
  const auto again = run("gen --out " + q(dir / "a"));
  EXPECT_EQ(again.rc, 0);
  EXPECT_TRUE(str::contains(again.out, "is up to date"));
  EXPECT_EQ(fs::last_write_time(dir / "a" / "dataset" / "manifest.csv"), stamp);

  ASSERT_EQ(run("gen --out " + q(dir / "b")).rc, 0);
  for (const char* f : {"manifest.csv", "dataset.json", "scenarios/S003/metar.txt", "scenarios/S050/transcript.srt"})
    EXPECT_EQ(read_file(dir / "a" / "dataset" / f), read_file(dir / "b" / "dataset" / f)) << f;
  fs::remove_all(dir);
}

TEST(CliGen, TinyConfigAndSeedOverride) {
  const auto dir = temp_path("tiny");
  const auto cfg = write_config(dir, R"({"generation": {"n_scenarios": 15, "class_targets": [5, 5, 5]}})");
  const auto r = run("gen --config " + q(cfg) + " --out " + q(dir / "x"));
  ASSERT_EQ(r.rc, 0) << r.out;
  EXPECT_TRUE(str::contains(r.out, "15 scenarios (5/5/5), icl=6, test=9"));
  ASSERT_EQ(run("gen --config " + q(cfg) + " --seed 7 --out " + q(dir / "y")).rc, 0);
  EXPECT_NE(read_file(dir / "x" / "dataset" / "scenarios" / "S001" / "metar.txt"),
            read_file(dir / "y" / "dataset" / "scenarios" / "S001" / "metar.txt"));
  // A changed seed regenerates in place.
  const auto r2 = run("gen --config " + q(cfg) + " --seed 7 --out " + q(dir / "x"));
  EXPECT_TRUE(str::contains(r2.out, "wrote"));
  EXPECT_EQ(read_file(dir / "x" / "dataset" / "manifest.csv"), read_file(dir / "y" / "dataset" / "manifest.csv"));
  fs::remove_all(dir);
}

// --- eval ----------------------------------------------------------------------

TEST(CliEval, OneMockOneCondition) {
  const auto dir = temp_path("eval1");
  const auto r = run("eval --config " + q(write_config(dir, kOneMock)) + " --out " + q(dir / "o"));
  ASSERT_EQ(r.rc, 0) << r.out;
  EXPECT_EQ(read_records(dir / "o" / "records.jsonl").size(), 94u);
  EXPECT_EQ(lines(read_file(dir / "o" / "report" / "table_main.csv")), 2u);
  fs::remove_all(dir);
}

TEST(CliEval, FullMockMatrixBothFramings) {
  const auto dir = temp_path("evalfull");
  const auto cfg = write_config(dir, R"({"endpoints": [{"name": "m", "kind": "oracle_mock", "error_rate": 0.1, "max_parallel": 4}],
    "eval": {"framings": ["binary", "three_class"]}})");
  const auto r = run("eval --config " + q(cfg) + " --out " + q(dir / "o"));
  ASSERT_EQ(r.rc, 0) << r.out;
  const auto recs = read_records(dir / "o" / "records.jsonl");
  EXPECT_EQ(recs.size(), 12u * 94u);
  const auto groups = by_condition(recs);
  EXPECT_EQ(groups.size(), 12u);
  EXPECT_EQ(lines(read_file(dir / "o" / "report" / "table_per_class_binary.csv")), 7u);
  EXPECT_EQ(lines(read_file(dir / "o" / "report" / "table_per_class_three_class.csv")), 7u);
  EXPECT_TRUE(fs::exists(dir / "o" / "report" / "roc_three_class.svg"));
  fs::remove_all(dir);
}

TEST(CliEval, ResumeAfterInterruptGivesIdenticalTable) {
  const auto dir = temp_path("resume");
  const auto cfg = q(write_config(dir, R"({"endpoints": [{"name": "m", "kind": "oracle_mock", "error_rate": 0.2, "latency_s": 1}]})"));
  ASSERT_EQ(run("eval --config " + cfg + " --out " + q(dir / "full")).rc, 0);
  const auto cut = run("eval --config " + cfg + " --out " + q(dir / "cut") + " --stop-after 150");
  ASSERT_EQ(cut.rc, 0) << cut.out;
  EXPECT_TRUE(str::contains(cut.out, "interrupted"));
  EXPECT_FALSE(fs::exists(dir / "cut" / "report"));
  const auto rest = run("eval --config " + cfg + " --out " + q(dir / "cut"));
  ASSERT_EQ(rest.rc, 0) << rest.out;
  EXPECT_TRUE(str::contains(rest.out, "skipped 150"));
  EXPECT_EQ(read_file(dir / "full" / "records.jsonl"), read_file(dir / "cut" / "records.jsonl"));
  EXPECT_EQ(read_file(dir / "full" / "report" / "table_main.csv"), read_file(dir / "cut" / "report" / "table_main.csv"));
  fs::remove_all(dir);
}

TEST(CliEval, PerRecordErrorsDoNotFailTheRun) {
  const auto dir = temp_path("errs");
  write_file(dir / "fixture.json", R"({"S010": {"label": "danger", "confidence": 0.8}})");
  const auto cfg = write_config(dir, R"({"endpoints": [{"name": "f", "kind": "fixture_mock", "fixture_path": ")" +
                                         (dir / "fixture.json").string() +
                                         R"("}], "eval": {"strategies": ["ZS"], "protocols": ["direct"]}, "retry": {"max_attempts": 1}})");
  const auto r = run("eval --config " + q(cfg) + " --out " + q(dir / "o"));
  EXPECT_EQ(r.rc, 0) << r.out;
  EXPECT_TRUE(str::contains(r.out, "errors 93"));
  EXPECT_TRUE(str::contains(read_file(dir / "o" / "report" / "table_main.csv"), "f,binary,ZS,direct,,1,93,0,"));
  fs::remove_all(dir);
}

TEST(CliEval, CredentialsStayOutOfArtifacts) {
  const auto dir = temp_path("secret");
  ::setenv("CTAF_TEST_SECRET_KEY", "sk-test-do-not-write-9f3a", 1);
  const auto cfg = write_config(dir, R"({"endpoints": [{"name": "remote", "kind": "openai", "base_url": "http://127.0.0.1:9/v1",
    "model": "x", "auth_env": "CTAF_TEST_SECRET_KEY", "timeout_s": 1}],
    "eval": {"strategies": ["ZS"], "protocols": ["direct"]}, "retry": {"max_attempts": 1, "base_s": 0}})");
  const auto r = run("eval --config " + q(cfg) + " --out " + q(dir / "o"));
  EXPECT_EQ(r.rc, 0) << r.out;
  EXPECT_TRUE(str::contains(r.out, "errors 94"));
  EXPECT_FALSE(fs::exists(dir / "o" / "report"));
  EXPECT_FALSE(str::contains(r.out, "sk-test"));
  const auto recs = read_records(dir / "o" / "records.jsonl");
  ASSERT_EQ(recs.size(), 94u);
  EXPECT_TRUE(recs.front().error.has_value());
  for (const auto& e : fs::recursive_directory_iterator(dir / "o"))
    if (e.is_regular_file()) {
      EXPECT_FALSE(str::contains(read_file(e.path()), "sk-test")) << e.path();
    }
  ::unsetenv("CTAF_TEST_SECRET_KEY");
  fs::remove_all(dir);
}

TEST(CliEval, AttachImagePassthrough) {
  const auto dir = temp_path("image");
  write_file(dir / "chart.png", std::string("\x89PNG\r\n\x1a\n", 8) + "fake");
  const auto cfg = q(write_config(dir, kOneMock));
  const auto r = run("eval --config " + cfg + " --out " + q(dir / "o") + " --attach-image " + q(dir / "chart.png") + " --scenario S010");
  ASSERT_EQ(r.rc, 0) << r.out;
  EXPECT_TRUE(str::contains(r.out, "\"endpoint\": \"m\""));
  EXPECT_TRUE(str::contains(r.out, "\"label\""));
  EXPECT_EQ(run("eval --config " + cfg + " --out " + q(dir / "o") + " --attach-image " + q(dir / "chart.png")).rc, 1);
  EXPECT_EQ(run("eval --config " + cfg + " --out " + q(dir / "o") + " --attach-image " + q(dir / "chart.bmp") + " --scenario S010").rc,
            1);
  fs::remove_all(dir);
}

// --- ablate / report -------------------------------------------------------------

TEST(CliAblate, MaskPlanAndMissingTranscriber) {
  const auto dir = temp_path("ablate");
  const auto cfg = write_config(dir, R"({"endpoints": [
      {"name": "a", "kind": "oracle_mock", "max_parallel": 4}, {"name": "b", "kind": "oracle_mock", "seed": 2, "error_rate": 0.1},
      {"name": "c", "kind": "oracle_mock", "seed": 3, "error_rate": 0.2}],
    "ablations": [{"name": "w", "kind": "mask", "scheme": "word"}]})");
  const auto r = run("ablate --config " + q(cfg) + " --out " + q(dir / "o"));
  ASSERT_EQ(r.rc, 0) << r.out;
  const auto recs = read_records(dir / "o" / "ablations" / "w" / "records.jsonl");
  EXPECT_EQ(by_condition(recs).size(), 15u);
  EXPECT_EQ(recs.size(), 15u * 94u);
  EXPECT_TRUE(fs::exists(dir / "o" / "ablations" / "w" / "report" / "table_per_class_three_class.csv"));

  const auto bad = write_config(dir, R"({"endpoints": [{"name": "a", "kind": "oracle_mock"}],
    "ablations": [{"name": "n", "kind": "noise", "audio_dir": "x"}]})");
  const auto e = run("ablate --config " + q(bad) + " --out " + q(dir / "o2"));
  EXPECT_EQ(e.rc, 1);
  EXPECT_TRUE(str::contains(e.out, "transcriber"));
  fs::remove_all(dir);
}

TEST(CliReport, FixtureRecordsAndEmptyFile) {
  const auto dir = temp_path("report");
  std::vector<EvalRecord> recs;
  int id = 0;
  const auto add = [&](const char* g, const char* p, int n) {
    for (int i = 0; i < n; ++i) {
      EvalRecord r;
      r.scenario_id = str::printf("S%03d", ++id);
      r.condition = {"qwen", Framing::binary, Strategy::os, Protocol::cot, ""};
      r.gold = g;
      r.pred = p;
      r.confidence = 0.9;
      r.score_danger = std::string(p) == "danger" ? 0.9 : 0.1;
      r.latency_s = 2.0;
      recs.push_back(r);
    }
  };
  add("nominal", "nominal", 29);
  add("nominal", "danger", 2);
  add("danger", "nominal", 1);
  add("danger", "danger", 62);
  write_records(dir / "records.jsonl", recs);
  const auto r = run("report --records " + q(dir / "records.jsonl"));
  ASSERT_EQ(r.rc, 0) << r.out;
  const auto main = read_file(dir / "report" / "table_main.csv");
  EXPECT_TRUE(str::contains(main, "qwen,binary,OS,cot,,94,0,0,0.968,0.964,"));
  EXPECT_TRUE(str::contains(main, ",conf*"));
  EXPECT_TRUE(str::contains(read_file(dir / "report" / "table_per_class_binary.csv"), "0.951,0.976,0.964"));
  EXPECT_TRUE(str::contains(read_file(dir / "report" / "table_confusion_rates_binary.csv"), ",29,2,1,62,"));

  write_file(dir / "empty.jsonl", "");
  EXPECT_EQ(run("report --records " + q(dir / "empty.jsonl")).rc, 1);
  EXPECT_EQ(run("report --records " + q(dir / "missing.jsonl")).rc, 1);
  fs::remove_all(dir);
}

TEST(CliUsage, ErrorsAndExitCodes) {
  const auto dir = temp_path("usage");
  EXPECT_NE(run("").rc, 0);
  EXPECT_NE(run("frobnicate").rc, 0);
  EXPECT_EQ(run("gen --config " + q(dir / "nope.json")).rc, 1);
  EXPECT_EQ(run("gen --config " + q(write_config(dir, R"({"sed": 1})"))).rc, 1);
  EXPECT_EQ(run("eval --out " + q(dir / "o")).rc, 1);  // no endpoints
  fs::remove_all(dir);
}

// --- config parsing ----------------------------------------------------------------

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_run_config("{}");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.gen.n_scenarios, 100);
  EXPECT_EQ(c.dataset_dir(), fs::path("out") / "dataset");
  EXPECT_EQ(matrix_conditions({}, {}).size(), 0u);
  auto d = parse_run_config(R"({"seed": 5, "ablations": [{"name": "a"}, {"name": "b", "seed": 9}]})");
  d.set_seed(11);
  EXPECT_EQ(d.gen.seed, 11u);
  EXPECT_EQ(d.ablations[0].plan.seed, 11u);
  EXPECT_EQ(d.ablations[1].plan.seed, 9u);
}

TEST(Config, AnthropicLogprobsForcedOffAndValidation) {
  const auto c = parse_run_config(R"({"endpoints": [{"name": "c", "kind": "anthropic", "base_url": "https://x/v1", "model": "m",
    "supports_logprobs": true}]})");
  EXPECT_FALSE(c.endpoints[0].supports_logprobs);
  EXPECT_FALSE(make_endpoint(c.endpoints[0], Dataset{})->config().supports_logprobs);
  EXPECT_THROW(parse_run_config(R"({"eval": {"endpoints": ["ghost"]}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"endpoints": [{"name": "a", "kind": "oracle_mock"}, {"name": "a", "kind": "oracle_mock"}]})"),
               ConfigError);
  EXPECT_THROW(parse_run_config(R"({"endpoints": [{"name": "a", "kind": "telnet"}]})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"endpoints": [{"name": "a", "kind": "openai"}]})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"eval": {"strategies": ["TS"]}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"generation": {"airport": "KSFO"}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"generation": {"class_targets": [1, 2]}})"), ConfigError);
  EXPECT_THROW(parse_run_config("{not json"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* f : {"default.json", "models.json", "ablations_mock.json"})
    EXPECT_NO_THROW(load_run_config(fs::path(CTAF_SOURCE_DIR) / "configs" / f)) << f;
}

TEST(Config, InProcessCommandsMatchBinary) {
  const auto dir = temp_path("inproc");
  auto cfg = parse_run_config(kOneMock);
  cfg.out = dir / "o";
  std::ostringstream os;
  const auto g = cmd_gen(cfg, os);
  EXPECT_FALSE(g.reused);
  EXPECT_EQ(dataset_summary(g.dataset), "100 scenarios (33/34/33), icl=6, test=94");
  const auto e = cmd_eval(cfg, os);
  EXPECT_EQ(e.stats.records.size(), 94u);
  EXPECT_EQ(e.stats.leakage_violations, 0u);
  fs::remove_all(dir);
}
