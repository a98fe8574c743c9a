#include <gtest/gtest.h>

#include <mutex>

#include "ctaf/ablations.hpp"
#include "ctaf/llm_mock.hpp"
#include "ctaf/metrics.hpp"

using namespace ctaf;

namespace {

const Dataset& small_dataset() {
  static const Dataset ds = [] {
    GenConfig c;
    c.n_scenarios = 15;
    c.class_targets = {5, 5, 5};
    return build_dataset(c);
  }();
  return ds;
}

fs::path temp_path(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ctaf_abl_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

Transcript ten_words() {
  Transcript t;
  t.cues.push_back({1, 0, 4000, "Hazard traffic, Cessna one two"});
  t.cues.push_back({2, 9000, 13000, "turning base runway two, Hazard."});
  return t;
}

std::size_t count_token(const Transcript& t, std::string_view tok) {
  std::size_t n = 0;
  for (const auto& c : t.cues)
    for (const auto& w : str::split_ws(c.text)) n += w == tok;
  return n;
}

std::size_t count_placeholder(const Transcript& t, std::string_view ph) {
  return static_cast<std::size_t>(std::count_if(t.cues.begin(), t.cues.end(), [&](const SrtCue& c) { return c.text == ph; }));
}

bool same_timing(const Transcript& a, const Transcript& b) {
  if (a.cues.size() != b.cues.size()) return false;
  for (std::size_t i = 0; i < a.cues.size(); ++i)
    if (a.cues[i].index != b.cues[i].index || a.cues[i].start_ms != b.cues[i].start_ms || a.cues[i].end_ms != b.cues[i].end_ms)
      return false;
  return true;
}

// Records the user turn that carries the scenario, then answers like the oracle.
class CapturingEndpoint : public ChatEndpoint {
 public:
  CapturingEndpoint(EndpointConfig cfg, const Dataset& ds) : inner_(cfg, ds) {}
  Completion complete_once(const std::vector<Message>& msgs, const CompletionOptions& o) override {
    {
      std::lock_guard lock(mu_);
      seen_.push_back(msgs.back().content);
    }
    return inner_.complete_once(msgs, o);
  }
  const EndpointConfig& config() const override { return inner_.config(); }
  std::vector<std::string> seen() {
    std::lock_guard lock(mu_);
    return seen_;
  }

 private:
  OracleMock inner_;
  std::mutex mu_;
  std::vector<std::string> seen_;
};

EndpointConfig mock_cfg(const std::string& name) {
  EndpointConfig c;
  c.name = name;
  c.kind = "oracle_mock";
  c.latency_s = 0.5;
  c.max_parallel = 2;
  return c;
}

MatrixOptions quiet() {
  MatrixOptions o;
  o.sleeper = [](double) {};
  return o;
}

}  // namespace

// --- masking -----------------------------------------------------------------

TEST(MaskWords, TenWordsAtFortyPercentMasksFour) {
  const auto t = ten_words();
  ASSERT_EQ(word_count(t), 10u);
  const auto m = mask_words(t, {MaskScheme::word, 0.40, 7});
  EXPECT_EQ(count_token(m, kMaskToken), 4u);
  EXPECT_EQ(word_count(m), 10u);
  EXPECT_TRUE(same_timing(t, m));
}

TEST(MaskWords, ZeroRateIsIdentityAndSeedIsDeterministic) {
  const auto t = ten_words();
  EXPECT_EQ(mask_words(t, {MaskScheme::word, 0.0, 1}), t);
  EXPECT_EQ(mask_words(t, {MaskScheme::word, 0.6, 3}), mask_words(t, {MaskScheme::word, 0.6, 3}));
  bool differs = false;
  for (std::uint64_t s = 0; s < 20 && !differs; ++s)
    differs = mask_words(t, {MaskScheme::word, 0.3, s}) != mask_words(t, {MaskScheme::word, 0.3, s + 100});
  EXPECT_TRUE(differs);
}

TEST(MaskWords, PunctuationStaysAttachedAndEmptyIsIdentity) {
  Transcript t;
  t.cues.push_back({1, 0, 3000, "base, Hazard."});
  const auto m = mask_words(t, {MaskScheme::word, 1.0, 0});
  EXPECT_EQ(m.cues[0].text, "[UNINTELLIGIBLE] [UNINTELLIGIBLE]");
  EXPECT_EQ(mask_words(Transcript{}, {MaskScheme::word, 0.5, 0}), Transcript{});
  EXPECT_EQ(mask_utterances(Transcript{}, {MaskScheme::utterance, 0.5, 0}), Transcript{});
}

TEST(MaskUtterances, CountsAndBoundary) {
  Transcript t;
  for (int i = 0; i < 10; ++i) t.cues.push_back({i + 1, i * 9000LL, i * 9000LL + 4000, "call " + std::to_string(i)});
  const auto m = mask_utterances(t, {MaskScheme::utterance, 0.20, 5});
  EXPECT_EQ(count_placeholder(m, kGarbledPlaceholder), 2u);
  EXPECT_TRUE(same_timing(t, m));
  const auto all = mask_utterances(t, {MaskScheme::utterance, 1.0, 5});
  EXPECT_EQ(all.cues.size(), 10u);
  EXPECT_EQ(count_placeholder(all, kGarbledPlaceholder), 10u);
  EXPECT_EQ(mask_utterances(t, {MaskScheme::utterance, 0.5, 9}), mask_utterances(t, {MaskScheme::utterance, 0.5, 9}));
}

TEST(MaskSpec, RejectsOutOfRangeRates) {
  EXPECT_THROW(mask_words(ten_words(), {MaskScheme::word, 1.5, 0}), ConfigError);
  EXPECT_THROW(mask_utterances(ten_words(), {MaskScheme::utterance, -0.1, 0}), ConfigError);
  EXPECT_THROW(parse_mask_scheme("token"), ConfigError);
}

TEST(MaskWords, ExactCountsOnEveryDatasetScenario) {
  const auto& ds = small_dataset();
  for (const auto& s : ds.scenarios)
    for (double r : kMaskRates) {
      const auto w = mask_words(s.transcript, {MaskScheme::word, r, fnv1a(s.id)});
      const auto u = mask_utterances(s.transcript, {MaskScheme::utterance, r, fnv1a(s.id)});
      const auto nw = word_count(s.transcript);
      const auto nc = s.transcript.cues.size();
      ASSERT_EQ(count_token(w, kMaskToken), static_cast<std::size_t>(std::llround(r * static_cast<double>(nw)))) << s.id << " " << r;
      ASSERT_EQ(count_placeholder(u, kGarbledPlaceholder), static_cast<std::size_t>(std::llround(r * static_cast<double>(nc))))
          << s.id << " " << r;
      ASSERT_TRUE(same_timing(s.transcript, w));
      ASSERT_TRUE(same_timing(s.transcript, u));
      ASSERT_EQ(emit_srt(w), emit_srt(mask_words(s.transcript, {MaskScheme::word, r, fnv1a(s.id)})));
    }
}

// --- noise -------------------------------------------------------------------

TEST(Noise, RmsRatioOnTone) {
  const auto clean = tone(440.0, 5.0);
  for (double nsr : kNoiseLevels) {
    const auto noisy = inject_noise(clean, {nsr, 17});
    std::vector<double> diff(clean.samples.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = noisy.samples[i] - clean.samples[i];
    EXPECT_NEAR(rms(diff) / rms(clean), nsr, 0.01 * nsr) << nsr;
  }
}

TEST(Noise, ZeroIsBitIdenticalAndSilentErrors) {
  const auto clean = tone(300.0, 1.0);
  EXPECT_EQ(encode_wav(inject_noise(clean, {0.0, 1})), encode_wav(clean));
  Pcm silent;
  silent.samples.assign(16000, 0);
  EXPECT_THROW(inject_noise(silent, {0.1, 1}), Error);
  EXPECT_THROW(inject_noise(Pcm{}, {0.1, 1}), Error);
}

TEST(Noise, DeterministicUnderSeedAndClipped) {
  const auto clean = tone(200.0, 1.0, 8000, 0.99);
  EXPECT_EQ(inject_noise(clean, {0.5, 3}), inject_noise(clean, {0.5, 3}));
  EXPECT_NE(inject_noise(clean, {0.5, 3}), inject_noise(clean, {0.5, 4}));
  const auto loud = inject_noise(clean, {0.75, 3});
  EXPECT_EQ(loud.samples.size(), clean.samples.size());
}

TEST(Wav, RoundTripAndRejectsJunk) {
  auto p = tone(1000.0, 0.25, 22050);
  p.channels = 1;
  EXPECT_EQ(decode_wav(encode_wav(p)), p);
  const auto path = temp_path("wav") / "x.wav";
  write_wav(path, p);
  EXPECT_EQ(read_wav(path), p);
  fs::remove_all(path.parent_path());
  EXPECT_THROW(decode_wav("RIFF0000JUNK"), ParseError);
  EXPECT_THROW(decode_wav(""), ParseError);
}

// --- plans ---------------------------------------------------------------------

TEST(RunAblation, MaskPlanGroupsAndPromptContent) {
  const auto& ds = small_dataset();
  const auto dir = temp_path("mask");
  std::vector<std::unique_ptr<OracleMock>> eps;
  std::vector<ChatEndpoint*> ptrs;
  for (const char* n : {"qwen", "mistral", "gemma"}) {
    eps.push_back(std::make_unique<OracleMock>(mock_cfg(n), ds));
    ptrs.push_back(eps.back().get());
  }
  AblationPlan plan;
  plan.name = "word";
  const auto res = run_ablation(ds, ptrs, plan, dir, quiet());
  const auto n_test = ds.split(Split::test).size();
  EXPECT_EQ(res.variants.size(), 5u);
  EXPECT_EQ(res.records.size(), 15 * n_test);
  const auto groups = by_condition(res.records);
  EXPECT_EQ(groups.size(), 15u);
  for (const auto& [c, recs] : groups) {
    EXPECT_EQ(recs.size(), n_test);
    EXPECT_EQ(c.framing, Framing::three_class);
    EXPECT_EQ(c.strategy, Strategy::zs);
    EXPECT_TRUE(str::starts_with(c.variant, "mask_word_r"));
  }
  // Rerun is a no-op.
  const auto again = run_ablation(ds, ptrs, plan, dir, quiet());
  for (const auto& [v, st] : again.variants) EXPECT_EQ(st.written, 0u) << v;
  EXPECT_EQ(again.records, res.records);
  fs::remove_all(dir);
}

TEST(RunAblation, MaskedTranscriptReachesPrompt) {
  const auto& ds = small_dataset();
  const auto dir = temp_path("capture");
  CapturingEndpoint ep(mock_cfg("cap"), ds);
  AblationPlan plan;
  plan.name = "utt";
  plan.scheme = MaskScheme::utterance;
  plan.rates = {1.0};
  run_ablation(ds, {&ep}, plan, dir, quiet());
  const auto seen = ep.seen();
  ASSERT_EQ(seen.size(), ds.split(Split::test).size());
  for (const auto& s : seen) EXPECT_TRUE(str::contains(s, kGarbledPlaceholder));
  for (const auto* sc : ds.split(Split::test)) {
    const auto masked = masked_transcripts(ds, plan, 1.0).at(sc->id);
    EXPECT_EQ(masked.cues.size(), sc->transcript.cues.size());
  }
  fs::remove_all(dir);
}

TEST(RunAblation, NoisePlanNeedsTranscriber) {
  const auto& ds = small_dataset();
  OracleMock ep(mock_cfg("q"), ds);
  AblationPlan plan;
  plan.name = "noise";
  plan.kind = AblationKind::noise;
  plan.audio_dir = "/nonexistent";
  EXPECT_THROW(run_ablation(ds, {&ep}, plan, temp_path("n0")), ConfigError);
  plan.transcriber = "whisper --no-placeholder";
  EXPECT_THROW(run_ablation(ds, {&ep}, plan, temp_path("n0")), ConfigError);
  plan.transcriber = "cat {audio}";
  plan.strategies = {Strategy::fs};
  EXPECT_THROW(run_ablation(ds, {&ep}, plan, temp_path("n0")), ConfigError);
  plan.strategies = {Strategy::zs};
  EXPECT_THROW(run_ablation(ds, {&ep}, plan, temp_path("n0")), ConfigError);  // no audio
}

TEST(RunAblation, NoisePlanRunsExternalHook) {
  const auto& ds = small_dataset();
  const auto dir = temp_path("noise");
  const auto audio = dir / "clean";
  for (const auto* s : ds.split(Split::test)) write_wav(audio / (s->id + ".wav"), tone(500.0, 0.5));
  // Fake transcriber: checks the WAV header and returns the clean template transcript.
  const auto script = dir / "asr.sh";
  write_file(script,
             "#!/bin/sh\nhead -c 4 \"$1\" | grep -q RIFF || exit 3\nid=$(basename \"$1\" .wav)\ncat \"" +
                 (fs::absolute(dir) / "srt").string() + "/$id.srt\"\n");
  fs::permissions(script, fs::perms::owner_all);
  for (const auto* s : ds.split(Split::test)) write_file(dir / "srt" / (s->id + ".srt"), emit_srt(s->transcript));

  OracleMock ep(mock_cfg("q"), ds);
  AblationPlan plan;
  plan.name = "noise";
  plan.kind = AblationKind::noise;
  plan.audio_dir = audio;
  plan.transcriber = script.string() + " {audio}";
  plan.nsr = {0.05, 0.25};
  const auto res = run_ablation(ds, {&ep}, plan, dir / "run", quiet());
  ASSERT_FALSE(res.interrupted);
  EXPECT_EQ(by_condition(res.records).size(), 2u);
  for (const auto& s : summarize(res.records)) EXPECT_DOUBLE_EQ(s.macro_f1, 1.0);
  const auto id = ds.split(Split::test).front()->id;
  EXPECT_TRUE(fs::exists(dir / "run" / "audio" / "noise_nsr0.25" / (id + ".wav")));
  EXPECT_TRUE(fs::exists(dir / "run" / "transcripts" / "noise_nsr0.25" / (id + ".srt")));

  plan.transcriber = "false {audio}";
  plan.nsr = {0.5};
  EXPECT_THROW(run_ablation(ds, {&ep}, plan, dir / "run2", quiet()), Error);
  fs::remove_all(dir);
}

TEST(RunAblation, AsrSwapOneGroupPerTranscriptSet) {
  const auto& ds = small_dataset();
  const auto dir = temp_path("asr");
  AblationPlan plan;
  plan.name = "asr";
  plan.kind = AblationKind::asr_swap;
  plan.strategies = {Strategy::zs, Strategy::os, Strategy::fs};
  for (const char* size : {"base", "medium", "large-v3"}) {
    for (const auto* s : ds.split(Split::test)) write_file(dir / size / (s->id + ".srt"), emit_srt(s->transcript));
    plan.transcript_sets[size] = dir / size;
  }
  OracleMock ep(mock_cfg("q"), ds);
  auto one = plan;
  one.strategies = {Strategy::zs};
  const auto res = run_ablation(ds, {&ep}, one, dir / "run", quiet());
  EXPECT_EQ(by_condition(res.records).size(), 3u);
  const auto full = run_ablation(ds, {&ep}, plan, dir / "run", quiet());
  EXPECT_EQ(by_condition(full.records).size(), 9u);

  fs::remove(dir / "medium" / (ds.split(Split::test).front()->id + ".srt"));
  EXPECT_THROW(run_ablation(ds, {&ep}, plan, dir / "run3", quiet()), ConfigError);
  fs::remove_all(dir);
}

TEST(RunAblation, InterruptedThenResumedMatches) {
  const auto& ds = small_dataset();
  const auto a = temp_path("resume_a");
  const auto b = temp_path("resume_b");
  OracleMock e1(mock_cfg("q"), ds), e2(mock_cfg("q"), ds);
  AblationPlan plan;
  plan.name = "w";
  plan.rates = {0.2, 0.6};
  const auto full = run_ablation(ds, {&e1}, plan, a, quiet());
  auto cut = quiet();
  cut.max_new_records = 13;
  const auto part = run_ablation(ds, {&e2}, plan, b, cut);
  EXPECT_TRUE(part.interrupted);
  const auto rest = run_ablation(ds, {&e2}, plan, b, quiet());
  EXPECT_FALSE(rest.interrupted);
  EXPECT_EQ(read_file(a / "records.jsonl"), read_file(b / "records.jsonl"));
  EXPECT_EQ(e2.calls(), e1.calls());
  fs::remove_all(a);
  fs::remove_all(b);
}
