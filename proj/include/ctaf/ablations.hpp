#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "ctaf/common.hpp"
#include "ctaf/llm_eval.hpp"
#include "ctaf/rng.hpp"
#include "ctaf/scenario_gen.hpp"
#include "ctaf/transcript.hpp"
#include "ctaf/wav.hpp"

namespace ctaf {

inline constexpr std::array<double, 5> kMaskRates{0.10, 0.20, 0.40, 0.60, 0.80};
inline constexpr std::array<double, 5> kNoiseLevels{0.05, 0.10, 0.25, 0.50, 0.75};
inline constexpr std::string_view kMaskToken = "[UNINTELLIGIBLE]";
inline constexpr std::string_view kGarbledPlaceholder = "[TRANSMISSION GARBLED]";

// ---------------------------------------------------------------------------
// Transcript masking
// ---------------------------------------------------------------------------

enum class MaskScheme { word, utterance };

inline std::string_view to_string(MaskScheme m) { return m == MaskScheme::word ? "word" : "utterance"; }
inline MaskScheme parse_mask_scheme(std::string_view s) {
  if (s == "word") return MaskScheme::word;
  if (s == "utterance") return MaskScheme::utterance;
  throw ConfigError("unknown mask scheme '" + std::string(s) + "' (word|utterance)");
}

struct MaskSpec {
  MaskScheme scheme = MaskScheme::word;
  double rate = 0.10;  // 0 is accepted for testing
  std::uint64_t seed = 0;
  std::string mask_token{kMaskToken};
  std::string placeholder{kGarbledPlaceholder};

  void validate() const {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("mask rate must be in [0, 1], got " + str::compact(rate, 3));
    if (scheme == MaskScheme::word && mask_token.empty()) throw ConfigError("mask token is empty");
  }
};

inline std::size_t mask_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

namespace ablation_detail {

struct Span {
  std::size_t cue;
  std::size_t begin;
  std::size_t len;
};

// Whitespace-delimited words; punctuation stays attached.
inline std::vector<Span> word_spans(const Transcript& t) {
  std::vector<Span> out;
  for (std::size_t c = 0; c < t.cues.size(); ++c) {
    const auto& s = t.cues[c].text;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      const std::size_t b = i;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i > b) out.push_back({c, b, i - b});
    }
  }
  return out;
}

// k distinct indices in [0, n), sorted.
inline std::vector<std::size_t> sample_indices(std::uint64_t seed, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.partial_shuffle(std::span<std::size_t>(idx), k);
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace ablation_detail

inline std::size_t word_count(const Transcript& t) { return ablation_detail::word_spans(t).size(); }

// Replaces exactly round(rate * N) words across the whole transcript.
inline Transcript mask_words(const Transcript& t, const MaskSpec& spec) {
  spec.validate();
  const auto spans = ablation_detail::word_spans(t);
  const auto chosen = ablation_detail::sample_indices(spec.seed, spans.size(), mask_count(spec.rate, spans.size()));
  Transcript out = t;
  // Right to left so earlier offsets stay valid.
  for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) {
    const auto& sp = spans[*it];
    out.cues[sp.cue].text.replace(sp.begin, sp.len, spec.mask_token);
  }
  return out;
}

// Replaces the text of exactly round(rate * cues) cues.
inline Transcript mask_utterances(const Transcript& t, const MaskSpec& spec) {
  spec.validate();
  Transcript out = t;
  for (auto i : ablation_detail::sample_indices(spec.seed, t.cues.size(), mask_count(spec.rate, t.cues.size())))
    out.cues[i].text = spec.placeholder;
  return out;
}

inline Transcript apply_mask(const Transcript& t, const MaskSpec& spec) {
  return spec.scheme == MaskScheme::word ? mask_words(t, spec) : mask_utterances(t, spec);
}

// ---------------------------------------------------------------------------
// Audio noise
// ---------------------------------------------------------------------------

struct NoiseSpec {
  double nsr = 0.05;  // amplitude RMS ratio
  std::uint64_t seed = 0;
};

// output = input + g * n, with RMS(g * n) = nsr * RMS(input) before clipping.
inline Pcm inject_noise(const Pcm& in, const NoiseSpec& spec) {
  if (!(spec.nsr >= 0.0)) throw ConfigError("nsr must be >= 0");
  const double sig = rms(in);
  if (sig <= 0.0) throw Error("cannot inject noise at a ratio into a silent signal (RMS = 0)");
  if (spec.nsr == 0.0) return in;
  Rng rng(spec.seed);
  std::vector<double> noise(in.samples.size());
  for (auto& v : noise) v = rng.normal();
  const double g = spec.nsr * sig / rms(noise);
  Pcm out = in;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const double v = static_cast<double>(in.samples[i]) + g * noise[i];
    out.samples[i] = static_cast<std::int16_t>(std::clamp<long long>(std::llround(v), -32768, 32767));
  }
  return out;
}

// ---------------------------------------------------------------------------
// External transcriber hook
// ---------------------------------------------------------------------------

inline std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

// Runs `command` with {audio} replaced by the quoted path; stdout must be SRT.
inline Transcript run_transcriber(const std::string& command, const fs::path& audio) {
  if (command.empty()) throw ConfigError("no transcriber command configured");
  if (!str::contains(command, "{audio}")) throw ConfigError("transcriber command must contain {audio}");
  std::string cmd = command;
  for (std::size_t at; (at = cmd.find("{audio}")) != std::string::npos;) cmd.replace(at, 7, shell_quote(audio.string()));
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw Error("cannot start transcriber: " + cmd);
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) out.append(buf, n);
  const int status = ::pclose(pipe);
  if (status != 0) throw Error("transcriber exited with status " + std::to_string(status) + " for " + audio.string());
  return parse_srt(out);
}

// ---------------------------------------------------------------------------
// Ablation plans
// ---------------------------------------------------------------------------

enum class AblationKind { mask, noise, asr_swap };

inline std::string_view to_string(AblationKind k) {
  switch (k) {
    case AblationKind::mask: return "mask";
    case AblationKind::noise: return "noise";
    case AblationKind::asr_swap: return "asr_swap";
  }
  return "?";
}
inline AblationKind parse_ablation_kind(std::string_view s) {
  if (s == "mask") return AblationKind::mask;
  if (s == "noise") return AblationKind::noise;
  if (s == "asr_swap") return AblationKind::asr_swap;
  throw ConfigError("unknown ablation kind '" + std::string(s) + "' (mask|noise|asr_swap)");
}

struct AblationPlan {
  std::string name;
  AblationKind kind = AblationKind::mask;
  Framing framing = Framing::three_class;
  std::vector<Strategy> strategies{Strategy::zs};
  std::vector<Protocol> protocols{Protocol::direct};
  std::uint64_t seed = 42;
  // mask
  MaskScheme scheme = MaskScheme::word;
  std::vector<double> rates{kMaskRates.begin(), kMaskRates.end()};
  std::string mask_token{kMaskToken};
  std::string placeholder{kGarbledPlaceholder};
  // noise: clean audio at <audio_dir>/<id>.wav
  std::vector<double> nsr{kNoiseLevels.begin(), kNoiseLevels.end()};
  fs::path audio_dir;
  std::string transcriber;
  // asr_swap: tag -> directory of <id>.srt
  std::map<std::string, fs::path> transcript_sets;

  void validate() const {
    switch (kind) {
      case AblationKind::mask:
        if (rates.empty()) throw ConfigError("mask plan " + name + " has no rates");
        for (double r : rates)
          if (!(r > 0.0 && r <= 1.0)) throw ConfigError("mask rate must be in (0, 1], got " + str::compact(r, 3));
        break;
      case AblationKind::noise:
        if (transcriber.empty()) throw ConfigError("noise plan " + name + " needs a transcriber command");
        if (!str::contains(transcriber, "{audio}")) throw ConfigError("transcriber command must contain {audio}");
        if (audio_dir.empty()) throw ConfigError("noise plan " + name + " needs audio_dir");
        if (nsr.empty()) throw ConfigError("noise plan " + name + " has no NSR levels");
        for (double v : nsr)
          if (!(v >= 0.0)) throw ConfigError("nsr must be >= 0");
        if (strategies != std::vector<Strategy>{Strategy::zs}) throw ConfigError("noise plan " + name + " is zero-shot only");
        break;
      case AblationKind::asr_swap:
        if (transcript_sets.empty()) throw ConfigError("asr_swap plan " + name + " has no transcript sets");
        break;
    }
    if (strategies.empty() || protocols.empty()) throw ConfigError("plan " + name + " has an empty strategy or protocol list");
  }
};

inline std::string mask_variant(MaskScheme s, double rate) {
  return str::printf("mask_%s_r%.2f", std::string(to_string(s)).c_str(), rate);
}
inline std::string noise_variant(double nsr) { return str::printf("noise_nsr%.2f", nsr); }
inline std::string asr_variant(const std::string& tag) { return "asr_" + tag; }

// Per-scenario seed so the same scenario gets the same mask in every run.
inline std::uint64_t perturbation_seed(std::uint64_t plan_seed, std::string_view variant, std::string_view scenario_id) {
  return derive_seed(plan_seed, fnv1a(scenario_id), fnv1a(variant));
}

struct AblationResult {
  std::vector<std::pair<std::string, MatrixStats>> variants;
  std::vector<EvalRecord> records;  // canonical table after the last variant
  bool interrupted = false;
};

// Perturbed transcripts for the test split under one variant.
inline std::map<std::string, Transcript> masked_transcripts(const Dataset& ds, const AblationPlan& plan, double rate) {
  std::map<std::string, Transcript> out;
  const auto variant = mask_variant(plan.scheme, rate);
  for (const auto* s : ds.split(Split::test)) {
    MaskSpec spec{plan.scheme, rate, perturbation_seed(plan.seed, variant, s->id), plan.mask_token, plan.placeholder};
    out[s->id] = apply_mask(s->transcript, spec);
  }
  return out;
}

// Noisy audio and its transcript are cached under work_dir, so a resumed run
// reuses them rather than calling the transcriber again.
inline std::map<std::string, Transcript> noisy_transcripts(const Dataset& ds, const AblationPlan& plan, double nsr,
                                                           const fs::path& work_dir) {
  std::map<std::string, Transcript> out;
  const auto variant = noise_variant(nsr);
  for (const auto* s : ds.split(Split::test)) {
    const auto clean = plan.audio_dir / (s->id + ".wav");
    if (!fs::exists(clean)) throw ConfigError("missing clean audio " + clean.string());
    const auto wav = work_dir / "audio" / variant / (s->id + ".wav");
    const auto srt = work_dir / "transcripts" / variant / (s->id + ".srt");
    if (fs::exists(srt)) {
      out[s->id] = parse_srt(read_file(srt));
      continue;
    }
    write_wav(wav, inject_noise(read_wav(clean), {nsr, perturbation_seed(plan.seed, variant, s->id)}));
    auto t = run_transcriber(plan.transcriber, wav);
    write_file(srt, emit_srt(t));
    out[s->id] = std::move(t);
  }
  return out;
}

inline std::map<std::string, Transcript> external_transcripts(const Dataset& ds, const fs::path& dir) {
  std::map<std::string, Transcript> out;
  for (const auto* s : ds.split(Split::test)) {
    const auto p = dir / (s->id + ".srt");
    if (!fs::exists(p)) throw ConfigError("transcript set " + dir.string() + " has no " + s->id + ".srt");
    out[s->id] = parse_srt(read_file(p));
  }
  return out;
}

// Every variant of the plan appends into <work_dir>/records.jsonl.
inline AblationResult run_ablation(const Dataset& ds, const std::vector<ChatEndpoint*>& endpoints, const AblationPlan& plan,
                                   const fs::path& work_dir, const MatrixOptions& opt = {}) {
  plan.validate();
  std::vector<std::pair<std::string, std::map<std::string, Transcript>>> jobs;
  const auto add = [&](std::string v, auto make) { jobs.emplace_back(std::move(v), make()); };
  AblationResult res;
  const auto records = work_dir / "records.jsonl";
  std::optional<std::size_t> budget = opt.max_new_records;

  const auto run_one = [&](const std::string& variant, const std::map<std::string, Transcript>& ts) {
    MatrixSpec spec;
    spec.framings = {plan.framing};
    spec.strategies = plan.strategies;
    spec.protocols = plan.protocols;
    spec.variant = variant;
    spec.transcripts = &ts;
    MatrixOptions mo = opt;
    mo.max_new_records = budget;
    auto st = run_matrix(ds, endpoints, spec, records, mo);
    if (budget) *budget -= std::min(*budget, st.written);
    res.interrupted = st.interrupted;
    if (!st.interrupted) res.records = st.records;
    res.variants.emplace_back(variant, std::move(st));
  };

  switch (plan.kind) {
    case AblationKind::mask:
      for (double r : plan.rates) add(mask_variant(plan.scheme, r), [&] { return masked_transcripts(ds, plan, r); });
      break;
    case AblationKind::noise:
      for (double n : plan.nsr) {
        if (res.interrupted) break;
        // Transcribe lazily so an interruption does not pay for later levels.
        const auto ts = noisy_transcripts(ds, plan, n, work_dir);
        run_one(noise_variant(n), ts);
      }
      return res;
    case AblationKind::asr_swap:
      for (const auto& [tag, dir] : plan.transcript_sets) add(asr_variant(tag), [&] { return external_transcripts(ds, dir); });
      break;
  }
  for (const auto& [variant, ts] : jobs) {
    if (res.interrupted) break;
    run_one(variant, ts);
  }
  return res;
}

}  // namespace ctaf
