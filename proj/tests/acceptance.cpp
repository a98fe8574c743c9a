// Acceptance runner: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "ctaf/ctaf.hpp"
#include "oracle.hpp"

using namespace ctaf;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects failed sub-checks; the first few are reported.
struct Checker {
  Outcome out;
  int failures = 0;
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    out.ok = false;
    if (++failures <= 3) out.detail += (out.detail.empty() ? "" : "; ") + what;
  }
  void near(double got, double want, double tol, const std::string& what) {
    expect(std::fabs(got - want) <= tol, what + " = " + str::printf("%.4f", got) + ", want " + str::printf("%.3f", want));
  }
};

fs::path temp_path(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ctaf_accept_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = std::string(CTAF_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return -1;
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  const int st = ::pclose(p);
  if (output) *output = out;
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::vector<EvalRecord> fixture_records(const std::string& model, int tn, int fp, int fn, int tp) {
  std::vector<EvalRecord> out;
  int id = 0;
  const auto add = [&](const char* g, const char* p, int n) {
    for (int i = 0; i < n; ++i) {
      EvalRecord r;
      r.scenario_id = str::printf("S%03d", ++id);
      r.condition = {model, Framing::binary, Strategy::os, Protocol::cot, ""};
      r.gold = g;
      r.pred = p;
      r.confidence = 0.9;
      r.score_danger = std::string(p) == "danger" ? 0.9 : 0.1;
      out.push_back(r);
    }
  };
  add("nominal", "nominal", tn);
  add("nominal", "danger", fp);
  add("danger", "nominal", fn);
  add("danger", "danger", tp);
  return out;
}

const Dataset& default_dataset() {
  static const Dataset ds = build_dataset(GenConfig{});
  return ds;
}

MatrixOptions no_sleep() {
  MatrixOptions o;
  o.sleeper = [](double) {};
  return o;
}

// --- criteria -------------------------------------------------------------------

Outcome c1_table_arithmetic() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    const char* name;
    int tn, fp, fn, tp;
    double macro, nominal, danger, acc;
  };
  for (const Case& k : {Case{"qwen", 29, 2, 1, 62, 0.964, 0.951, 0.976, 0.968}, Case{"gpt-5.4", 21, 10, 0, 63, 0.867, 0.808, 0.926, 0.894}}) {
    const auto recs = fixture_records(k.name, k.tn, k.fp, k.fn, k.tp);
    const auto cm = confusion(recs);
    const auto f1 = per_class_f1(cm);
    c.near(macro_f1(cm), k.macro, 0.001, std::string(k.name) + " macro-F1");
    c.near(f1.at("nominal"), k.nominal, 0.001, std::string(k.name) + " nominal F1");
    c.near(f1.at("danger"), k.danger, 0.001, std::string(k.name) + " danger F1");
    c.near(accuracy(cm), k.acc, 0.001, std::string(k.name) + " accuracy");
    c.expect(cm.row_sum(0) == 31 && cm.row_sum(1) == 63, std::string(k.name) + " split is not 31/63");
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(s < 1.0, "runtime " + str::compact(s, 3) + " s");
  if (c.out.ok) c.out.detail = "qwen 0.964/0.951/0.976/0.968, gpt-5.4 0.867/0.808/0.926/0.894";
  return c.out;
}

Outcome c2_dataset_composition() {
  Checker c;
  const auto dir = temp_path("gen");
  const auto t0 = std::chrono::steady_clock::now();
  std::string out_a, out_b;
  c.expect(run_cli("gen --out '" + (dir / "a").string() + "'", &out_a) == 0, "gen run 1 failed: " + out_a);
  c.expect(run_cli("gen --out '" + (dir / "b").string() + "'", &out_b) == 0, "gen run 2 failed: " + out_b);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(str::contains(out_a, "100 scenarios (33/34/33), icl=6, test=94"), "summary line: " + out_a);
  if (c.out.ok) {
    const auto ds = load_dataset(dir / "a" / "dataset");
    int cls[3] = {0, 0, 0}, icl[3] = {0, 0, 0}, bn = 0, bd = 0;
    for (const auto& sc : ds.scenarios) {
      ++cls[static_cast<int>(sc.label3)];
      if (sc.split == Split::icl) ++icl[static_cast<int>(sc.label3)];
      else (sc.label_binary == SafetyLabelBinary::nominal ? bn : bd) += 1;
    }
    c.expect(ds.scenarios.size() == 100, "scenario count");
    c.expect(cls[0] == 33 && cls[1] == 34 && cls[2] == 33, "class split");
    c.expect(icl[0] == 2 && icl[1] == 2 && icl[2] == 2, "ICL not 2 per class");
    c.expect(ds.split(Split::test).size() == 94, "test size");
    c.expect(bn == 31 && bd == 63, "binary test counts " + std::to_string(bn) + "/" + std::to_string(bd));
    c.expect(read_file(dir / "a" / "dataset" / "manifest.csv") == read_file(dir / "b" / "dataset" / "manifest.csv"),
             "manifests differ");
    c.expect(verify_labels(ds).empty(), "stored labels disagree with events");
  }
  c.expect(s < 30.0, "runtime " + str::compact(s, 2) + " s");
  if (c.out.ok) c.out.detail = "33/34/33, icl=6, test=94, binary 31/63, manifests identical, " + str::compact(s, 2) + " s for two runs";
  fs::remove_all(dir);
  return c.out;
}

Outcome c3_label_oracle() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(31);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = oracle::random_scenario(rng);
    const bool same = label_scenario(s.events, s.aircraft, s.metar) == oracle::label(s);
    agree += same;
    c.expect(same, "disagreement on scenario " + std::to_string(i));
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(s < 10.0, "runtime " + str::compact(s, 2) + " s");
  if (c.out.ok) c.out.detail = std::to_string(agree) + "/1000 agree, " + str::compact(s, 2) + " s";
  return c.out;
}

Outcome c4_metar() {
  Checker c;
  const auto& ds = default_dataset();
  for (const auto& s : ds.scenarios) c.expect(emit_metar(parse_metar(s.metar_raw)) == s.metar_raw, s.id + " round trip");
  const Metar m = parse_metar("KHAF 142135Z AUTO 18005KT 5SM -BR FEW010 BKN020 18/16 A2999 RMK AO2");
  c.expect(flight_category(m) == FlightCategory::MVFR, "category");
  c.expect(decode_metar(m) == "Marginal VFR \xE2\x80\x94 5 SM visibility in mist, broken ceiling at 2,000 ft, "
                              "wind 180\xC2\xB0 at 5 kt, 18\xC2\xB0" "C / dewpoint 16\xC2\xB0" "C",
           "decoded line: " + decode_metar(m));
  if (c.out.ok) c.out.detail = "100 METARs round-trip; S003 -> MVFR, ceiling 2,000 ft, wind 180 at 5 kt";
  return c.out;
}

Outcome c5_srt_phraseology() {
  Checker c;
  Rng rng(77);
  const char* words[] = {"Half", "Moon", "Bay", "traffic,", "November", "Niner", "final", "runway", "three", "zero."};
  for (int n = 0; n < 500; ++n) {
    Transcript t;
    long long clock = rng.uniform_int(0, 3000);
    for (int i = static_cast<int>(rng.uniform_int(0, 12)), k = 1; i > 0; --i, ++k) {
      SrtCue cue{k, clock, clock + rng.uniform_int(1, 8000), ""};
      clock = cue.end_ms + rng.uniform_int(0, 8000);
      std::vector<std::string> w;
      for (int j = static_cast<int>(rng.uniform_int(1, 10)); j > 0; --j) w.push_back(words[rng.index(10)]);
      cue.text = str::join(w, " ");
      t.cues.push_back(cue);
    }
    c.expect(parse_srt(emit_srt(t)) == t, "SRT round trip case " + std::to_string(n));
  }
  const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  for (int i = 0; i < 1000; ++i) {
    std::string cs = "N";
    for (int k = static_cast<int>(rng.uniform_int(1, 5)); k > 0; --k) cs.push_back(alphabet[rng.index(alphabet.size())]);
    c.expect(decode_callsign(nato_spell(cs)) == cs, "callsign " + cs);
  }
  const auto flags = [](const Transcript& t, TimingViolationKind k) {
    const auto v = validate_timing(t);
    return std::any_of(v.begin(), v.end(), [&](const auto& x) { return x.kind == k; });
  };
  const auto mk = [](std::vector<std::pair<long long, long long>> spans) {
    Transcript t;
    int i = 1;
    for (auto [s, e] : spans) t.cues.push_back({i++, s, e, "x"});
    return t;
  };
  c.expect(flags(mk({{0, 2000}}), TimingViolationKind::utterance_length), "utterance length not flagged");
  c.expect(flags(mk({{0, 4000}, {5000, 9000}}), TimingViolationKind::gap), "gap not flagged");
  std::vector<std::pair<long long, long long>> long_run;
  for (long long s = 0; s < 90000; s += 9000) long_run.push_back({s, s + 5000});
  long_run.back().second = 95000;
  long_run.back().first = 90000;
  c.expect(flags(mk(long_run), TimingViolationKind::total_duration), "total duration not flagged");
  std::vector<std::pair<long long, long long>> eleven;
  for (int i = 0; i < 11; ++i) eleven.push_back({i * 7000LL, i * 7000LL + 3500});
  c.expect(flags(mk(eleven), TimingViolationKind::max_lines), "line count not flagged");
  c.expect(validate_timing(mk({{0, 4000}, {8000, 12000}})).empty(), "clean transcript flagged");
  if (c.out.ok) c.out.detail = "500 SRT cases, 1000 callsigns, 4 timing constraints flagged";
  return c.out;
}

Outcome c6_ranking_oracles() {
  Checker c;
  Rng rng(6);
  for (int n = 0; n < 200; ++n) {
    std::vector<Scored> v;
    const int grid = static_cast<int>(rng.uniform_int(1, 8));
    for (int i = static_cast<int>(rng.uniform_int(2, 25)); i > 0; --i)
      v.push_back({static_cast<double>(rng.uniform_int(0, grid)) / grid, rng.chance(0.6)});
    v[0].positive = true;
    v[1].positive = false;
    double num = 0, pairs = 0, ap = 0;
    int P = 0;
    for (const auto& a : v) {
      if (!a.positive) continue;
      ++P;
      int tp = 0, all = 0;
      for (const auto& b : v) {
        if (!b.positive) {
          num += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
          pairs += 1;
        }
        if (b.score >= a.score) {
          ++all;
          tp += b.positive;
        }
      }
      ap += static_cast<double>(tp) / all;
    }
    c.expect(auroc(v) == num / pairs, "AUROC mismatch on set " + std::to_string(n));
    c.near(pr_curve(v).average_precision, ap / P, 1e-12, "AP on set " + std::to_string(n));
  }
  c.expect(auroc(std::vector<Scored>{{0.9, true}, {0.8, true}, {0.2, false}, {0.1, false}}) == 1.0, "perfect separation");
  c.expect(auroc(std::vector<Scored>{{0.5, true}, {0.5, false}, {0.5, true}}) == 0.5, "all tied");
  if (c.out.ok) c.out.detail = "200 sets exact vs pairwise; AP vs sweep; degenerate 1.0 and 0.5";
  return c.out;
}

Outcome c7_matrix() {
  Checker c;
  const auto& ds = default_dataset();
  EndpointConfig cfg;
  cfg.name = "oracle";
  cfg.kind = "oracle_mock";
  cfg.max_parallel = 4;
  cfg.latency_s = 1.0;
  const auto dir = temp_path("matrix");
  OracleMock full(cfg, ds);
  const auto st = run_matrix(ds, {&full}, {}, dir / "full.jsonl", no_sleep());
  const auto sums = summarize(st.records);
  c.expect(sums.size() == 6, "conditions = " + std::to_string(sums.size()));
  for (const auto& s : sums) {
    c.expect(s.n == 94, s.condition.key() + " has " + std::to_string(s.n) + " records");
    c.expect(s.macro_f1 == 1.0, s.condition.key() + " macro-F1 " + fmt3(s.macro_f1));
  }
  c.expect(st.leakage_violations == 0, "leakage assertions fired");
  OracleMock a(cfg, ds), b(cfg, ds);
  auto cut = no_sleep();
  cut.max_new_records = 200;
  const auto first = run_matrix(ds, {&a}, {}, dir / "resumed.jsonl", cut);
  const auto second = run_matrix(ds, {&b}, {}, dir / "resumed.jsonl", no_sleep());
  c.expect(first.interrupted, "run was not interrupted");
  c.expect(read_file(dir / "full.jsonl") == read_file(dir / "resumed.jsonl"), "resumed table differs");
  c.expect(a.calls() + b.calls() == full.calls(), "duplicate endpoint calls: " + std::to_string(a.calls() + b.calls()) + " vs " +
                                                      std::to_string(full.calls()));
  if (c.out.ok) c.out.detail = "6 x 94 records, macro-F1 1.0, 0 leakage, resume identical with " + std::to_string(full.calls()) + " calls";
  fs::remove_all(dir);
  return c.out;
}

Outcome c8_masking() {
  Checker c;
  const auto& ds = default_dataset();
  std::size_t checked = 0;
  for (const auto& s : ds.scenarios) {
    const auto nw = word_count(s.transcript);
    const auto nc = s.transcript.cues.size();
    for (double r : kMaskRates) {
      const auto seed = perturbation_seed(42, mask_variant(MaskScheme::word, r), s.id);
      const auto w = mask_words(s.transcript, {MaskScheme::word, r, seed});
      const auto u = mask_utterances(s.transcript, {MaskScheme::utterance, r, seed});
      std::size_t masked = 0, placeholders = 0;
      for (const auto& cue : w.cues)
        for (const auto& tok : str::split_ws(cue.text)) masked += tok == kMaskToken;
      for (const auto& cue : u.cues) placeholders += cue.text == kGarbledPlaceholder;
      c.expect(masked == static_cast<std::size_t>(std::llround(r * static_cast<double>(nw))), s.id + " word count");
      c.expect(placeholders == static_cast<std::size_t>(std::llround(r * static_cast<double>(nc))), s.id + " cue count");
      for (const auto* m : {&w, &u}) {
        c.expect(m->cues.size() == nc, s.id + " cue count changed");
        for (std::size_t i = 0; i < std::min(nc, m->cues.size()); ++i)
          c.expect(m->cues[i].index == s.transcript.cues[i].index && m->cues[i].start_ms == s.transcript.cues[i].start_ms &&
                       m->cues[i].end_ms == s.transcript.cues[i].end_ms,
                   s.id + " timing changed");
      }
      c.expect(emit_srt(w) == emit_srt(mask_words(s.transcript, {MaskScheme::word, r, seed})), s.id + " not deterministic");
      c.expect(emit_srt(u) == emit_srt(mask_utterances(s.transcript, {MaskScheme::utterance, r, seed})), s.id + " not deterministic");
      ++checked;
    }
  }
  if (c.out.ok) c.out.detail = std::to_string(checked) + " scenario-rate pairs exact for both schemes";
  return c.out;
}

Outcome c9_noise() {
  Checker c;
  const auto clean = tone(440.0, 5.0);
  const auto noisy = inject_noise(clean, {0.25, 9});
  std::vector<double> diff(clean.samples.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = noisy.samples[i] - clean.samples[i];
  const double ratio = rms(diff) / rms(clean);
  c.expect(std::fabs(ratio - 0.25) <= 0.0025, "ratio " + str::printf("%.5f", ratio));
  c.expect(inject_noise(clean, {0.0, 9}) == clean, "NSR 0 not bit-identical");
  bool threw = false;
  try {
    Pcm silent;
    silent.samples.assign(16000, 0);
    inject_noise(silent, {0.25, 9});
  } catch (const Error&) {
    threw = true;
  }
  c.expect(threw, "silent input accepted");
  if (c.out.ok) c.out.detail = "measured ratio " + str::printf("%.5f", ratio) + ", NSR 0 identical, silent input rejected";
  return c.out;
}

Outcome c10_cot_accounting() {
  Checker c;
  const auto& ds = default_dataset();
  ScriptedEndpoint ep;
  ep.reply("N1A reports left base while N2B is on a two-mile straight-in; both target runway 30.", 3.25)
      .reply("Sure. {\"label\": \"danger\", \"confidence\": 0.82, \"reasoning\": \"Base and straight-in converge.\"} Hope that helps.",
             0.75);
  const auto v = run_protocol(ep, Framing::binary, Strategy::fs, Protocol::cot, *ds.split(Split::test).front(), ds.split(Split::icl),
                              {{}, [](double) {}, {}});
  c.expect(v.turns == 2, "turns " + std::to_string(v.turns));
  c.expect(v.latency_s == 3.25 + 0.75, "latency " + str::compact(v.latency_s, 3));
  c.expect(v.label == "danger" && !v.parse_failure, "label " + v.label);
  const auto x = extract_verdict("Reasoning first... then {\"label\": \"nominal\", \"confidence\": 0.7, \"reasoning\": \"ok\"} done.",
                                 Framing::binary);
  c.expect(x.verdict.has_value() && x.verdict->label == "nominal", "embedded JSON not recovered");
  if (c.out.ok) c.out.detail = "latency 3.25 + 0.75 = 4.00 s over 2 turns; embedded JSON recovered";
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"table arithmetic from confusion counts", c1_table_arithmetic},
      {"dataset composition and determinism", c2_dataset_composition},
      {"label rules match brute-force evaluator", c3_label_oracle},
      {"METAR round trip and S003 decode", c4_metar},
      {"SRT, phraseology and timing checks", c5_srt_phraseology},
      {"AUROC and AP against oracles", c6_ranking_oracles},
      {"matrix bookkeeping and resume", c7_matrix},
      {"masking exactness", c8_masking},
      {"noise contract", c9_noise},
      {"CoT latency accounting and extraction", c10_cot_accounting},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first << " (" << o.detail << ") ["
              << str::printf("%.2f", s) << " s]\n";
  }
  std::cout << (failed ? "FAILED: " + std::to_string(failed) + " of 10 criteria" : std::string("ALL 10 CRITERIA PASS")) << "\n";
  return failed ? 1 : 0;
}
