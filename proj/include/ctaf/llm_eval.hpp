#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ctaf/llm_client.hpp"
#include "ctaf/records.hpp"
#include "ctaf/scenario.hpp"
#include "ctaf/scenario_gen.hpp"
#include "ctaf/transcript.hpp"

namespace ctaf {

// ---------------------------------------------------------------------------
// System prompts
// ---------------------------------------------------------------------------

inline constexpr std::string_view kBinarySystemPrompt =
    "You are an automated aviation safety monitoring system for Half Moon Bay Airport (KHAF), a non-towered airport near "
    "San Francisco, California. Your task is to analyze CTAF (Common Traffic Advisory Frequency) radio communications at "
    "KHAF and classify the safety status of the current traffic situation.\n"
    "\n"
    "Inputs\n"
    "- METAR weather data for KHAF (raw + decoded)\n"
    "- CTAF radio transcript (SRT format with timestamps)\n"
    "\n"
    "Task. Classify the situation as exactly one of nominal or danger.\n"
    "\n"
    "NOMINAL \xE2\x80\x94 all is well.\n"
    "- All required position calls are present (crosswind, downwind, base, final)\n"
    "- Traffic is sequenced and separated with no conflicts\n"
    "- Weather is VMC and appropriate for operations\n"
    "- Single aircraft announcing each leg, no other traffic\n"
    "\n"
    "DANGER \xE2\x80\x94 any potential or imminent safety issue. Use danger whenever there is any conflict, communication "
    "gap, or unsafe condition:\n"
    "- Communication gaps: missing position calls, NORDO traffic, delayed announcements\n"
    "- Pattern conflicts: converging traffic, wrong-runway calls, improper entries\n"
    "- Active conflicts: simultaneous final, runway incursions, mid-air risk\n"
    "- Weather mismatches: VFR pilot inadvertently in IMC\n"
    "- Late or omitted go-around announcements\n"
    "- Any situation a CTAF advisory would flag as caution, alert, or emergency\n"
    "Key question. \"Would a CTAF advisory flag this for any reason (caution, alert, or emergency)?\" If yes "
    "\xE2\x87\x92 danger.\n"
    "\n"
    "CTAF rules (FAA AC 90-66C).\n"
    "- Pilots must self-announce: crosswind, downwind, base, final, runway clear\n"
    "- Straight-in: announce at 10, 5, and 3 NM\n"
    "- Go-around must be announced immediately\n"
    "- No ATC \xE2\x80\x94 pilots are solely responsible for separation\n"
    "\n"
    "Output format. Respond with only the following JSON, no other text:\n"
    "{\n"
    "  \"label\": \"<nominal | danger>\",\n"
    "  \"confidence\": <0.0-1.0>,\n"
    "  \"reasoning\": \"<one sentence stating the key safety factor>\"\n"
    "}";

inline constexpr std::string_view kThreeClassSystemPrompt =
    "You are an automated aviation safety monitoring system for Half Moon Bay Airport (KHAF), a non-towered airport near "
    "San Francisco, California. Your task is to analyze multimodal flight-operations data and classify the safety status "
    "of the current traffic situation.\n"
    "\n"
    "Inputs\n"
    "- METAR weather data for KHAF (raw + decoded)\n"
    "- CTAF radio transcript (SRT format with timestamps)\n"
    "\n"
    "Task. Classify the situation as exactly one of nominal, warning, or hazard.\n"
    "\n"
    "NOMINAL \xE2\x80\x94 all is well.\n"
    "- All required position calls are present (crosswind, downwind, base, final)\n"
    "- Traffic is sequenced and separated, no conflicts\n"
    "- Weather is VMC and appropriate for operations\n"
    "\n"
    "WARNING \xE2\x80\x94 a potential problem exists but no collision is imminent yet.\n"
    "- An aircraft flying the wrong pattern direction without conflict\n"
    "- Two aircraft converging on final with separation > 0.5 NM\n"
    "- Missing position calls from one aircraft, no immediate conflict\n"
    "Key question. \"Can the pilots resolve this themselves with standard advisory actions?\" If yes \xE2\x87\x92 warning.\n"
    "\n"
    "HAZARD \xE2\x80\x94 a collision or serious incident is imminent or already occurring.\n"
    "- Two aircraft simultaneously on final for the same runway (< 0.5 NM)\n"
    "- An aircraft on the runway while another is on short final\n"
    "- Wrong-runway announcement during an active approach\n"
    "- Same altitude and converging \xE2\x80\x94 mid-air collision risk\n"
    "Key question. \"Would a CTAF advisory say IMMEDIATELY or SAFETY ALERT?\" If yes \xE2\x87\x92 hazard.\n"
    "\n"
    "Critical distinction. The difference between warning and hazard is imminence, not severity.\n"
    "\n"
    "Output format. Respond with only the following JSON, no other text:\n"
    "{\n"
    "  \"label\": \"<nominal | warning | hazard>\",\n"
    "  \"confidence\": <0.0-1.0>,\n"
    "  \"reasoning\": \"<one sentence stating the key safety factor>\"\n"
    "}";

inline std::string_view system_prompt(Framing f) { return f == Framing::binary ? kBinarySystemPrompt : kThreeClassSystemPrompt; }

inline constexpr std::string_view kCotElicitation =
    "Before classifying, reason step by step through each aircraft's reported position, the weather, and any conflict "
    "between them.";
inline constexpr std::string_view kCotExtraction = "Based on your reasoning above, respond with only the JSON object.";
inline constexpr std::string_view kRepairPrefix = "Your previous reply could not be parsed";

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

inline constexpr std::string_view kMetarRawTag = "METAR (raw): ";

inline std::string render_scenario_input(const Scenario& s, const Transcript* transcript = nullptr) {
  return std::string(kMetarRawTag) + s.metar_raw + "\nMETAR (decoded): " + s.metar_decoded + "\n\nCTAF transcript (SRT):\n" +
         emit_srt(transcript ? *transcript : s.transcript);
}

inline std::string first_sentence(std::string_view text) {
  const auto t = str::trim(text);
  for (std::size_t i = 0; i + 1 < t.size(); ++i)
    if ((t[i] == '.' || t[i] == '!' || t[i] == '?') && t[i + 1] == ' ') return std::string(t.substr(0, i + 1));
  return std::string(t);
}

inline std::string exemplar_reply(const Scenario& s, Framing f) {
  nlohmann::ordered_json j;
  j["label"] = gold_label(s, f);
  j["confidence"] = 1.0;
  j["reasoning"] = first_sentence(s.advisory);
  return j.dump();
}

// OS: first ICL scenario of each class; FS: first two per class, interleaved
// nominal, warning, hazard, nominal, warning, hazard.
inline std::vector<const Scenario*> select_exemplars(Strategy strategy, const std::vector<const Scenario*>& icl_pool) {
  if (strategy == Strategy::zs) return {};
  const int per_class = strategy == Strategy::os ? 1 : 2;
  std::map<SafetyLabel3, std::vector<const Scenario*>> by;
  for (const auto* s : icl_pool) by[s->label3].push_back(s);
  std::vector<const Scenario*> out;
  for (int round = 0; round < per_class; ++round) {
    for (auto l : {SafetyLabel3::nominal, SafetyLabel3::warning, SafetyLabel3::hazard}) {
      const auto& v = by[l];
      if (static_cast<int>(v.size()) <= round)
        throw ConfigError("ICL pool has fewer than " + std::to_string(per_class) + " " + std::string(to_string(l)) + " exemplar(s)");
      out.push_back(v[static_cast<std::size_t>(round)]);
    }
  }
  return out;
}

struct PromptExtras {
  const Transcript* transcript = nullptr;  // replaces the scenario transcript (ablations)
  std::string image_base64;                // qualitative passthrough only
  std::string image_mime = "image/png";
};

inline std::vector<Message> assemble_prompt(Framing framing, Strategy strategy, const Scenario& target,
                                            const std::vector<const Scenario*>& icl_pool, const PromptExtras& extras = {}) {
  if (target.split != Split::test) throw Error("target " + target.id + " is not in the test split");
  const auto exemplars = select_exemplars(strategy, icl_pool);
  std::vector<Message> msgs{{"system", std::string(system_prompt(framing)), "", ""}};
  for (const auto* ex : exemplars) {
    if (ex->id == target.id) throw Error("exemplar " + ex->id + " is the target scenario");
    if (ex->split != Split::icl) throw Error("exemplar " + ex->id + " is not in the ICL pool");
    msgs.push_back({"user", render_scenario_input(*ex), "", ""});
    msgs.push_back({"assistant", exemplar_reply(*ex, framing), "", ""});
  }
  Message user{"user", render_scenario_input(target, extras.transcript), "", ""};
  if (!extras.image_base64.empty()) {
    user.image_base64 = extras.image_base64;
    user.image_mime = extras.image_mime;
  }
  msgs.push_back(std::move(user));
  return msgs;
}

// ---------------------------------------------------------------------------
// Verdict extraction and scoring
// ---------------------------------------------------------------------------

struct ParsedVerdict {
  std::string label;
  double confidence = 0.0;
  std::string reasoning;
};

struct Extraction {
  std::optional<ParsedVerdict> verdict;
  std::string error;  // set when verdict is empty
  std::size_t label_offset = std::string::npos;  // offset of the label value in the text
};

// Start/end of balanced {...} objects in order, skipping braces inside strings.
inline std::vector<std::pair<std::size_t, std::size_t>> balanced_objects(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_str = false, esc = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_str) {
        if (esc) esc = false;
        else if (c == '\\') esc = true;
        else if (c == '"') in_str = false;
        continue;
      }
      if (c == '"') in_str = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        out.emplace_back(start, i + 1);
        break;
      }
    }
  }
  return out;
}

inline Extraction extract_verdict(std::string_view text, Framing framing) {
  Extraction ex;
  std::optional<nlohmann::json> obj;
  std::size_t obj_start = 0;
  for (auto [b, e] : balanced_objects(text)) {
    auto j = nlohmann::json::parse(text.substr(b, e - b), nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      obj = std::move(j);
      obj_start = b;
      break;
    }
  }
  if (!obj) {
    ex.error = "no JSON object";
    return ex;
  }
  const auto& j = *obj;
  if (!j.contains("label") || !j["label"].is_string()) {
    ex.error = "missing field: label";
    return ex;
  }
  if (!j.contains("confidence") || !j["confidence"].is_number()) {
    ex.error = "missing field: confidence";
    return ex;
  }
  if (!j.contains("reasoning") || !j["reasoning"].is_string()) {
    ex.error = "missing field: reasoning";
    return ex;
  }
  const std::string label = str::lower(str::trim(j["label"].get<std::string>()));
  const auto& labels = framing_labels(framing);
  if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
    ex.error = "unknown label: " + j["label"].get<std::string>();
    return ex;
  }
  const double conf = j["confidence"].get<double>();
  if (!(conf >= 0.0 && conf <= 1.0)) {
    ex.error = "confidence out of range: " + str::compact(conf, 3);
    return ex;
  }
  ex.verdict = ParsedVerdict{label, conf, j["reasoning"].get<std::string>()};
  // Position of the label value, for logprob lookup.
  const auto key = text.find("\"label\"", obj_start);
  if (key != std::string_view::npos) {
    const auto colon = text.find(':', key + 7);
    const auto quote = colon == std::string_view::npos ? colon : text.find('"', colon);
    if (quote != std::string_view::npos) ex.label_offset = quote + 1;
  }
  return ex;
}

inline double fallback_score(std::string_view label, double confidence) {
  return is_danger_label(label) ? confidence : 1.0 - confidence;
}

struct Score {
  double value = 0.5;
  std::string source = "confidence_fallback";
};

// Danger mass from the label token's top alternatives, renormalised over the
// framing's labels. Falls back to the confidence formula when logprobs are
// missing or carry no label mass.
inline Score capture_score(const ParsedVerdict& v, const Completion& c, Framing framing, bool supports_logprobs,
                           std::size_t label_offset = std::string::npos) {
  Score s{fallback_score(v.label, v.confidence), "confidence_fallback"};
  if (!supports_logprobs || c.logprobs.empty()) return s;
  // Locate the token covering the label value.
  const TokenLogprob* tok = nullptr;
  std::size_t pos = 0;
  for (const auto& t : c.logprobs) {
    const std::size_t end = pos + t.token.size();
    if (label_offset != std::string::npos && label_offset >= pos && label_offset < end) {
      tok = &t;
      break;
    }
    pos = end;
  }
  if (!tok) {
    for (const auto& t : c.logprobs) {
      std::string norm = str::lower(str::trim(t.token));
      std::erase(norm, '"');
      if (!norm.empty() && str::starts_with(v.label, norm)) {
        tok = &t;
        break;
      }
    }
  }
  if (!tok) return s;
  const auto& labels = framing_labels(framing);
  std::map<std::string, double> mass;
  auto alts = tok->top;
  if (alts.empty()) alts.push_back({tok->token, tok->logprob});
  std::set<std::string> seen;
  for (const auto& [text, lp] : alts) {
    std::string norm = str::lower(str::trim(text));
    std::erase(norm, '"');
    if (norm.empty() || !seen.insert(norm).second) continue;
    std::vector<std::string> hits;
    for (const auto& l : labels)
      if (str::starts_with(l, norm)) hits.push_back(l);
    if (hits.size() == 1) mass[hits[0]] += std::exp(lp);
  }
  double total = 0.0, danger = 0.0;
  for (const auto& [l, m] : mass) {
    total += m;
    if (is_danger_label(l)) danger += m;
  }
  if (total <= 0.0) return s;
  return {danger / total, "logprob"};
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

struct Verdict {
  std::string label;
  double confidence = 0.0;
  std::string reasoning;
  double score_danger = 0.5;
  std::string score_source = "confidence_fallback";
  double latency_s = 0.0;
  std::string raw_response;
  bool parse_failure = false;
  std::string parse_error;
  int attempts = 0;  // HTTP attempts across all turns
  int turns = 0;
};

// A parse failure is scored as a misclassification.
inline std::string wrong_label(std::string_view gold, Framing f) {
  if (f == Framing::binary) return gold == "nominal" ? "danger" : "nominal";
  return gold == "nominal" ? "hazard" : "nominal";
}

struct ProtocolOptions {
  RetryPolicy retry;
  Sleeper sleeper = real_sleeper();
  PromptExtras extras;
};

inline Verdict run_protocol(ChatEndpoint& ep, Framing framing, Strategy strategy, Protocol protocol, const Scenario& target,
                            const std::vector<const Scenario*>& icl_pool, const ProtocolOptions& opt = {}) {
  std::vector<Message> msgs = assemble_prompt(framing, strategy, target, icl_pool, opt.extras);
  const bool logprobs = ep.config().supports_logprobs;
  Verdict v;
  const auto call = [&](const std::vector<Message>& m, int max_tokens, bool want_lp) {
    CompletionOptions co;
    co.temperature = 0.0;
    co.max_tokens = max_tokens;
    co.want_logprobs = want_lp && logprobs;
    Completion c = complete(ep, m, co, opt.retry, opt.sleeper);
    v.latency_s += c.latency_s;
    v.attempts += c.attempts;
    ++v.turns;
    return c;
  };

  if (protocol == Protocol::cot) {
    msgs.back().content += "\n\n" + std::string(kCotElicitation);
    const Completion reasoning = call(msgs, 1024, false);
    msgs.push_back({"assistant", reasoning.text, "", ""});
    msgs.push_back({"user", std::string(kCotExtraction), "", ""});
  }
  Completion c = call(msgs, 512, true);
  Extraction ex = extract_verdict(c.text, framing);
  if (!ex.verdict) {
    msgs.push_back({"assistant", c.text, "", ""});
    msgs.push_back({"user", std::string(kRepairPrefix) + " (" + ex.error + "). Respond with only the JSON object.", "", ""});
    c = call(msgs, 512, true);
    ex = extract_verdict(c.text, framing);
  }
  v.raw_response = c.text;
  if (!ex.verdict) {
    v.parse_failure = true;
    v.parse_error = ex.error;
    v.label = wrong_label(gold_label(target, framing), framing);
    v.confidence = 0.0;
    v.score_danger = 0.5;
    v.score_source = "confidence_fallback";
    return v;
  }
  v.label = ex.verdict->label;
  v.confidence = ex.verdict->confidence;
  v.reasoning = ex.verdict->reasoning;
  const Score sc = capture_score(*ex.verdict, c, framing, logprobs, ex.label_offset);
  v.score_danger = std::clamp(sc.value, 0.0, 1.0);
  v.score_source = sc.source;
  return v;
}

// ---------------------------------------------------------------------------
// Matrix runner
// ---------------------------------------------------------------------------

struct MatrixSpec {
  std::vector<Framing> framings{Framing::binary};
  std::vector<Strategy> strategies{Strategy::zs, Strategy::os, Strategy::fs};
  std::vector<Protocol> protocols{Protocol::direct, Protocol::cot};
  std::string variant;
  // Per-scenario transcript override (ablations); keyed by scenario id.
  const std::map<std::string, Transcript>* transcripts = nullptr;
};

struct MatrixOptions {
  RetryPolicy retry;
  Sleeper sleeper = real_sleeper();
  // Stop after starting this many new records (simulated interruption).
  std::optional<std::size_t> max_new_records;
  std::function<void(const EvalRecord&)> on_record;
};

struct MatrixStats {
  std::size_t planned = 0;
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::size_t errors = 0;
  std::size_t parse_failures = 0;
  std::size_t leakage_violations = 0;
  bool interrupted = false;
  std::vector<EvalRecord> records;  // canonical table when not interrupted
};

inline std::vector<Condition> matrix_conditions(const std::vector<ChatEndpoint*>& endpoints, const MatrixSpec& spec) {
  std::vector<Condition> out;
  for (auto* ep : endpoints)
    for (auto f : spec.framings)
      for (auto s : spec.strategies)
        for (auto p : spec.protocols) out.push_back({ep->config().name, f, s, p, spec.variant});
  return out;
}

// One record per (condition, test scenario), appended to `records_path` as
// they complete. Existing successful records are skipped; error records are
// retried. Each endpoint gets up to max_parallel worker threads.
inline MatrixStats run_matrix(const Dataset& ds, const std::vector<ChatEndpoint*>& endpoints, const MatrixSpec& spec,
                              const fs::path& records_path, const MatrixOptions& opt = {}) {
  MatrixStats stats;
  std::vector<EvalRecord> existing;
  if (fs::exists(records_path)) existing = read_records(records_path);
  std::set<std::pair<std::string, std::string>> done;
  for (const auto& r : existing)
    if (r.ok()) done.insert({r.condition.key(), r.scenario_id});

  const auto icl = ds.split(Split::icl);
  const auto test = ds.split(Split::test);
  std::set<std::string> icl_ids;
  for (const auto* s : icl) icl_ids.insert(s->id);

  struct Task {
    Condition cond;
    const Scenario* scenario;
  };
  std::map<std::string, std::vector<Task>> per_endpoint;
  std::map<std::string, ChatEndpoint*> ep_by_name;
  for (auto* ep : endpoints) {
    if (ep_by_name.count(ep->config().name)) throw ConfigError("duplicate endpoint name " + ep->config().name);
    ep_by_name[ep->config().name] = ep;
  }
  for (const auto& c : matrix_conditions(endpoints, spec)) {
    for (const auto* s : test) {
      ++stats.planned;
      if (done.count({c.key(), s->id})) {
        ++stats.skipped;
        continue;
      }
      per_endpoint[c.model].push_back({c, s});
    }
  }

  if (records_path.has_parent_path()) fs::create_directories(records_path.parent_path());
  std::ofstream out(records_path, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to " + records_path.string());
  std::mutex write_mu;
  std::atomic<std::size_t> started{0};
  std::atomic<bool> stop{false};
  std::vector<EvalRecord> fresh;

  const auto run_task = [&](ChatEndpoint& ep, const Task& task) {
    EvalRecord r;
    r.scenario_id = task.scenario->id;
    r.condition = task.cond;
    r.gold = gold_label(*task.scenario, task.cond.framing);
    std::size_t leak = 0;
    // Leakage guard: exemplars must come from the ICL pool and differ from the target.
    if (icl_ids.count(task.scenario->id)) leak = 1;
    for (const auto* ex : select_exemplars(task.cond.strategy, icl))
      if (ex->id == task.scenario->id || ex->split != Split::icl) leak = 1;
    if (leak) {
      r.error = "ICL leakage";
    } else {
      try {
        ProtocolOptions po{opt.retry, opt.sleeper, {}};
        if (spec.transcripts) {
          auto it = spec.transcripts->find(task.scenario->id);
          if (it == spec.transcripts->end()) throw Error("no transcript for " + task.scenario->id);
          po.extras.transcript = &it->second;
        }
        const Verdict v = run_protocol(ep, task.cond.framing, task.cond.strategy, task.cond.protocol, *task.scenario, icl, po);
        r.pred = v.label;
        r.confidence = v.confidence;
        r.score_danger = v.score_danger;
        r.score_source = v.score_source;
        r.latency_s = v.latency_s;
        r.parse_failure = v.parse_failure;
        r.attempts = v.attempts;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
    std::lock_guard lock(write_mu);
    stats.leakage_violations += leak;
    if (r.error) ++stats.errors;
    if (r.parse_failure) ++stats.parse_failures;
    ++stats.written;
    out << record_line(r);
    out.flush();
    fresh.push_back(r);
    if (opt.on_record) opt.on_record(r);
  };

  std::vector<std::thread> threads;
  for (auto& [name, tasks] : per_endpoint) {
    ChatEndpoint* ep = ep_by_name.at(name);
    auto next = std::make_shared<std::atomic<std::size_t>>(0);
    const int workers = std::max(1, std::min<int>(ep->config().max_parallel, static_cast<int>(tasks.size())));
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, ep, next, tasks_ptr = &tasks] {
        for (;;) {
          if (stop.load()) return;
          const std::size_t i = next->fetch_add(1);
          if (i >= tasks_ptr->size()) return;
          if (opt.max_new_records && started.fetch_add(1) >= *opt.max_new_records) {
            stop.store(true);
            return;
          }
          run_task(*ep, (*tasks_ptr)[i]);
        }
      });
    }
  }
  for (auto& t : threads) t.join();
  out.close();

  stats.interrupted = stop.load();
  if (!stats.interrupted) {
    std::vector<EvalRecord> all = existing;
    all.insert(all.end(), fresh.begin(), fresh.end());
    stats.records = canonical_records(all);
    write_records(records_path, stats.records);
  }
  return stats;
}

}  // namespace ctaf
