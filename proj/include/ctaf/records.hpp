#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ctaf/common.hpp"
#include "ctaf/scenario.hpp"

namespace ctaf {

enum class Framing { binary, three_class };
enum class Strategy { zs, os, fs };
enum class Protocol { direct, cot };

inline std::string_view to_string(Framing f) { return f == Framing::binary ? "binary" : "three_class"; }
inline std::string_view to_string(Strategy s) { return s == Strategy::zs ? "ZS" : s == Strategy::os ? "OS" : "FS"; }
inline std::string_view to_string(Protocol p) { return p == Protocol::direct ? "direct" : "cot"; }

inline Framing parse_framing(std::string_view s) {
  const std::string l = str::lower(s);
  if (l == "binary") return Framing::binary;
  if (l == "three_class" || l == "three-class" || l == "3class") return Framing::three_class;
  throw ConfigError("unknown framing '" + std::string(s) + "'");
}
inline Strategy parse_strategy(std::string_view s) {
  const std::string u = str::upper(s);
  if (u == "ZS" || u == "ZERO_SHOT") return Strategy::zs;
  if (u == "OS" || u == "ONE_SHOT") return Strategy::os;
  if (u == "FS" || u == "FEW_SHOT") return Strategy::fs;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}
inline Protocol parse_protocol(std::string_view s) {
  const std::string l = str::lower(s);
  if (l == "direct") return Protocol::direct;
  if (l == "cot") return Protocol::cot;
  throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

inline const std::vector<std::string>& framing_labels(Framing f) {
  static const std::vector<std::string> kBinary{"nominal", "danger"};
  static const std::vector<std::string> kThree{"nominal", "warning", "hazard"};
  return f == Framing::binary ? kBinary : kThree;
}

inline std::string gold_label(const Scenario& s, Framing f) {
  return std::string(f == Framing::binary ? to_string(s.label_binary) : to_string(s.label3));
}

// Classes counted as "danger" for score and AUROC purposes.
inline bool is_danger_label(std::string_view label) { return label != "nominal"; }

struct Condition {
  std::string model;
  Framing framing = Framing::binary;
  Strategy strategy = Strategy::zs;
  Protocol protocol = Protocol::direct;
  std::string variant;  // ablation tag, empty for the main matrix

  std::string key() const {
    std::string k = model + "|" + std::string(to_string(framing)) + "|" + std::string(to_string(strategy)) + "|" +
                    std::string(to_string(protocol));
    if (!variant.empty()) k += "|" + variant;
    return k;
  }
  auto tie() const { return std::tie(model, framing, strategy, protocol, variant); }
  friend bool operator==(const Condition& a, const Condition& b) { return a.tie() == b.tie(); }
  friend bool operator<(const Condition& a, const Condition& b) { return a.tie() < b.tie(); }
};

struct EvalRecord {
  std::string scenario_id;
  Condition condition;
  std::string gold;
  std::string pred;
  double confidence = 0.0;
  double score_danger = 0.5;
  std::string score_source = "confidence_fallback";  // logprob | confidence_fallback
  double latency_s = 0.0;
  bool parse_failure = false;
  std::optional<std::string> error;
  int attempts = 0;

  bool ok() const { return !error.has_value(); }
  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

inline nlohmann::ordered_json to_json(const Condition& c) {
  nlohmann::ordered_json j{{"model", c.model},
                           {"framing", std::string(to_string(c.framing))},
                           {"strategy", std::string(to_string(c.strategy))},
                           {"protocol", std::string(to_string(c.protocol))}};
  if (!c.variant.empty()) j["variant"] = c.variant;
  return j;
}

inline Condition condition_from_json(const nlohmann::ordered_json& j) {
  Condition c;
  c.model = j.at("model").get<std::string>();
  c.framing = parse_framing(j.at("framing").get<std::string>());
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.protocol = parse_protocol(j.at("protocol").get<std::string>());
  c.variant = j.value("variant", std::string());
  return c;
}

inline nlohmann::ordered_json to_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["scenario_id"] = r.scenario_id;
  j["condition"] = to_json(r.condition);
  j["gold"] = r.gold;
  j["pred"] = r.pred;
  j["confidence"] = r.confidence;
  j["score_danger"] = r.score_danger;
  j["score_source"] = r.score_source;
  j["latency_s"] = r.latency_s;
  j["parse_failure"] = r.parse_failure;
  j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
  j["attempts"] = r.attempts;
  return j;
}

inline EvalRecord record_from_json(const nlohmann::ordered_json& j) {
  EvalRecord r;
  r.scenario_id = j.at("scenario_id").get<std::string>();
  r.condition = condition_from_json(j.at("condition"));
  r.gold = j.at("gold").get<std::string>();
  r.pred = j.value("pred", std::string());
  r.confidence = j.value("confidence", 0.0);
  r.score_danger = j.value("score_danger", 0.5);
  r.score_source = j.value("score_source", std::string("confidence_fallback"));
  r.latency_s = j.value("latency_s", 0.0);
  r.parse_failure = j.value("parse_failure", false);
  if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
  r.attempts = j.value("attempts", 0);
  const auto& labels = framing_labels(r.condition.framing);
  if (std::find(labels.begin(), labels.end(), r.gold) == labels.end())
    throw ParseError("gold label not in framing class set", r.gold, 0);
  if (r.ok() && std::find(labels.begin(), labels.end(), r.pred) == labels.end())
    throw ParseError("predicted label not in framing class set", r.pred, 0);
  return r;
}

inline std::string record_line(const EvalRecord& r) { return to_json(r).dump() + "\n"; }

// Line-delimited JSON. ParseError offset is the 1-based line number.
inline std::vector<EvalRecord> parse_records(std::string_view text) {
  std::vector<EvalRecord> out;
  const auto lines = str::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = str::trim(lines[i]);
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), e.token(), i + 1);
    } catch (const std::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), std::string(line.substr(0, 40)), i + 1);
    }
  }
  return out;
}

inline std::vector<EvalRecord> read_records(const fs::path& p) { return parse_records(read_file(p)); }

inline bool record_less(const EvalRecord& a, const EvalRecord& b) {
  return std::tie(a.condition, a.scenario_id) < std::tie(b.condition, b.scenario_id);
}

// Sorted by (condition, scenario); for duplicates the last successful record
// wins, else the last one.
inline std::vector<EvalRecord> canonical_records(const std::vector<EvalRecord>& in) {
  std::map<std::pair<std::string, std::string>, EvalRecord> best;
  for (const auto& r : in) {
    auto key = std::make_pair(r.condition.key(), r.scenario_id);
    auto it = best.find(key);
    if (it == best.end() || r.ok() || !it->second.ok()) best[key] = r;
  }
  std::vector<EvalRecord> out;
  for (auto& [k, r] : best) out.push_back(r);
  std::sort(out.begin(), out.end(), record_less);
  return out;
}

inline void write_records(const fs::path& p, const std::vector<EvalRecord>& records) {
  std::string body;
  for (const auto& r : records) body += record_line(r);
  write_file(p, body);
}

// Groups records by condition, preserving condition order.
inline std::map<Condition, std::vector<EvalRecord>> by_condition(const std::vector<EvalRecord>& records) {
  std::map<Condition, std::vector<EvalRecord>> g;
  for (const auto& r : records) g[r.condition].push_back(r);
  return g;
}

}  // namespace ctaf
