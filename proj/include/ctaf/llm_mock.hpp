#pragma once

#include <atomic>
#include <cmath>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctaf/llm_client.hpp"
#include "ctaf/llm_eval.hpp"
#include "ctaf/scenario_gen.hpp"

namespace ctaf {

namespace mock_detail {

// METAR raw line of the latest scenario rendering in the conversation.
inline std::optional<std::string> target_metar(const std::vector<Message>& msgs) {
  for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) {
    if (it->role != "user") continue;
    const auto pos = it->content.find(kMetarRawTag);
    if (pos == std::string::npos) continue;
    const auto start = pos + kMetarRawTag.size();
    const auto end = it->content.find('\n', start);
    return it->content.substr(start, end == std::string::npos ? std::string::npos : end - start);
  }
  return std::nullopt;
}

inline Framing framing_of(const std::vector<Message>& msgs) {
  if (!msgs.empty() && msgs.front().role == "system" && msgs.front().content == kThreeClassSystemPrompt)
    return Framing::three_class;
  return Framing::binary;
}

inline bool wants_reasoning(const std::vector<Message>& msgs) {
  return !msgs.empty() && msgs.back().role == "user" && str::ends_with(msgs.back().content, kCotElicitation);
}

inline double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// JSON verdict split into tokens, the label value being its own token whose
// alternatives carry the label distribution.
inline Completion verdict_completion(const std::string& label, double confidence, const std::string& reasoning,
                                     Framing framing, bool with_logprobs) {
  const std::string head = "{\"label\": \"";
  const std::string tail = "\", \"confidence\": " + str::printf("%.2f", confidence) + ", \"reasoning\": " +
                           nlohmann::json(reasoning).dump() + "}";
  Completion c;
  c.text = head + label + tail;
  if (with_logprobs) {
    const auto& labels = framing_labels(framing);
    const double rest = (1.0 - confidence) / static_cast<double>(labels.size() - 1);
    TokenLogprob tl{label, std::log(std::max(confidence, 1e-9)), {}};
    tl.top.push_back({label, tl.logprob});
    for (const auto& l : labels)
      if (l != label) tl.top.push_back({l, std::log(std::max(rest, 1e-9))});
    c.logprobs.push_back({head, 0.0, {{head, 0.0}}});
    c.logprobs.push_back(tl);
    c.logprobs.push_back({tail, 0.0, {{tail, 0.0}}});
  }
  return c;
}

}  // namespace mock_detail

// Answers with the gold label of the scenario whose METAR appears in the
// prompt, corrupted at `error_rate` by a deterministic hash. CoT first turns
// get a short prose reply. Reported latency is deterministic too.
class OracleMock : public ChatEndpoint {
 public:
  OracleMock(EndpointConfig cfg, const Dataset& ds) : cfg_(std::move(cfg)) {
    for (const auto& s : ds.scenarios) gold_[s.metar_raw] = s.label3;
  }

  Completion complete_once(const std::vector<Message>& msgs, const CompletionOptions& opts) override {
    ++calls_;
    const auto metar = mock_detail::target_metar(msgs);
    if (!metar) throw EndpointError(cfg_.name + ": no scenario in prompt", 400);
    const auto it = gold_.find(*metar);
    if (it == gold_.end()) throw EndpointError(cfg_.name + ": unknown scenario METAR", 400);
    const Framing framing = mock_detail::framing_of(msgs);
    const std::uint64_t h = fnv1a(std::to_string(cfg_.seed) + "|" + *metar + "|" + std::string(to_string(framing)));
    const std::uint64_t h2 = splitmix64(h);
    const std::uint64_t h3 = splitmix64(h2);
    const double latency = cfg_.latency_s * (0.75 + 0.5 * mock_detail::unit(h3 ^ msgs.size()));

    if (mock_detail::wants_reasoning(msgs)) {
      Completion c;
      c.text = "Step 1: review the METAR. Step 2: follow each aircraft's calls in order. Step 3: compare positions "
               "for conflicts.";
      c.reported_latency_s = latency;
      return c;
    }
    const std::string gold = framing == Framing::binary ? std::string(to_string(collapse_to_binary(it->second)))
                                                        : std::string(to_string(it->second));
    std::string label = gold;
    if (mock_detail::unit(h) < cfg_.error_rate) {
      if (framing == Framing::binary) {
        label = gold == "nominal" ? "danger" : "nominal";
      } else {
        const auto& labels = framing_labels(framing);
        const auto gi = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), gold) - labels.begin());
        label = labels[(gi + 1 + (h2 >> 32) % 2) % 3];
      }
    }
    const double conf = std::round((0.6 + 0.39 * mock_detail::unit(h2)) * 100.0) / 100.0;
    Completion c = mock_detail::verdict_completion(label, conf, "Oracle verdict for the observed traffic.", framing,
                                                   cfg_.supports_logprobs && opts.want_logprobs);
    c.reported_latency_s = latency;
    return c;
  }

  const EndpointConfig& config() const override { return cfg_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  EndpointConfig cfg_;
  std::map<std::string, SafetyLabel3> gold_;
  std::atomic<std::size_t> calls_{0};
};

// Replays canned predictions: fixture JSON {"S004": {"label": ..., "confidence": ...}, ...}.
// Three-class fixture labels are collapsed for binary prompts.
class FixtureMock : public ChatEndpoint {
 public:
  FixtureMock(EndpointConfig cfg, const Dataset& ds, const nlohmann::json& fixture) : cfg_(std::move(cfg)) {
    for (const auto& s : ds.scenarios) id_by_metar_[s.metar_raw] = s.id;
    for (auto it = fixture.begin(); it != fixture.end(); ++it)
      preds_[it.key()] = {str::lower(it.value().at("label").get<std::string>()), it.value().value("confidence", 0.9)};
  }

  static nlohmann::json load(const fs::path& p) {
    auto j = nlohmann::json::parse(read_file(p), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("fixture " + p.string() + " is not a JSON object");
    return j.contains("predictions") ? j["predictions"] : j;
  }

  Completion complete_once(const std::vector<Message>& msgs, const CompletionOptions& opts) override {
    ++calls_;
    if (mock_detail::wants_reasoning(msgs)) {
      Completion c;
      c.text = "Reviewing the fixture scenario.";
      c.reported_latency_s = cfg_.latency_s;
      return c;
    }
    const auto metar = mock_detail::target_metar(msgs);
    const auto id = metar ? id_by_metar_.find(*metar) : id_by_metar_.end();
    if (id == id_by_metar_.end()) throw EndpointError(cfg_.name + ": unknown scenario", 400);
    const auto p = preds_.find(id->second);
    if (p == preds_.end()) throw EndpointError(cfg_.name + ": no fixture prediction for " + id->second, 400);
    const Framing framing = mock_detail::framing_of(msgs);
    std::string label = p->second.first;
    if (framing == Framing::binary && label != "nominal" && label != "danger") label = "danger";
    Completion c = mock_detail::verdict_completion(label, p->second.second, "Fixture verdict.", framing,
                                                   cfg_.supports_logprobs && opts.want_logprobs);
    c.reported_latency_s = cfg_.latency_s;
    return c;
  }

  const EndpointConfig& config() const override { return cfg_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  EndpointConfig cfg_;
  std::map<std::string, std::string> id_by_metar_;
  std::map<std::string, std::pair<std::string, double>> preds_;
  std::atomic<std::size_t> calls_{0};
};

// Plays back a fixed queue of replies or failures; records every request.
class ScriptedEndpoint : public ChatEndpoint {
 public:
  struct Step {
    std::string text;
    double latency_s = 0.0;
    int fail_status = -1;  // >= 0: throw instead of replying
    std::vector<TokenLogprob> logprobs;
  };

  ScriptedEndpoint() {
    cfg_.name = "scripted";
    cfg_.kind = "scripted";
  }
  explicit ScriptedEndpoint(EndpointConfig cfg) : cfg_(std::move(cfg)) {}

  ScriptedEndpoint& reply(std::string text, double latency_s = 0.0) {
    steps_.push_back({std::move(text), latency_s, -1, {}});
    return *this;
  }
  ScriptedEndpoint& fail(int status) {
    steps_.push_back({"", 0.0, status, {}});
    return *this;
  }
  ScriptedEndpoint& push(Step s) {
    steps_.push_back(std::move(s));
    return *this;
  }

  Completion complete_once(const std::vector<Message>& msgs, const CompletionOptions& opts) override {
    std::lock_guard lock(mu_);
    requests_.push_back(msgs);
    options_.push_back(opts);
    if (steps_.empty()) throw EndpointError(cfg_.name + ": script exhausted", 0);
    Step s = std::move(steps_.front());
    steps_.pop_front();
    if (s.fail_status >= 0) {
      if (retryable_status(s.fail_status))
        throw TransportError(cfg_.name + ": HTTP " + std::to_string(s.fail_status), s.fail_status, true);
      throw EndpointError(cfg_.name + ": HTTP " + std::to_string(s.fail_status), s.fail_status);
    }
    Completion c;
    c.text = std::move(s.text);
    c.logprobs = std::move(s.logprobs);
    c.reported_latency_s = s.latency_s;
    return c;
  }

  const EndpointConfig& config() const override { return cfg_; }
  EndpointConfig& mutable_config() { return cfg_; }
  const std::vector<std::vector<Message>>& requests() const { return requests_; }
  const std::vector<CompletionOptions>& options() const { return options_; }
  std::size_t remaining() const { return steps_.size(); }

 private:
  EndpointConfig cfg_;
  std::deque<Step> steps_;
  std::vector<std::vector<Message>> requests_;
  std::vector<CompletionOptions> options_;
  std::mutex mu_;
};

}  // namespace ctaf
