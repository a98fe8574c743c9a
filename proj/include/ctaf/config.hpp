#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctaf/ablations.hpp"
#include "ctaf/llm_client.hpp"
#include "ctaf/llm_eval.hpp"
#include "ctaf/llm_http.hpp"
#include "ctaf/llm_mock.hpp"
#include "ctaf/scenario_gen.hpp"

namespace ctaf {

struct EvalSection {
  std::vector<std::string> endpoints;  // empty = all
  std::vector<Framing> framings{Framing::binary};
  std::vector<Strategy> strategies{Strategy::zs, Strategy::os, Strategy::fs};
  std::vector<Protocol> protocols{Protocol::direct, Protocol::cot};
  std::string variant;
};

struct AblationSection {
  AblationPlan plan;
  std::vector<std::string> endpoints;  // empty = all
};

struct RunConfig {
  std::uint64_t seed = 42;
  fs::path dataset;  // empty = <out>/dataset
  fs::path out = "out";
  GenConfig gen;
  std::string generator_endpoint;  // used when transcript_backend != "template"
  std::vector<EndpointConfig> endpoints;
  EvalSection eval;
  RetryPolicy retry;
  std::vector<AblationSection> ablations;

  fs::path dataset_dir() const { return dataset.empty() ? out / "dataset" : dataset; }

  // Plans that inherited the run seed follow an override.
  void set_seed(std::uint64_t s) {
    for (auto& a : ablations)
      if (a.plan.seed == seed) a.plan.seed = s;
    seed = s;
    gen.seed = s;
  }

  const EndpointConfig& endpoint(const std::string& name) const {
    for (const auto& e : endpoints)
      if (e.name == name) return e;
    throw ConfigError("endpoint '" + name + "' is not defined");
  }

  std::vector<std::string> resolve(const std::vector<std::string>& names) const {
    if (!names.empty()) return names;
    std::vector<std::string> all;
    for (const auto& e : endpoints) all.push_back(e.name);
    return all;
  }

  void validate() const {
    gen.validate();
    std::set<std::string> names;
    for (const auto& e : endpoints) {
      if (e.name.empty()) throw ConfigError("endpoint without a name");
      if (!names.insert(e.name).second) throw ConfigError("duplicate endpoint '" + e.name + "'");
      static const std::set<std::string> kinds{"openai", "anthropic", "oracle_mock", "fixture_mock"};
      if (!kinds.count(e.kind)) throw ConfigError("endpoint '" + e.name + "' has unknown kind '" + e.kind + "'");
      if (e.max_parallel < 1) throw ConfigError("endpoint '" + e.name + "' max_parallel must be >= 1");
      if (!(e.error_rate >= 0.0 && e.error_rate <= 1.0)) throw ConfigError("endpoint '" + e.name + "' error_rate must be in [0, 1]");
      if (e.kind == "fixture_mock" && e.fixture_path.empty()) throw ConfigError("endpoint '" + e.name + "' needs fixture_path");
      if ((e.kind == "openai" || e.kind == "anthropic") && (e.base_url.empty() || e.model.empty()))
        throw ConfigError("endpoint '" + e.name + "' needs base_url and model");
    }
    for (const auto& n : eval.endpoints) endpoint(n);
    if (eval.framings.empty() || eval.strategies.empty() || eval.protocols.empty())
      throw ConfigError("eval framings, strategies and protocols must be non-empty");
    if (gen.transcript_backend != "template") endpoint(generator_endpoint.empty() ? gen.transcript_backend : generator_endpoint);
    std::set<std::string> plan_names;
    for (const auto& a : ablations) {
      if (a.plan.name.empty()) throw ConfigError("ablation plan without a name");
      if (!plan_names.insert(a.plan.name).second) throw ConfigError("duplicate ablation plan '" + a.plan.name + "'");
      for (const auto& n : a.endpoints) endpoint(n);
    }
    if (retry.max_attempts < 1 || retry.base_s < 0 || retry.factor < 1) throw ConfigError("invalid retry policy");
  }
};

namespace config_detail {

using nlohmann::json;

inline void only_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

template <typename E, typename F>
std::vector<E> enum_list(const json& j, const char* key, std::vector<E> fallback, F parse) {
  if (!j.contains(key)) return fallback;
  std::vector<E> out;
  for (const auto& v : get<std::vector<std::string>>(j, key, {})) out.push_back(parse(v));
  return out;
}

inline EndpointConfig endpoint_from_json(const json& j) {
  only_keys(j,
            {"name", "kind", "base_url", "model", "auth_env", "supports_logprobs", "max_parallel", "timeout_s", "error_rate", "seed",
             "fixture_path", "latency_s"},
            "endpoint");
  EndpointConfig e;
  e.name = get<std::string>(j, "name", "");
  e.kind = get<std::string>(j, "kind", e.kind);
  e.base_url = get<std::string>(j, "base_url", "");
  e.model = get<std::string>(j, "model", "");
  e.auth_env = get<std::string>(j, "auth_env", "");
  e.supports_logprobs = get<bool>(j, "supports_logprobs", e.supports_logprobs);
  e.max_parallel = get<int>(j, "max_parallel", e.max_parallel);
  e.timeout_s = get<double>(j, "timeout_s", e.timeout_s);
  e.error_rate = get<double>(j, "error_rate", e.error_rate);
  e.seed = get<std::uint64_t>(j, "seed", e.seed);
  e.fixture_path = get<std::string>(j, "fixture_path", "");
  e.latency_s = get<double>(j, "latency_s", e.latency_s);
  if (e.kind == "anthropic") e.supports_logprobs = false;
  return e;
}

inline AblationSection ablation_from_json(const json& j, std::uint64_t seed) {
  only_keys(j,
            {"name", "kind", "endpoints", "framing", "strategies", "protocols", "seed", "scheme", "rates", "mask_token", "placeholder",
             "nsr", "audio_dir", "transcriber", "transcript_sets"},
            "ablation");
  AblationSection a;
  auto& p = a.plan;
  p.name = get<std::string>(j, "name", "");
  p.kind = parse_ablation_kind(get<std::string>(j, "kind", "mask"));
  a.endpoints = get<std::vector<std::string>>(j, "endpoints", {});
  p.framing = parse_framing(get<std::string>(j, "framing", std::string(to_string(p.framing))));
  p.strategies = enum_list(j, "strategies", p.strategies, parse_strategy);
  p.protocols = enum_list(j, "protocols", p.protocols, parse_protocol);
  p.seed = get<std::uint64_t>(j, "seed", seed);
  p.scheme = parse_mask_scheme(get<std::string>(j, "scheme", "word"));
  p.rates = get<std::vector<double>>(j, "rates", p.rates);
  p.mask_token = get<std::string>(j, "mask_token", p.mask_token);
  p.placeholder = get<std::string>(j, "placeholder", p.placeholder);
  p.nsr = get<std::vector<double>>(j, "nsr", p.nsr);
  p.audio_dir = get<std::string>(j, "audio_dir", "");
  p.transcriber = get<std::string>(j, "transcriber", "");
  for (const auto& [tag, dir] : get<std::map<std::string, std::string>>(j, "transcript_sets", {})) p.transcript_sets[tag] = dir;
  return a;
}

}  // namespace config_detail

// JSON config. Unknown keys are errors so typos do not silently fall back to defaults.
inline RunConfig parse_run_config(const std::string& text) {
  using namespace config_detail;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, {"seed", "dataset", "out", "generation", "endpoints", "eval", "retry", "ablations"}, "config");
  RunConfig c;
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.dataset = get<std::string>(j, "dataset", c.dataset.string());
  c.out = get<std::string>(j, "out", c.out.string());
  c.gen.seed = c.seed;
  if (j.contains("generation")) {
    const auto& g = j["generation"];
    only_keys(g, {"n_scenarios", "class_targets", "icl_per_class", "airport", "transcript_backend", "generator_endpoint"}, "generation");
    c.gen.n_scenarios = get<int>(g, "n_scenarios", c.gen.n_scenarios);
    if (g.contains("class_targets")) {
      const auto t = get<std::vector<int>>(g, "class_targets", {});
      if (t.size() != 3) throw ConfigError("class_targets must be [nominal, warning, hazard]");
      c.gen.class_targets = {t[0], t[1], t[2]};
    }
    c.gen.icl_per_class = get<int>(g, "icl_per_class", c.gen.icl_per_class);
    if (const auto ap = get<std::string>(g, "airport", c.gen.airport.icao_id); ap != c.gen.airport.icao_id)
      throw ConfigError("only the " + c.gen.airport.icao_id + " airfield model is built in, got " + ap);
    c.gen.transcript_backend = get<std::string>(g, "transcript_backend", c.gen.transcript_backend);
    c.generator_endpoint = get<std::string>(g, "generator_endpoint", "");
  }
  if (j.contains("endpoints")) {
    if (!j["endpoints"].is_array()) throw ConfigError("endpoints must be an array");
    for (const auto& e : j["endpoints"]) c.endpoints.push_back(endpoint_from_json(e));
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    only_keys(e, {"endpoints", "framings", "strategies", "protocols", "variant"}, "eval");
    c.eval.endpoints = get<std::vector<std::string>>(e, "endpoints", {});
    c.eval.framings = enum_list(e, "framings", c.eval.framings, parse_framing);
    c.eval.strategies = enum_list(e, "strategies", c.eval.strategies, parse_strategy);
    c.eval.protocols = enum_list(e, "protocols", c.eval.protocols, parse_protocol);
    c.eval.variant = get<std::string>(e, "variant", "");
  }
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    only_keys(r, {"base_s", "factor", "max_attempts", "jitter"}, "retry");
    c.retry.base_s = get<double>(r, "base_s", c.retry.base_s);
    c.retry.factor = get<double>(r, "factor", c.retry.factor);
    c.retry.max_attempts = get<int>(r, "max_attempts", c.retry.max_attempts);
    c.retry.jitter = get<bool>(r, "jitter", c.retry.jitter);
  }
  if (j.contains("ablations")) {
    if (!j["ablations"].is_array()) throw ConfigError("ablations must be an array");
    for (const auto& a : j["ablations"]) c.ablations.push_back(ablation_from_json(a, c.seed));
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("config file " + p.string() + " not found");
  return parse_run_config(read_file(p));
}

// Mocks need the dataset to answer; HTTP endpoints ignore it.
inline std::unique_ptr<ChatEndpoint> make_endpoint(const EndpointConfig& cfg, const Dataset& ds) {
  if (cfg.kind == "openai") return std::make_unique<OpenAIEndpoint>(cfg);
  if (cfg.kind == "anthropic") {
    auto c = cfg;
    c.supports_logprobs = false;
    return std::make_unique<AnthropicEndpoint>(c);
  }
  if (cfg.kind == "oracle_mock") return std::make_unique<OracleMock>(cfg, ds);
  if (cfg.kind == "fixture_mock") return std::make_unique<FixtureMock>(cfg, ds, FixtureMock::load(cfg.fixture_path));
  throw ConfigError("unknown endpoint kind '" + cfg.kind + "'");
}

}  // namespace ctaf
