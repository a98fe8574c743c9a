#pragma once

#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ctaf/llm_client.hpp"

namespace ctaf {

// Splits "https://api.example.com/v1" into ("https://api.example.com", "/v1").
inline std::pair<std::string, std::string> split_base_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) throw ConfigError("base_url must include a scheme: " + std::string(url));
  const auto path = url.find('/', scheme + 3);
  std::string host(path == std::string_view::npos ? url : url.substr(0, path));
  std::string prefix(path == std::string_view::npos ? "" : url.substr(path));
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {host, prefix};
}

inline std::string base64_encode(std::string_view bytes) { return httplib::detail::base64_encode(std::string(bytes)); }

// Shared transport: POST JSON, classify failures.
class HttpEndpoint : public ChatEndpoint {
 public:
  explicit HttpEndpoint(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) throw ConfigError("endpoint " + cfg_.name + " has no base_url");
    if (cfg_.model.empty()) throw ConfigError("endpoint " + cfg_.name + " has no model");
    std::tie(host_, prefix_) = split_base_url(cfg_.base_url);
  }

  const EndpointConfig& config() const override { return cfg_; }

 protected:
  std::string secret() const {
    if (cfg_.auth_env.empty()) return {};
    auto v = env_value(cfg_.auth_env);
    if (!v) throw EndpointError(cfg_.name + ": environment variable " + cfg_.auth_env + " is not set", 401);
    return *v;
  }

  nlohmann::json post(const std::string& path, const httplib::Headers& headers, const nlohmann::json& body) const {
    httplib::Client cli(host_);
    const auto secs = static_cast<time_t>(cfg_.timeout_s);
    const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    auto res = cli.Post(prefix_ + path, headers, body.dump(), "application/json");
    if (!res) throw TransportError(cfg_.name + ": " + httplib::to_string(res.error()), 0, true);
    if (res->status != 200) {
      const std::string msg = cfg_.name + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200);
      if (retryable_status(res->status)) throw TransportError(msg, res->status, true);
      throw EndpointError(msg, res->status);
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw EndpointError(cfg_.name + ": response is not JSON", res->status);
    return j;
  }

  EndpointConfig cfg_;
  std::string host_;
  std::string prefix_;
};

// OpenAI-compatible /chat/completions.
class OpenAIEndpoint : public HttpEndpoint {
 public:
  using HttpEndpoint::HttpEndpoint;

  static nlohmann::json request_body(const EndpointConfig& cfg, const std::vector<Message>& msgs, const CompletionOptions& o) {
    nlohmann::json body{{"model", cfg.model}, {"temperature", o.temperature}, {"max_tokens", o.max_tokens}};
    auto& arr = body["messages"] = nlohmann::json::array();
    for (const auto& m : msgs) {
      if (m.image_base64.empty()) {
        arr.push_back({{"role", m.role}, {"content", m.content}});
      } else {
        arr.push_back({{"role", m.role},
                       {"content",
                        {{{"type", "text"}, {"text", m.content}},
                         {{"type", "image_url"},
                          {"image_url", {{"url", "data:" + m.image_mime + ";base64," + m.image_base64}}}}}}});
      }
    }
    if (o.want_logprobs && cfg.supports_logprobs) {
      body["logprobs"] = true;
      body["top_logprobs"] = o.top_logprobs;
    }
    return body;
  }

  static Completion parse_response(const std::string& name, const nlohmann::json& j) {
    try {
      const auto& choice = j.at("choices").at(0);
      Completion c;
      const auto& content = choice.at("message").at("content");
      c.text = content.is_null() ? "" : content.get<std::string>();
      if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
          choice["logprobs"]["content"].is_array()) {
        for (const auto& t : choice["logprobs"]["content"]) {
          TokenLogprob tl{t.at("token").get<std::string>(), t.at("logprob").get<double>(), {}};
          if (t.contains("top_logprobs"))
            for (const auto& alt : t["top_logprobs"])
              tl.top.push_back({alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
          c.logprobs.push_back(std::move(tl));
        }
      }
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw EndpointError(name + ": unexpected response shape: " + e.what(), 200);
    }
  }

  Completion complete_once(const std::vector<Message>& msgs, const CompletionOptions& o) override {
    httplib::Headers h;
    if (const auto key = secret(); !key.empty()) h.emplace("Authorization", "Bearer " + key);
    return parse_response(cfg_.name, post("/chat/completions", h, request_body(cfg_, msgs, o)));
  }
};

// Anthropic /messages. No logprobs; system prompt goes in its own field.
class AnthropicEndpoint : public HttpEndpoint {
 public:
  using HttpEndpoint::HttpEndpoint;

  static nlohmann::json request_body(const EndpointConfig& cfg, const std::vector<Message>& msgs, const CompletionOptions& o) {
    nlohmann::json body{{"model", cfg.model}, {"temperature", o.temperature}, {"max_tokens", o.max_tokens}};
    std::string system;
    auto& arr = body["messages"] = nlohmann::json::array();
    for (const auto& m : msgs) {
      if (m.role == "system") {
        system += (system.empty() ? "" : "\n\n") + m.content;
        continue;
      }
      if (m.image_base64.empty()) {
        arr.push_back({{"role", m.role}, {"content", m.content}});
      } else {
        arr.push_back({{"role", m.role},
                       {"content",
                        {{{"type", "image"},
                          {"source", {{"type", "base64"}, {"media_type", m.image_mime}, {"data", m.image_base64}}}},
                         {{"type", "text"}, {"text", m.content}}}}});
      }
    }
    if (!system.empty()) body["system"] = system;
    return body;
  }

  static Completion parse_response(const std::string& name, const nlohmann::json& j) {
    try {
      Completion c;
      for (const auto& part : j.at("content"))
        if (part.value("type", std::string()) == "text") c.text += part.at("text").get<std::string>();
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw EndpointError(name + ": unexpected response shape: " + e.what(), 200);
    }
  }

  Completion complete_once(const std::vector<Message>& msgs, const CompletionOptions& o) override {
    httplib::Headers h{{"anthropic-version", "2023-06-01"}};
    if (const auto key = secret(); !key.empty()) h.emplace("x-api-key", key);
    return parse_response(cfg_.name, post("/messages", h, request_body(cfg_, msgs, o)));
  }
};

}  // namespace ctaf
