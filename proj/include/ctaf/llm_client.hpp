#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ctaf/common.hpp"
#include "ctaf/rng.hpp"

namespace ctaf {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
  // Optional inline image (base64 payload), passed through opaquely.
  std::string image_base64;
  std::string image_mime;

  friend bool operator==(const Message&, const Message&) = default;
};

struct CompletionOptions {
  double temperature = 0.0;
  int max_tokens = 512;
  bool want_logprobs = false;
  int top_logprobs = 5;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  std::vector<std::pair<std::string, double>> top;  // alternatives incl. the chosen token
};

struct Completion {
  std::string text;
  std::vector<TokenLogprob> logprobs;
  // Latency the backend reports for itself (mocks); wall-clock otherwise.
  std::optional<double> reported_latency_s;
  double latency_s = 0.0;
  int attempts = 1;
};

// Endpoint description. Secrets are never stored here, only the name of the
// environment variable that holds them.
struct EndpointConfig {
  std::string name;
  std::string kind = "openai";  // openai | anthropic | oracle_mock | fixture_mock
  std::string base_url;
  std::string model;
  std::string auth_env;
  bool supports_logprobs = false;
  int max_parallel = 1;
  double timeout_s = 120.0;
  // mock settings
  double error_rate = 0.0;
  std::uint64_t seed = 0;
  std::string fixture_path;
  double latency_s = 0.0;
};

// Network failure or retryable HTTP status. `status` is 0 when no response arrived.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, bool retryable)
      : Error(what), status_(status), retryable_(retryable) {}
  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

// Non-retryable rejection by the endpoint (4xx other than 408/429, bad payload).
class EndpointError : public Error {
 public:
  EndpointError(const std::string& what, int status) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

inline bool retryable_status(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  // One attempt, no retries. Throws TransportError or EndpointError.
  virtual Completion complete_once(const std::vector<Message>& messages, const CompletionOptions& opts) = 0;
  virtual const EndpointConfig& config() const = 0;
};

struct RetryPolicy {
  double base_s = 1.0;
  double factor = 2.0;
  int max_attempts = 5;
  bool jitter = true;
};

using Sleeper = std::function<void(double seconds)>;

inline Sleeper real_sleeper() {
  return [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
}

struct AttemptLog {
  int attempt = 0;
  int status = 0;
  std::string error;
  double delay_s = 0.0;  // backoff before the next attempt
};

// Delay after failed attempt `attempt` (1-based): base * factor^(attempt-1),
// with equal jitter (half fixed, half uniform).
inline double backoff_delay(const RetryPolicy& p, int attempt, Rng& rng) {
  const double d = p.base_s * std::pow(p.factor, attempt - 1);
  return p.jitter ? d / 2.0 + rng.uniform(0.0, d / 2.0) : d;
}

// Retries transient failures with exponential backoff.
inline Completion complete(ChatEndpoint& ep, const std::vector<Message>& messages, const CompletionOptions& opts,
                           const RetryPolicy& policy = {}, const Sleeper& sleep = real_sleeper(),
                           std::vector<AttemptLog>* log = nullptr) {
  std::string key = ep.config().name;
  for (const auto& m : messages) key += m.content;
  Rng jitter(fnv1a(key));
  for (int attempt = 1;; ++attempt) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Completion c = ep.complete_once(messages, opts);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      c.latency_s = c.reported_latency_s.value_or(wall);
      c.attempts = attempt;
      if (log) log->push_back({attempt, 200, "", 0.0});
      return c;
    } catch (const TransportError& e) {
      const bool last = attempt >= policy.max_attempts || !e.retryable();
      const double delay = last ? 0.0 : backoff_delay(policy, attempt, jitter);
      if (log) log->push_back({attempt, e.status(), e.what(), delay});
      if (last) {
        throw TransportError(ep.config().name + ": giving up after " + std::to_string(attempt) + " attempt(s): " + e.what(),
                             e.status(), false);
      }
      sleep(delay);
    } catch (const EndpointError& e) {
      if (log) log->push_back({attempt, e.status(), e.what(), 0.0});
      throw;
    }
  }
}

inline std::optional<std::string> env_value(const std::string& name) {
  if (name.empty()) return std::nullopt;
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

}  // namespace ctaf
