#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "kgreason/cost.hpp"

namespace kgreason {

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 512;
  std::vector<std::string> stop;
};

struct CompletionRequest {
  std::string prompt;
  Decoding decoding;
  std::string tag;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Raw model text. Throws Error(kTransport) on a transport failure.
  virtual std::string complete(const CompletionRequest& request) = 0;
  // True for backends whose output does not depend on wall-clock state.
  virtual bool deterministic() const { return false; }
};

struct ReplayEntry {
  std::string match;               // substring of the prompt; empty matches all
  std::optional<std::string> tag;  // when set, must equal the request tag
  std::string response;
};

struct ReplayScript {
  std::vector<ReplayEntry> entries;
  bool strict = false;
};

// Line-delimited records with `match` and `response` (and optional `tag`).
ReplayScript load_replay_script(const std::filesystem::path& path, bool strict = false);
ReplayScript parse_replay_script(std::istream& in, bool strict = false);

// Strict mode: each request must match the next unconsumed entry.
// Otherwise the first matching entry answers and nothing is consumed.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(ReplayScript script) : script_(std::move(script)) {}

  std::string complete(const CompletionRequest& request) override;
  bool deterministic() const override { return true; }

  std::size_t consumed() const;
  bool exhausted() const;

 private:
  static bool matches(const ReplayEntry& e, const CompletionRequest& r);

  ReplayScript script_;
  mutable std::mutex mu_;
  std::size_t cursor_ = 0;
};

// Test and tooling hook: answers with a callable.
class CallbackBackend final : public Backend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}

  std::string complete(const CompletionRequest& request) override { return fn_(request); }
  bool deterministic() const override { return true; }

 private:
  Fn fn_;
};

struct WireConfig {
  std::string endpoint;  // full URL, e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string token;     // bearer token; empty sends no Authorization header
  std::chrono::seconds timeout{120};
  int max_in_flight = 4;
};

// Chat-completions client. Thread-safe; concurrent calls are capped at
// max_in_flight.
class WireBackend final : public Backend {
 public:
  explicit WireBackend(WireConfig config);
  ~WireBackend() override;

  std::string complete(const CompletionRequest& request) override;

  // Request body for a completion (exposed for tests).
  std::string request_body(const CompletionRequest& request) const;
  // First choice's message content; throws kTransport on a bad body.
  static std::string parse_response(const std::string& body);

 private:
  WireConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

struct RetryPolicy {
  int transport_retries = 2;
  int reasks = 1;
  std::chrono::milliseconds backoff{250};
};

// Per-run view of a shared backend: meters every completion into the run's
// CostMeter and applies the retry policy.
class Gateway {
 public:
  Gateway(Backend& backend, CostMeter& meter, RetryPolicy policy = {})
      : backend_(backend), meter_(meter), policy_(policy) {}

  // Exactly one llm_call is metered under request.tag; transport retries are
  // metered separately. Throws Error(kTransport) after the final retry.
  std::string complete(const CompletionRequest& request);

  // Completes, then parses. On a parse failure re-asks with the reminder
  // appended (metered under tags::kReask). Returns nullopt when the reply is
  // still unparseable, leaving the call site to apply its fallback.
  template <typename Parse>
  auto complete_parsed(const CompletionRequest& request, const std::string& reminder,
                       Parse&& parse) -> decltype(parse(std::string{})) {
    auto reply = complete(request);
    if (auto parsed = parse(reply)) return parsed;
    for (int i = 0; i < policy_.reasks; ++i) {
      CompletionRequest again = request;
      again.prompt += reminder;
      again.tag = tags::kReask;
      reply = complete(again);
      if (auto parsed = parse(reply)) return parsed;
    }
    return {};
  }

  CostMeter& meter() { return meter_; }
  Backend& backend() { return backend_; }
  const RetryPolicy& policy() const { return policy_; }

 private:
  Backend& backend_;
  CostMeter& meter_;
  RetryPolicy policy_;
};

// Decoding defaults: sampled thought generation, greedy control prompts.
Decoding thought_decoding(double temperature = 0.7);
Decoding control_decoding();

}  // namespace kgreason
