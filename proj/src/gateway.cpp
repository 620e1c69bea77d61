#include "kgreason/gateway.hpp"

#include <fstream>
#include <thread>

#include "json.hpp"
#include "kgreason/error.hpp"
#include "kgreason/text.hpp"

namespace kgreason {

ReplayScript parse_replay_script(std::istream& in, bool strict) {
  ReplayScript script;
  script.strict = strict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kMalformedLine,
                  "replay line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("match") || !obj.contains("response") ||
        !obj["match"].is_string() || !obj["response"].is_string()) {
      throw Error(ErrorCode::kMalformedLine,
                  "replay line " + std::to_string(line_no) +
                      ": expected string fields 'match' and 'response'");
    }
    ReplayEntry entry;
    entry.match = obj["match"].get<std::string>();
    entry.response = obj["response"].get<std::string>();
    if (obj.contains("tag")) {
      if (!obj["tag"].is_string()) {
        throw Error(ErrorCode::kMalformedLine,
                    "replay line " + std::to_string(line_no) + ": 'tag' must be a string");
      }
      entry.tag = obj["tag"].get<std::string>();
    }
    script.entries.push_back(std::move(entry));
  }
  return script;
}

ReplayScript load_replay_script(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read replay script " + path.string());
  return parse_replay_script(in, strict);
}

bool ReplayBackend::matches(const ReplayEntry& e, const CompletionRequest& r) {
  if (e.tag && *e.tag != r.tag) return false;
  return e.match.empty() || r.prompt.find(e.match) != std::string::npos;
}

std::string ReplayBackend::complete(const CompletionRequest& request) {
  std::lock_guard lock(mu_);
  if (script_.strict) {
    if (cursor_ >= script_.entries.size()) {
      throw Error(ErrorCode::kReplayMismatch,
                  "replay script exhausted at request tagged '" + request.tag + "'");
    }
    const auto& entry = script_.entries[cursor_];
    if (!matches(entry, request)) {
      throw Error(ErrorCode::kReplayMismatch,
                  "replay entry " + std::to_string(cursor_ + 1) + " ('" + entry.match +
                      "') does not match request tagged '" + request.tag + "'");
    }
    ++cursor_;
    return entry.response;
  }
  for (const auto& entry : script_.entries) {
    if (matches(entry, request)) return entry.response;
  }
  throw Error(ErrorCode::kReplayMismatch,
              "no replay entry matches request tagged '" + request.tag + "'");
}

std::size_t ReplayBackend::consumed() const {
  std::lock_guard lock(mu_);
  return cursor_;
}

bool ReplayBackend::exhausted() const {
  std::lock_guard lock(mu_);
  return cursor_ >= script_.entries.size();
}

std::string Gateway::complete(const CompletionRequest& request) {
  if (request.decoding.max_tokens <= 0 || request.decoding.temperature < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "invalid decoding parameters");
  }
  meter_.llm_call(request.tag);
  for (int attempt = 0;; ++attempt) {
    try {
      return backend_.complete(request);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransport || attempt >= policy_.transport_retries) throw;
    }
    meter_.transport_retry();
    std::this_thread::sleep_for(policy_.backoff * (1 << attempt));
  }
}

Decoding thought_decoding(double temperature) {
  Decoding d;
  d.temperature = temperature;
  d.max_tokens = 512;
  return d;
}

Decoding control_decoding() {
  Decoding d;
  d.temperature = 0.0;
  d.max_tokens = 256;
  return d;
}

}  // namespace kgreason
