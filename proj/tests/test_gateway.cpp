#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "kgreason/error.hpp"
#include "kgreason/gateway.hpp"
#include "kgreason/text.hpp"
#include "support.hpp"

using namespace kgreason;
using kgr_test::script_from;

namespace {

CompletionRequest request(std::string prompt, std::string tag = "thought") {
  CompletionRequest r;
  r.prompt = std::move(prompt);
  r.tag = std::move(tag);
  return r;
}

}  // namespace

TEST_SUITE("gateway") {
  TEST_CASE("replay returns the scripted text and meters one call") {
    ReplayBackend backend(script_from(
        R"({"match":"KRT39","response":"Thought 1: find it\nAction 1: RetrieveNode[KRT39]"})"));
    CostMeter meter;
    Gateway gw(backend, meter);
    CHECK(gw.complete(request("gene KRT39?")) == "Thought 1: find it\nAction 1: RetrieveNode[KRT39]");
    CHECK(meter.snapshot().llm_calls("thought") == 1);
  }

  TEST_CASE("non-strict replay is repeatable") {
    ReplayBackend backend(script_from(R"({"match":"","response":"same"})"));
    CostMeter meter;
    Gateway gw(backend, meter);
    CHECK(gw.complete(request("x")) == gw.complete(request("x")));
    CHECK(meter.snapshot().llm_calls() == 2);
  }

  TEST_CASE("tags restrict replay entries") {
    ReplayBackend backend(script_from("{\"match\":\"\",\"tag\":\"select\",\"response\":\"A\"}\n"
                                      "{\"match\":\"\",\"response\":\"B\"}"));
    CHECK(backend.complete(request("p", "select")) == "A");
    CHECK(backend.complete(request("p", "score")) == "B");
  }

  TEST_CASE("strict replay enforces order") {
    ReplayBackend backend(script_from("{\"match\":\"one\",\"response\":\"1\"}\n"
                                      "{\"match\":\"two\",\"response\":\"2\"}",
                                      true));
    CHECK(backend.complete(request("step one")) == "1");
    try {
      backend.complete(request("step one again"));
      FAIL("expected mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kReplayMismatch);
    }
    CHECK(backend.complete(request("step two")) == "2");
    CHECK(backend.exhausted());
    CHECK_THROWS_AS(backend.complete(request("more")), Error);
  }

  TEST_CASE("malformed replay lines") {
    CHECK_THROWS_AS(script_from("{\"match\":1,\"response\":\"x\"}"), Error);
    CHECK_THROWS_AS(script_from("not json"), Error);
  }

  TEST_CASE("transport retries are metered apart from calls") {
    int attempts = 0;
    CallbackBackend backend([&](const CompletionRequest&) -> std::string {
      if (++attempts < 3) throw Error(ErrorCode::kTransport, "down");
      return "ok";
    });
    CostMeter meter;
    Gateway gw(backend, meter, RetryPolicy{2, 1, std::chrono::milliseconds(0)});
    CHECK(gw.complete(request("p")) == "ok");
    CHECK(meter.snapshot().llm_calls() == 1);
    CHECK(meter.snapshot().transport_retries == 2);

    attempts = -10;
    CHECK_THROWS_AS(gw.complete(request("p")), Error);
    CHECK(meter.snapshot().llm_calls() == 2);
  }

  TEST_CASE("complete_parsed re-asks once with a reminder") {
    std::vector<std::string> prompts;
    CallbackBackend backend([&](const CompletionRequest& r) {
      prompts.push_back(r.prompt);
      return prompts.size() == 1 ? std::string("garbage") : std::string("{{fine}}");
    });
    CostMeter meter;
    Gateway gw(backend, meter);
    auto parsed = gw.complete_parsed(request("p", "extract"), "\nREMIND",
                                     [](const std::string& s) { return try_parse_bracketed_answer(s); });
    REQUIRE(parsed.has_value());
    CHECK(*parsed == "fine");
    CHECK(prompts[1] == "p\nREMIND");
    CHECK(meter.snapshot().llm_calls("extract") == 1);
    CHECK(meter.snapshot().llm_calls("reask") == 1);
  }

  TEST_CASE("wire backend against a local stub server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_body, seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      seen_body = req.body;
      seen_auth = req.get_header_value("Authorization");
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"canned body"}}]})",
                      "application/json");
    });
    server.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    WireConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.model = "stub-model";
    cfg.token = "secret";
    WireBackend wire(cfg);
    CostMeter meter;
    Gateway gw(wire, meter, RetryPolicy{0, 1, std::chrono::milliseconds(0)});
    auto req = request("hello");
    req.decoding.stop = {"\n\n"};
    CHECK(gw.complete(req) == "canned body");
    CHECK(meter.snapshot().llm_calls() == 1);
    CHECK(hits == 1);
    CHECK(seen_auth == "Bearer secret");
    auto body = nlohmann::json::parse(seen_body);
    CHECK(body["model"] == "stub-model");
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "hello");
    CHECK(body["stop"][0] == "\n\n");
    CHECK(body.contains("temperature"));
    CHECK(body["max_tokens"] == 512);

    WireConfig bad = cfg;
    bad.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/fail";
    WireBackend failing(bad);
    try {
      failing.complete(req);
      FAIL("expected transport error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTransport);
    }
    server.stop();
    th.join();
  }

  TEST_CASE("parse_response") {
    CHECK(WireBackend::parse_response(R"({"choices":[{"message":{"content":"x"}}]})") == "x");
    CHECK_THROWS_AS(WireBackend::parse_response("{}"), Error);
  }
}
