#include "doctest.h"
#include "kgreason/agent.hpp"
#include "kgreason/cost.hpp"
#include "kgreason/error.hpp"
#include "support.hpp"

using namespace kgreason;
using kgr_test::fixture;

namespace {

const char* kKrt39Walk =
    "Thought 1: The question is related to a gene node (KRT39). We need to find this node in the graph.\n"
    "Action 1: RetrieveNode[KRT39]\n"
    "Observation 1: The ID of the node is 390792.\n"
    "Thought 2: We need to check the 'Anatomy-expresses-Gene' neighbors of this gene node.\n"
    "Action 2: NeighbourCheck[390792, Anatomy-expresses-Gene]\n"
    "Observation 2: The neighbors are ['UBERON:0000033', 'UBERON:0002097'].\n"
    "Thought 3: Retrieve names of the anatomy nodes.\n"
    "Action 3: NodeFeature[UBERON:0000033, name], NodeFeature[UBERON:0002097, name]\n"
    "Observation 3: UBERON:0000033 \xe2\x86\x92 head, UBERON:0002097 \xe2\x86\x92 skin of body.\n"
    "Thought 4: These are the anatomy terms expressed by the gene.\n"
    "Action 4: Finish[head, skin of body]\n";

struct Fixture {
  KnowledgeGraph graph = kgr_test::krt39_graph();
  ReplayBackend backend{load_replay_script(fixture("example1_agent.replay"))};
  CostMeter meter;
  Gateway gateway{backend, meter};
  PromptAssets assets;
  AgentContext ctx{.graph = graph, .gateway = gateway, .assets = assets};
};

}  // namespace

TEST_SUITE("agent") {
  TEST_CASE("parse_actions on the KRT39 walk actions") {
    auto a1 = parse_actions("Action 1: RetrieveNode[KRT39]");
    REQUIRE(a1.size() == 1);
    CHECK(a1[0].kind == ActionKind::kRetrieveNode);
    CHECK(a1[0].args == std::vector<std::string>{"KRT39"});

    auto a3 = parse_actions(
        "Action 3: NodeFeature[UBERON:0000033, name], NodeFeature[UBERON:0002097, name]");
    REQUIRE(a3.size() == 2);
    CHECK(a3[0].kind == ActionKind::kNodeFeature);
    CHECK(a3[0].args == std::vector<std::string>{"UBERON:0000033", "name"});
    CHECK(a3[1].args == std::vector<std::string>{"UBERON:0002097", "name"});

    auto a4 = parse_actions("Action 4: Finish[head, skin of body]");
    REQUIRE(a4.size() == 1);
    CHECK(a4[0].kind == ActionKind::kFinish);
    CHECK(a4[0].payload == "head, skin of body");
  }

  TEST_CASE("parse_actions accepts both spellings and rejects bad steps") {
    CHECK(parse_actions("Action 2: NeighbourCheck[390792, Anatomy-expresses-Gene]")[0].kind ==
          ActionKind::kNeighborCheck);
    CHECK(parse_actions("Action 2: NeighborCheck[390792, r]")[0].kind == ActionKind::kNeighborCheck);
    CHECK_THROWS_AS(parse_actions("Action 1: Teleport[x]"), Error);
    CHECK_THROWS_AS(parse_actions("Action 1: NodeFeature[x]"), Error);
    CHECK_THROWS_AS(parse_actions("Action 1: nothing"), Error);
  }

  TEST_CASE("execute_action observations") {
    auto g = kgr_test::krt39_graph();
    CostMeter meter;
    auto obs = [&](const std::string& text) {
      return execute_action(g, parse_actions(text).at(0), meter);
    };
    CHECK(obs("Action: RetrieveNode[KRT39]") == "The ID of the node is 390792");
    CHECK(obs("Action: NeighbourCheck[390792, Anatomy-expresses-Gene]") ==
          "The neighbors are ['UBERON:0000033', 'UBERON:0002097']");
    CHECK(obs("Action: NodeFeature[UBERON:0000033, name]") == "UBERON:0000033 \xe2\x86\x92 head");
    CHECK(obs("Action: NodeDegree[390792, Anatomy-expresses-Gene]") ==
          "Node 390792 has 2 Anatomy-expresses-Gene neighbors");
    CHECK(obs("Action: NodeFeature[UBERON:0000033, color]") == "Node UBERON:0000033 has no feature 'color'");
    CHECK(obs("Action: NeighbourCheck[nope, r]") == "There is no node with ID 'nope'");
    auto c = meter.snapshot();
    CHECK(c.kg_ops() == 6);
    CHECK(c.kg_ops("retrieve_node") == 1);
    CHECK(c.kg_ops("node_feature") == 2);
  }

  TEST_CASE("first step reproduces Thought/Action/Observation 1") {
    Fixture f;
    auto next = run_agent_step({}, kgr_test::krt39_question(), f.ctx, 10);
    auto* pad = std::get_if<Scratchpad>(&next);
    REQUIRE(pad != nullptr);
    CHECK(pad->render() ==
          "Thought 1: The question is related to a gene node (KRT39). We need to find this node in the graph.\n"
          "Action 1: RetrieveNode[KRT39]\n"
          "Observation 1: The ID of the node is 390792.\n");
  }

  TEST_CASE("full KRT39 agent replay") {
    Fixture f;
    auto out = run_agent(kgr_test::krt39_question(), f.ctx, 10);
    CHECK(out.termination == Termination::kFinished);
    REQUIRE(out.answer.has_value());
    CHECK(*out.answer == "head, skin of body");
    CHECK(out.scratchpad.steps.size() == 4);
    CHECK(out.scratchpad.render() == kKrt39Walk);
    auto c = f.meter.snapshot();
    CHECK(c.llm_calls("thought") == 4);
    CHECK(c.llm_calls() == 4);
    CHECK(check(c, bound_for({Strategy::kCot, Interaction::kAgent, 10})).ok);
  }

  TEST_CASE("step limit without Finish") {
    auto g = kgr_test::krt39_graph();
    CallbackBackend backend([](const CompletionRequest&) {
      return std::string("Thought: look again\nAction: RetrieveNode[KRT39]");
    });
    CostMeter meter;
    Gateway gw(backend, meter);
    PromptAssets assets;
    AgentContext ctx{.graph = g, .gateway = gw, .assets = assets};
    auto out = run_agent(kgr_test::krt39_question(), ctx, 1);
    CHECK(out.termination == Termination::kStepLimit);
    CHECK_FALSE(out.answer.has_value());
    CHECK(out.scratchpad.steps.size() == 1);
    CHECK(meter.snapshot().llm_calls("thought") == 1);
  }

  TEST_CASE("malformed step after a re-ask becomes a no-op step") {
    auto g = kgr_test::krt39_graph();
    CallbackBackend backend([](const CompletionRequest&) { return std::string("I am confused"); });
    CostMeter meter;
    Gateway gw(backend, meter);
    PromptAssets assets;
    AgentContext ctx{.graph = g, .gateway = gw, .assets = assets};
    auto out = run_agent(kgr_test::krt39_question(), ctx, 2);
    REQUIRE(out.scratchpad.steps.size() == 2);
    CHECK(out.scratchpad.steps[0].malformed);
    CHECK(out.scratchpad.steps[0].actions.empty());
    CHECK(out.termination == Termination::kStepLimit);
    CHECK(meter.snapshot().llm_calls("thought") == 2);
    CHECK(meter.snapshot().llm_calls("reask") == 2);
    CHECK(meter.snapshot().kg_ops() == 0);
  }

  TEST_CASE("Finish stops immediately and extra actions are capped") {
    auto g = kgr_test::krt39_graph();
    CallbackBackend backend([](const CompletionRequest&) {
      return std::string(
          "Thought 1: done\nAction 1: Finish[head], RetrieveNode[KRT39]");
    });
    CostMeter meter;
    Gateway gw(backend, meter);
    PromptAssets assets;
    AgentContext ctx{.graph = g, .gateway = gw, .assets = assets};
    auto out = run_agent(kgr_test::krt39_question(), ctx, 10);
    CHECK(out.answer == std::optional<std::string>("head"));
    CHECK(meter.snapshot().kg_ops() == 0);
  }

  TEST_CASE("kg ops stay within n times max actions") {
    auto g = kgr_test::krt39_graph();
    CallbackBackend backend([](const CompletionRequest&) {
      return std::string(
          "Thought: many\nAction: RetrieveNode[KRT39], RetrieveNode[head], RetrieveNode[skin], "
          "RetrieveNode[body], RetrieveNode[KRT39], RetrieveNode[head]");
    });
    CostMeter meter;
    Gateway gw(backend, meter);
    PromptAssets assets;
    AgentContext ctx{.graph = g, .gateway = gw, .assets = assets};
    run_agent(kgr_test::krt39_question(), ctx, 3);
    CHECK(meter.snapshot().kg_ops() == 12);
  }
}
