#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "kgreason/runner.hpp"

namespace kgreason {

using ojson = nlohmann::ordered_json;

ojson to_json(const Triple& t);
ojson to_json(const AgentStep& s);
ojson to_json(const Scratchpad& s);
ojson to_json(const ExplorationState& s);
ojson to_json(const ThoughtState& s);
ojson to_json(const ReasoningGraph& g);
ojson to_json(const CostCounters& c);
ojson to_json(const CostBound& b);
ojson to_json(const RunConfig& c);
ojson to_json(const EvalResult& r);
ojson to_json(const TraceRecord& t);

Triple triple_from_json(const ojson& j);
Scratchpad scratchpad_from_json(const ojson& j);
ExplorationState exploration_from_json(const ojson& j);
ThoughtState state_from_json(const ojson& j);
ReasoningGraph graph_from_json(const ojson& j);
CostCounters counters_from_json(const ojson& j);
CostBound bound_from_json(const ojson& j);
RunConfig config_from_json(const ojson& j);
EvalResult result_from_json(const ojson& j);
TraceRecord trace_from_json(const ojson& j);

// Pretty JSON with a trailing newline.
std::string dump_trace(const TraceRecord& t);
TraceRecord load_trace(const std::filesystem::path& path);

}  // namespace kgreason
