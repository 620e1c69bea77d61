#pragma once

#include <string>
#include <vector>

#include "kgreason/runner.hpp"

namespace kgreason {

// Structural invariants of a search graph; empty when all hold.
std::vector<std::string> validate_graph(const ReasoningGraph& g, Strategy strategy, int t);

// Every invariant of a trace record: graph structure, exploration depth
// certificates, cost bounds and scoring fields.
std::vector<std::string> validate_trace(const TraceRecord& trace);

}  // namespace kgreason
