#pragma once

#include <string>

#include "tflow/config.hpp"

#ifndef TFLOW_FIXTURE_DIR
#define TFLOW_FIXTURE_DIR "fixtures"
#endif

namespace tflow::test {

inline std::string fixture(const std::string& name) { return std::string(TFLOW_FIXTURE_DIR) + "/" + name; }

inline Scenario load_fixture(const std::string& name) {
  return load_scenario(ConfigDocument::load(fixture(name)));
}

// One node X fed directly by two source arcs, each with one exit arc.
inline const char* ex1_compact = R"({
  "schema_version": 1,
  "nodes": [{"id": "X"}],
  "arcs": [{"id": "arc3", "from": "X", "length": 300}, {"id": "arc4", "from": "X", "length": 300}],
  "arrivals": [{"source": "arc1", "node": "X", "rate": 0.1}, {"source": "arc2", "node": "X", "rate": 0.1}],
  "movements": [{"id": "m13", "from": "arc1", "to": "arc3"}, {"id": "m24", "from": "arc2", "to": "arc4"}],
  "phases": [{"id": "p1", "node": "X", "movements": ["m13"]}, {"id": "p2", "node": "X", "movements": ["m24"]}]
})";

}  // namespace tflow::test
