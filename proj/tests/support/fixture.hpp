#pragma once

#include <memory>
#include <string>

#include "hykge/kg.hpp"
#include "hykge/pipeline.hpp"
#include "hykge/service.hpp"

namespace hykge::testing {

inline std::string data_path(const std::string& name) { return std::string(HYKGE_TEST_DATA) + "/" + name; }

inline const std::string kHeartburnQuery = "I feel heartburn after eating. What medicine should I take?";
inline const std::string kOmeprazoleQuery = "Can omeprazole be taken every day?";

inline kg::KnowledgeGraph fixture_graph() {
    return kg::ingest_files(data_path("entities.jsonl"), data_path("triples.tsv"));
}

inline pipeline::PipelineConfig fixture_config() { return pipeline::PipelineConfig::from_file(data_path("config.json")); }

/// Fixture graph with the built-in doubles; no HTTP endpoints.
inline std::unique_ptr<service::ServiceState> fixture_state(pipeline::PipelineConfig cfg = fixture_config()) {
    return service::load_state(fixture_graph(), cfg, service::ProviderEndpoints{});
}

}  // namespace hykge::testing
