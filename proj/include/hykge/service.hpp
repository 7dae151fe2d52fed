#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"

#include "hykge/kg.hpp"
#include "hykge/linker.hpp"
#include "hykge/pipeline.hpp"
#include "hykge/providers.hpp"

namespace hykge::service {

/// Provider base URLs; an empty URL selects the built-in deterministic double.
struct ProviderEndpoints {
    std::string generator;
    std::string embedder;
    std::string scorer;
    std::string recognizer;

    /// HYKGE_GENERATOR_URL, HYKGE_EMBEDDER_URL, HYKGE_SCORER_URL, HYKGE_NER_URL
    static ProviderEndpoints from_environment();
};

/// Everything a pipeline run needs, owned in one place.
struct ServiceState {
    kg::KnowledgeGraph graph;
    pipeline::PipelineConfig config;
    std::unique_ptr<providers::Generator> generator;
    std::unique_ptr<providers::Embedder> embedder;
    std::unique_ptr<providers::PairScorer> scorer;
    std::unique_ptr<providers::EntityRecognizer> recognizer;
    std::unique_ptr<text::Tokenizer> tokenizer;
    text::StopwordSet stopwords;
    prompts::PromptTemplates templates;
    std::unique_ptr<pipeline::HoCache> ho_cache;
    linker::EntityIndex index;

    pipeline::PipelineDeps deps() const;
};

/// Wires providers, tokenizer, stopwords and templates from the config, then loads
/// or builds the entity index (cached at config.entity_index_path when set).
std::unique_ptr<ServiceState> load_state(kg::KnowledgeGraph graph, const pipeline::PipelineConfig& config,
                                         const ProviderEndpoints& endpoints);

/// Bounded ring of traces by id, with an optional JSON-lines spill file that
/// receives every trace.
class TraceStore {
public:
    explicit TraceStore(std::size_t capacity = 1000, std::string spill_path = {});

    std::string add(nlohmann::json trace);
    std::optional<nlohmann::json> get(const std::string& id) const;
    std::size_t size() const;

private:
    std::size_t capacity_;
    std::string spill_path_;
    mutable std::mutex mu_;
    std::deque<std::pair<std::string, nlohmann::json>> ring_;
    std::uint64_t next_ = 1;
};

/// HTTP front end:
///   GET  /healthz                 200 once a state is installed, 503 before
///   POST /v1/answer   {question}  -> {answer, trace_id}
///   POST /v1/retrieve {question}  -> {chains: [{text, score, kind, hops}], anchors: [...]}
///   GET  /v1/trace/{id}           -> stored trace
/// Errors: 503 before readiness, 422 malformed body, 502 provider failure (with stage).
class Service {
public:
    explicit Service(std::size_t trace_capacity = 1000, std::string trace_spill_path = {});
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void set_state(std::shared_ptr<const ServiceState> state);
    bool ready() const noexcept { return ready_.load(); }
    TraceStore& traces() noexcept { return traces_; }

    /// Binds (port 0 picks a free port) and serves on a background thread.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();
    /// Blocks until the background listener started by start() exits.
    void wait();

private:
    struct Impl;
    std::shared_ptr<const ServiceState> state() const;

    std::unique_ptr<Impl> impl_;
    std::atomic<bool> ready_{false};
    mutable std::mutex state_mu_;
    std::shared_ptr<const ServiceState> state_;
    TraceStore traces_;
    std::thread thread_;
};

}  // namespace hykge::service
