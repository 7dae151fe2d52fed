#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hykge/chains.hpp"
#include "hykge/kg.hpp"
#include "hykge/linker.hpp"
#include "hykge/prompts.hpp"
#include "hykge/providers.hpp"
#include "hykge/rerank.hpp"
#include "hykge/text.hpp"

namespace hykge::pipeline {

struct Flags {
    bool use_ho = true;
    bool use_fragments = true;
    bool use_descriptions = true;
    bool use_chains = true;
    bool use_reranker = true;

    friend bool operator==(const Flags&, const Flags&) = default;
};

struct PipelineConfig {
    int k = 3;
    std::size_t top_k = 10;
    double delta = linker::kDefaultDelta;
    std::size_t lc = 10;
    std::size_t oc = 4;
    int min_hops = 1;
    chains::ChainCaps caps;
    providers::GenerationParams generation;
    rerank::Aggregation aggregation = rerank::Aggregation::Max;
    Flags flags;

    // Resources. Relative paths in a config file resolve against its directory.
    std::string stopwords_path;
    std::string entity_index_path;
    std::string prompt_dir;
    std::string prompt_locale = "en";
    std::string ho_cache_path;
    std::string tokenizer = "whitespace";  // or "dictionary"
    std::string generator_fixture;         // scripted generator fixture when no generator URL is set
    std::size_t trace_capacity = 1000;
    std::string trace_spill_path;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;

    static PipelineConfig from_json(const nlohmann::json& doc, const std::string& base_dir = {});
    static PipelineConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
};

/// Hypothesis outputs keyed by (query, generation params). Thread-safe; when a
/// path is given, entries are appended to a JSON-lines file and reloaded on start.
class HoCache {
public:
    explicit HoCache(std::string path = {});

    static std::string key(std::string_view query, const providers::GenerationParams& params);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& text);
    std::size_t size() const;

private:
    std::string path_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

struct Providers {
    providers::Generator& generator;
    providers::Embedder& embedder;
    providers::PairScorer& scorer;
    providers::EntityRecognizer& recognizer;
};

struct PipelineDeps {
    const kg::KnowledgeGraph& graph;
    const linker::EntityIndex& index;
    Providers providers;
    const text::StopwordSet& stopwords;
    const text::Tokenizer& tokenizer;
    const prompts::PromptTemplates& templates;
    HoCache* ho_cache = nullptr;
};

struct TraceAnchor {
    kg::EntityId id;
    std::string name;
    std::string mention;
    double similarity = 0.0;
};

struct TraceChain {
    chains::ReasoningChain chain;
    std::string text;  // serialized without descriptions
    double score = 0.0;
    std::optional<std::size_t> best_fragment;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct PipelineTrace {
    std::string query;
    std::string hypothesis_output;
    bool hypothesis_cached = false;
    std::vector<std::string> mentions;
    std::size_t mentions_from_query = 0;
    std::size_t mentions_from_hypothesis = 0;
    std::vector<TraceAnchor> anchors;
    std::vector<linker::UnlinkedMention> unlinked;
    std::size_t chains_raw = 0;
    std::size_t chains_capped = 0;
    std::size_t chains_pruned = 0;
    bool chains_truncated = false;
    std::vector<rerank::Fragment> fragments;
    std::vector<TraceChain> pruned;
    std::vector<std::string> knowledge_lines;
    std::string reader_prompt;
    std::string answer;
    std::vector<std::string> stages;  // executed, in order
    std::vector<StageTiming> durations;
    std::size_t generator_calls = 0;
};

namespace stage {
inline constexpr const char* kHypothesis = "hypothesis";
inline constexpr const char* kExtraction = "extraction";
inline constexpr const char* kLinking = "linking";
inline constexpr const char* kChainSearch = "chain_search";
inline constexpr const char* kChunking = "chunking";
inline constexpr const char* kRerank = "rerank";
inline constexpr const char* kReaderPrompt = "reader_prompt";
inline constexpr const char* kReader = "reader";
}  // namespace stage

nlohmann::json to_json(const PipelineTrace& trace, bool include_durations = true);

/// Hypothesis output through prompt assembly; no reader call.
PipelineTrace retrieve(const std::string& query, const PipelineConfig& cfg, const PipelineDeps& deps);

/// The full flow: retrieve() followed by the reader call.
PipelineTrace run(const std::string& query, const PipelineConfig& cfg, const PipelineDeps& deps);

struct Ablation {
    std::string name;
    Flags flags;
};

/// Full pipeline plus the five single-component removals, in that order.
std::vector<Ablation> standard_ablations();

/// Accepts "full", "w/o-HO", "w/o-Chains", "w/o-Description", "w/o-Fragment",
/// "w/o-Reranker" (case-insensitive, '-' or ' ' after "w/o").
std::optional<Flags> ablation_flags(std::string_view name);

struct AblationRun {
    std::string name;
    std::vector<PipelineTrace> traces;
};

/// Runs every query under every standard ablation. Hypothesis outputs are shared
/// through the deps' cache (or a suite-local one), so each query's hypothesis is
/// generated at most once.
std::vector<AblationRun> run_ablation_suite(std::span<const std::string> queries, const PipelineConfig& base,
                                            const PipelineDeps& deps);

}  // namespace hykge::pipeline
