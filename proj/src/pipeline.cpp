#include "hykge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "hykge/error.hpp"
#include "hykge/extraction.hpp"
#include "hykge/hash.hpp"

namespace hykge::pipeline {

using nlohmann::json;

// --- config -----------------------------------------------------------------

void PipelineConfig::validate() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
    if (lc < 1 || oc >= lc) throw std::invalid_argument("chunking needs lc > oc >= 0");
    if (min_hops < 1) throw std::invalid_argument("min_hops must be >= 1");
    if (caps.per_pair < 1 || caps.global < 1) throw std::invalid_argument("chain caps must be positive");
    if (generation.max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
    if (generation.temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");
    if (tokenizer != "whitespace" && tokenizer != "dictionary") {
        throw std::invalid_argument("tokenizer must be 'whitespace' or 'dictionary'");
    }
}

PipelineConfig PipelineConfig::from_json(const json& doc, const std::string& base_dir) {
    if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
    PipelineConfig c;
    auto path = [&](const json& v) {
        auto s = v.get<std::string>();
        if (s.empty() || base_dir.empty() || std::filesystem::path(s).is_absolute()) return s;
        return (std::filesystem::path(base_dir) / s).string();
    };
    for (const auto& [key, v] : doc.items()) {
        if (key == "k") c.k = v.get<int>();
        else if (key == "top_k") c.top_k = v.get<std::size_t>();
        else if (key == "delta") c.delta = v.get<double>();
        else if (key == "lc") c.lc = v.get<std::size_t>();
        else if (key == "oc") c.oc = v.get<std::size_t>();
        else if (key == "min_hops") c.min_hops = v.get<int>();
        else if (key == "per_pair_cap") c.caps.per_pair = v.get<std::size_t>();
        else if (key == "global_cap") c.caps.global = v.get<std::size_t>();
        else if (key == "max_tokens") c.generation.max_tokens = v.get<int>();
        else if (key == "temperature") c.generation.temperature = v.get<double>();
        else if (key == "aggregation") {
            auto a = v.get<std::string>();
            if (a == "max") c.aggregation = rerank::Aggregation::Max;
            else if (a == "mean") c.aggregation = rerank::Aggregation::Mean;
            else throw std::invalid_argument("aggregation must be 'max' or 'mean'");
        }
        else if (key == "use_ho") c.flags.use_ho = v.get<bool>();
        else if (key == "use_fragments") c.flags.use_fragments = v.get<bool>();
        else if (key == "use_descriptions") c.flags.use_descriptions = v.get<bool>();
        else if (key == "use_chains") c.flags.use_chains = v.get<bool>();
        else if (key == "use_reranker") c.flags.use_reranker = v.get<bool>();
        else if (key == "stopwords_path") c.stopwords_path = path(v);
        else if (key == "entity_index_path") c.entity_index_path = path(v);
        else if (key == "prompt_dir") c.prompt_dir = path(v);
        else if (key == "prompt_locale") c.prompt_locale = v.get<std::string>();
        else if (key == "ho_cache_path") c.ho_cache_path = path(v);
        else if (key == "tokenizer") c.tokenizer = v.get<std::string>();
        else if (key == "generator_fixture") c.generator_fixture = path(v);
        else if (key == "trace_capacity") c.trace_capacity = v.get<std::size_t>();
        else if (key == "trace_spill_path") c.trace_spill_path = path(v);
        else throw std::invalid_argument("unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::from_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IngestError(file, 0, "cannot open config");
    try {
        auto doc = json::parse(in);
        return from_json(doc, std::filesystem::path(file).parent_path().string());
    } catch (const json::exception& e) {
        throw IngestError(file, 0, e.what());
    } catch (const std::invalid_argument& e) {
        throw IngestError(file, 0, e.what());
    }
}

json PipelineConfig::to_json() const {
    return json{{"k", k},
                {"top_k", top_k},
                {"delta", delta},
                {"lc", lc},
                {"oc", oc},
                {"min_hops", min_hops},
                {"per_pair_cap", caps.per_pair},
                {"global_cap", caps.global},
                {"max_tokens", generation.max_tokens},
                {"temperature", generation.temperature},
                {"aggregation", aggregation == rerank::Aggregation::Max ? "max" : "mean"},
                {"use_ho", flags.use_ho},
                {"use_fragments", flags.use_fragments},
                {"use_descriptions", flags.use_descriptions},
                {"use_chains", flags.use_chains},
                {"use_reranker", flags.use_reranker},
                {"stopwords_path", stopwords_path},
                {"entity_index_path", entity_index_path},
                {"prompt_dir", prompt_dir},
                {"prompt_locale", prompt_locale},
                {"ho_cache_path", ho_cache_path},
                {"tokenizer", tokenizer},
                {"generator_fixture", generator_fixture},
                {"trace_capacity", trace_capacity},
                {"trace_spill_path", trace_spill_path}};
}

// --- HO cache ---------------------------------------------------------------

HoCache::HoCache(std::string path) : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        try {
            auto e = json::parse(line);
            entries_[e.at("key").get<std::string>()] = e.at("text").get<std::string>();
        } catch (const json::exception&) {
            // a torn trailing line from an interrupted write; ignore it
        }
    }
}

std::string HoCache::key(std::string_view query, const providers::GenerationParams& params) {
    std::ostringstream p;
    p << params.max_tokens << '/' << params.temperature;
    return to_hex(Fnv1a{}.update_field(query).update_field(p.str()).digest());
}

std::optional<std::string> HoCache::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void HoCache::put(const std::string& key, const std::string& text) {
    std::lock_guard lock(mu_);
    if (!entries_.insert_or_assign(key, text).second) return;
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        out << json{{"key", key}, {"text", text}}.dump() << '\n';
    }
}

std::size_t HoCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

// --- trace serialization ----------------------------------------------------

json to_json(const PipelineTrace& t, bool include_durations) {
    json anchors = json::array();
    for (const auto& a : t.anchors) {
        anchors.push_back({{"id", a.id.value}, {"name", a.name}, {"mention", a.mention}, {"similarity", a.similarity}});
    }
    json unlinked = json::array();
    for (const auto& u : t.unlinked) {
        unlinked.push_back({{"mention", u.mention}, {"best_similarity", u.similarity}});
    }
    json fragments = json::array();
    for (const auto& f : t.fragments) {
        fragments.push_back({{"index", f.index}, {"source", rerank::to_string(f.source)}, {"text", f.text}});
    }
    json pruned = json::array();
    for (const auto& c : t.pruned) {
        json nodes = json::array();
        for (auto n : c.chain.nodes) nodes.push_back(n.value);
        pruned.push_back({{"text", c.text},
                          {"kind", chains::to_string(c.chain.kind)},
                          {"hops", c.chain.hops()},
                          {"nodes", nodes},
                          {"score", c.score},
                          {"best_fragment", c.best_fragment ? json(*c.best_fragment) : json(nullptr)}});
    }
    json doc{{"query", t.query},
             {"hypothesis_output", t.hypothesis_output},
             {"hypothesis_cached", t.hypothesis_cached},
             {"mentions", t.mentions},
             {"mention_counts", {{"query", t.mentions_from_query}, {"hypothesis", t.mentions_from_hypothesis}}},
             {"anchors", anchors},
             {"unlinked", unlinked},
             {"chain_counts", {{"raw", t.chains_raw}, {"capped", t.chains_capped}, {"pruned", t.chains_pruned}}},
             {"chains_truncated", t.chains_truncated},
             {"fragments", fragments},
             {"pruned_chains", pruned},
             {"knowledge", t.knowledge_lines},
             {"reader_prompt", t.reader_prompt},
             {"answer", t.answer},
             {"stages", t.stages},
             {"generator_calls", t.generator_calls}};
    if (include_durations) {
        json d = json::object();
        for (const auto& s : t.durations) d[s.stage] = s.seconds;
        doc["durations"] = d;
    }
    return doc;
}

// --- orchestration ----------------------------------------------------------

namespace {

class StageClock {
public:
    StageClock(PipelineTrace& trace, const char* name)
        : trace_(trace), name_(name), start_(std::chrono::steady_clock::now()) {
        trace_.stages.emplace_back(name);
    }
    ~StageClock() {
        std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
        trace_.durations.push_back(StageTiming{name_, d.count()});
    }

private:
    PipelineTrace& trace_;
    const char* name_;
    std::chrono::steady_clock::time_point start_;
};

template <typename F>
auto in_stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ProviderError& e) {
        throw PipelineError(name, e.what());
    }
}

std::vector<std::string> anchor_lines(const PipelineTrace& t, const kg::KnowledgeGraph& g) {
    std::vector<std::string> lines;
    for (const auto& a : t.anchors) {
        const auto& e = g.entity(a.id);
        lines.push_back(e.description ? e.name + ": " + *e.description : e.name);
    }
    return lines;
}

}  // namespace

PipelineTrace retrieve(const std::string& query, const PipelineConfig& cfg, const PipelineDeps& deps) {
    cfg.validate();
    if (text::trim(query).empty()) throw std::invalid_argument("query is empty");
    const auto& flags = cfg.flags;
    PipelineTrace t;
    t.query = query;

    if (flags.use_ho) {
        StageClock clock(t, stage::kHypothesis);
        const auto key = HoCache::key(query, cfg.generation);
        std::optional<std::string> cached = deps.ho_cache ? deps.ho_cache->get(key) : std::nullopt;
        if (cached) {
            t.hypothesis_output = *cached;
            t.hypothesis_cached = true;
        } else {
            const auto prompt = prompts::render_ho_prompt(query, deps.templates);
            t.hypothesis_output = in_stage(stage::kHypothesis, [&] {
                return deps.providers.generator.generate(prompt, cfg.generation);
            });
            ++t.generator_calls;
            if (deps.ho_cache) deps.ho_cache->put(key, t.hypothesis_output);
        }
    }

    {
        StageClock clock(t, stage::kExtraction);
        auto ex = in_stage(stage::kExtraction, [&] {
            return extraction::extract_entities(query, t.hypothesis_output, deps.providers.recognizer);
        });
        t.mentions = std::move(ex.mentions);
        t.mentions_from_query = ex.from_query;
        t.mentions_from_hypothesis = ex.from_hypothesis;
    }

    {
        StageClock clock(t, stage::kLinking);
        auto anchors = in_stage(stage::kLinking, [&] {
            return linker::link(t.mentions, deps.index, deps.providers.embedder, cfg.delta);
        });
        for (const auto& a : anchors.anchors) {
            t.anchors.push_back(TraceAnchor{a.entity, deps.graph.entity(a.entity).name, a.mention, a.similarity});
        }
        t.unlinked = std::move(anchors.unlinked);
    }

    if (flags.use_chains) {
        chains::ChainSet found;
        {
            StageClock clock(t, stage::kChainSearch);
            std::vector<kg::EntityId> ids;
            for (const auto& a : t.anchors) ids.push_back(a.id);
            found = chains::search_chains(deps.graph, ids, chains::SearchOptions{cfg.k, cfg.min_hops, cfg.caps});
            t.chains_raw = found.raw_count;
            t.chains_capped = found.chains.size();
            t.chains_truncated = found.truncated;
        }

        std::vector<rerank::ScoredChain> pruned;
        if (flags.use_reranker) {
            if (flags.use_fragments) {
                StageClock clock(t, stage::kChunking);
                t.fragments = rerank::chunk(query, t.hypothesis_output, cfg.lc, cfg.oc, deps.stopwords, deps.tokenizer);
            } else {
                t.fragments = {rerank::whole_text_fragment(query, t.hypothesis_output, deps.stopwords, deps.tokenizer)};
            }
            StageClock clock(t, stage::kRerank);
            pruned = in_stage(stage::kRerank, [&] {
                return rerank::rerank(found.chains, t.fragments, deps.providers.scorer, deps.graph,
                                      rerank::RerankOptions{cfg.top_k, cfg.aggregation, 64}, query);
            });
        } else {
            pruned = rerank::take_first(found.chains, cfg.top_k);
        }
        t.chains_pruned = pruned.size();
        for (auto& p : pruned) {
            auto text = chains::serialize_chain(p.chain, deps.graph, false);
            t.pruned.push_back(TraceChain{std::move(p.chain), std::move(text), p.score, p.best_fragment});
        }
    }

    {
        StageClock clock(t, stage::kReaderPrompt);
        if (flags.use_chains) {
            for (const auto& c : t.pruned) {
                t.knowledge_lines.push_back(chains::serialize_chain(c.chain, deps.graph, flags.use_descriptions));
            }
        } else {
            t.knowledge_lines = anchor_lines(t, deps.graph);
        }
        t.reader_prompt = prompts::render_reader_prompt(query, t.knowledge_lines, deps.templates);
    }
    return t;
}

PipelineTrace run(const std::string& query, const PipelineConfig& cfg, const PipelineDeps& deps) {
    auto t = retrieve(query, cfg, deps);
    StageClock clock(t, stage::kReader);
    t.answer = in_stage(stage::kReader, [&] { return deps.providers.generator.generate(t.reader_prompt, cfg.generation); });
    ++t.generator_calls;
    return t;
}

std::vector<Ablation> standard_ablations() {
    std::vector<Ablation> out;
    out.push_back({"HyKGE", Flags{}});
    Flags f;
    f.use_ho = false;
    out.push_back({"w/o HO", f});
    f = Flags{};
    f.use_chains = false;
    out.push_back({"w/o Chains", f});
    f = Flags{};
    f.use_descriptions = false;
    out.push_back({"w/o Description", f});
    f = Flags{};
    f.use_fragments = false;
    out.push_back({"w/o Fragment", f});
    f = Flags{};
    f.use_reranker = false;
    out.push_back({"w/o Reranker", f});
    return out;
}

std::optional<Flags> ablation_flags(std::string_view name) {
    auto key = text::fold_case(name);
    std::replace(key.begin(), key.end(), '-', ' ');
    std::replace(key.begin(), key.end(), '_', ' ');
    if (key == "full" || key == "hykge" || key == "none") return Flags{};
    for (const auto& a : standard_ablations()) {
        if (text::fold_case(a.name) == key) return a.flags;
    }
    return std::nullopt;
}

std::vector<AblationRun> run_ablation_suite(std::span<const std::string> queries, const PipelineConfig& base,
                                            const PipelineDeps& deps) {
    HoCache local;
    PipelineDeps shared = deps;
    if (!shared.ho_cache) shared.ho_cache = &local;

    std::vector<AblationRun> out;
    for (const auto& ablation : standard_ablations()) {
        PipelineConfig cfg = base;
        cfg.flags = ablation.flags;
        AblationRun r{ablation.name, {}};
        for (const auto& q : queries) r.traces.push_back(run(q, cfg, shared));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace hykge::pipeline
