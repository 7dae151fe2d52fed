#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "hykge/error.hpp"
#include "hykge/pipeline.hpp"
#include "support/counting.hpp"
#include "support/fixture.hpp"

using namespace hykge;
using namespace hykge::pipeline;
using nlohmann::json;

namespace {

/// Deps over a service state, with the generator and scorer swappable.
struct Harness {
    std::unique_ptr<service::ServiceState> state = testing::fixture_state();
    providers::Generator* generator = state->generator.get();
    providers::PairScorer* scorer = state->scorer.get();
    providers::EntityRecognizer* recognizer = state->recognizer.get();
    HoCache* cache = nullptr;

    PipelineDeps deps() const {
        return PipelineDeps{state->graph,
                            state->index,
                            Providers{*generator, *state->embedder, *scorer, *recognizer},
                            state->stopwords,
                            *state->tokenizer,
                            state->templates,
                            cache};
    }
};

PipelineConfig with_flags(Flags f) {
    auto cfg = testing::fixture_config();
    cfg.flags = f;
    return cfg;
}

std::string stable(const PipelineTrace& t) { return to_json(t, false).dump(); }

class ThrowingScorer final : public providers::PairScorer {
public:
    std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>>) override {
        throw ProviderError("scorer down", true);
    }
};

class ThrowingRecognizer final : public providers::EntityRecognizer {
public:
    std::vector<providers::RecognizedEntity> recognize(std::string_view) override {
        throw ProviderError("ner down", true);
    }
};

/// Answers the hypothesis prompt, fails on the reader prompt.
class ReaderFails final : public providers::Generator {
public:
    std::string generate(const std::string& prompt, const providers::GenerationParams&) override {
        if (prompt.find("[Background Knowledge]") != std::string::npos) throw ProviderError("reader down", true);
        return "heartburn";
    }
};

}  // namespace

TEST_CASE("two-entity walk-through") {
    kg::GraphBuilder b;
    b.add_entity("A", std::string("desc a"));
    b.add_entity("B");
    b.add_triple("A", "r", "B");
    auto graph = std::move(b).build();
    providers::HashEmbedder emb;
    auto index = linker::build_index(graph, emb);
    const std::string query = "How is A related to B?";
    providers::ScriptedGenerator gen;
    gen.add(prompts::render_ho_prompt(query), "A is linked to B.");
    gen.add_rule("[Background Knowledge]", "scripted reader reply");
    testing::CountingGenerator counting(gen);
    providers::OverlapScorer scorer;
    providers::GazetteerRecognizer ner({"A", "B"});
    text::StopwordSet stop;
    text::WhitespaceTokenizer tok;
    auto templates = prompts::PromptTemplates::english();
    PipelineDeps deps{graph, index, Providers{counting, emb, scorer, ner}, stop, tok, templates, nullptr};

    auto t = run(query, PipelineConfig{}, deps);
    CHECK(t.hypothesis_output == "A is linked to B.");
    CHECK(t.anchors.size() == 2);
    CHECK(t.chains_raw == 1);
    REQUIRE(t.pruned.size() == 1);
    CHECK(t.pruned[0].chain.kind == chains::ChainKind::Path);
    CHECK(t.reader_prompt.find("The retrieved knowledge chains are:\nA → r → B | A: desc a.") != std::string::npos);
    CHECK(t.answer == "scripted reader reply");
    CHECK(counting.calls == 2);
    CHECK(t.generator_calls == 2);
    CHECK(t.stages == std::vector<std::string>{"hypothesis", "extraction", "linking", "chain_search", "chunking",
                                               "rerank", "reader_prompt", "reader"});
    for (const auto& d : t.durations) CHECK(d.seconds >= 0.0);
}

TEST_CASE("fixture run is deterministic and calls the generator twice") {
    Harness h;
    testing::CountingGenerator counting(*h.generator);
    h.generator = &counting;
    auto cfg = testing::fixture_config();
    auto first = run(testing::kHeartburnQuery, cfg, h.deps());
    CHECK(counting.calls == 2);
    CHECK(first.pruned.size() == 10);
    CHECK(first.mentions_from_query == 1);
    CHECK(first.mentions_from_hypothesis > 1);
    CHECK(first.answer.starts_with("Take an antacid"));
    for (int i = 0; i < 4; ++i) CHECK(stable(run(testing::kHeartburnQuery, cfg, h.deps())) == stable(first));
    CHECK(counting.calls == 10);
}

TEST_CASE("trace JSON carries every field") {
    Harness h;
    auto doc = to_json(run(testing::kHeartburnQuery, testing::fixture_config(), h.deps()));
    for (auto key : {"query", "hypothesis_output", "mentions", "anchors", "chain_counts", "pruned_chains",
                     "fragments", "reader_prompt", "answer", "stages", "durations", "generator_calls"}) {
        CHECK(doc.contains(key));
    }
    CHECK(doc["chain_counts"]["pruned"] == 10);
    CHECK_FALSE(to_json(PipelineTrace{}, false).contains("durations"));
}

TEST_CASE("w/o HO uses query mentions only") {
    Harness h;
    testing::CountingGenerator counting(*h.generator);
    h.generator = &counting;
    auto t = run(testing::kHeartburnQuery, with_flags(*ablation_flags("w/o-HO")), h.deps());
    CHECK(t.hypothesis_output.empty());
    CHECK(t.mentions == std::vector<std::string>{"heartburn"});
    CHECK(t.mentions_from_hypothesis == 0);
    CHECK(counting.calls == 1);
    CHECK(std::find(t.stages.begin(), t.stages.end(), "hypothesis") == t.stages.end());
    CHECK(t.reader_prompt.find("(none)") != std::string::npos);  // one anchor, no pairs
}

TEST_CASE("w/o Reranker takes chains in search order without scoring") {
    Harness h;
    providers::OverlapScorer inner;
    testing::CountingScorer counting(inner);
    h.scorer = &counting;
    auto cfg = with_flags(*ablation_flags("w/o Reranker"));
    auto t = run(testing::kHeartburnQuery, cfg, h.deps());
    CHECK(counting.batches == 0);
    std::vector<kg::EntityId> ids;
    for (const auto& a : t.anchors) ids.push_back(a.id);
    auto found = chains::search_chains(h.state->graph, ids);
    REQUIRE(t.pruned.size() == std::min<std::size_t>(10, found.chains.size()));
    for (std::size_t i = 0; i < t.pruned.size(); ++i) CHECK(t.pruned[i].chain == found.chains[i]);
    CHECK(t.fragments.empty());
}

TEST_CASE("w/o Chains sends anchor descriptions only") {
    Harness h;
    auto t = run(testing::kHeartburnQuery, with_flags(*ablation_flags("w/o-Chains")), h.deps());
    CHECK(t.pruned.empty());
    REQUIRE(t.knowledge_lines.size() == t.anchors.size());
    CHECK(std::find(t.knowledge_lines.begin(), t.knowledge_lines.end(),
                    "heartburn: A burning feeling in the chest caused by stomach acid") != t.knowledge_lines.end());
    CHECK(std::find(t.knowledge_lines.begin(), t.knowledge_lines.end(), "stomach acid") != t.knowledge_lines.end());
    CHECK(t.reader_prompt.find("→") == std::string::npos);
}

TEST_CASE("w/o Description drops the suffix; w/o Fragment uses one reference") {
    Harness h;
    auto nd = run(testing::kHeartburnQuery, with_flags(*ablation_flags("w/o-Description")), h.deps());
    REQUIRE_FALSE(nd.knowledge_lines.empty());
    for (const auto& l : nd.knowledge_lines) CHECK(l.find(" | ") == std::string::npos);
    auto nf = run(testing::kHeartburnQuery, with_flags(*ablation_flags("w/o-Fragment")), h.deps());
    REQUIRE(nf.fragments.size() == 1);
    CHECK(nf.fragments[0].source == rerank::FragmentSource::Mixed);
}

TEST_CASE("disabling a stage leaves upstream outputs unchanged") {
    Harness h;
    auto full = run(testing::kHeartburnQuery, testing::fixture_config(), h.deps());
    for (const auto& a : standard_ablations()) {
        if (!a.flags.use_ho) continue;  // HO is the first stage; everything is downstream of it
        auto t = run(testing::kHeartburnQuery, with_flags(a.flags), h.deps());
        CHECK(t.hypothesis_output == full.hypothesis_output);
        CHECK(t.mentions == full.mentions);
        CHECK(to_json(t)["anchors"] == to_json(full)["anchors"]);
        if (a.flags.use_chains) {
            CHECK(t.chains_raw == full.chains_raw);
            CHECK(t.chains_capped == full.chains_capped);
        }
        if (a.flags.use_chains && a.flags.use_reranker) {
            if (a.flags.use_fragments) CHECK(to_json(t)["fragments"] == to_json(full)["fragments"]);
        }
        if (!a.flags.use_descriptions) {
            // reranking scores chains without descriptions, so the pruned set is the same
            CHECK(to_json(t)["pruned_chains"] == to_json(full)["pruned_chains"]);
        }
    }
}

TEST_CASE("ablation suite shares one hypothesis per query") {
    Harness h;
    testing::CountingGenerator counting(*h.generator);
    h.generator = &counting;
    std::vector<std::string> queries{testing::kHeartburnQuery, testing::kOmeprazoleQuery};
    auto runs = run_ablation_suite(queries, testing::fixture_config(), h.deps());
    REQUIRE(runs.size() == 6);
    std::size_t traces = 0;
    for (const auto& r : runs) traces += r.traces.size();
    CHECK(traces == 12);
    int ho_calls = 0;
    for (const auto& p : counting.prompts) ho_calls += p.find("[Background Knowledge]") == std::string::npos;
    CHECK(ho_calls == 2);
    CHECK(counting.calls == 2 + 12);
    for (const auto& r : runs)
        for (const auto& t : r.traces) CHECK(t.generator_calls <= 2);

    CHECK(runs[0].name == "HyKGE");
    auto stage_set = [](const PipelineTrace& t) { return std::set<std::string>(t.stages.begin(), t.stages.end()); };
    std::set<std::string> all{"hypothesis", "extraction", "linking", "chain_search", "chunking", "rerank",
                              "reader_prompt", "reader"};
    CHECK(stage_set(runs[0].traces[0]) == all);
    auto without = [&](std::initializer_list<const char*> drop) {
        auto s = all;
        for (auto d : drop) s.erase(d);
        return s;
    };
    CHECK(stage_set(runs[1].traces[0]) == without({"hypothesis"}));
    CHECK(stage_set(runs[2].traces[0]) == without({"chain_search", "chunking", "rerank"}));
    CHECK(stage_set(runs[3].traces[0]) == all);
    CHECK(stage_set(runs[4].traces[0]) == without({"chunking"}));
    CHECK(stage_set(runs[5].traces[0]) == without({"chunking", "rerank"}));
}

TEST_CASE("empty hypothesis degrades to query-only retrieval") {
    Harness h;
    providers::ScriptedGenerator empty("");
    empty.add_rule("[Background Knowledge]", "answer");
    h.generator = &empty;
    auto t = run(testing::kHeartburnQuery, testing::fixture_config(), h.deps());
    CHECK(t.hypothesis_output.empty());
    CHECK(t.mentions == std::vector<std::string>{"heartburn"});
    CHECK(t.answer == "answer");
}

TEST_CASE("provider failures name the stage") {
    auto stage_of = [](auto&& f) -> std::string {
        try {
            f();
        } catch (const PipelineError& e) {
            return e.stage();
        }
        return "no error";
    };
    auto cfg = testing::fixture_config();
    {
        Harness h;
        testing::FailingGenerator g;
        h.generator = &g;
        CHECK(stage_of([&] { run(testing::kHeartburnQuery, cfg, h.deps()); }) == "hypothesis");
    }
    {
        Harness h;
        ReaderFails g;
        h.generator = &g;
        CHECK(stage_of([&] { run(testing::kHeartburnQuery, cfg, h.deps()); }) == "reader");
    }
    {
        Harness h;
        ThrowingScorer s;
        h.scorer = &s;
        CHECK(stage_of([&] { run(testing::kHeartburnQuery, cfg, h.deps()); }) == "rerank");
    }
    {
        Harness h;
        ThrowingRecognizer r;
        h.recognizer = &r;
        CHECK(stage_of([&] { run(testing::kHeartburnQuery, cfg, h.deps()); }) == "extraction");
    }
}

TEST_CASE("no anchors gives the empty-retrieval prompt") {
    Harness h;
    auto t = run("Tell me something unrelated.", testing::fixture_config(), h.deps());
    CHECK(t.anchors.empty());
    CHECK(t.pruned.empty());
    CHECK(t.reader_prompt.find("The retrieved knowledge chains are: (none)") != std::string::npos);
}

TEST_CASE("hypothesis cache persists and is keyed by generation params") {
    namespace fs = std::filesystem;
    auto path = fs::temp_directory_path() / "hykge_ho_cache_test.jsonl";
    fs::remove(path);
    providers::GenerationParams p;
    auto k1 = HoCache::key("q", p);
    p.temperature = 0.1;
    CHECK(HoCache::key("q", p) != k1);
    {
        HoCache c(path.string());
        c.put(k1, "draft");
        CHECK(c.get(k1) == std::optional<std::string>("draft"));
    }
    HoCache reopened(path.string());
    CHECK(reopened.size() == 1);
    CHECK(reopened.get(k1) == std::optional<std::string>("draft"));

    Harness h;
    HoCache cache;
    h.cache = &cache;
    testing::CountingGenerator counting(*h.generator);
    h.generator = &counting;
    auto a = run(testing::kHeartburnQuery, testing::fixture_config(), h.deps());
    auto b = run(testing::kHeartburnQuery, testing::fixture_config(), h.deps());
    CHECK_FALSE(a.hypothesis_cached);
    CHECK(b.hypothesis_cached);
    CHECK(counting.calls == 3);
    CHECK(b.hypothesis_output == a.hypothesis_output);
    fs::remove(path);
}

TEST_CASE("config parsing and validation") {
    auto cfg = testing::fixture_config();
    CHECK(cfg.k == 3);
    CHECK(cfg.top_k == 10);
    CHECK(cfg.delta == 0.7);
    CHECK(cfg.lc == 10);
    CHECK(cfg.oc == 4);
    CHECK(cfg.stopwords_path == testing::data_path("stopwords.txt"));
    PipelineConfig defaults;
    CHECK(defaults.generation.max_tokens == 500);
    CHECK(defaults.generation.temperature == 0.6);

    CHECK_THROWS(PipelineConfig::from_json(json{{"bogus", 1}}));
    CHECK_THROWS(PipelineConfig::from_json(json{{"lc", 4}, {"oc", 4}}));
    CHECK_THROWS(PipelineConfig::from_json(json{{"delta", 1.5}}));
    CHECK_THROWS(PipelineConfig::from_json(json{{"aggregation", "median"}}));
    auto round = PipelineConfig::from_json(cfg.to_json());
    CHECK(round.to_json() == cfg.to_json());
}

TEST_CASE("ablation names") {
    CHECK(ablation_flags("full") == Flags{});
    CHECK(ablation_flags("W/O-HO")->use_ho == false);
    CHECK(ablation_flags("w/o Fragment")->use_fragments == false);
    CHECK_FALSE(ablation_flags("w/o-everything").has_value());
}
