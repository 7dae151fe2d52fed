#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "hykge/rerank.hpp"
#include "support/counting.hpp"
#include "support/graphs.hpp"

using namespace hykge;
using namespace hykge::rerank;
using hykge::chains::ReasoningChain;

namespace {

std::string tokens(std::size_t n, const std::string& prefix = "t") {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return text::join(out, " ");
}

// Chains on a star graph: hub h_i -r_i-> leaf, each a one-hop path between two anchors.
struct Fixture {
    kg::KnowledgeGraph graph;
    std::vector<ReasoningChain> chains;
};

Fixture path_fixture(std::size_t count, std::mt19937_64& rng) {
    kg::GraphBuilder b;
    std::vector<std::pair<std::string, std::string>> ends;
    for (std::size_t i = 0; i < count; ++i) {
        auto h = "h" + std::to_string(i) + "w" + std::to_string(rng() % 5);
        auto t = "t" + std::to_string(i) + "w" + std::to_string(rng() % 5);
        b.add_entity(h);
        b.add_entity(t);
        b.add_triple(h, "r" + std::to_string(rng() % 4), t);
        ends.emplace_back(h, t);
    }
    auto g = std::move(b).build();
    std::vector<kg::EntityId> anchors;
    for (std::uint32_t i = 0; i < g.entity_count(); ++i) anchors.push_back({i});
    chains::SearchOptions o;
    o.k = 1;
    o.caps = chains::ChainCaps::unlimited();
    auto cs = chains::search_chains(g, anchors, o).chains;
    return {std::move(g), std::move(cs)};
}

std::vector<Fragment> make_fragments(const std::vector<std::string>& texts) {
    std::vector<Fragment> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({texts[i], i, FragmentSource::Query, 0});
    return out;
}

}  // namespace

TEST_CASE("window arithmetic examples") {
    using W = std::vector<std::pair<std::size_t, std::size_t>>;
    CHECK(windows(16, 10, 4) == W{{0, 10}, {6, 16}});
    CHECK(windows(10, 10, 4) == W{{0, 10}});
    CHECK(windows(23, 10, 4) == W{{0, 10}, {6, 16}, {12, 22}, {18, 23}});
    CHECK(windows(0, 10, 4).empty());
    CHECK(windows(3, 10, 4) == W{{0, 3}});
    CHECK_THROWS(windows(5, 4, 4));
}

TEST_CASE("chunking filters stopwords and keeps sources apart") {
    text::WhitespaceTokenizer tok;
    text::StopwordSet stop{"the", "a"};
    auto q = "the " + tokens(16, "q");
    auto ho = tokens(3, "h") + " a";
    auto fr = chunk(q, ho, 10, 4, stop, tok);
    REQUIRE(fr.size() == 3);
    CHECK(fr[0].source == FragmentSource::Query);
    CHECK(fr[0].text == tokens(10, "q"));
    CHECK(fr[1].source == FragmentSource::Query);
    CHECK(fr[1].token_count == 10);
    CHECK(fr[2].source == FragmentSource::HypothesisOutput);
    CHECK(fr[2].text == "h0 h1 h2");
    for (std::size_t i = 0; i < fr.size(); ++i) CHECK(fr[i].index == i);
    CHECK(chunk("", "", 10, 4, stop, tok).empty());

    auto whole = whole_text_fragment(q, ho, stop, tok);
    CHECK(whole.token_count == 19);
    CHECK(whole.source == FragmentSource::Mixed);
}

TEST_CASE("overlap scorer hand example") {
    kg::GraphBuilder b;
    b.add_entity("A");
    b.add_entity("B");
    b.add_triple("A", "r", "B");
    auto g = std::move(b).build();
    std::vector<kg::EntityId> anchors{{0}, {1}};
    auto cs = chains::search_chains(g, anchors).chains;
    REQUIRE(cs.size() == 1);
    providers::OverlapScorer scorer;
    auto fr = make_fragments({"A B", "zz"});
    auto out = rerank::rerank(cs, fr, scorer, g, {});
    REQUIRE(out.size() == 1);
    // chain text "A → r → B" has three content tokens; "A B" covers two of them
    CHECK(out[0].score == Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK(out[0].best_fragment == std::optional<std::size_t>(0));
}

TEST_CASE("125 candidates keep exactly ten") {
    std::mt19937_64 rng(125);
    auto fx = path_fixture(125, rng);
    REQUIRE(fx.chains.size() == 125);
    providers::OverlapScorer scorer;
    auto fr = make_fragments({"h1w0 t1w0 r0", "h7w3 r2", "r1 t9w1"});
    RerankOptions o;
    o.top_k = 10;
    auto out = rerank::rerank(fx.chains, fr, scorer, fx.graph, o);
    CHECK(out.size() == 10);
    for (std::size_t i = 0; i + 1 < out.size(); ++i) CHECK(out[i].score >= out[i + 1].score);
    auto again = rerank::rerank(fx.chains, fr, scorer, fx.graph, o);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].chain == out[i].chain);
}

TEST_CASE("output size is min(topK, chains) and pairs are batched") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto fx = path_fixture(1 + rng() % 40, rng);
        providers::OverlapScorer inner;
        testing::CountingScorer scorer(inner);
        auto fr = make_fragments({"h1w0 r0", "t3w2 r1", "r3"});
        RerankOptions o;
        o.top_k = 1 + rng() % 20;
        auto out = rerank::rerank(fx.chains, fr, scorer, fx.graph, o);
        CHECK(out.size() == std::min(o.top_k, fx.chains.size()));
        auto pairs = fx.chains.size() * fr.size();
        CHECK(scorer.pairs_scored == pairs);
        CHECK(scorer.batches == static_cast<int>((pairs + 63) / 64));
    }
}

TEST_CASE("max aggregation is monotone in the fragment set") {
    std::mt19937_64 rng(13);
    auto fx = path_fixture(30, rng);
    providers::OverlapScorer scorer;
    std::vector<std::string> texts{"h1w0 r0", "t3w2 r1 t4w4", "r3 h9w1", "r2", "zz"};
    RerankOptions o;
    o.top_k = 1000;
    auto score_map = [&](const std::vector<std::string>& t) {
        std::map<std::string, double> m;
        for (const auto& s : rerank::rerank(fx.chains, make_fragments(t), scorer, fx.graph, o))
            m[chains::serialize_chain(s.chain, fx.graph, false)] = s.score;
        return m;
    };
    auto full = score_map(texts);
    for (std::size_t drop = 0; drop < texts.size(); ++drop) {
        auto fewer = texts;
        fewer.erase(fewer.begin() + static_cast<long>(drop));
        auto less = score_map(fewer);
        for (const auto& [k, v] : less) CHECK(v <= full[k]);
    }
    auto more = texts;
    more.push_back("h2w1 t2w3");
    for (const auto& [k, v] : score_map(more)) CHECK(v >= full[k]);
}

TEST_CASE("a single whole-text fragment is whole-text reranking") {
    std::mt19937_64 rng(21);
    auto fx = path_fixture(20, rng);
    providers::OverlapScorer scorer;
    text::WhitespaceTokenizer tok;
    text::StopwordSet stop{"the"};
    const std::string q = "the h1w0 r0 t1w0", ho = "r1 the t5w2";
    auto whole = whole_text_fragment(q, ho, stop, tok);
    std::vector<Fragment> single{whole};
    RerankOptions o;
    o.top_k = 5;
    auto out = rerank::rerank(fx.chains, single, scorer, fx.graph, o);
    // reference: score every chain against the whole filtered text directly
    std::vector<std::pair<double, std::size_t>> ref;
    for (std::size_t i = 0; i < fx.chains.size(); ++i)
        ref.push_back({scorer.score(whole.text, chains::serialize_chain(fx.chains[i], fx.graph, false)), i});
    std::stable_sort(ref.begin(), ref.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].score == ref[i].first);
        CHECK(out[i].chain == fx.chains[ref[i].second]);
    }
}

TEST_CASE("ties prefer shorter chains, then input order") {
    kg::GraphBuilder b;
    for (auto n : {"A", "B", "X"}) b.add_entity(n);
    b.add_triple("A", "r", "X");
    b.add_triple("X", "r", "B");
    b.add_triple("A", "r", "B");
    auto g = std::move(b).build();
    std::vector<kg::EntityId> anchors{{0}, {1}, {2}};
    auto cs = chains::search_chains(g, anchors).chains;
    std::vector<ReasoningChain> reversed(cs.rbegin(), cs.rend());
    providers::OverlapScorer scorer;
    auto fr = make_fragments({"unrelated"});
    auto out = rerank::rerank(reversed, fr, scorer, g, {});
    for (std::size_t i = 0; i + 1 < out.size(); ++i) CHECK(out[i].chain.hops() <= out[i + 1].chain.hops());
}

TEST_CASE("empty fragments fall back to the query; take_first keeps search order") {
    std::mt19937_64 rng(1);
    auto fx = path_fixture(12, rng);
    providers::OverlapScorer scorer;
    std::vector<Fragment> none;
    auto out = rerank::rerank(fx.chains, none, scorer, fx.graph, {}, "h1w0");
    CHECK(out.size() == 10);
    CHECK_FALSE(out[0].best_fragment.has_value());
    CHECK_THROWS(rerank::rerank(fx.chains, none, scorer, fx.graph, {}));
    auto first = take_first(fx.chains, 10);
    REQUIRE(first.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(first[i].chain == fx.chains[i]);
}

TEST_CASE("mean aggregation averages per-fragment scores") {
    std::mt19937_64 rng(2);
    auto fx = path_fixture(5, rng);
    providers::OverlapScorer scorer;
    std::vector<std::string> texts{"h0w0 h0w1 h0w2 h0w3 h0w4", "r0 r1 r2 r3"};
    RerankOptions o;
    o.aggregation = Aggregation::Mean;
    for (const auto& s : rerank::rerank(fx.chains, make_fragments(texts), scorer, fx.graph, o)) {
        auto doc = chains::serialize_chain(s.chain, fx.graph, false);
        double expect = (scorer.score(texts[0], doc) + scorer.score(texts[1], doc)) / 2;
        CHECK(s.score == Catch::Approx(expect).margin(1e-12));
    }
}
