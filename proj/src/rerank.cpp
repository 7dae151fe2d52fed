#include "hykge/rerank.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "hykge/error.hpp"

namespace hykge::rerank {

const char* to_string(FragmentSource s) {
    switch (s) {
        case FragmentSource::Query: return "query";
        case FragmentSource::HypothesisOutput: return "hypothesis";
        case FragmentSource::Mixed: return "mixed";
    }
    return "?";
}

std::vector<std::pair<std::size_t, std::size_t>> windows(std::size_t n, std::size_t lc, std::size_t oc) {
    if (lc == 0 || oc >= lc) throw std::invalid_argument("chunking needs lc > oc >= 0");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t stride = lc - oc;
    for (std::size_t start = 0; start < n; start += stride) {
        const std::size_t end = std::min(n, start + lc);
        out.emplace_back(start, end);
        if (end == n) break;
    }
    return out;
}

std::vector<Fragment> chunk(std::string_view query, std::string_view hypothesis, std::size_t lc, std::size_t oc,
                            const text::StopwordSet& stopwords, const text::Tokenizer& tokenizer) {
    std::vector<Fragment> out;
    auto add_source = [&](std::string_view source_text, FragmentSource source) {
        auto tokens = text::filtered_tokens(source_text, stopwords, tokenizer);
        for (auto [b, e] : windows(tokens.size(), lc, oc)) {
            std::vector<std::string> part(tokens.begin() + static_cast<std::ptrdiff_t>(b),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(e));
            out.push_back(Fragment{text::join(part, " "), out.size(), source, e - b});
        }
    };
    add_source(query, FragmentSource::Query);
    add_source(hypothesis, FragmentSource::HypothesisOutput);
    return out;
}

Fragment whole_text_fragment(std::string_view query, std::string_view hypothesis, const text::StopwordSet& stopwords,
                             const text::Tokenizer& tokenizer) {
    auto tokens = text::filtered_tokens(query, stopwords, tokenizer);
    auto more = text::filtered_tokens(hypothesis, stopwords, tokenizer);
    tokens.insert(tokens.end(), more.begin(), more.end());
    return Fragment{text::join(tokens, " "), 0, FragmentSource::Mixed, tokens.size()};
}

std::vector<ScoredChain> take_first(std::span<const chains::ReasoningChain> chains, std::size_t top_k) {
    std::vector<ScoredChain> out;
    for (std::size_t i = 0; i < std::min(top_k, chains.size()); ++i) out.push_back(ScoredChain{chains[i], 0.0, {}});
    return out;
}

std::vector<ScoredChain> rerank(std::span<const chains::ReasoningChain> chains, std::span<const Fragment> fragments,
                                providers::PairScorer& scorer, const kg::KnowledgeGraph& graph,
                                const RerankOptions& options, std::string_view fallback_query) {
    if (options.top_k == 0) throw std::invalid_argument("top_k must be positive");
    if (chains.empty()) return {};

    std::vector<std::string> references;
    std::vector<std::size_t> reference_fragment;
    for (const auto& f : fragments) {
        if (f.text.empty()) continue;
        references.push_back(f.text);
        reference_fragment.push_back(f.index);
    }
    if (references.empty()) {
        if (fallback_query.empty()) throw std::invalid_argument("rerank needs fragments or a fallback query");
        references.emplace_back(fallback_query);
    }

    std::vector<std::string> documents;
    documents.reserve(chains.size());
    for (const auto& c : chains) documents.push_back(chains::serialize_chain(c, graph, false));

    const std::size_t per_chain = references.size();
    std::vector<double> scores(chains.size() * per_chain);
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t start = 0; start < scores.size(); start += batch) {
        pairs.clear();
        const std::size_t end = std::min(scores.size(), start + batch);
        for (std::size_t p = start; p < end; ++p) {
            pairs.emplace_back(references[p % per_chain], documents[p / per_chain]);
        }
        auto got = scorer.score_pairs(pairs);
        if (got.size() != pairs.size()) throw ProviderError("scorer returned the wrong number of scores", false);
        std::copy(got.begin(), got.end(), scores.begin() + static_cast<std::ptrdiff_t>(start));
    }

    std::vector<ScoredChain> scored;
    scored.reserve(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto first = scores.begin() + static_cast<std::ptrdiff_t>(c * per_chain);
        const auto last = first + static_cast<std::ptrdiff_t>(per_chain);
        const auto best = std::max_element(first, last);
        const double agg = options.aggregation == Aggregation::Max
                               ? *best
                               : std::accumulate(first, last, 0.0) / static_cast<double>(per_chain);
        std::optional<std::size_t> best_fragment;
        if (!reference_fragment.empty()) best_fragment = reference_fragment[static_cast<std::size_t>(best - first)];
        scored.push_back(ScoredChain{chains[c], agg, best_fragment});
    }

    std::vector<std::size_t> order(scored.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scored[a].score != scored[b].score) return scored[a].score > scored[b].score;
        return scored[a].chain.hops() < scored[b].chain.hops();
    });

    std::vector<ScoredChain> out;
    for (std::size_t i = 0; i < std::min(options.top_k, order.size()); ++i) out.push_back(std::move(scored[order[i]]));
    return out;
}

}  // namespace hykge::rerank
