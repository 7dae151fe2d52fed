#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hykge/chains.hpp"
#include "hykge/kg.hpp"
#include "hykge/providers.hpp"
#include "hykge/text.hpp"

namespace hykge::rerank {

enum class FragmentSource { Query, HypothesisOutput, Mixed };

const char* to_string(FragmentSource s);

struct Fragment {
    std::string text;
    std::size_t index = 0;
    FragmentSource source = FragmentSource::Query;
    std::size_t token_count = 0;
};

/// Token windows [start, end) covering `n` tokens with window `lc` and stride `lc - oc`.
/// The last window is shorter when the stride does not land on n.
std::vector<std::pair<std::size_t, std::size_t>> windows(std::size_t n, std::size_t lc, std::size_t oc);

/// Stopword-filters the query and the hypothesis separately, then windows each.
/// Fragment indices run across both lists, query first.
std::vector<Fragment> chunk(std::string_view query, std::string_view hypothesis, std::size_t lc, std::size_t oc,
                            const text::StopwordSet& stopwords, const text::Tokenizer& tokenizer);

/// The single reference used when fragment chunking is disabled: the filtered
/// query and hypothesis tokens joined as one text.
Fragment whole_text_fragment(std::string_view query, std::string_view hypothesis, const text::StopwordSet& stopwords,
                             const text::Tokenizer& tokenizer);

enum class Aggregation { Max, Mean };

struct ScoredChain {
    chains::ReasoningChain chain;
    double score = 0.0;
    std::optional<std::size_t> best_fragment;
};

struct RerankOptions {
    std::size_t top_k = 10;
    Aggregation aggregation = Aggregation::Max;
    std::size_t batch_size = 64;
};

/// Scores each chain (serialized without descriptions) against every fragment,
/// aggregates per chain, sorts by score descending (ties: fewer hops, then input
/// order) and keeps the first top_k. With no fragments, `fallback_query` serves as
/// the only reference.
std::vector<ScoredChain> rerank(std::span<const chains::ReasoningChain> chains, std::span<const Fragment> fragments,
                                providers::PairScorer& scorer, const kg::KnowledgeGraph& graph,
                                const RerankOptions& options, std::string_view fallback_query = {});

/// The first min(top_k, |chains|) chains in search order, unscored.
std::vector<ScoredChain> take_first(std::span<const chains::ReasoningChain> chains, std::size_t top_k);

}  // namespace hykge::rerank
