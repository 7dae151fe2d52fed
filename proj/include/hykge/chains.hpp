#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hykge/kg.hpp"

namespace hykge::chains {

enum class ChainKind { Path, CoAncestor, CoOccurrence };

/// Orientation of one edge as read left to right along the chain.
enum class Step { Forward, Backward };

const char* to_string(ChainKind kind);

struct ReasoningChain {
    ChainKind kind = ChainKind::Path;
    std::vector<kg::EntityId> nodes;
    std::vector<kg::RelationId> relations;
    std::vector<Step> directions;
    std::optional<std::string> head_description;
    std::optional<std::string> tail_description;

    std::size_t hops() const noexcept { return relations.size(); }
    kg::EntityId head() const { return nodes.front(); }
    kg::EntityId tail() const { return nodes.back(); }

    friend bool operator==(const ReasoningChain&, const ReasoningChain&) = default;
};

/// Which family a direction sequence belongs to when read left to right:
/// F+ or B+ is a Path, F+B+ a co-ancestor chain, B+F+ a co-occurrence chain.
/// Anything else is not a reasoning chain.
std::optional<ChainKind> classify(std::span<const Step> directions);

/// Paths are oriented head-to-tail along their edges; co-ancestor and
/// co-occurrence chains put the smaller endpoint id first.
ReasoningChain canonicalize(ReasoningChain chain);

/// Output order: hops, then kind (Path < CoAncestor < CoOccurrence), then node,
/// relation and direction sequences lexicographically.
bool chain_order_less(const ReasoningChain& a, const ReasoningChain& b);

/// True if every edge, oriented by its direction flag, is a stored triplet, the
/// nodes are pairwise distinct, and the kind matches the direction pattern.
bool validate(const ReasoningChain& chain, const kg::KnowledgeGraph& graph);

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

struct ChainCaps {
    std::size_t per_pair = 200;
    std::size_t global = 5000;

    static constexpr ChainCaps unlimited() { return ChainCaps{kUnlimited, kUnlimited}; }
};

struct SearchOptions {
    int k = 3;
    int min_hops = 1;
    ChainCaps caps;
};

struct ChainSet {
    std::vector<ReasoningChain> chains;
    bool truncated = false;
    /// Chains found before caps were applied. When the global cap is reached,
    /// longer levels are not enumerated and are not counted.
    std::size_t raw_count = 0;
};

/// Enumerates every simple Path, co-ancestor and co-occurrence chain of at most
/// k hops between each unordered pair of distinct anchors. Shorter chains fill the
/// caps first. Endpoint descriptions are attached.
ChainSet search_chains(const kg::KnowledgeGraph& graph, std::span<const kg::EntityId> anchors,
                       const SearchOptions& options = {});

/// "A → r1 → X ← r2 ← B", optionally followed by " | A: desc | B: desc" for the
/// endpoint descriptions that exist.
std::string serialize_chain(const ReasoningChain& chain, const kg::KnowledgeGraph& graph, bool with_descriptions);

}  // namespace hykge::chains
