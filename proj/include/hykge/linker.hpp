#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hykge/kg.hpp"
#include "hykge/providers.hpp"

namespace hykge::linker {

inline constexpr double kDefaultDelta = 0.7;

/// Row i holds the unit embedding of entity i's name.
class EntityIndex {
public:
    EntityIndex() = default;
    EntityIndex(std::size_t dim, std::vector<float> rows, std::string provider_tag, std::uint64_t graph_hash);

    std::size_t size() const noexcept { return dim_ == 0 ? 0 : rows_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& provider_tag() const noexcept { return provider_tag_; }
    std::uint64_t graph_hash() const noexcept { return graph_hash_; }

    std::span<const float> row(kg::EntityId id) const;

    /// Cache format: one JSON header line, then little-endian float32 rows.
    void save(std::ostream& out) const;
    static EntityIndex load(std::istream& in);
    void save_file(const std::string& path) const;
    static EntityIndex load_file(const std::string& path);

    friend bool operator==(const EntityIndex&, const EntityIndex&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<float> rows_;
    std::string provider_tag_;
    std::uint64_t graph_hash_ = 0;
};

EntityIndex build_index(const kg::KnowledgeGraph& graph, providers::Embedder& embedder, std::size_t batch_size = 256);

/// Reuses the cache at `path` when it matches the graph hash, provider tag, entity
/// count and the embedder's current dimension; otherwise rebuilds and rewrites it.
EntityIndex load_or_build_index(const kg::KnowledgeGraph& graph, providers::Embedder& embedder,
                                const std::string& path, bool* rebuilt = nullptr);

struct Anchor {
    kg::EntityId entity;
    std::string mention;
    double similarity = 0.0;
};

struct UnlinkedMention {
    std::string mention;
    std::optional<kg::EntityId> best;
    double similarity = 0.0;
};

struct AnchorSet {
    /// One entry per linked entity, in order of first link; provenance keeps the
    /// highest-similarity mention.
    std::vector<Anchor> anchors;
    std::vector<UnlinkedMention> unlinked;

    std::vector<kg::EntityId> ids() const;
    bool contains(kg::EntityId id) const;
};

/// Each mention links to the single most similar entity (lowest id on ties) iff
/// that similarity is strictly greater than delta.
AnchorSet link(std::span<const std::string> mentions, const EntityIndex& index, providers::Embedder& embedder,
               double delta = kDefaultDelta);

}  // namespace hykge::linker
