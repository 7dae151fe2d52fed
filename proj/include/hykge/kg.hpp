#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hykge::kg {

struct EntityId {
    std::uint32_t value = 0;
    friend auto operator<=>(EntityId, EntityId) = default;
};

struct RelationId {
    std::uint32_t value = 0;
    friend auto operator<=>(RelationId, RelationId) = default;
};

struct EntityRecord {
    EntityId id;
    std::string name;
    std::optional<std::string> description;
    std::optional<std::string> type;

    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct Triplet {
    EntityId head;
    RelationId relation;
    EntityId tail;
    friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

/// One adjacency entry: the relation and the entity at the other end.
struct Edge {
    RelationId relation;
    EntityId target;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class Direction { Forward, Reverse };

struct IngestOptions {
    /// Create entities (with no description) for triple endpoints missing from the entity stream.
    bool auto_create_entities = false;
};

class GraphBuilder;

/// Immutable knowledge graph. Adjacency lists are stored in CSR form and sorted
/// by (relation, target), so iteration order is deterministic.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    std::size_t entity_count() const noexcept { return entities_.size(); }
    std::size_t relation_count() const noexcept { return relations_.size(); }
    std::size_t triplet_count() const noexcept { return triplets_.size(); }

    bool valid(EntityId id) const noexcept { return id.value < entities_.size(); }

    const EntityRecord& entity(EntityId id) const;
    const std::string& relation_name(RelationId id) const;
    std::span<const EntityRecord> entities() const noexcept { return entities_; }
    std::span<const std::string> relations() const noexcept { return relations_; }

    /// Sorted, deduplicated.
    std::span<const Triplet> triplets() const noexcept { return triplets_; }
    bool contains(const Triplet& t) const;

    /// Forward: outgoing (relation, tail). Reverse: incoming (relation, head).
    std::span<const Edge> neighbors(EntityId v, Direction dir) const;

    /// Exact name match after NFC + trim; lowest id wins when names collide.
    std::optional<EntityId> lookup_by_name(std::string_view name) const;
    std::optional<RelationId> lookup_relation(std::string_view name) const;

    /// Stable content hash over entities, relations and triplets.
    std::uint64_t content_hash() const noexcept { return hash_; }

    void save_snapshot(std::ostream& out) const;
    static KnowledgeGraph load_snapshot(std::istream& in);
    void save_snapshot_file(const std::string& path) const;
    static KnowledgeGraph load_snapshot_file(const std::string& path);

    friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
        return a.entities_ == b.entities_ && a.relations_ == b.relations_ && a.triplets_ == b.triplets_;
    }

private:
    friend class GraphBuilder;

    static KnowledgeGraph assemble(std::vector<EntityRecord> entities, std::vector<std::string> relations,
                                   std::vector<Triplet> triplets);

    std::vector<EntityRecord> entities_;
    std::vector<std::string> relations_;
    std::vector<Triplet> triplets_;
    std::vector<std::uint32_t> fwd_offsets_;
    std::vector<Edge> fwd_edges_;
    std::vector<std::uint32_t> rev_offsets_;
    std::vector<Edge> rev_edges_;
    std::unordered_map<std::string, EntityId> by_name_;
    std::unordered_map<std::string, RelationId> relation_by_name_;
    std::uint64_t hash_ = 0;
};

/// Single-writer accumulator. Ids are assigned in first-seen order.
class GraphBuilder {
public:
    explicit GraphBuilder(IngestOptions options = {}) : options_(options) {}

    /// Identical records (name, description, type) collapse to one entity; records
    /// sharing a name but differing otherwise become distinct entities.
    EntityId add_entity(std::string_view name, std::optional<std::string> description = std::nullopt,
                        std::optional<std::string> type = std::nullopt);

    /// Throws std::invalid_argument naming the missing entity unless auto-creation is on.
    void add_triple(std::string_view head, std::string_view relation, std::string_view tail);

    std::size_t entity_count() const noexcept { return entities_.size(); }

    KnowledgeGraph build() &&;

private:
    RelationId intern_relation(std::string_view name);
    EntityId resolve(std::string_view name);

    IngestOptions options_;
    std::vector<EntityRecord> entities_;
    std::unordered_map<std::string, EntityId> first_by_name_;
    std::unordered_map<std::string, EntityId> by_record_;
    std::vector<std::string> relations_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<Triplet> triplets_;
};

/// Entities: JSON lines with `name` (required), `description`, `type`.
/// Triples: JSON lines with `head`, `relation`, `tail`, or 3-column TSV; the
/// format is detected per line. Errors carry the 1-based line number.
KnowledgeGraph ingest(std::istream& entities, std::istream& triples, IngestOptions options = {},
                      std::string_view entities_source = "entities", std::string_view triples_source = "triples");
KnowledgeGraph ingest_files(const std::string& entities_path, const std::string& triples_path,
                            IngestOptions options = {});

}  // namespace hykge::kg

template <>
struct std::hash<hykge::kg::EntityId> {
    std::size_t operator()(hykge::kg::EntityId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
