#include "hykge/kg.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "hykge/error.hpp"
#include "hykge/hash.hpp"
#include "hykge/text.hpp"

namespace hykge::kg {
namespace {

constexpr char kMagic[4] = {'H', 'Y', 'K', 'G'};
constexpr std::uint8_t kSnapshotVersion = 1;

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated graph snapshot");
    return v;
}

void write_str(std::ostream& out, std::string_view s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& in) {
    auto n = read_pod<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw std::runtime_error("truncated graph snapshot");
    return s;
}

void write_opt(std::ostream& out, const std::optional<std::string>& s) {
    write_pod<std::uint8_t>(out, s ? 1 : 0);
    if (s) write_str(out, *s);
}

std::optional<std::string> read_opt(std::istream& in) {
    if (read_pod<std::uint8_t>(in) == 0) return std::nullopt;
    return read_str(in);
}

void build_csr(std::size_t n, const std::vector<Triplet>& triplets, bool forward,
               std::vector<std::uint32_t>& offsets, std::vector<Edge>& edges) {
    offsets.assign(n + 1, 0);
    for (const auto& t : triplets) {
        ++offsets[(forward ? t.head : t.tail).value + 1];
    }
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
    edges.resize(triplets.size());
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& t : triplets) {
        auto src = forward ? t.head : t.tail;
        auto dst = forward ? t.tail : t.head;
        edges[cursor[src.value]++] = Edge{t.relation, dst};
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(edges.begin() + offsets[i], edges.begin() + offsets[i + 1]);
    }
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::string required_string(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw std::invalid_argument(std::string("missing string field '") + key + "'");
    }
    return it->get<std::string>();
}

bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string record_key(std::string_view name, const std::optional<std::string>& d, const std::optional<std::string>& t) {
    std::string key(name);
    key += '\x1f';
    key += d ? "1" + *d : "0";
    key += '\x1f';
    key += t ? "1" + *t : "0";
    return key;
}

}  // namespace

const EntityRecord& KnowledgeGraph::entity(EntityId id) const {
    if (!valid(id)) throw std::out_of_range("invalid entity id " + std::to_string(id.value));
    return entities_[id.value];
}

const std::string& KnowledgeGraph::relation_name(RelationId id) const {
    if (id.value >= relations_.size()) throw std::out_of_range("invalid relation id " + std::to_string(id.value));
    return relations_[id.value];
}

bool KnowledgeGraph::contains(const Triplet& t) const {
    return std::binary_search(triplets_.begin(), triplets_.end(), t);
}

std::span<const Edge> KnowledgeGraph::neighbors(EntityId v, Direction dir) const {
    if (!valid(v)) throw std::out_of_range("invalid entity id " + std::to_string(v.value));
    const auto& off = dir == Direction::Forward ? fwd_offsets_ : rev_offsets_;
    const auto& edges = dir == Direction::Forward ? fwd_edges_ : rev_edges_;
    return std::span<const Edge>(edges.data() + off[v.value], off[v.value + 1] - off[v.value]);
}

std::optional<EntityId> KnowledgeGraph::lookup_by_name(std::string_view name) const {
    auto it = by_name_.find(text::normalize_name(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::lookup_relation(std::string_view name) const {
    auto it = relation_by_name_.find(text::normalize_name(name));
    if (it == relation_by_name_.end()) return std::nullopt;
    return it->second;
}

KnowledgeGraph KnowledgeGraph::assemble(std::vector<EntityRecord> entities, std::vector<std::string> relations,
                                        std::vector<Triplet> triplets) {
    KnowledgeGraph g;
    std::sort(triplets.begin(), triplets.end());
    triplets.erase(std::unique(triplets.begin(), triplets.end()), triplets.end());
    g.entities_ = std::move(entities);
    g.relations_ = std::move(relations);
    g.triplets_ = std::move(triplets);

    const auto n = g.entities_.size();
    build_csr(n, g.triplets_, true, g.fwd_offsets_, g.fwd_edges_);
    build_csr(n, g.triplets_, false, g.rev_offsets_, g.rev_edges_);

    g.by_name_.reserve(n);
    Fnv1a h;
    h.update_u64(n);
    for (const auto& e : g.entities_) {
        g.by_name_.try_emplace(e.name, e.id);
        h.update_field(e.name);
        h.update_field(e.description ? "1" + *e.description : "0");
        h.update_field(e.type ? "1" + *e.type : "0");
    }
    h.update_u64(g.relations_.size());
    for (std::size_t i = 0; i < g.relations_.size(); ++i) {
        g.relation_by_name_.try_emplace(g.relations_[i], RelationId{static_cast<std::uint32_t>(i)});
        h.update_field(g.relations_[i]);
    }
    h.update_u64(g.triplets_.size());
    for (const auto& t : g.triplets_) {
        h.update_u64((std::uint64_t{t.head.value} << 32) | t.tail.value);
        h.update_u64(t.relation.value);
    }
    g.hash_ = h.digest();
    return g;
}

void KnowledgeGraph::save_snapshot(std::ostream& out) const {
    out.write(kMagic, sizeof kMagic);
    write_pod<std::uint8_t>(out, kSnapshotVersion);
    write_pod<std::uint64_t>(out, entities_.size());
    for (const auto& e : entities_) {
        write_str(out, e.name);
        write_opt(out, e.description);
        write_opt(out, e.type);
    }
    write_pod<std::uint64_t>(out, relations_.size());
    for (const auto& r : relations_) write_str(out, r);
    write_pod<std::uint64_t>(out, triplets_.size());
    for (const auto& t : triplets_) {
        write_pod(out, t.head.value);
        write_pod(out, t.relation.value);
        write_pod(out, t.tail.value);
    }
    if (!out) throw std::runtime_error("failed writing graph snapshot");
}

KnowledgeGraph KnowledgeGraph::load_snapshot(std::istream& in) {
    char magic[4];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw std::runtime_error("not a graph snapshot (bad magic)");
    }
    auto version = read_pod<std::uint8_t>(in);
    if (version != kSnapshotVersion) {
        throw std::runtime_error("unsupported graph snapshot version " + std::to_string(version));
    }
    std::vector<EntityRecord> entities(read_pod<std::uint64_t>(in));
    for (std::size_t i = 0; i < entities.size(); ++i) {
        entities[i].id = EntityId{static_cast<std::uint32_t>(i)};
        entities[i].name = read_str(in);
        entities[i].description = read_opt(in);
        entities[i].type = read_opt(in);
    }
    std::vector<std::string> relations(read_pod<std::uint64_t>(in));
    for (auto& r : relations) r = read_str(in);
    std::vector<Triplet> triplets(read_pod<std::uint64_t>(in));
    for (auto& t : triplets) {
        t.head.value = read_pod<std::uint32_t>(in);
        t.relation.value = read_pod<std::uint32_t>(in);
        t.tail.value = read_pod<std::uint32_t>(in);
        if (t.head.value >= entities.size() || t.tail.value >= entities.size() ||
            t.relation.value >= relations.size()) {
            throw std::runtime_error("graph snapshot references an unknown id");
        }
    }
    return assemble(std::move(entities), std::move(relations), std::move(triplets));
}

void KnowledgeGraph::save_snapshot_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_snapshot(out);
}

KnowledgeGraph KnowledgeGraph::load_snapshot_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_snapshot(in);
}

EntityId GraphBuilder::add_entity(std::string_view name, std::optional<std::string> description,
                                  std::optional<std::string> type) {
    auto norm = text::normalize_name(name);
    if (norm.empty()) throw std::invalid_argument("entity name is empty");
    if (description) description = text::nfc(*description);
    if (type) type = text::nfc(*type);

    auto key = record_key(norm, description, type);
    if (auto it = by_record_.find(key); it != by_record_.end()) return it->second;

    EntityId id{static_cast<std::uint32_t>(entities_.size())};
    by_record_.emplace(std::move(key), id);
    first_by_name_.try_emplace(norm, id);
    entities_.push_back(EntityRecord{id, std::move(norm), std::move(description), std::move(type)});
    return id;
}

RelationId GraphBuilder::intern_relation(std::string_view name) {
    auto norm = text::normalize_name(name);
    if (norm.empty()) throw std::invalid_argument("relation name is empty");
    auto [it, inserted] = relation_ids_.try_emplace(norm, RelationId{static_cast<std::uint32_t>(relations_.size())});
    if (inserted) relations_.push_back(std::move(norm));
    return it->second;
}

EntityId GraphBuilder::resolve(std::string_view name) {
    auto norm = text::normalize_name(name);
    if (auto it = first_by_name_.find(norm); it != first_by_name_.end()) return it->second;
    if (!options_.auto_create_entities) {
        throw std::invalid_argument("unknown entity '" + norm + "'");
    }
    return add_entity(norm);
}

void GraphBuilder::add_triple(std::string_view head, std::string_view relation, std::string_view tail) {
    auto h = resolve(head);
    auto r = intern_relation(relation);
    auto t = resolve(tail);
    triplets_.push_back(Triplet{h, r, t});
}

KnowledgeGraph GraphBuilder::build() && {
    return KnowledgeGraph::assemble(std::move(entities_), std::move(relations_), std::move(triplets_));
}

KnowledgeGraph ingest(std::istream& entities, std::istream& triples, IngestOptions options,
                      std::string_view entities_source, std::string_view triples_source) {
    GraphBuilder builder(options);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(entities, line)) {
        ++lineno;
        if (blank(line)) continue;
        try {
            auto obj = nlohmann::json::parse(line);
            if (!obj.is_object()) throw std::invalid_argument("expected a JSON object");
            builder.add_entity(required_string(obj, "name"), optional_string(obj, "description"),
                               optional_string(obj, "type"));
        } catch (const nlohmann::json::exception& e) {
            throw IngestError(std::string(entities_source), lineno, e.what());
        } catch (const std::invalid_argument& e) {
            throw IngestError(std::string(entities_source), lineno, e.what());
        }
    }

    lineno = 0;
    while (std::getline(triples, line)) {
        ++lineno;
        if (blank(line)) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        try {
            auto first = line.find_first_not_of(" \t");
            if (line[first] == '{') {
                auto obj = nlohmann::json::parse(line);
                builder.add_triple(required_string(obj, "head"), required_string(obj, "relation"),
                                   required_string(obj, "tail"));
            } else {
                auto t1 = line.find('\t');
                auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
                if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
                    throw std::invalid_argument("expected 3 tab-separated columns");
                }
                std::string_view v(line);
                builder.add_triple(v.substr(0, t1), v.substr(t1 + 1, t2 - t1 - 1), v.substr(t2 + 1));
            }
        } catch (const nlohmann::json::exception& e) {
            throw IngestError(std::string(triples_source), lineno, e.what());
        } catch (const std::invalid_argument& e) {
            throw IngestError(std::string(triples_source), lineno, e.what());
        }
    }
    return std::move(builder).build();
}

KnowledgeGraph ingest_files(const std::string& entities_path, const std::string& triples_path,
                            IngestOptions options) {
    std::ifstream e(entities_path);
    if (!e) throw IngestError(entities_path, 0, "cannot open file");
    std::ifstream t(triples_path);
    if (!t) throw IngestError(triples_path, 0, "cannot open file");
    return ingest(e, t, options, entities_path, triples_path);
}

}  // namespace hykge::kg
