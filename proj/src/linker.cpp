#include "hykge/linker.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "hykge/error.hpp"
#include "hykge/hash.hpp"

namespace hykge::linker {

namespace {

constexpr const char* kFormat = "hykge-entity-index";
constexpr int kVersion = 1;

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double{a[i]} * double{b[i]};
    return s;
}

}  // namespace

EntityIndex::EntityIndex(std::size_t dim, std::vector<float> rows, std::string provider_tag, std::uint64_t graph_hash)
    : dim_(dim), rows_(std::move(rows)), provider_tag_(std::move(provider_tag)), graph_hash_(graph_hash) {
    if (dim_ == 0 && !rows_.empty()) throw std::invalid_argument("entity index with rows needs dim > 0");
    if (dim_ != 0 && rows_.size() % dim_ != 0) throw std::invalid_argument("entity index rows are ragged");
}

std::span<const float> EntityIndex::row(kg::EntityId id) const {
    if (id.value >= size()) throw std::out_of_range("entity id outside index");
    return std::span<const float>(rows_.data() + std::size_t{id.value} * dim_, dim_);
}

void EntityIndex::save(std::ostream& out) const {
    nlohmann::json header{{"format", kFormat},
                          {"version", kVersion},
                          {"dim", dim_},
                          {"count", size()},
                          {"provider_tag", provider_tag_},
                          {"graph_hash", to_hex(graph_hash_)}};
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(rows_.data()), static_cast<std::streamsize>(rows_.size() * sizeof(float)));
    if (!out) throw std::runtime_error("failed writing entity index");
}

EntityIndex EntityIndex::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("entity index: missing header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
        if (header.at("format") != kFormat || header.at("version") != kVersion) {
            throw std::runtime_error("entity index: unsupported format");
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("entity index: bad header: ") + e.what());
    }
    const auto dim = header.at("dim").get<std::size_t>();
    const auto count = header.at("count").get<std::size_t>();
    std::vector<float> rows(dim * count);
    in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(float)));
    if (!in && !(rows.empty() && in.eof())) throw std::runtime_error("entity index: truncated rows");
    return EntityIndex(dim, std::move(rows), header.at("provider_tag").get<std::string>(),
                       std::stoull(header.at("graph_hash").get<std::string>(), nullptr, 16));
}

void EntityIndex::save_file(const std::string& path) const {
    auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        save(out);
    }
    std::filesystem::rename(tmp, path);
}

EntityIndex EntityIndex::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load(in);
}

EntityIndex build_index(const kg::KnowledgeGraph& graph, providers::Embedder& embedder, std::size_t batch_size) {
    if (batch_size == 0) batch_size = 1;
    std::vector<float> rows;
    std::size_t dim = 0;
    std::vector<std::string> batch;
    const auto entities = graph.entities();
    for (std::size_t start = 0; start < entities.size(); start += batch_size) {
        batch.clear();
        for (std::size_t i = start; i < std::min(entities.size(), start + batch_size); ++i) {
            batch.push_back(entities[i].name);
        }
        auto vectors = embedder.embed(batch);
        if (vectors.size() != batch.size()) throw ProviderError("embedder returned the wrong number of vectors", false);
        providers::check_uniform_dimension(vectors);
        if (dim == 0) {
            dim = vectors.front().size();
            rows.reserve(dim * entities.size());
        }
        for (const auto& v : vectors) {
            if (v.size() != dim) throw ProviderError("embedding dimension changed while building the index", false);
            rows.insert(rows.end(), v.begin(), v.end());
        }
    }
    return EntityIndex(dim, std::move(rows), embedder.tag(), graph.content_hash());
}

EntityIndex load_or_build_index(const kg::KnowledgeGraph& graph, providers::Embedder& embedder,
                                const std::string& path, bool* rebuilt) {
    if (rebuilt) *rebuilt = false;
    if (std::filesystem::exists(path)) {
        try {
            auto cached = EntityIndex::load_file(path);
            bool fresh = cached.graph_hash() == graph.content_hash() && cached.provider_tag() == embedder.tag() &&
                         cached.size() == graph.entity_count();
            if (fresh && graph.entity_count() > 0) {
                fresh = embedder.embed_one(graph.entities().front().name).size() == cached.dim();
            }
            if (fresh) return cached;
        } catch (const std::runtime_error&) {
            // unreadable cache: fall through and rebuild
        }
    }
    auto index = build_index(graph, embedder);
    index.save_file(path);
    if (rebuilt) *rebuilt = true;
    return index;
}

std::vector<kg::EntityId> AnchorSet::ids() const {
    std::vector<kg::EntityId> out;
    out.reserve(anchors.size());
    for (const auto& a : anchors) out.push_back(a.entity);
    return out;
}

bool AnchorSet::contains(kg::EntityId id) const {
    return std::any_of(anchors.begin(), anchors.end(), [&](const Anchor& a) { return a.entity == id; });
}

AnchorSet link(std::span<const std::string> mentions, const EntityIndex& index, providers::Embedder& embedder,
               double delta) {
    AnchorSet out;
    if (mentions.empty()) return out;
    if (index.size() == 0) {
        for (const auto& m : mentions) out.unlinked.push_back({m, std::nullopt, 0.0});
        return out;
    }
    if (embedder.tag() != index.provider_tag()) {
        throw std::invalid_argument("index built by '" + index.provider_tag() + "' but linking with '" +
                                    embedder.tag() + "'");
    }
    auto vectors = embedder.embed(mentions);
    if (vectors.size() != mentions.size()) throw ProviderError("embedder returned the wrong number of vectors", false);

    for (std::size_t m = 0; m < mentions.size(); ++m) {
        if (vectors[m].size() != index.dim()) {
            throw ProviderError("mention embedding dimension " + std::to_string(vectors[m].size()) +
                                    " differs from index dimension " + std::to_string(index.dim()),
                                false);
        }
        kg::EntityId best{0};
        double best_sim = -std::numeric_limits<double>::infinity();
        for (std::uint32_t j = 0; j < index.size(); ++j) {
            const double sim = dot(vectors[m], index.row(kg::EntityId{j}));
            if (sim > best_sim) {
                best_sim = sim;
                best = kg::EntityId{j};
            }
        }
        if (!(best_sim > delta)) {
            out.unlinked.push_back({mentions[m], best, best_sim});
            continue;
        }
        auto it = std::find_if(out.anchors.begin(), out.anchors.end(),
                               [&](const Anchor& a) { return a.entity == best; });
        if (it == out.anchors.end()) {
            out.anchors.push_back(Anchor{best, mentions[m], best_sim});
        } else if (best_sim > it->similarity) {
            it->mention = mentions[m];
            it->similarity = best_sim;
        }
    }
    return out;
}

}  // namespace hykge::linker
