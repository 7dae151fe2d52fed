#include "hykge/chains.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace hykge::chains {

using kg::Direction;
using kg::EntityId;
using kg::RelationId;

const char* to_string(ChainKind kind) {
    switch (kind) {
        case ChainKind::Path: return "path";
        case ChainKind::CoAncestor: return "co-ancestor";
        case ChainKind::CoOccurrence: return "co-occurrence";
    }
    return "?";
}

std::optional<ChainKind> classify(std::span<const Step> dirs) {
    if (dirs.empty()) return std::nullopt;
    std::size_t switches = 0;
    for (std::size_t i = 1; i < dirs.size(); ++i) {
        if (dirs[i] != dirs[i - 1]) ++switches;
    }
    if (switches == 0) return ChainKind::Path;
    if (switches > 1) return std::nullopt;
    return dirs.front() == Step::Forward ? ChainKind::CoAncestor : ChainKind::CoOccurrence;
}

namespace {

void reverse_in_place(ReasoningChain& c) {
    std::reverse(c.nodes.begin(), c.nodes.end());
    std::reverse(c.relations.begin(), c.relations.end());
    std::reverse(c.directions.begin(), c.directions.end());
    for (auto& d : c.directions) d = d == Step::Forward ? Step::Backward : Step::Forward;
    std::swap(c.head_description, c.tail_description);
}

}  // namespace

ReasoningChain canonicalize(ReasoningChain c) {
    if (c.nodes.empty()) return c;
    if (c.kind == ChainKind::Path) {
        if (c.directions.front() == Step::Backward) reverse_in_place(c);
    } else if (c.nodes.back() < c.nodes.front()) {
        reverse_in_place(c);
    }
    return c;
}

bool chain_order_less(const ReasoningChain& a, const ReasoningChain& b) {
    if (a.hops() != b.hops()) return a.hops() < b.hops();
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    if (a.relations != b.relations) return a.relations < b.relations;
    return a.directions < b.directions;
}

bool validate(const ReasoningChain& c, const kg::KnowledgeGraph& g) {
    if (c.hops() == 0 || c.nodes.size() != c.hops() + 1 || c.directions.size() != c.hops()) return false;
    if (classify(c.directions) != c.kind) return false;
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        if (!g.valid(c.nodes[i])) return false;
        for (std::size_t j = 0; j < i; ++j) {
            if (c.nodes[i] == c.nodes[j]) return false;
        }
    }
    for (std::size_t i = 0; i < c.hops(); ++i) {
        const bool fwd = c.directions[i] == Step::Forward;
        kg::Triplet t{fwd ? c.nodes[i] : c.nodes[i + 1], c.relations[i], fwd ? c.nodes[i + 1] : c.nodes[i]};
        if (!g.contains(t)) return false;
    }
    return true;
}

namespace {

using DistanceMap = std::unordered_map<EntityId, int>;

// Undirected BFS distances from `source`, up to `radius` hops.
DistanceMap ball(const kg::KnowledgeGraph& g, EntityId source, int radius) {
    DistanceMap dist{{source, 0}};
    std::deque<EntityId> queue{source};
    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        const int d = dist[v];
        if (d >= radius) continue;
        for (auto dir : {Direction::Forward, Direction::Reverse}) {
            for (const auto& e : g.neighbors(v, dir)) {
                if (dist.try_emplace(e.target, d + 1).second) queue.push_back(e.target);
            }
        }
    }
    return dist;
}

// Direction-pattern automaton over valid chain prefixes.
enum class State { Start, Fwd, Bwd, FwdBwd, BwdFwd };

std::optional<State> advance(State s, Step step) {
    const bool f = step == Step::Forward;
    switch (s) {
        case State::Start: return f ? State::Fwd : State::Bwd;
        case State::Fwd: return f ? State::Fwd : State::FwdBwd;
        case State::Bwd: return f ? State::BwdFwd : State::Bwd;
        case State::FwdBwd: return f ? std::nullopt : std::optional(State::FwdBwd);
        case State::BwdFwd: return f ? std::optional(State::BwdFwd) : std::nullopt;
    }
    return std::nullopt;
}

ChainKind kind_of(State s) {
    switch (s) {
        case State::FwdBwd: return ChainKind::CoAncestor;
        case State::BwdFwd: return ChainKind::CoOccurrence;
        default: return ChainKind::Path;
    }
}

struct LevelSearch {
    const kg::KnowledgeGraph& g;
    int hops;
    // target anchor -> remaining-distance map restricted to eligible targets
    const DistanceMap& nearest;  // min undirected distance to any eligible target
    const std::unordered_map<EntityId, std::size_t>& target_slot;
    std::vector<std::vector<ReasoningChain>>& found;  // per target slot

    std::vector<EntityId> nodes;
    std::vector<RelationId> rels;
    std::vector<Step> dirs;

    bool on_chain(EntityId v) const { return std::find(nodes.begin(), nodes.end(), v) != nodes.end(); }

    void run(EntityId start) {
        nodes.assign(1, start);
        rels.clear();
        dirs.clear();
        dfs(State::Start);
    }

    void dfs(State state) {
        const int depth = static_cast<int>(rels.size());
        const EntityId v = nodes.back();
        if (depth == hops) {
            if (auto it = target_slot.find(v); it != target_slot.end()) emit(state, it->second);
            return;
        }
        const int remaining = hops - depth - 1;
        for (auto dir : {Direction::Forward, Direction::Reverse}) {
            const Step step = dir == Direction::Forward ? Step::Forward : Step::Backward;
            auto next = advance(state, step);
            if (!next) continue;
            for (const auto& e : g.neighbors(v, dir)) {
                auto it = nearest.find(e.target);
                if (it == nearest.end() || it->second > remaining) continue;
                if (on_chain(e.target)) continue;
                nodes.push_back(e.target);
                rels.push_back(e.relation);
                dirs.push_back(step);
                dfs(*next);
                nodes.pop_back();
                rels.pop_back();
                dirs.pop_back();
            }
        }
    }

    void emit(State state, std::size_t slot) {
        ReasoningChain c;
        c.kind = kind_of(state);
        c.nodes = nodes;
        c.relations = rels;
        c.directions = dirs;
        found[slot].push_back(canonicalize(std::move(c)));
    }
};

}  // namespace

ChainSet search_chains(const kg::KnowledgeGraph& g, std::span<const EntityId> anchor_span,
                       const SearchOptions& options) {
    if (options.k < 1) throw std::invalid_argument("k must be >= 1");
    ChainSet out;

    std::vector<EntityId> anchors(anchor_span.begin(), anchor_span.end());
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    for (auto a : anchors) {
        if (!g.valid(a)) throw std::out_of_range("anchor id " + std::to_string(a.value) + " not in graph");
    }
    if (anchors.size() < 2) return out;

    const std::size_t n = anchors.size();
    std::vector<DistanceMap> balls;
    balls.reserve(n);
    for (auto a : anchors) balls.push_back(ball(g, a, options.k - 1));

    // accepted[i][j] for i < j: chains between anchors[i] and anchors[j]
    std::map<std::pair<std::size_t, std::size_t>, std::vector<ReasoningChain>> accepted;
    std::size_t total_accepted = 0;
    const auto& caps = options.caps;

    for (int h = std::max(1, options.min_hops); h <= options.k; ++h) {
        if (total_accepted >= caps.global) {
            out.truncated = true;
            break;
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            std::unordered_map<EntityId, std::size_t> slot;
            std::vector<std::size_t> slot_to_j;
            DistanceMap nearest;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (accepted[{i, j}].size() >= caps.per_pair) {
                    out.truncated = true;
                    continue;
                }
                slot.emplace(anchors[j], slot_to_j.size());
                slot_to_j.push_back(j);
                for (const auto& [v, d] : balls[j]) {
                    auto [it, inserted] = nearest.try_emplace(v, d);
                    if (!inserted) it->second = std::min(it->second, d);
                }
            }
            if (slot_to_j.empty()) continue;

            std::vector<std::vector<ReasoningChain>> found(slot_to_j.size());
            LevelSearch search{g, h, nearest, slot, found, {}, {}, {}};
            search.run(anchors[i]);

            for (std::size_t s = 0; s < found.size(); ++s) {
                auto& level = found[s];
                out.raw_count += level.size();
                std::sort(level.begin(), level.end(), chain_order_less);
                auto& bucket = accepted[{i, slot_to_j[s]}];
                const std::size_t room = caps.per_pair - bucket.size();
                if (level.size() > room) {
                    out.truncated = true;
                    level.resize(room);
                }
                total_accepted += level.size();
                std::move(level.begin(), level.end(), std::back_inserter(bucket));
            }
        }
    }

    for (auto& [pair, bucket] : accepted) {
        std::move(bucket.begin(), bucket.end(), std::back_inserter(out.chains));
    }
    std::sort(out.chains.begin(), out.chains.end(), chain_order_less);
    if (out.chains.size() > caps.global) {
        out.truncated = true;
        out.chains.resize(caps.global);
    }
    for (auto& c : out.chains) {
        c.head_description = g.entity(c.head()).description;
        c.tail_description = g.entity(c.tail()).description;
    }
    return out;
}

std::string serialize_chain(const ReasoningChain& c, const kg::KnowledgeGraph& g, bool with_descriptions) {
    std::string s = g.entity(c.nodes.front()).name;
    for (std::size_t i = 0; i < c.hops(); ++i) {
        const auto& rel = g.relation_name(c.relations[i]);
        const char* arrow = c.directions[i] == Step::Forward ? " → " : " ← ";
        s += arrow;
        s += rel;
        s += arrow;
        s += g.entity(c.nodes[i + 1]).name;
    }
    if (with_descriptions) {
        if (c.head_description) s += " | " + g.entity(c.head()).name + ": " + *c.head_description;
        if (c.tail_description) s += " | " + g.entity(c.tail()).name + ": " + *c.tail_description;
    }
    return s;
}

}  // namespace hykge::chains
