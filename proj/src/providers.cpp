#include "hykge/providers.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

#include "hykge/error.hpp"
#include "hykge/hash.hpp"

namespace hykge::providers {

EmbeddingVector Embedder::embed_one(const std::string& text) {
    auto out = embed(std::span<const std::string>(&text, 1));
    if (out.size() != 1) throw ProviderError("embedder returned " + std::to_string(out.size()) + " vectors for 1 text", false);
    return std::move(out.front());
}

double PairScorer::score_pair(const std::string& query, const std::string& document) {
    std::pair<std::string, std::string> p{query, document};
    auto out = score_pairs(std::span(&p, 1));
    if (out.size() != 1) throw ProviderError("scorer returned " + std::to_string(out.size()) + " scores for 1 pair", false);
    return out.front();
}

void normalize(EmbeddingVector& v) {
    double sq = 0.0;
    for (float x : v) sq += double{x} * x;
    if (!(sq > 0.0) || !std::isfinite(sq)) throw ProviderError("cannot normalize a zero or non-finite embedding", false);
    const double inv = 1.0 / std::sqrt(sq);
    for (float& x : v) x = static_cast<float>(x * inv);
}

void check_uniform_dimension(std::span<const EmbeddingVector> vectors) {
    for (const auto& v : vectors) {
        if (v.size() != vectors.front().size()) {
            throw ProviderError("embedding dimension mismatch within batch: " + std::to_string(vectors.front().size()) +
                                    " vs " + std::to_string(v.size()),
                                false);
        }
    }
}

// --- ScriptedGenerator ------------------------------------------------------

void ScriptedGenerator::add(std::string_view prompt, std::string reply) { add_by_hash(fnv1a(prompt), std::move(reply)); }

void ScriptedGenerator::add_by_hash(std::uint64_t prompt_hash, std::string reply) {
    by_hash_[prompt_hash] = std::move(reply);
}

void ScriptedGenerator::add_rule(std::string needle, std::string reply) {
    rules_.emplace_back(std::move(needle), std::move(reply));
}

ScriptedGenerator ScriptedGenerator::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError(path, 0, "cannot open generator fixture");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(path, 0, e.what());
    }
    ScriptedGenerator g(doc.value("fallback", std::string("I don't know.")));
    for (const auto& f : doc.value("fixtures", nlohmann::json::array())) {
        auto reply = f.at("text").get<std::string>();
        if (f.contains("prompt")) {
            g.add(f["prompt"].get<std::string>(), std::move(reply));
        } else if (f.contains("prompt_hash")) {
            g.add_by_hash(std::stoull(f["prompt_hash"].get<std::string>(), nullptr, 16), std::move(reply));
        } else if (f.contains("contains")) {
            g.add_rule(f["contains"].get<std::string>(), std::move(reply));
        } else {
            throw IngestError(path, 0, "fixture needs one of prompt, prompt_hash, contains");
        }
    }
    return g;
}

std::string ScriptedGenerator::generate(const std::string& prompt, const GenerationParams&) {
    if (prompt.empty()) throw std::invalid_argument("prompt is empty");
    if (auto it = by_hash_.find(fnv1a(prompt)); it != by_hash_.end()) return it->second;
    for (const auto& [needle, reply] : rules_) {
        if (prompt.find(needle) != std::string::npos) return reply;
    }
    return fallback_;
}

// --- HashEmbedder -----------------------------------------------------------

EmbeddingVector HashEmbedder::raw(const std::string& input) const {
    EmbeddingVector v(dim_, 0.0f);
    auto add = [&](std::string_view kind, std::u32string_view gram, float weight) {
        Fnv1a h;
        h.update_u64(seed_).update_field(kind).update(text::to_utf8(gram));
        const auto d = h.digest();
        v[d % dim_] += (d >> 63) ? -weight : weight;
    };
    const auto key = text::to_u32(text::normalize_key(input));
    add("w", key, 2.0f);
    std::u32string padded = U"\u0002" + key + U"\u0003";
    for (std::size_t n = 2; n <= 3; ++n) {
        for (std::size_t i = 0; i + n <= padded.size(); ++i) {
            add(n == 2 ? "b" : "t", std::u32string_view(padded).substr(i, n), 1.0f);
        }
    }
    for (float& x : v) x = static_cast<float>(x * raw_scale_);
    return v;
}

std::vector<EmbeddingVector> HashEmbedder::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        if (t.empty()) throw std::invalid_argument("cannot embed an empty text");
        auto v = raw(t);
        normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

std::string HashEmbedder::tag() const {
    return "hash-ngram-v1/dim=" + std::to_string(dim_) + "/seed=" + to_hex(seed_);
}

// --- OverlapScorer ----------------------------------------------------------

OverlapScorer::OverlapScorer(std::shared_ptr<const text::Tokenizer> tokenizer) : tokenizer_(std::move(tokenizer)) {
    if (!tokenizer_) tokenizer_ = std::make_shared<text::WhitespaceTokenizer>();
}

double OverlapScorer::score(std::string_view query, std::string_view document) const {
    auto bag = [&](std::string_view s) {
        std::map<std::string, int> counts;
        int total = 0;
        for (const auto& tok : tokenizer_->tokenize(s)) {
            if (!text::is_content_token(tok)) continue;
            ++counts[text::normalize_key(tok)];
            ++total;
        }
        return std::pair{counts, total};
    };
    auto [q, qn] = bag(query);
    auto [d, dn] = bag(document);
    if (dn == 0) return 0.0;
    int overlap = 0;
    for (const auto& [tok, n] : d) {
        if (auto it = q.find(tok); it != q.end()) overlap += std::min(n, it->second);
    }
    return static_cast<double>(overlap) / dn;
}

std::vector<double> OverlapScorer::score_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [q, d] : pairs) {
        if (q.empty() || d.empty()) throw std::invalid_argument("score_pair inputs must be non-empty");
        out.push_back(score(q, d));
    }
    return out;
}

// --- GazetteerRecognizer ----------------------------------------------------

GazetteerRecognizer::GazetteerRecognizer(const std::vector<std::string>& surfaces) {
    for (const auto& s : surfaces) {
        auto u = text::to_u32(text::normalize_name(s));
        if (u.empty()) continue;
        max_len_ = std::max(max_len_, u.size());
        surfaces_.insert(std::move(u));
    }
}

std::vector<RecognizedEntity> GazetteerRecognizer::recognize(std::string_view input) {
    std::vector<RecognizedEntity> out;
    const auto u = text::to_u32(input);
    const std::u32string_view view(u);
    auto wordish = [](char32_t c) { return text::is_alnum(c) && !text::is_ideograph(c); };
    auto boundary_ok = [&](std::size_t s, std::size_t e) {
        if (s > 0 && wordish(u[s - 1]) && wordish(u[s])) return false;
        if (e < u.size() && wordish(u[e - 1]) && wordish(u[e])) return false;
        return true;
    };
    std::size_t i = 0;
    while (i < u.size()) {
        std::size_t found = 0;
        for (std::size_t len = std::min(max_len_, u.size() - i); len >= 1; --len) {
            if (surfaces_.count(std::u32string(view.substr(i, len))) && boundary_ok(i, i + len)) {
                found = len;
                break;
            }
        }
        if (found == 0) {
            ++i;
            continue;
        }
        out.push_back(RecognizedEntity{text::to_utf8(view.substr(i, found)), i, i + found});
        i += found;
    }
    return out;
}

}  // namespace hykge::providers
