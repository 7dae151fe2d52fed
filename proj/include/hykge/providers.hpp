#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hykge/text.hpp"

namespace hykge::providers {

struct GenerationParams {
    int max_tokens = 500;
    double temperature = 0.6;
};

using EmbeddingVector = std::vector<float>;

struct RecognizedEntity {
    std::string surface;
    std::size_t start = 0;  // code points
    std::size_t end = 0;
    friend bool operator==(const RecognizedEntity&, const RecognizedEntity&) = default;
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string generate(const std::string& prompt, const GenerationParams& params) = 0;
};

/// Every returned vector is unit-length and has dimension dim().
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
    /// Identifies the model; part of the entity-index cache key.
    virtual std::string tag() const = 0;

    EmbeddingVector embed_one(const std::string& text);
};

/// Cross-encoder style relevance: higher is more relevant.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>> pairs) = 0;

    double score_pair(const std::string& query, const std::string& document);
};

class EntityRecognizer {
public:
    virtual ~EntityRecognizer() = default;
    virtual std::vector<RecognizedEntity> recognize(std::string_view text) = 0;
};

/// L2-normalizes in place; throws ProviderError on a zero vector.
void normalize(EmbeddingVector& v);

/// Throws ProviderError unless every vector has the same dimension.
void check_uniform_dimension(std::span<const EmbeddingVector> vectors);

// ---------------------------------------------------------------------------
// Deterministic doubles. All are pure functions of their inputs and construction
// arguments.

/// Replies with the fixture registered for a prompt, else the first matching
/// substring rule, else the fallback text.
class ScriptedGenerator final : public Generator {
public:
    explicit ScriptedGenerator(std::string fallback = "I don't know.") : fallback_(std::move(fallback)) {}

    void add(std::string_view prompt, std::string reply);
    void add_by_hash(std::uint64_t prompt_hash, std::string reply);
    void add_rule(std::string needle, std::string reply);

    /// {"fallback": s, "fixtures": [{"prompt"|"prompt_hash"|"contains": s, "text": s}, ...]}
    static ScriptedGenerator from_json_file(const std::string& path);

    std::string generate(const std::string& prompt, const GenerationParams& params) override;

private:
    std::string fallback_;
    std::unordered_map<std::uint64_t, std::string> by_hash_;
    std::vector<std::pair<std::string, std::string>> rules_;
};

/// Signed feature hashing of the whole string plus character bigrams/trigrams,
/// seeded. Equal strings give equal vectors; overlapping strings correlate.
/// `raw_scale` multiplies the raw vector before normalization.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256, std::uint64_t seed = 0x5eed, double raw_scale = 1.0)
        : dim_(dim), seed_(seed), raw_scale_(raw_scale) {}

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::string tag() const override;

    /// The vector before normalization.
    EmbeddingVector raw(const std::string& text) const;
    std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
    double raw_scale_;
};

/// score = |query tokens ∩ document tokens| (multiset) / |document tokens|,
/// counting only tokens with letters or digits, case-folded.
class OverlapScorer final : public PairScorer {
public:
    explicit OverlapScorer(std::shared_ptr<const text::Tokenizer> tokenizer = nullptr);

    std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>> pairs) override;
    double score(std::string_view query, std::string_view document) const;

private:
    std::shared_ptr<const text::Tokenizer> tokenizer_;
};

/// Longest-match, left-to-right dictionary recognizer. Matches may not cut
/// through a run of non-ideographic letters/digits.
class GazetteerRecognizer final : public EntityRecognizer {
public:
    explicit GazetteerRecognizer(const std::vector<std::string>& surfaces);

    std::vector<RecognizedEntity> recognize(std::string_view text) override;

private:
    std::unordered_set<std::u32string> surfaces_;
    std::size_t max_len_ = 0;
};

}  // namespace hykge::providers
