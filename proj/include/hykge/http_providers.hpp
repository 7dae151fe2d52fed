#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "hykge/providers.hpp"

namespace hykge::providers {

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
};

struct HttpOptions {
    RetryPolicy retry;
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{120000};
    std::size_t max_pool_size = 8;
};

class JsonEndpoint;

/// POST {base}/generate {"prompt","max_tokens","temperature"} -> {"text"}
class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(const std::string& base_url, HttpOptions options = {});
    ~HttpGenerator() override;
    std::string generate(const std::string& prompt, const GenerationParams& params) override;

private:
    std::unique_ptr<JsonEndpoint> endpoint_;
};

/// POST {base}/embed {"texts"} -> {"vectors"}; vectors are normalized on receipt.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(const std::string& base_url, HttpOptions options = {}, std::string tag = {});
    ~HttpEmbedder() override;
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::string tag() const override { return tag_; }

private:
    std::unique_ptr<JsonEndpoint> endpoint_;
    std::string tag_;
};

/// POST {base}/score {"pairs": [[q, d], ...]} -> {"scores"}
class HttpScorer final : public PairScorer {
public:
    explicit HttpScorer(const std::string& base_url, HttpOptions options = {});
    ~HttpScorer() override;
    std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>> pairs) override;

private:
    std::unique_ptr<JsonEndpoint> endpoint_;
};

/// POST {base}/ner {"text"} -> {"entities": [{"surface","start","end"}]}
class HttpRecognizer final : public EntityRecognizer {
public:
    explicit HttpRecognizer(const std::string& base_url, HttpOptions options = {});
    ~HttpRecognizer() override;
    std::vector<RecognizedEntity> recognize(std::string_view text) override;

private:
    std::unique_ptr<JsonEndpoint> endpoint_;
};

}  // namespace hykge::providers
