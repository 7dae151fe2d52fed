#include "hykge/http_providers.hpp"

#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include "json.hpp"

#include "hykge/error.hpp"

namespace hykge::providers {

using nlohmann::json;

/// Shared POST-JSON machinery: URL split, a small client pool, retries.
class JsonEndpoint {
public:
    JsonEndpoint(const std::string& base_url, HttpOptions options) : options_(options) {
        auto scheme = base_url.find("://");
        auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
        auto path_start = base_url.find('/', host_start);
        if (path_start == std::string::npos) {
            origin_ = base_url;
        } else {
            origin_ = base_url.substr(0, path_start);
            prefix_ = base_url.substr(path_start);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
        if (origin_.empty()) throw std::invalid_argument("empty provider URL");
    }

    json post(const std::string& route, const json& body) {
        const auto payload = body.dump();
        const auto path = prefix_ + route;
        auto backoff = options_.retry.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            try {
                return post_once(path, payload);
            } catch (const ProviderError& e) {
                if (!e.retryable() || attempt >= options_.retry.attempts) throw;
            }
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }

private:
    struct Lease {
        JsonEndpoint& owner;
        std::unique_ptr<httplib::Client> client;
        ~Lease() { owner.release(std::move(client)); }
    };

    Lease acquire() {
        {
            std::lock_guard lock(mu_);
            if (!pool_.empty()) {
                auto c = std::move(pool_.back());
                pool_.pop_back();
                return Lease{*this, std::move(c)};
            }
        }
        auto c = std::make_unique<httplib::Client>(origin_);
        c->set_keep_alive(true);
        c->set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.connect_timeout).count(),
                                  static_cast<time_t>((options_.connect_timeout.count() % 1000) * 1000));
        c->set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.read_timeout).count(),
                            static_cast<time_t>((options_.read_timeout.count() % 1000) * 1000));
        return Lease{*this, std::move(c)};
    }

    void release(std::unique_ptr<httplib::Client> c) {
        if (!c) return;
        std::lock_guard lock(mu_);
        if (pool_.size() < options_.max_pool_size) pool_.push_back(std::move(c));
    }

    json post_once(const std::string& path, const std::string& payload) {
        auto lease = acquire();
        auto res = lease.client->Post(path, payload, "application/json; charset=utf-8");
        if (!res) {
            auto err = httplib::to_string(res.error());
            lease.client.reset();
            throw ProviderError("transport error calling " + origin_ + path + ": " + err, true);
        }
        if (res->status < 200 || res->status >= 300) {
            auto excerpt = res->body.substr(0, 256);
            throw ProviderError(origin_ + path + " returned HTTP " + std::to_string(res->status) + ": " + excerpt,
                                res->status >= 500, res->status, excerpt);
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProviderError(origin_ + path + " returned malformed JSON: " + e.what(), false, res->status,
                                res->body.substr(0, 256));
        }
    }

    HttpOptions options_;
    std::string origin_;
    std::string prefix_;
    std::mutex mu_;
    std::vector<std::unique_ptr<httplib::Client>> pool_;
};

namespace {

template <typename T>
T field(const json& doc, const char* key, const char* who) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string(who) + " response lacks a valid '" + key + "': " + e.what(), false);
    }
}

}  // namespace

HttpGenerator::HttpGenerator(const std::string& base_url, HttpOptions options)
    : endpoint_(std::make_unique<JsonEndpoint>(base_url, options)) {}
HttpGenerator::~HttpGenerator() = default;

std::string HttpGenerator::generate(const std::string& prompt, const GenerationParams& params) {
    if (prompt.empty()) throw std::invalid_argument("prompt is empty");
    json body{{"prompt", prompt}, {"max_tokens", params.max_tokens}, {"temperature", params.temperature}};
    return field<std::string>(endpoint_->post("/generate", body), "text", "generator");
}

HttpEmbedder::HttpEmbedder(const std::string& base_url, HttpOptions options, std::string tag)
    : endpoint_(std::make_unique<JsonEndpoint>(base_url, options)),
      tag_(tag.empty() ? "http:" + base_url : std::move(tag)) {}
HttpEmbedder::~HttpEmbedder() = default;

std::vector<EmbeddingVector> HttpEmbedder::embed(std::span<const std::string> texts) {
    if (texts.empty()) return {};
    json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
    auto vectors = field<std::vector<EmbeddingVector>>(endpoint_->post("/embed", body), "vectors", "embedder");
    if (vectors.size() != texts.size()) {
        throw ProviderError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                                std::to_string(texts.size()) + " texts",
                            false);
    }
    check_uniform_dimension(vectors);
    for (auto& v : vectors) normalize(v);
    return vectors;
}

HttpScorer::HttpScorer(const std::string& base_url, HttpOptions options)
    : endpoint_(std::make_unique<JsonEndpoint>(base_url, options)) {}
HttpScorer::~HttpScorer() = default;

std::vector<double> HttpScorer::score_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
    if (pairs.empty()) return {};
    json arr = json::array();
    for (const auto& [q, d] : pairs) arr.push_back(json::array({q, d}));
    auto scores = field<std::vector<double>>(endpoint_->post("/score", json{{"pairs", arr}}), "scores", "scorer");
    if (scores.size() != pairs.size()) {
        throw ProviderError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(pairs.size()) + " pairs",
                            false);
    }
    return scores;
}

HttpRecognizer::HttpRecognizer(const std::string& base_url, HttpOptions options)
    : endpoint_(std::make_unique<JsonEndpoint>(base_url, options)) {}
HttpRecognizer::~HttpRecognizer() = default;

std::vector<RecognizedEntity> HttpRecognizer::recognize(std::string_view input) {
    auto doc = endpoint_->post("/ner", json{{"text", std::string(input)}});
    std::vector<RecognizedEntity> out;
    for (const auto& e : field<json>(doc, "entities", "recognizer")) {
        RecognizedEntity r;
        try {
            r.surface = e.at("surface").get<std::string>();
            r.start = e.at("start").get<std::size_t>();
            r.end = e.at("end").get<std::size_t>();
        } catch (const json::exception& ex) {
            throw ProviderError(std::string("malformed recognizer entity: ") + ex.what(), false);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace hykge::providers
