#pragma once

#include <atomic>
#include <span>
#include <string>
#include <vector>

#include "hykge/error.hpp"
#include "hykge/providers.hpp"

namespace hykge::testing {

class CountingGenerator final : public providers::Generator {
public:
    explicit CountingGenerator(providers::Generator& inner) : inner_(inner) {}
    std::string generate(const std::string& prompt, const providers::GenerationParams& p) override {
        ++calls;
        prompts.push_back(prompt);
        return inner_.generate(prompt, p);
    }
    std::atomic<int> calls{0};
    std::vector<std::string> prompts;

private:
    providers::Generator& inner_;
};

class CountingScorer final : public providers::PairScorer {
public:
    explicit CountingScorer(providers::PairScorer& inner) : inner_(inner) {}
    std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>> pairs) override {
        ++batches;
        pairs_scored += pairs.size();
        return inner_.score_pairs(pairs);
    }
    std::atomic<int> batches{0};
    std::atomic<std::size_t> pairs_scored{0};

private:
    providers::PairScorer& inner_;
};

/// Always throws a retryable provider error.
class FailingGenerator final : public providers::Generator {
public:
    std::string generate(const std::string&, const providers::GenerationParams&) override {
        throw ProviderError("connection refused", true);
    }
};

}  // namespace hykge::testing
