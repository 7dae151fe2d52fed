#include "hykge/extraction.hpp"

#include <stdexcept>
#include <unordered_set>

namespace hykge::extraction {

ExtractionResult extract_entities(std::string_view query, std::string_view hypothesis,
                                  providers::EntityRecognizer& recognizer) {
    if (text::trim(query).empty()) throw std::invalid_argument("query is empty");

    ExtractionResult result;
    std::unordered_set<std::string> seen;

    auto collect = [&](std::string_view source) {
        std::unordered_set<std::string> local;
        for (const auto& entity : recognizer.recognize(source)) {
            auto mention = text::normalize_name(entity.surface);
            if (mention.empty()) continue;
            auto key = text::fold_case(mention);
            local.insert(key);
            if (seen.insert(std::move(key)).second) result.mentions.push_back(std::move(mention));
        }
        return local.size();
    };

    result.from_query = collect(query);
    if (!text::trim(hypothesis).empty()) result.from_hypothesis = collect(hypothesis);
    return result;
}

}  // namespace hykge::extraction
