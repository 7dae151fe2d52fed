#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hykge/providers.hpp"
#include "hykge/text.hpp"

namespace hykge::extraction {

using text::filter_stopwords;

struct ExtractionResult {
    /// NFC-normalized, trimmed, first-seen order; unique under case folding.
    std::vector<std::string> mentions;
    std::size_t from_query = 0;       // unique mentions found in the query
    std::size_t from_hypothesis = 0;  // unique mentions found in the hypothesis output
};

/// Runs the recognizer over the query and the hypothesis separately and unions the
/// surfaces. Relations asserted in the hypothesis never reach the result: only
/// recognizer spans do. An empty hypothesis is skipped.
ExtractionResult extract_entities(std::string_view query, std::string_view hypothesis,
                                  providers::EntityRecognizer& recognizer);

}  // namespace hykge::extraction
