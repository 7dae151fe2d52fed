#pragma once

#include <cstddef>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace hykge::text {

// All strings are UTF-8. Offsets exposed by this module count code points.

std::string nfc(std::string_view s);
std::string trim(std::string_view s);
std::string fold_case(std::string_view s);

/// NFC + trim. Used for entity-name lookup.
std::string normalize_name(std::string_view s);
/// NFC + trim + case fold. Used as a dedup key for mentions and stopwords.
std::string normalize_key(std::string_view s);

std::u32string to_u32(std::string_view s);
std::string to_utf8(std::u32string_view s);

bool is_space(char32_t c);
bool is_alnum(char32_t c);
bool is_ideograph(char32_t c);

/// True if the token has at least one letter or digit.
bool is_content_token(std::string_view token);

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

/// Splits on Unicode whitespace.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
};

/// Greedy forward maximum matching against a word list. Runs of non-ideographic
/// letters/digits become one token each; unmatched ideographs fall back to single
/// characters; whitespace separates; punctuation is emitted as its own token.
class DictionarySegmenter final : public Tokenizer {
public:
    explicit DictionarySegmenter(const std::vector<std::string>& words);

    std::vector<std::string> tokenize(std::string_view text) const override;
    std::size_t max_word_length() const noexcept { return max_len_; }

private:
    std::unordered_set<std::u32string> words_;
    std::size_t max_len_ = 0;
};

using StopwordSet = std::unordered_set<std::string>;

/// One token per line; blank lines skipped; entries stored under normalize_key.
StopwordSet load_stopwords(std::istream& in);
StopwordSet load_stopwords_file(const std::string& path);
bool is_stopword(const StopwordSet& stopwords, std::string_view token);

/// Tokens that survive stopword and invalid-character filtering.
std::vector<std::string> filtered_tokens(std::string_view text, const StopwordSet& stopwords,
                                         const Tokenizer& tokenizer);

/// Segment, drop stopwords and tokens without letters/digits, re-join with single spaces.
std::string filter_stopwords(std::string_view text, const StopwordSet& stopwords,
                             const Tokenizer& tokenizer);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace hykge::text
