#include "hykge/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "hykge/error.hpp"
#include "hykge/hash.hpp"

namespace hykge {

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace hykge

namespace hykge::text {
namespace {

const icu::Normalizer2& nfc_normalizer() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *n;
}

bool is_ascii(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

}  // namespace

std::string nfc(std::string_view s) {
    if (is_ascii(s)) {
        return std::string(s);
    }
    const auto& norm = nfc_normalizer();
    UErrorCode status = U_ZERO_ERROR;
    auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    if (norm.isNormalized(u, status) && U_SUCCESS(status)) {
        return std::string(s);
    }
    status = U_ZERO_ERROR;
    icu::UnicodeString out = norm.normalize(u, status);
    if (U_FAILURE(status)) {
        return std::string(s);
    }
    std::string r;
    out.toUTF8String(r);
    return r;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

bool is_alnum(char32_t c) { return u_isalnum(static_cast<UChar32>(c)) != 0; }

bool is_ideograph(char32_t c) { return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_IDEOGRAPHIC) != 0; }

std::u32string to_u32(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    int32_t i = 0;
    const auto len = static_cast<int32_t>(s.size());
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    while (i < len) {
        UChar32 c;
        U8_NEXT(p, i, len, c);
        out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
    }
    return out;
}

std::string to_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t c : s) {
        uint8_t buf[4];
        int32_t n = 0;
        UBool err = false;
        U8_APPEND(buf, n, 4, static_cast<UChar32>(c), err);
        if (err) {
            out += "\xEF\xBF\xBD";
        } else {
            out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
        }
    }
    return out;
}

std::string trim(std::string_view s) {
    if (is_ascii(s)) {
        constexpr std::string_view ws = " \t\n\r\f\v";
        auto b = s.find_first_not_of(ws);
        if (b == std::string_view::npos) return {};
        return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
    }
    auto u = to_u32(s);
    std::size_t b = 0, e = u.size();
    while (b < e && is_space(u[b])) ++b;
    while (e > b && is_space(u[e - 1])) --e;
    if (b == 0 && e == u.size()) {
        return std::string(s);
    }
    return to_utf8(std::u32string_view(u).substr(b, e - b));
}

std::string fold_case(std::string_view s) {
    if (is_ascii(s)) {
        std::string r(s);
        std::transform(r.begin(), r.end(), r.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return r;
    }
    auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u.foldCase();
    std::string r;
    u.toUTF8String(r);
    return r;
}

std::string normalize_name(std::string_view s) { return trim(nfc(s)); }

std::string normalize_key(std::string_view s) { return fold_case(normalize_name(s)); }

bool is_content_token(std::string_view token) {
    for (char32_t c : to_u32(token)) {
        if (is_alnum(c)) return true;
    }
    return false;
}

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> out;
    auto u = to_u32(text);
    std::size_t i = 0;
    while (i < u.size()) {
        while (i < u.size() && is_space(u[i])) ++i;
        std::size_t start = i;
        while (i < u.size() && !is_space(u[i])) ++i;
        if (i > start) {
            out.push_back(to_utf8(std::u32string_view(u).substr(start, i - start)));
        }
    }
    return out;
}

DictionarySegmenter::DictionarySegmenter(const std::vector<std::string>& words) {
    for (const auto& w : words) {
        auto u = to_u32(normalize_name(w));
        if (u.empty()) continue;
        max_len_ = std::max(max_len_, u.size());
        words_.insert(std::move(u));
    }
}

std::vector<std::string> DictionarySegmenter::tokenize(std::string_view text) const {
    std::vector<std::string> out;
    auto u = to_u32(nfc(text));
    const std::u32string_view view(u);
    std::size_t i = 0;
    while (i < u.size()) {
        if (is_space(u[i])) {
            ++i;
            continue;
        }
        std::size_t best = 0;
        const std::size_t limit = std::min(max_len_, u.size() - i);
        for (std::size_t len = limit; len >= 1; --len) {
            if (words_.count(std::u32string(view.substr(i, len)))) {
                best = len;
                break;
            }
        }
        if (best == 0) {
            if (is_alnum(u[i]) && !is_ideograph(u[i])) {
                best = 1;
                while (i + best < u.size() && is_alnum(u[i + best]) && !is_ideograph(u[i + best])) ++best;
            } else {
                best = 1;
            }
        }
        out.push_back(to_utf8(view.substr(i, best)));
        i += best;
    }
    return out;
}

StopwordSet load_stopwords(std::istream& in) {
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        auto key = normalize_key(line);
        if (!key.empty()) out.insert(std::move(key));
    }
    return out;
}

StopwordSet load_stopwords_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError(path, 0, "cannot open stopword file");
    }
    return load_stopwords(in);
}

bool is_stopword(const StopwordSet& stopwords, std::string_view token) {
    return !stopwords.empty() && stopwords.count(normalize_key(token)) > 0;
}

std::vector<std::string> filtered_tokens(std::string_view text, const StopwordSet& stopwords,
                                         const Tokenizer& tokenizer) {
    std::vector<std::string> out;
    for (auto& tok : tokenizer.tokenize(text)) {
        if (!is_content_token(tok) || is_stopword(stopwords, tok)) continue;
        out.push_back(std::move(tok));
    }
    return out;
}

std::string filter_stopwords(std::string_view text, const StopwordSet& stopwords, const Tokenizer& tokenizer) {
    return join(filtered_tokens(text, stopwords, tokenizer), " ");
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace hykge::text
