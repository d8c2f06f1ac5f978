#include "tabfuse/textproc.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <array>

namespace tabfuse {

namespace {

struct CodePoint {
    UChar32 value;  // negative for an ill-formed byte sequence
    std::size_t begin;
    std::size_t end;
};

std::vector<CodePoint> decode(std::string_view text) {
    std::vector<CodePoint> out;
    out.reserve(text.size());
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < length) {
        const int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(s, i, length, c);
        out.push_back({c, static_cast<std::size_t>(start), static_cast<std::size_t>(i)});
    }
    return out;
}

bool is_space(UChar32 c) { return c >= 0 && u_isUWhiteSpace(c); }

// Unicode general categories P* and S*.
bool is_punct_or_symbol(UChar32 c) {
    if (c < 0) return false;
    switch (u_charType(c)) {
        case U_DASH_PUNCTUATION:
        case U_START_PUNCTUATION:
        case U_END_PUNCTUATION:
        case U_CONNECTOR_PUNCTUATION:
        case U_OTHER_PUNCTUATION:
        case U_INITIAL_PUNCTUATION:
        case U_FINAL_PUNCTUATION:
        case U_MATH_SYMBOL:
        case U_CURRENCY_SYMBOL:
        case U_MODIFIER_SYMBOL:
        case U_OTHER_SYMBOL:
            return true;
        default:
            return false;
    }
}

void append_lower(std::string& out, std::string_view text, const CodePoint& cp) {
    if (cp.value < 0) {
        out.append(text.substr(cp.begin, cp.end - cp.begin));
        return;
    }
    const UChar32 lower = u_tolower(cp.value);
    std::array<uint8_t, U8_MAX_LENGTH> buf{};
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf.data(), n, U8_MAX_LENGTH, lower, error);
    if (error) {
        out.append(text.substr(cp.begin, cp.end - cp.begin));
        return;
    }
    out.append(reinterpret_cast<const char*>(buf.data()), static_cast<std::size_t>(n));
}

}  // namespace

void TokenSeq::append(const TokenSeq& other, std::size_t shift) {
    tokens.insert(tokens.end(), other.tokens.begin(), other.tokens.end());
    offsets.reserve(offsets.size() + other.offsets.size());
    for (const auto& span : other.offsets) {
        offsets.push_back({span.begin + shift, span.end + shift});
    }
}

void TokenSeq::push_back(std::string token, Span span) {
    tokens.push_back(std::move(token));
    offsets.push_back(span);
}

TokenSeq tokenize(std::string_view text) {
    TokenSeq seq;
    const auto cps = decode(text);
    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && is_space(cps[i].value)) ++i;
        std::size_t j = i;
        while (j < cps.size() && !is_space(cps[j].value)) ++j;
        // raw token is cps[i, j); strip punctuation at both ends
        std::size_t lo = i;
        std::size_t hi = j;
        while (lo < hi && is_punct_or_symbol(cps[lo].value)) ++lo;
        while (hi > lo && is_punct_or_symbol(cps[hi - 1].value)) --hi;
        if (lo < hi) {
            std::string token;
            for (std::size_t k = lo; k < hi; ++k) append_lower(token, text, cps[k]);
            seq.push_back(std::move(token), {cps[lo].begin, cps[hi - 1].end});
        }
        i = j;
    }
    return seq;
}

std::string to_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const auto& cp : decode(text)) append_lower(out, text, cp);
    return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (const auto& cp : decode(text)) {
        if (is_space(cp.value)) {
            if (!current.empty()) words.push_back(std::move(current));
            current.clear();
        } else {
            current.append(text.substr(cp.begin, cp.end - cp.begin));
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::string normalize_answer(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    for (const auto& cp : decode(text)) {
        if (is_punct_or_symbol(cp.value)) continue;
        append_lower(stripped, text, cp);
    }
    std::string out;
    for (auto& word : split_whitespace(stripped)) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

std::size_t count_tokens(std::string_view text) { return tokenize(text).size(); }

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end && i < tokens.size(); ++i) {
        if (i > begin) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

namespace markers {
bool is_marker(std::string_view token) noexcept {
    return token == kSep || token == kMax || token == kMin;
}
}  // namespace markers

}  // namespace tabfuse
