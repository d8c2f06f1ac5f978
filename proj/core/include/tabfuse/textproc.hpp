#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tabfuse {

/// Byte span [begin, end) into the text a TokenSeq was produced from.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const Span&) const = default;
};

/// Lowercased unigram stream with byte offsets into the original text.
///
/// Tokens produced by tokenize() never contain whitespace and never start or
/// end with punctuation/symbol characters. Reserved marker tokens ("[sep]",
/// "[max]", "[min]") are only ever inserted by the flattening code.
struct TokenSeq {
    std::vector<std::string> tokens;
    std::vector<Span> offsets;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }

    /// Appends `other`, shifting its offsets by `shift` bytes.
    void append(const TokenSeq& other, std::size_t shift);
    void push_back(std::string token, Span span);

    bool operator==(const TokenSeq&) const = default;
};

TokenSeq tokenize(std::string_view text);

/// Lowercase, drop punctuation/symbols, drop whole-word "a"/"an"/"the",
/// collapse whitespace and trim.
std::string normalize_answer(std::string_view text);

std::size_t count_tokens(std::string_view text);

/// Splits on Unicode whitespace without any other normalization.
std::vector<std::string> split_whitespace(std::string_view text);

/// Unicode simple lowercase of a UTF-8 string.
std::string to_lower(std::string_view text);

/// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end);

namespace markers {
inline constexpr std::string_view kSep = "[sep]";
inline constexpr std::string_view kMax = "[max]";
inline constexpr std::string_view kMin = "[min]";

bool is_marker(std::string_view token) noexcept;
}  // namespace markers

}  // namespace tabfuse
