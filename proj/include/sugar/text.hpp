#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sugar {

/// SQuAD-style answer normalization: lowercase, drop ASCII punctuation,
/// drop the articles "a", "an", "the" as whole words, collapse whitespace.
std::string normalize_answer(std::string_view s);

/// Whitespace tokens of `normalize_answer(s)`.
std::vector<std::string> normalized_tokens(std::string_view s);

/// Retrieval tokenizer: lowercase and split on every non-alphanumeric ASCII
/// character. Bytes >= 0x80 are kept inside tokens so UTF-8 words survive.
std::vector<std::string> tokenize(std::string_view s);

/// True iff `needle` occurs as a contiguous run inside `haystack`. An empty
/// needle never matches.
bool contains_token_run(std::span<const std::string> haystack, std::span<const std::string> needle);

/// Trim ASCII whitespace from both ends.
std::string_view trim(std::string_view s) noexcept;

/// 64-bit FNV-1a, used to derive stable seeds from identifiers.
std::uint64_t fnv1a(std::string_view s) noexcept;

}  // namespace sugar
