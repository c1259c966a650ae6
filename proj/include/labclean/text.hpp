#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace labclean::text {

std::string_view trim(std::string_view s);

/// Lowercases ASCII and the Latin-1 supplement capitals (À..Þ) in UTF-8 text.
/// Accents are kept: "NÃO" is not produced, "NÃO" -> "não".
std::string casefold(std::string_view s);

/// Offset of the first byte that breaks UTF-8 well-formedness, or nullopt.
std::optional<std::size_t> find_invalid_utf8(std::string_view bytes);

/// Every byte is taken as its own code point and re-encoded as UTF-8.
std::string latin1_to_utf8(std::string_view bytes);

/// Inverse of latin1_to_utf8. nullopt if any code point is above U+00FF
/// or the input is not well-formed UTF-8.
std::optional<std::string> utf8_to_latin1(std::string_view utf8);

/// True when the text holds a UTF-8-read-as-Latin-1 signature such as
/// "Ã©", "Ã§" or "Ã£".
bool has_mojibake(std::string_view utf8);

/// Reverses one round of double encoding where that yields valid UTF-8;
/// otherwise returns the input unchanged.
std::string fix_mojibake(std::string_view utf8);

/// Splits one logical CSV record. Double quotes delimit fields that contain
/// the delimiter; "" inside a quoted field is a literal quote.
std::vector<std::string> split_record(std::string_view line, char delimiter);

/// True while a record still has an unterminated quoted field.
bool has_open_quote(std::string_view line, char delimiter);

/// Quotes a field for output when it holds the delimiter, a quote or a line break.
std::string quote_field(std::string_view field, char delimiter);

std::string join_record(const std::vector<std::string>& fields, char delimiter);

}  // namespace labclean::text
