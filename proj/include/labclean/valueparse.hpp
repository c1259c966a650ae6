#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labclean/schema.hpp"

namespace labclean {

/// Case-insensitive tokens that mean "no value". Always contains "", "nan"
/// and "null" regardless of what the caller supplies.
class NullVocabulary {
public:
    NullVocabulary();
    explicit NullVocabulary(const std::vector<std::string>& tokens);

    bool contains(std::string_view trimmed) const;
    const std::set<std::string, std::less<>>& tokens() const noexcept { return tokens_; }

private:
    std::set<std::string, std::less<>> tokens_;
};

struct ValueParseConfig {
    NullVocabulary nulls;
    /// Separators between qualitative labels in a reference expression.
    std::vector<std::string> label_separators{"/", " ou "};
};

const ValueParseConfig& default_value_config();

/// Decimal with "." or a single "," between digits (and no "."), optional sign,
/// no exponent. Returns nullopt for anything else.
std::optional<double> parse_decimal(std::string_view text);

ParsedResult parse_result(std::string_view raw, const ValueParseConfig& cfg = default_value_config());

struct ReferenceParse {
    ReferenceRange range = NoRange{};
    /// The text was present and not a null token, but matched no grammar rule.
    bool miss = false;
    /// An interval arrived reversed (A > B) and was swapped.
    bool swapped = false;
};

ReferenceParse parse_reference_detailed(const std::optional<std::string_view>& raw,
                                        const ValueParseConfig& cfg = default_value_config());

inline ReferenceRange parse_reference(const std::optional<std::string_view>& raw,
                                      const ValueParseConfig& cfg = default_value_config()) {
    return parse_reference_detailed(raw, cfg).range;
}

/// Envelope over every numeric bound in `ranges`: lowest lower bound and
/// highest upper bound. LabelSet and NoRange contribute nothing.
ReferenceRange merge_references(std::span<const ReferenceRange> ranges);

/// Text that parses back to the same value.
std::string render(const ParsedResult& v);
std::string render(const ReferenceRange& r);

/// Fixed-notation decimal text that round-trips, always with "." as separator.
std::string format_number(double v);

}  // namespace labclean
