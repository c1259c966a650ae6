#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labclean/schema.hpp"
#include "labclean/valueparse.hpp"

namespace labclean {

/// Maps (analyte, qualitative result label) pairs to a COVID status.
///
/// Each entry matches analytes whose case-folded name contains `analyte_match`
/// ("*" matches every analyte) and results whose case-folded label equals
/// `label` exactly. The first matching entry wins.
class CovidVocabulary {
public:
    struct Entry {
        std::string analyte_match;
        std::string label;
        CovidStatus status;
    };

    CovidVocabulary() = default;
    explicit CovidVocabulary(std::vector<Entry> entries);

    /// Labels detectado / não detectado / inconclusivo
    /// for analytes mentioning covid or sars-cov.
    static CovidVocabulary einstein_default();

    /// Pipe-delimited `analyte_match|label|status` lines; '#' starts a comment.
    static CovidVocabulary load(const std::filesystem::path& path);
    static CovidVocabulary parse(std::string_view text);

    /// True when some entry's analyte pattern covers this analyte.
    bool covers(std::string_view analyte) const;

    std::optional<CovidStatus> classify(std::string_view analyte, const ParsedResult& result) const;

    const std::vector<Entry>& entries() const noexcept { return entries_; }

private:
    std::vector<Entry> entries_;
};

/// One event per test whose (analyte, result) the vocabulary maps.
std::vector<CovidEvent> covid_events(const std::vector<TestRecord>& tests,
                                     const CovidVocabulary& vocab,
                                     const ValueParseConfig& values = default_value_config());

}  // namespace labclean
