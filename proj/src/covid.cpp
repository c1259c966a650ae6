#include "labclean/covid.hpp"

#include <fstream>
#include <sstream>

#include "labclean/error.hpp"
#include "labclean/text.hpp"

namespace labclean {

CovidVocabulary::CovidVocabulary(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (auto& e : entries_) {
        e.analyte_match = text::casefold(text::trim(e.analyte_match));
        e.label = text::casefold(text::trim(e.label));
    }
}

CovidVocabulary CovidVocabulary::einstein_default() {
    std::vector<Entry> entries;
    for (std::string_view analyte : {"covid", "sars-cov"}) {
        entries.push_back({std::string(analyte), "detectado", CovidStatus::Detected});
        entries.push_back({std::string(analyte), "não detectado", CovidStatus::NotDetected});
        entries.push_back({std::string(analyte), "inconclusivo", CovidStatus::Inconclusive});
    }
    return CovidVocabulary(std::move(entries));
}

CovidVocabulary CovidVocabulary::parse(std::string_view content) {
    std::vector<Entry> entries;
    std::istringstream in{std::string(content)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = text::split_record(t, '|');
        if (fields.size() != 3)
            throw ConfigError("covid vocabulary line " + std::to_string(line_no) +
                              ": expected analyte|label|status");
        auto status = parse_covid_status(text::trim(fields[2]));
        if (!status)
            throw ConfigError("covid vocabulary line " + std::to_string(line_no) +
                              ": unknown status '" + fields[2] + "'");
        entries.push_back({fields[0], fields[1], *status});
    }
    return CovidVocabulary(std::move(entries));
}

CovidVocabulary CovidVocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

namespace {

bool analyte_matches(const std::string& pattern, const std::string& folded_analyte) {
    return pattern == "*" || folded_analyte.find(pattern) != std::string::npos;
}

}  // namespace

bool CovidVocabulary::covers(std::string_view analyte) const {
    std::string folded = text::casefold(analyte);
    for (const auto& e : entries_)
        if (analyte_matches(e.analyte_match, folded)) return true;
    return false;
}

std::optional<CovidStatus> CovidVocabulary::classify(std::string_view analyte,
                                                     const ParsedResult& result) const {
    const auto* q = std::get_if<Qualitative>(&result);
    if (!q) return std::nullopt;
    std::string folded = text::casefold(analyte);
    for (const auto& e : entries_)
        if (e.label == q->label && analyte_matches(e.analyte_match, folded)) return e.status;
    return std::nullopt;
}

std::vector<CovidEvent> covid_events(const std::vector<TestRecord>& tests,
                                     const CovidVocabulary& vocab,
                                     const ValueParseConfig& values) {
    std::vector<CovidEvent> out;
    for (const auto& t : tests)
        if (auto s = vocab.classify(t.analyte(), parse_result(t.raw_result(), values)))
            out.push_back({t.patient_id(), t.collected_on(), *s});
    return out;
}

}  // namespace labclean
