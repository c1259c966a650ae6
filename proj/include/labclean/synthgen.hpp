#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "labclean/ingest.hpp"
#include "labclean/profile.hpp"
#include "labclean/schema.hpp"

namespace labclean {

/// One analyte of the synthetic catalog. Rates are fractions of the analyte's rows;
/// each dirt kind is planted on exactly floor(rate * rows) rows.
struct AnalyteSpec {
    std::string name;
    std::string exam;
    std::string unit;
    double low = 0;
    double high = 1;
    double weight = 1;
    double null_rate = 0;
    double non_numeric_rate = 0;
    double censored_rate = 0;
    double outlier_rate = 0;
    double missing_reference_rate = 0;
    /// Rows whose exam text is written double-encoded; the exam must hold a non-ASCII letter.
    double mojibake_rate = 0;
    /// Every row carries a null reference, so the analyte has no envelope.
    bool reference_absent = false;
    /// Outliers sit up to this many range widths outside the range.
    double outlier_multiple = 1.0;
};

struct SynthSpec {
    std::uint64_t seed = 1;
    std::int64_t n_patients = 100;
    std::int64_t n_tests = 1000;
    Date start{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}};
    Date end{std::chrono::year{2020}, std::chrono::month{6}, std::chrono::day{30}};
    char delimiter = '|';
    /// Encoding of the tests file. The patients file is always UTF-8.
    Encoding encoding = Encoding::Utf8;
    double female_fraction = 0.5;
    double aaaa_rate = 0;
    /// Extra unparseable rows, counted inside n_tests.
    double malformed_rate = 0;
    /// COVID PCR rows, counted inside n_tests.
    std::int64_t covid_tests = 0;
    double covid_detected_rate = 0;
    double covid_inconclusive_rate = 0;
    std::vector<AnalyteSpec> analytes;

    /// Throws InvalidSpec.
    void validate() const;
};

inline constexpr std::string_view kSynthCovidAnalyte = "COVID-19, Detecção por PCR";
inline constexpr std::string_view kSynthCovidExam = "Detecção de COVID-19";

/// Catalog of common lab analytes with plausible adult ranges and dirt rates
/// tuned to fixed target stage proportions.
std::vector<AnalyteSpec> default_catalog();

/// Scale presets: "einstein", "fleury", "sl", "small". Throws InvalidSpec for other names.
SynthSpec synth_preset(std::string_view name);

/// Flat `key = value` settings plus `[[analyte]]` tables. A `preset` key seeds the
/// defaults; any `[[analyte]]` table replaces the whole catalog. Throws InvalidSpec.
SynthSpec parse_synth_spec(std::string_view text);
SynthSpec load_synth_spec(const std::filesystem::path& path);

/// Ground truth for a generated corpus.
struct Manifest {
    std::uint64_t seed = 0;
    std::string spec_hash;
    std::int64_t patient_rows = 0;
    std::int64_t test_rows = 0;
    /// Quarantine reason -> planted count.
    std::map<std::string, std::int64_t> malformed;
    /// Rows expected to carry a double-encoding signature once ingested.
    std::int64_t mojibake_rows = 0;
    Encoding tests_encoding = Encoding::Utf8;
    /// Expected pipeline stage counts, sorted by analyte.
    std::vector<ReductionRow> expected;
    std::map<std::string, std::int64_t> tests_per_day;
    std::map<std::string, std::int64_t> tests_per_month;
    std::map<std::string, std::map<std::string, std::int64_t>> exams_per_month;
    std::map<std::string, std::map<std::string, std::int64_t>> analytes_per_month;
    std::map<std::string, CovidMonth> covid_per_month;
    std::int64_t female = 0;
    std::int64_t male = 0;
    std::int64_t aaaa = 0;
    std::map<int, std::int64_t> birth_years;

    std::int64_t malformed_total() const;
    std::int64_t valid_test_rows() const { return test_rows - malformed_total(); }
};

nlohmann::ordered_json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

struct SynthOutput {
    std::filesystem::path patients;
    std::filesystem::path tests;
    std::filesystem::path manifest_path;
    /// line_no,label for every data line of the tests file.
    std::filesystem::path labels;
    Manifest manifest;
};

/// Writes patients.csv, tests.csv, manifest.json and labels.csv into `out_dir`.
/// The same spec gives byte-identical files. Throws InvalidSpec or IoError.
SynthOutput generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Canonical text of a spec; its hash identifies the corpus.
std::string canonical_spec_text(const SynthSpec& spec);

}  // namespace labclean
