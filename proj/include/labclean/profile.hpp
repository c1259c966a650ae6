#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "labclean/covid.hpp"
#include "labclean/schema.hpp"
#include "labclean/valueparse.hpp"

namespace labclean {

struct ColumnSummary {
    std::string name;
    std::int64_t count = 0;     // non-missing cells
    std::int64_t distinct = 0;
    std::string mode;           // empty when count == 0
    std::int64_t mode_freq = 0;

    bool operator==(const ColumnSummary&) const = default;
};

/// Frequency table for one column. Missing cells (null vocabulary) are skipped.
class ColumnCounter {
public:
    void add(std::string_view value, const NullVocabulary& nulls);
    void add_present(std::string_view value);
    void merge(const ColumnCounter& other);
    /// Mode ties break towards the lexicographically smallest value.
    ColumnSummary summary(std::string name) const;

private:
    std::unordered_map<std::string, std::int64_t> freq_;
    std::int64_t count_ = 0;
};

/// One summary per column of a string table.
std::vector<ColumnSummary> describe(std::span<const std::string> columns,
                                    std::span<const std::vector<std::string>> rows,
                                    const NullVocabulary& nulls = {});

enum class Granularity { Day, Month };
enum class TestField { Exam, Analyte };

struct PeriodCount {
    std::string period;  // yyyy-MM-dd or yyyy-MM
    std::int64_t count = 0;
    bool operator==(const PeriodCount&) const = default;
};

struct RankedValue {
    std::string value;
    std::int64_t count = 0;
    bool operator==(const RankedValue&) const = default;
};

using MonthlyRanking = std::map<std::string, std::vector<RankedValue>>;

struct CovidMonth {
    std::string month;
    std::int64_t detected = 0;
    std::int64_t not_detected = 0;
    std::int64_t inconclusive = 0;
    bool operator==(const CovidMonth&) const = default;
};

struct BoxplotStats {
    std::string analyte;
    double q1 = 0, median = 0, q3 = 0;
    double whisker_low = 0, whisker_high = 0;
    std::vector<double> outliers;  // ascending
    std::int64_t n = 0;

    bool operator==(const BoxplotStats&) const = default;
};

/// Quartiles by median-of-halves (the median itself is excluded from both
/// halves when n is odd); whiskers at the most extreme points within 1.5 IQR
/// of the quartiles. Throws EmptyInput.
BoxplotStats boxplot_stats(std::span<const double> values, std::string analyte = {});

/// Buckets are contiguous from the first to the last date, zero-filled.
std::vector<PeriodCount> exams_per_period(std::span<const TestRecord> tests, Granularity g);

/// Per month, at most `k` values by descending count, ties in lexicographic order.
MonthlyRanking top_k_by_month(std::span<const TestRecord> tests, TestField field, std::size_t k);

/// Only tests whose (analyte, qualitative label) the vocabulary maps contribute.
/// Labels of covered analytes that the vocabulary does not map land in `unmapped`.
std::vector<CovidMonth> covid_by_month(std::span<const TestRecord> tests,
                                       const CovidVocabulary& vocab,
                                       std::set<std::string>* unmapped = nullptr,
                                       const ValueParseConfig& values = default_value_config());

struct SexDistribution {
    std::int64_t female = 0;
    std::int64_t male = 0;
    Percent2 female_pct;
    Percent2 male_pct;
    bool operator==(const SexDistribution&) const = default;
};

SexDistribution sex_distribution(std::span<const PatientRecord> patients);

struct AgeDistribution {
    int reference_year = kDefaultReferenceYear;
    std::map<int, std::int64_t> by_age;  // one-year buckets
    std::int64_t sentinel_90_plus = 0;   // AAAA birth years
    bool operator==(const AgeDistribution&) const = default;
};

AgeDistribution age_distribution(std::span<const PatientRecord> patients, int reference_year);

// ---------------------------------------------------------------------------
// Streaming profilers. Each is a fold with an associative, commutative merge,
// so shards may be profiled independently and combined in any order.

struct TestsProfile {
    std::vector<ColumnSummary> columns;
    std::vector<PeriodCount> per_day;
    std::vector<PeriodCount> per_month;
    MonthlyRanking top_exams;
    MonthlyRanking top_analytes;
    std::vector<CovidMonth> covid;
    std::vector<std::string> unmapped_covid_labels;
    std::vector<BoxplotStats> boxplots;  // most frequent numeric analytes
    std::int64_t records = 0;

    bool operator==(const TestsProfile&) const = default;
};

struct TestsProfileOptions {
    std::size_t top_k = 20;
    std::size_t boxplot_analytes = 14;
    CovidVocabulary covid = CovidVocabulary::einstein_default();
    ValueParseConfig values;
};

class TestsProfiler {
public:
    explicit TestsProfiler(const TestsProfileOptions& options);

    void add(const TestRecord& t);
    void merge(const TestsProfiler& other);
    TestsProfile finish() const;

    static constexpr std::string_view kColumns[] = {"patient_id", "collected_on", "origin",
                                                    "exam",       "analyte",      "raw_result",
                                                    "unit",       "raw_reference"};

private:
    TestsProfileOptions options_;
    std::vector<ColumnCounter> columns_;
    std::map<Date, std::int64_t> per_day_;
    std::map<std::string, std::unordered_map<std::string, std::int64_t>> exams_by_month_;
    std::map<std::string, std::unordered_map<std::string, std::int64_t>> analytes_by_month_;
    std::map<std::string, CovidMonth> covid_;
    std::set<std::string> unmapped_;
    std::map<std::string, std::vector<double>> numeric_;
    std::int64_t records_ = 0;
};

struct PatientsProfile {
    std::vector<ColumnSummary> columns;
    SexDistribution sex;
    AgeDistribution age;
    std::int64_t records = 0;

    bool operator==(const PatientsProfile&) const = default;
};

class PatientsProfiler {
public:
    PatientsProfiler(int reference_year, const NullVocabulary& nulls = {});

    void add(const PatientRecord& p);
    void merge(const PatientsProfiler& other);
    PatientsProfile finish() const;

    static constexpr std::string_view kColumns[] = {"patient_id", "sex",          "birth_year",
                                                    "country",    "state",        "municipality",
                                                    "postal_prefix"};

private:
    int reference_year_;
    NullVocabulary nulls_;
    std::vector<ColumnCounter> columns_;
    std::int64_t female_ = 0;
    std::int64_t male_ = 0;
    std::map<int, std::int64_t> ages_;
    std::int64_t sentinel_ = 0;
    std::int64_t records_ = 0;
};

struct OutcomesProfile {
    std::vector<ColumnSummary> columns;
    std::vector<PeriodCount> per_month;
    std::int64_t records = 0;

    bool operator==(const OutcomesProfile&) const = default;
};

class OutcomesProfiler {
public:
    explicit OutcomesProfiler(const NullVocabulary& nulls = {});
    void add(const OutcomeRecord& o);
    OutcomesProfile finish() const;

private:
    NullVocabulary nulls_;
    std::map<std::string, ColumnCounter> columns_;
    std::map<Date, std::int64_t> per_day_;
    std::int64_t records_ = 0;
};

/// Birth year rendering shared by describe and serializers ("AAAA" for the sentinel).
std::string render_birth_year(const BirthYear& y);

}  // namespace labclean
