#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

namespace labclean {

// ---------------------------------------------------------------------------
// Dates

using Date = std::chrono::year_month_day;

/// Accepts yyyy/MM/dd and yyyy-MM-dd (a single separator style per string).
/// Returns nullopt for anything else, including impossible calendar dates.
std::optional<Date> parse_date(std::string_view text);

/// yyyy-MM-dd
std::string to_iso(Date d);

/// yyyy-MM
std::string to_month_key(Date d);

// ---------------------------------------------------------------------------
// Patient dataset

enum class Sex { F, M };

std::string_view to_string(Sex s);

struct SentinelAAAA {
    auto operator<=>(const SentinelAAAA&) const = default;
};
struct SentinelMMMM {
    auto operator<=>(const SentinelMMMM&) const = default;
};
struct SentinelCCCC {
    auto operator<=>(const SentinelCCCC&) const = default;
};

/// Numeric birth year, or AAAA for anyone born in 1930 or earlier.
using BirthYear = std::variant<int, SentinelAAAA>;
using Municipality = std::variant<std::string, SentinelMMMM>;
using PostalPrefix = std::variant<std::string, SentinelCCCC>;

inline constexpr int kEarliestExplicitBirthYear = 1931;
inline constexpr int kDefaultReferenceYear = 2020;

class PatientRecord {
public:
    /// Throws ValidationError naming the offending field.
    static PatientRecord create(std::string patient_id, Sex sex, BirthYear birth_year,
                                std::string country, std::string state,
                                Municipality municipality, PostalPrefix postal_prefix,
                                int reference_year = kDefaultReferenceYear);

    const std::string& patient_id() const noexcept { return patient_id_; }
    Sex sex() const noexcept { return sex_; }
    const BirthYear& birth_year() const noexcept { return birth_year_; }
    const std::string& country() const noexcept { return country_; }
    const std::string& state() const noexcept { return state_; }
    const Municipality& municipality() const noexcept { return municipality_; }
    const PostalPrefix& postal_prefix() const noexcept { return postal_prefix_; }

    bool operator==(const PatientRecord&) const = default;

private:
    PatientRecord() = default;

    std::string patient_id_;
    Sex sex_ = Sex::F;
    BirthYear birth_year_;
    std::string country_;
    std::string state_;
    Municipality municipality_;
    PostalPrefix postal_prefix_;
};

// ---------------------------------------------------------------------------
// Tests dataset

class TestRecord {
public:
    /// `unit` and `raw_reference` are nullopt when the source cell was empty.
    static TestRecord create(std::string patient_id, Date collected_on, std::string origin,
                             std::string exam, std::string analyte, std::string raw_result,
                             std::optional<std::string> unit,
                             std::optional<std::string> raw_reference);

    const std::string& patient_id() const noexcept { return patient_id_; }
    Date collected_on() const noexcept { return collected_on_; }
    const std::string& origin() const noexcept { return origin_; }
    const std::string& exam() const noexcept { return exam_; }
    const std::string& analyte() const noexcept { return analyte_; }
    const std::string& raw_result() const noexcept { return raw_result_; }
    const std::optional<std::string>& unit() const noexcept { return unit_; }
    const std::optional<std::string>& raw_reference() const noexcept { return raw_reference_; }

    bool operator==(const TestRecord&) const = default;

private:
    TestRecord() = default;

    std::string patient_id_;
    Date collected_on_{};
    std::string origin_;
    std::string exam_;
    std::string analyte_;
    std::string raw_result_;
    std::optional<std::string> unit_;
    std::optional<std::string> raw_reference_;
};

// ---------------------------------------------------------------------------
// Outcome dataset. Only id, date and description are known; anything else
// in the source file rides along in `extra`.

class OutcomeRecord {
public:
    static OutcomeRecord create(std::string patient_id, Date occurred_on, std::string description,
                                std::map<std::string, std::string> extra = {});

    const std::string& patient_id() const noexcept { return patient_id_; }
    Date occurred_on() const noexcept { return occurred_on_; }
    const std::string& description() const noexcept { return description_; }
    const std::map<std::string, std::string>& extra() const noexcept { return extra_; }

    bool operator==(const OutcomeRecord&) const = default;

private:
    OutcomeRecord() = default;

    std::string patient_id_;
    Date occurred_on_{};
    std::string description_;
    std::map<std::string, std::string> extra_;
};

// ---------------------------------------------------------------------------
// Parsed result values

enum class Bound { Below, Above };

struct Numeric {
    double value = 0.0;
    bool operator==(const Numeric&) const = default;
};
struct Qualitative {
    std::string label;
    bool operator==(const Qualitative&) const = default;
};
struct Censored {
    Bound direction = Bound::Below;
    double bound = 0.0;
    bool operator==(const Censored&) const = default;
};
struct Missing {
    bool operator==(const Missing&) const = default;
};

using ParsedResult = std::variant<Numeric, Qualitative, Censored, Missing>;

// ---------------------------------------------------------------------------
// Reference ranges

struct Interval {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const Interval&) const = default;
};
struct LowerOnly {
    double min = 0.0;
    bool operator==(const LowerOnly&) const = default;
};
struct UpperOnly {
    double max = 0.0;
    bool operator==(const UpperOnly&) const = default;
};
struct LabelSet {
    std::set<std::string> labels;
    bool operator==(const LabelSet&) const = default;
};
struct NoRange {
    bool operator==(const NoRange&) const = default;
};

using ReferenceRange = std::variant<Interval, LowerOnly, UpperOnly, LabelSet, NoRange>;

/// Validating constructors; Interval requires min <= max, LabelSet a non-empty set.
Interval make_interval(double min, double max);
LabelSet make_label_set(std::set<std::string> labels);

// ---------------------------------------------------------------------------
// Reduction accounting

/// A percentage held as an exact count of hundredths (75.30 -> 7530).
struct Percent2 {
    std::int64_t hundredths = 0;

    double value() const noexcept { return static_cast<double>(hundredths) / 100.0; }
    std::string str() const;

    auto operator<=>(const Percent2&) const = default;
};

/// round_half_up(100 * (initial - final) / initial, 2); 0.00 when initial is 0.
/// Throws FinalExceedsInitial.
Percent2 reduction_pct(std::int64_t initial, std::int64_t final_count);

struct ReductionRow {
    std::string analyte;
    std::int64_t initial = 0;
    std::int64_t numeric_only = 0;
    std::int64_t not_null = 0;
    std::int64_t in_range = 0;
    /// Present only when the optional std-clip stage ran.
    std::optional<std::int64_t> after_std_clip;
    Percent2 reduction;

    /// Checks stage monotonicity and derives `reduction` from the last stage.
    static ReductionRow create(std::string analyte, std::int64_t initial,
                               std::int64_t numeric_only, std::int64_t not_null,
                               std::int64_t in_range,
                               std::optional<std::int64_t> after_std_clip = std::nullopt);

    std::int64_t final_count() const noexcept { return after_std_clip.value_or(in_range); }

    bool operator==(const ReductionRow&) const = default;
};

// ---------------------------------------------------------------------------
// COVID events

enum class CovidStatus { Detected, NotDetected, Inconclusive };

std::string_view to_string(CovidStatus s);
std::optional<CovidStatus> parse_covid_status(std::string_view text);

struct CovidEvent {
    std::string patient_id;
    Date date{};
    CovidStatus status = CovidStatus::Detected;

    bool operator==(const CovidEvent&) const = default;
};

}  // namespace labclean
