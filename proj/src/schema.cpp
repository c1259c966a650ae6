#include "labclean/schema.hpp"

#include <cmath>
#include <cstdio>

#include "labclean/error.hpp"

namespace labclean {

namespace {

bool parse_fixed_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

}  // namespace

std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10) return std::nullopt;
    char sep = s[4];
    if ((sep != '-' && sep != '/') || s[7] != sep) return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_fixed_int(s.substr(0, 4), y) || !parse_fixed_int(s.substr(5, 2), m) ||
        !parse_fixed_int(s.substr(8, 2), d))
        return std::nullopt;
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string to_iso(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

std::string to_month_key(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()));
    return buf;
}

std::string_view to_string(Sex s) { return s == Sex::F ? "F" : "M"; }

PatientRecord PatientRecord::create(std::string patient_id, Sex sex, BirthYear birth_year,
                                    std::string country, std::string state,
                                    Municipality municipality, PostalPrefix postal_prefix,
                                    int reference_year) {
    if (patient_id.empty()) throw ValidationError("patient_id", patient_id, "must not be empty");
    if (const int* y = std::get_if<int>(&birth_year)) {
        if (*y < kEarliestExplicitBirthYear || *y > reference_year)
            throw ValidationError("birth_year", std::to_string(*y),
                                  "must lie in [1931, " + std::to_string(reference_year) +
                                      "]; earlier years arrive as AAAA");
    }
    if (const auto* p = std::get_if<std::string>(&postal_prefix)) {
        if (p->size() != 5 || !all_digits(*p))
            throw ValidationError("postal_prefix", *p, "must be exactly 5 digits or CCCC");
    }
    PatientRecord r;
    r.patient_id_ = std::move(patient_id);
    r.sex_ = sex;
    r.birth_year_ = birth_year;
    r.country_ = std::move(country);
    r.state_ = std::move(state);
    r.municipality_ = std::move(municipality);
    r.postal_prefix_ = std::move(postal_prefix);
    return r;
}

TestRecord TestRecord::create(std::string patient_id, Date collected_on, std::string origin,
                              std::string exam, std::string analyte, std::string raw_result,
                              std::optional<std::string> unit,
                              std::optional<std::string> raw_reference) {
    if (patient_id.empty()) throw ValidationError("patient_id", patient_id, "must not be empty");
    if (!collected_on.ok())
        throw ValidationError("collected_on", to_iso(collected_on), "not a calendar date");
    TestRecord r;
    r.patient_id_ = std::move(patient_id);
    r.collected_on_ = collected_on;
    r.origin_ = std::move(origin);
    r.exam_ = std::move(exam);
    r.analyte_ = std::move(analyte);
    r.raw_result_ = std::move(raw_result);
    r.unit_ = std::move(unit);
    r.raw_reference_ = std::move(raw_reference);
    return r;
}

OutcomeRecord OutcomeRecord::create(std::string patient_id, Date occurred_on,
                                    std::string description,
                                    std::map<std::string, std::string> extra) {
    if (patient_id.empty()) throw ValidationError("patient_id", patient_id, "must not be empty");
    if (!occurred_on.ok())
        throw ValidationError("occurred_on", to_iso(occurred_on), "not a calendar date");
    OutcomeRecord r;
    r.patient_id_ = std::move(patient_id);
    r.occurred_on_ = occurred_on;
    r.description_ = std::move(description);
    r.extra_ = std::move(extra);
    return r;
}

Interval make_interval(double min, double max) {
    if (!std::isfinite(min)) throw ValidationError("min", std::to_string(min), "must be finite");
    if (!std::isfinite(max)) throw ValidationError("max", std::to_string(max), "must be finite");
    if (min > max)
        throw ValidationError("min", std::to_string(min),
                              "exceeds max " + std::to_string(max));
    return Interval{min, max};
}

LabelSet make_label_set(std::set<std::string> labels) {
    if (labels.empty()) throw ValidationError("labels", "", "qualitative set must not be empty");
    return LabelSet{std::move(labels)};
}

std::string Percent2::str() const {
    char buf[32];
    std::int64_t whole = hundredths / 100;
    std::int64_t frac = hundredths % 100;
    if (frac < 0) frac = -frac;
    std::snprintf(buf, sizeof buf, "%s%lld.%02lld", (hundredths < 0 && whole == 0) ? "-" : "",
                  static_cast<long long>(whole), static_cast<long long>(frac));
    return buf;
}

Percent2 reduction_pct(std::int64_t initial, std::int64_t final_count) {
    if (final_count > initial) throw FinalExceedsInitial(initial, final_count);
    if (initial < 0 || final_count < 0)
        throw ValidationError("initial", std::to_string(initial), "counts must be non-negative");
    if (initial == 0) return Percent2{0};
    // 10000 * removed / initial, rounded half-up, in exact integer arithmetic.
    const std::int64_t removed = initial - final_count;
    return Percent2{(20000 * removed + initial) / (2 * initial)};
}

ReductionRow ReductionRow::create(std::string analyte, std::int64_t initial,
                                  std::int64_t numeric_only, std::int64_t not_null,
                                  std::int64_t in_range,
                                  std::optional<std::int64_t> after_std_clip) {
    if (in_range < 0) throw ValidationError("in_range", std::to_string(in_range), "negative count");
    if (numeric_only > initial)
        throw ValidationError("numeric_only", std::to_string(numeric_only), "exceeds initial");
    if (not_null > numeric_only)
        throw ValidationError("not_null", std::to_string(not_null), "exceeds numeric_only");
    if (in_range > not_null)
        throw ValidationError("in_range", std::to_string(in_range), "exceeds not_null");
    if (after_std_clip && (*after_std_clip > in_range || *after_std_clip < 0))
        throw ValidationError("after_std_clip", std::to_string(*after_std_clip),
                              "must lie in [0, in_range]");
    ReductionRow r;
    r.analyte = std::move(analyte);
    r.initial = initial;
    r.numeric_only = numeric_only;
    r.not_null = not_null;
    r.in_range = in_range;
    r.after_std_clip = after_std_clip;
    r.reduction = reduction_pct(initial, r.final_count());
    return r;
}

std::string_view to_string(CovidStatus s) {
    switch (s) {
        case CovidStatus::Detected: return "Detected";
        case CovidStatus::NotDetected: return "NotDetected";
        case CovidStatus::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::optional<CovidStatus> parse_covid_status(std::string_view text) {
    if (text == "Detected") return CovidStatus::Detected;
    if (text == "NotDetected") return CovidStatus::NotDetected;
    if (text == "Inconclusive") return CovidStatus::Inconclusive;
    return std::nullopt;
}

}  // namespace labclean
