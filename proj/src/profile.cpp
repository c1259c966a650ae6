#include "labclean/profile.hpp"

#include <algorithm>
#include <chrono>

#include "labclean/cleanse.hpp"
#include "labclean/error.hpp"
#include "labclean/text.hpp"

namespace labclean {

// ---------------------------------------------------------------------------
// describe

void ColumnCounter::add(std::string_view value, const NullVocabulary& nulls) {
    auto t = text::trim(value);
    if (nulls.contains(t)) return;
    add_present(t);
}

void ColumnCounter::add_present(std::string_view value) {
    ++count_;
    auto it = freq_.find(std::string(value));
    if (it == freq_.end())
        freq_.emplace(std::string(value), 1);
    else
        ++it->second;
}

void ColumnCounter::merge(const ColumnCounter& other) {
    count_ += other.count_;
    for (const auto& [v, n] : other.freq_) freq_[v] += n;
}

ColumnSummary ColumnCounter::summary(std::string name) const {
    ColumnSummary s;
    s.name = std::move(name);
    s.count = count_;
    s.distinct = static_cast<std::int64_t>(freq_.size());
    for (const auto& [v, n] : freq_) {
        if (n > s.mode_freq || (n == s.mode_freq && v < s.mode)) {
            s.mode = v;
            s.mode_freq = n;
        }
    }
    return s;
}

std::vector<ColumnSummary> describe(std::span<const std::string> columns,
                                    std::span<const std::vector<std::string>> rows,
                                    const NullVocabulary& nulls) {
    std::vector<ColumnCounter> counters(columns.size());
    for (const auto& row : rows)
        for (std::size_t c = 0; c < columns.size() && c < row.size(); ++c)
            counters[c].add(row[c], nulls);
    std::vector<ColumnSummary> out;
    for (std::size_t c = 0; c < columns.size(); ++c) out.push_back(counters[c].summary(columns[c]));
    return out;
}

// ---------------------------------------------------------------------------
// boxplots

namespace {

double median_of(std::span<const double> sorted) { return sorted_median(sorted); }

}  // namespace

BoxplotStats boxplot_stats(std::span<const double> values, std::string analyte) {
    if (values.empty()) throw EmptyInput("boxplot of an empty sequence");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();

    BoxplotStats s;
    s.analyte = std::move(analyte);
    s.n = static_cast<std::int64_t>(n);
    s.median = median_of(v);
    if (n == 1) {
        s.q1 = s.q3 = s.median;
    } else {
        std::span<const double> all(v);
        s.q1 = median_of(all.subspan(0, n / 2));
        s.q3 = median_of(all.subspan((n + 1) / 2));
    }
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_low = *std::find_if(v.begin(), v.end(), [&](double x) { return x >= lo_fence; });
    s.whisker_high = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= hi_fence; });
    for (double x : v)
        if (x < s.whisker_low || x > s.whisker_high) s.outliers.push_back(x);
    return s;
}

// ---------------------------------------------------------------------------
// period counts and rankings

namespace {

std::vector<PeriodCount> fill_days(const std::map<Date, std::int64_t>& per_day) {
    std::vector<PeriodCount> out;
    if (per_day.empty()) return out;
    using std::chrono::sys_days;
    const sys_days first{per_day.begin()->first};
    const sys_days last{per_day.rbegin()->first};
    for (sys_days d = first; d <= last; d += std::chrono::days{1}) {
        Date date{d};
        auto it = per_day.find(date);
        out.push_back({to_iso(date), it == per_day.end() ? 0 : it->second});
    }
    return out;
}

std::vector<PeriodCount> fill_months(const std::map<Date, std::int64_t>& per_day) {
    std::vector<PeriodCount> out;
    if (per_day.empty()) return out;
    std::map<std::chrono::year_month, std::int64_t> months;
    for (const auto& [d, n] : per_day) months[d.year() / d.month()] += n;
    const auto first = months.begin()->first;
    const auto last = months.rbegin()->first;
    for (auto ym = first; ym <= last; ym += std::chrono::months{1}) {
        auto it = months.find(ym);
        out.push_back({to_month_key(ym / std::chrono::day{1}), it == months.end() ? 0 : it->second});
    }
    return out;
}

std::vector<RankedValue> rank(const std::unordered_map<std::string, std::int64_t>& counts,
                              std::size_t k) {
    std::vector<RankedValue> all;
    all.reserve(counts.size());
    for (const auto& [v, n] : counts) all.push_back({v, n});
    auto better = [](const RankedValue& a, const RankedValue& b) {
        return a.count != b.count ? a.count > b.count : a.value < b.value;
    };
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      better);
    all.resize(keep);
    return all;
}

MonthlyRanking rank_months(
    const std::map<std::string, std::unordered_map<std::string, std::int64_t>>& by_month,
    std::size_t k) {
    MonthlyRanking out;
    for (const auto& [month, counts] : by_month) out[month] = rank(counts, k);
    return out;
}

void add_covid(std::map<std::string, CovidMonth>& months, const std::string& month, CovidStatus s) {
    auto& m = months[month];
    m.month = month;
    switch (s) {
        case CovidStatus::Detected: ++m.detected; break;
        case CovidStatus::NotDetected: ++m.not_detected; break;
        case CovidStatus::Inconclusive: ++m.inconclusive; break;
    }
}

/// Returns the status, or records the label as unmapped when the analyte is covered.
std::optional<CovidStatus> covid_status_of(const TestRecord& t, const CovidVocabulary& vocab,
                                           const ValueParseConfig& values,
                                           std::set<std::string>* unmapped) {
    if (!vocab.covers(t.analyte())) return std::nullopt;
    auto parsed = parse_result(t.raw_result(), values);
    auto status = vocab.classify(t.analyte(), parsed);
    if (!status && unmapped)
        if (const auto* q = std::get_if<Qualitative>(&parsed)) unmapped->insert(q->label);
    return status;
}

}  // namespace

std::vector<PeriodCount> exams_per_period(std::span<const TestRecord> tests, Granularity g) {
    std::map<Date, std::int64_t> per_day;
    for (const auto& t : tests) ++per_day[t.collected_on()];
    return g == Granularity::Day ? fill_days(per_day) : fill_months(per_day);
}

MonthlyRanking top_k_by_month(std::span<const TestRecord> tests, TestField field, std::size_t k) {
    std::map<std::string, std::unordered_map<std::string, std::int64_t>> by_month;
    for (const auto& t : tests)
        ++by_month[to_month_key(t.collected_on())]
                  [field == TestField::Exam ? t.exam() : t.analyte()];
    return rank_months(by_month, k);
}

std::vector<CovidMonth> covid_by_month(std::span<const TestRecord> tests,
                                       const CovidVocabulary& vocab,
                                       std::set<std::string>* unmapped,
                                       const ValueParseConfig& values) {
    std::map<std::string, CovidMonth> months;
    for (const auto& t : tests)
        if (auto s = covid_status_of(t, vocab, values, unmapped))
            add_covid(months, to_month_key(t.collected_on()), *s);
    std::vector<CovidMonth> out;
    for (auto& [m, c] : months) out.push_back(std::move(c));
    return out;
}

SexDistribution sex_distribution(std::span<const PatientRecord> patients) {
    SexDistribution d;
    for (const auto& p : patients) (p.sex() == Sex::F ? d.female : d.male)++;
    const std::int64_t total = d.female + d.male;
    if (total > 0) {
        d.female_pct = Percent2{(20000 * d.female + total) / (2 * total)};
        d.male_pct = Percent2{(20000 * d.male + total) / (2 * total)};
    }
    return d;
}

AgeDistribution age_distribution(std::span<const PatientRecord> patients, int reference_year) {
    AgeDistribution d;
    d.reference_year = reference_year;
    for (const auto& p : patients) {
        if (const int* y = std::get_if<int>(&p.birth_year()))
            ++d.by_age[reference_year - *y];
        else
            ++d.sentinel_90_plus;
    }
    return d;
}

std::string render_birth_year(const BirthYear& y) {
    if (const int* v = std::get_if<int>(&y)) return std::to_string(*v);
    return "AAAA";
}

// ---------------------------------------------------------------------------
// TestsProfiler

TestsProfiler::TestsProfiler(const TestsProfileOptions& options)
    : options_(options), columns_(std::size(kColumns)) {}

void TestsProfiler::add(const TestRecord& t) {
    ++records_;
    const auto& nulls = options_.values.nulls;
    columns_[0].add(t.patient_id(), nulls);
    columns_[1].add_present(to_iso(t.collected_on()));
    columns_[2].add(t.origin(), nulls);
    columns_[3].add(t.exam(), nulls);
    columns_[4].add(t.analyte(), nulls);
    columns_[5].add(t.raw_result(), nulls);
    if (t.unit()) columns_[6].add(*t.unit(), nulls);
    if (t.raw_reference()) columns_[7].add(*t.raw_reference(), nulls);

    ++per_day_[t.collected_on()];
    const auto month = to_month_key(t.collected_on());
    ++exams_by_month_[month][t.exam()];
    ++analytes_by_month_[month][t.analyte()];

    auto parsed = parse_result(t.raw_result(), options_.values);
    if (const auto* n = std::get_if<Numeric>(&parsed)) numeric_[t.analyte()].push_back(n->value);
    if (options_.covid.covers(t.analyte())) {
        if (auto s = options_.covid.classify(t.analyte(), parsed))
            add_covid(covid_, month, *s);
        else if (const auto* q = std::get_if<Qualitative>(&parsed))
            unmapped_.insert(q->label);
    }
}

void TestsProfiler::merge(const TestsProfiler& other) {
    records_ += other.records_;
    for (std::size_t i = 0; i < columns_.size(); ++i) columns_[i].merge(other.columns_[i]);
    for (const auto& [d, n] : other.per_day_) per_day_[d] += n;
    for (const auto& [m, counts] : other.exams_by_month_)
        for (const auto& [v, n] : counts) exams_by_month_[m][v] += n;
    for (const auto& [m, counts] : other.analytes_by_month_)
        for (const auto& [v, n] : counts) analytes_by_month_[m][v] += n;
    for (const auto& [m, c] : other.covid_) {
        auto& mine = covid_[m];
        mine.month = m;
        mine.detected += c.detected;
        mine.not_detected += c.not_detected;
        mine.inconclusive += c.inconclusive;
    }
    unmapped_.insert(other.unmapped_.begin(), other.unmapped_.end());
    for (const auto& [a, vals] : other.numeric_) {
        auto& mine = numeric_[a];
        mine.insert(mine.end(), vals.begin(), vals.end());
    }
}

TestsProfile TestsProfiler::finish() const {
    TestsProfile p;
    p.records = records_;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        p.columns.push_back(columns_[i].summary(std::string(kColumns[i])));
    p.per_day = fill_days(per_day_);
    p.per_month = fill_months(per_day_);
    p.top_exams = rank_months(exams_by_month_, options_.top_k);
    p.top_analytes = rank_months(analytes_by_month_, options_.top_k);
    for (const auto& [m, c] : covid_) p.covid.push_back(c);
    p.unmapped_covid_labels.assign(unmapped_.begin(), unmapped_.end());

    std::unordered_map<std::string, std::int64_t> sizes;
    for (const auto& [a, vals] : numeric_) sizes[a] = static_cast<std::int64_t>(vals.size());
    for (const auto& top : rank(sizes, options_.boxplot_analytes))
        p.boxplots.push_back(boxplot_stats(numeric_.at(top.value), top.value));
    return p;
}

// ---------------------------------------------------------------------------
// PatientsProfiler

PatientsProfiler::PatientsProfiler(int reference_year, const NullVocabulary& nulls)
    : reference_year_(reference_year), nulls_(nulls), columns_(std::size(kColumns)) {}

void PatientsProfiler::add(const PatientRecord& p) {
    ++records_;
    columns_[0].add(p.patient_id(), nulls_);
    columns_[1].add_present(to_string(p.sex()));
    columns_[2].add_present(render_birth_year(p.birth_year()));
    columns_[3].add(p.country(), nulls_);
    columns_[4].add(p.state(), nulls_);
    if (const auto* m = std::get_if<std::string>(&p.municipality()))
        columns_[5].add(*m, nulls_);
    else
        columns_[5].add_present("MMMM");
    if (const auto* c = std::get_if<std::string>(&p.postal_prefix()))
        columns_[6].add(*c, nulls_);
    else
        columns_[6].add_present("CCCC");

    (p.sex() == Sex::F ? female_ : male_)++;
    if (const int* y = std::get_if<int>(&p.birth_year()))
        ++ages_[reference_year_ - *y];
    else
        ++sentinel_;
}

void PatientsProfiler::merge(const PatientsProfiler& other) {
    records_ += other.records_;
    for (std::size_t i = 0; i < columns_.size(); ++i) columns_[i].merge(other.columns_[i]);
    female_ += other.female_;
    male_ += other.male_;
    for (const auto& [a, n] : other.ages_) ages_[a] += n;
    sentinel_ += other.sentinel_;
}

PatientsProfile PatientsProfiler::finish() const {
    PatientsProfile p;
    p.records = records_;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        p.columns.push_back(columns_[i].summary(std::string(kColumns[i])));
    p.sex.female = female_;
    p.sex.male = male_;
    const std::int64_t total = female_ + male_;
    if (total > 0) {
        p.sex.female_pct = Percent2{(20000 * female_ + total) / (2 * total)};
        p.sex.male_pct = Percent2{(20000 * male_ + total) / (2 * total)};
    }
    p.age.reference_year = reference_year_;
    p.age.by_age = ages_;
    p.age.sentinel_90_plus = sentinel_;
    return p;
}

// ---------------------------------------------------------------------------
// OutcomesProfiler

OutcomesProfiler::OutcomesProfiler(const NullVocabulary& nulls) : nulls_(nulls) {}

void OutcomesProfiler::add(const OutcomeRecord& o) {
    ++records_;
    columns_["patient_id"].add(o.patient_id(), nulls_);
    columns_["occurred_on"].add_present(to_iso(o.occurred_on()));
    columns_["description"].add(o.description(), nulls_);
    for (const auto& [k, v] : o.extra()) columns_[k].add(v, nulls_);
    ++per_day_[o.occurred_on()];
}

OutcomesProfile OutcomesProfiler::finish() const {
    OutcomesProfile p;
    p.records = records_;
    for (const auto& [name, c] : columns_) p.columns.push_back(c.summary(name));
    p.per_month = fill_months(per_day_);
    return p;
}

}  // namespace labclean
