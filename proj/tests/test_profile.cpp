#include "doctest.h"

#include <algorithm>
#include <random>

#include "labclean/error.hpp"
#include "labclean/profile.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace labclean;
using testsupport::make_test;
using testsupport::ymd;

namespace {

PatientRecord patient(const std::string& id, Sex s, BirthYear y) {
    return PatientRecord::create(id, s, y, "BR", "SP", SentinelMMMM{}, SentinelCCCC{});
}

TestRecord dated(const std::string& exam, const std::string& analyte, Date d, const std::string& result = "1") {
    return make_test(analyte, result, std::nullopt, "P1", d, exam);
}

}  // namespace

TEST_CASE("describe counts non-missing cells and breaks mode ties lexicographically") {
    const std::vector<std::string> cols{"a", "b"};
    const std::vector<std::vector<std::string>> rows{{"x", "nan"}, {"y", "NULL"}, {"y", ""}, {"x", "k"}};
    const auto s = describe(cols, rows);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == ColumnSummary{"a", 4, 2, "x", 2});
    CHECK(s[1] == ColumnSummary{"b", 1, 1, "k", 1});
    const std::vector<std::vector<std::string>> none;
    CHECK(describe(cols, none)[0] == ColumnSummary{"a", 0, 0, "", 0});
}

TEST_CASE("sex distribution") {
    const std::vector<PatientRecord> half{patient("a", Sex::F, 1980), patient("b", Sex::M, 1990)};
    const auto d = sex_distribution(half);
    CHECK(d.female == 1);
    CHECK(d.male == 1);
    CHECK(d.female_pct.str() == "50.00");
    CHECK(d.male_pct.str() == "50.00");
    const auto empty = sex_distribution(std::vector<PatientRecord>{});
    CHECK(empty.female_pct.str() == "0.00");
    const std::vector<PatientRecord> thirds{patient("a", Sex::F, 1980), patient("b", Sex::F, 1990),
                                            patient("c", Sex::M, 1990)};
    CHECK(sex_distribution(thirds).female_pct.str() == "66.67");
}

TEST_CASE("age distribution counts the AAAA sentinel apart") {
    const std::vector<PatientRecord> ps{patient("a", Sex::F, 1959), patient("b", Sex::M, SentinelAAAA{}),
                                        patient("c", Sex::M, 1959), patient("d", Sex::F, 2020)};
    const auto d = age_distribution(ps, 2020);
    CHECK(d.by_age.at(61) == 2);
    CHECK(d.by_age.at(0) == 1);
    CHECK(d.sentinel_90_plus == 1);
    CHECK(d.by_age.size() == 2);
    CHECK(render_birth_year(SentinelAAAA{}) == "AAAA");
    CHECK(render_birth_year(1959) == "1959");
}

TEST_CASE("period counts are contiguous and zero-filled") {
    const std::vector<TestRecord> ts{dated("e", "a", ymd(2020, 1, 30)), dated("e", "a", ymd(2020, 2, 2)),
                                     dated("e", "a", ymd(2020, 2, 2)), dated("e", "a", ymd(2020, 6, 15))};
    const auto days = exams_per_period(ts, Granularity::Day);
    CHECK(days.front() == PeriodCount{"2020-01-30", 1});
    CHECK(days[1] == PeriodCount{"2020-01-31", 0});
    CHECK(days[3] == PeriodCount{"2020-02-02", 2});
    CHECK(days.back() == PeriodCount{"2020-06-15", 1});
    CHECK(days.size() == 138);
    const auto months = exams_per_period(ts, Granularity::Month);
    CHECK(months == std::vector<PeriodCount>{{"2020-01", 1}, {"2020-02", 2}, {"2020-03", 0},
                                             {"2020-04", 0}, {"2020-05", 0}, {"2020-06", 1}});
    CHECK(exams_per_period(std::vector<TestRecord>{}, Granularity::Day).empty());
}

TEST_CASE("top_k_by_month ranks by count then name") {
    std::vector<TestRecord> ts;
    const Date m = ymd(2020, 3, 1);
    for (int i = 0; i < 5; ++i) ts.push_back(dated("Hemograma", "Hb", m));
    for (int i = 0; i < 3; ++i) ts.push_back(dated("Ureia", "U", m));
    for (int i = 0; i < 3; ++i) ts.push_back(dated("Creatinina", "C", m));
    ts.push_back(dated("Sódio", "Na", ymd(2020, 4, 2)));
    const auto top = top_k_by_month(ts, TestField::Exam, 2);
    CHECK(top.at("2020-03") == std::vector<RankedValue>{{"Hemograma", 5}, {"Creatinina", 3}});
    CHECK(top.at("2020-04") == std::vector<RankedValue>{{"Sódio", 1}});
    CHECK(top_k_by_month(ts, TestField::Analyte, 10).at("2020-03").size() == 3);
    CHECK(top_k_by_month(ts, TestField::Analyte, 0).at("2020-03").empty());
}

TEST_CASE("covid_by_month counts only mapped labels") {
    std::vector<TestRecord> ts;
    const Date d = ymd(2020, 5, 10);
    for (int i = 0; i < 7; ++i) ts.push_back(dated("PCR", "COVID-19, PCR", d, "Detectado"));
    for (int i = 0; i < 3; ++i) ts.push_back(dated("PCR", "SARS-CoV-2", d, "Não Detectado"));
    ts.push_back(dated("PCR", "COVID-19, PCR", d, "Indeterminado"));
    ts.push_back(dated("Glicose", "Glicose", d, "Detectado"));
    std::set<std::string> unmapped;
    const auto months = covid_by_month(ts, CovidVocabulary::einstein_default(), &unmapped);
    CHECK(months == std::vector<CovidMonth>{{"2020-05", 7, 3, 0}});
    CHECK(unmapped == std::set<std::string>{"indeterminado"});
    CHECK(covid_by_month(ts, CovidVocabulary{}).empty());
}

TEST_CASE("boxplot examples") {
    const auto plain = boxplot_stats(std::vector<double>{1, 2, 3, 4, 5});
    CHECK(plain.median == 3);
    CHECK(plain.q1 == 1.5);
    CHECK(plain.q3 == 4.5);
    CHECK(plain.outliers.empty());

    const auto s = boxplot_stats(std::vector<double>{1, 2, 3, 4, 5, 6, 1000}, "x");
    CHECK(s.q1 == 2);
    CHECK(s.median == 4);
    CHECK(s.q3 == 6);
    CHECK(s.whisker_low == 1);
    CHECK(s.whisker_high == 6);
    CHECK(s.outliers == std::vector<double>{1000});
    CHECK(s.n == 7);

    // Median-of-halves on five points: q3 = 502 puts the upper fence at 1252.75.
    const auto five = boxplot_stats(std::vector<double>{1, 2, 3, 4, 1000});
    CHECK(five.q1 == 1.5);
    CHECK(five.q3 == 502);
    CHECK(five.outliers.empty());
    CHECK(five.whisker_high == 1000);

    const auto constant = boxplot_stats(std::vector<double>{3, 3, 3});
    CHECK(constant.q1 == 3);
    CHECK(constant.q3 == 3);
    CHECK(constant.outliers.empty());
    CHECK(boxplot_stats(std::vector<double>{9}).whisker_low == 9);
    CHECK_THROWS_AS(boxplot_stats(std::vector<double>{}), EmptyInput);
}

TEST_CASE("boxplot quartiles match the oracle and keep the order chain") {
    std::mt19937_64 g(77);
    std::lognormal_distribution<double> ln(2, 1);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> v(1 + g() % 200);
        for (auto& x : v) x = std::round(ln(g) * 10) / 10;
        const auto s = boxplot_stats(v);
        const auto q = oracle::quartiles(v);
        CHECK(s.q1 == q.q1);
        CHECK(s.median == q.median);
        CHECK(s.q3 == q.q3);
        const double lo = *std::min_element(v.begin(), v.end());
        const double hi = *std::max_element(v.begin(), v.end());
        CHECK(lo <= s.whisker_low);
        CHECK(s.whisker_low <= s.q1);
        CHECK(s.q1 <= s.median);
        CHECK(s.median <= s.q3);
        CHECK(s.q3 <= s.whisker_high);
        CHECK(s.whisker_high <= hi);
        const std::size_t inside = static_cast<std::size_t>(std::count_if(
            v.begin(), v.end(), [&](double x) { return x >= s.whisker_low && x <= s.whisker_high; }));
        CHECK(inside + s.outliers.size() == v.size());
    }
}

TEST_CASE("profilers merged from shards equal the whole") {
    std::mt19937_64 g(5);
    std::vector<TestRecord> ts;
    const char* results[] = {"1", "2,5", "Detectado", "Não Detectado", "nan", "7", "inconclusivo"};
    const char* analytes[] = {"Hb", "COVID-19", "Glicose"};
    for (int i = 0; i < 600; ++i)
        ts.push_back(make_test(analytes[g() % 3], results[g() % 7], std::string("0 a 9"), "P" + std::to_string(g() % 40),
                               ymd(2020, 1 + static_cast<unsigned>(g() % 6), 1 + static_cast<unsigned>(g() % 28)),
                               "E" + std::to_string(g() % 5)));
    TestsProfileOptions opts;
    TestsProfiler whole(opts), left(opts), right(opts);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        whole.add(ts[i]);
        (i % 3 == 0 ? left : right).add(ts[i]);
    }
    TestsProfiler lr(opts), rl(opts);
    lr.merge(left);
    lr.merge(right);
    rl.merge(right);
    rl.merge(left);
    CHECK(lr.finish() == whole.finish());
    CHECK(rl.finish() == whole.finish());
    CHECK(whole.finish().records == 600);

    PatientsProfiler pw(2020), pa(2020), pb(2020);
    for (int i = 0; i < 50; ++i) {
        const auto p = patient("P" + std::to_string(i), i % 3 ? Sex::F : Sex::M,
                               i % 7 ? BirthYear{1940 + i} : BirthYear{SentinelAAAA{}});
        pw.add(p);
        (i % 2 ? pa : pb).add(p);
    }
    pb.merge(pa);
    CHECK(pb.finish() == pw.finish());
}

TEST_CASE("outcomes profile counts months and extra columns") {
    OutcomesProfiler p;
    p.add(OutcomeRecord::create("A", ymd(2020, 3, 2), "Alta", {{"de_clinica", "UTI"}}));
    p.add(OutcomeRecord::create("B", ymd(2020, 5, 2), "Óbito", {{"de_clinica", ""}}));
    const auto out = p.finish();
    CHECK(out.records == 2);
    CHECK(out.per_month == std::vector<PeriodCount>{{"2020-03", 1}, {"2020-04", 0}, {"2020-05", 1}});
    auto clin = std::find_if(out.columns.begin(), out.columns.end(),
                             [](const ColumnSummary& c) { return c.name == "de_clinica"; });
    REQUIRE(clin != out.columns.end());
    CHECK(clin->count == 1);
}
