// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures. Usage: labclean_acceptance <path-to-labclean-cli>

#include <sys/resource.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "labclean/cleanse.hpp"
#include "labclean/cli.hpp"
#include "labclean/ingest.hpp"
#include "labclean/profile.hpp"
#include "labclean/report.hpp"
#include "labclean/synthgen.hpp"
#include "labclean/text.hpp"
#include "labclean/valueparse.hpp"
#include "golden_reduction.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace labclean;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string cli_path;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<TestRecord> ingest_all(const fs::path& path, char delimiter = '|', IngestReport* report = nullptr) {
    IngestConfig cfg;
    cfg.delimiter = delimiter;
    cfg.write_quarantine = false;
    auto [tests, r] = read_tests(path, cfg);
    if (report) *report = std::move(r);
    return std::move(tests);
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    std::int64_t initial = 0, final_count = 0;
    double worst = 0;
    for (const auto& g : golden::kRows) {
        const double got = reduction_pct(g.initial, g.in_range).value();
        worst = std::max(worst, std::fabs(got - g.reduction));
        initial += g.initial;
        final_count += g.in_range;
    }
    const auto total = reduction_pct(initial, final_count).str();
    std::ostringstream d;
    d << "22 rows, max |delta| " << worst << "; total (" << initial << ", " << final_count << ", " << total << ")";
    return {worst <= 0.005 && initial == golden::kTotalInitial && final_count == golden::kTotalFinal &&
                total == golden::kTotalReduction,
            d.str()};
}

Outcome criterion2() {
    const bool interval = parse_reference("75 to 99") == ReferenceRange{Interval{75, 99}};
    const bool upper = parse_reference("until 89") == ReferenceRange{UpperOnly{89}};
    const bool labels =
        parse_reference("Não Detectado/Detectado") == ReferenceRange{LabelSet{{"detectado", "não detectado"}}};
    const auto nan = parse_reference_detailed("nan");
    const bool missing = std::holds_alternative<NoRange>(nan.range) && !nan.miss;
    std::ostringstream d;
    d << "interval " << interval << ", upper-only " << upper << ", labels " << labels << ", missing " << missing;
    return {interval && upper && labels && missing, d.str()};
}

SynthSpec random_spec(std::uint64_t seed) {
    std::mt19937_64 g(seed * 7919 + 13);
    std::uniform_real_distribution<double> u(0, 1);
    SynthSpec s;
    s.seed = seed;
    s.n_tests = 10000 + static_cast<std::int64_t>(g() % 40001);
    s.n_patients = 200 + static_cast<std::int64_t>(g() % 3000);
    s.delimiter = g() % 2 ? '|' : ';';
    s.encoding = g() % 4 == 0 ? Encoding::Latin1 : Encoding::Utf8;
    s.malformed_rate = static_cast<double>(g() % 6) / 1000.0;
    s.female_fraction = u(g);
    s.aaaa_rate = u(g) * 0.02;
    s.covid_tests = s.n_tests / static_cast<std::int64_t>(8 + g() % 20);
    s.covid_detected_rate = u(g) * 0.6;
    s.covid_inconclusive_rate = u(g) * 0.05;
    auto catalog = default_catalog();
    std::shuffle(catalog.begin(), catalog.end(), g);
    catalog.resize(4 + g() % (catalog.size() - 4));
    for (auto& a : catalog) {
        a.weight = 1 + u(g) * 10;
        a.null_rate = u(g) * 0.03;
        a.non_numeric_rate = u(g) * 0.05;
        a.censored_rate = u(g) * 0.03;
        a.outlier_rate = u(g) * 0.7;
        a.missing_reference_rate = u(g) * 0.4;
        a.reference_absent = g() % 8 == 0;
        const bool ascii = std::all_of(a.exam.begin(), a.exam.end(), [](char c) { return (c & 0x80) == 0; });
        a.mojibake_rate = ascii ? 0 : u(g) * 0.02;
    }
    s.analytes = catalog;
    return s;
}

Outcome criterion3() {
    const auto t0 = Clock::now();
    int mismatched = 0;
    std::int64_t rows = 0, analytes = 0;
    std::string first_bad;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        testsupport::TempDir dir;
        const auto spec = random_spec(seed);
        const auto out = generate(spec, dir.path());
        const auto tests = ingest_all(out.tests, spec.delimiter);
        const auto got = run_pipeline(tests, PipelineConfig{}).rows;
        rows += spec.n_tests;
        analytes += static_cast<std::int64_t>(got.size());
        if (got != out.manifest.expected) {
            ++mismatched;
            if (first_bad.empty()) first_bad = " first mismatch at seed " + std::to_string(seed);
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "20 corpora, " << rows << " rows, " << analytes << " analyte rows, " << mismatched << " mismatched, "
      << secs << " s" << first_bad;
    return {mismatched == 0 && secs < 60.0, d.str()};
}

Outcome criterion4() {
    std::mt19937_64 g(4);
    const char* results[] = {"1", "2,5", "7.25", "-3", "120", "nan", "NULL", "", "<5", "> 10", "Hemolisado",
                             "Não Detectado", "0", "45,5", "99"};
    const char* refs[] = {"0 a 10", "until 50", "superior a 2", "nan", "5 - 100", "Negativo/Positivo", "75 to 99"};
    std::int64_t violations = 0;
    for (int corpus = 0; corpus < 1000; ++corpus) {
        std::vector<TestRecord> tests;
        const std::size_t n = 1 + g() % 60;
        for (std::size_t i = 0; i < n; ++i) {
            std::optional<std::string> ref;
            if (g() % 6) ref = refs[g() % std::size(refs)];
            tests.push_back(testsupport::make_test("A" + std::to_string(g() % 4), results[g() % std::size(results)],
                                                   ref));
        }
        PipelineConfig cfg;
        if (g() % 2) cfg.std_multiplier = 0.5 + static_cast<double>(g() % 4);
        const auto res = run_pipeline(tests, cfg);
        std::map<std::string, std::map<Stage, std::int64_t>> rejected;
        for (const auto& r : res.rejects) ++rejected[r.analyte][r.stage];
        std::int64_t final_total = 0;
        for (const auto& row : res.rows) {
            auto& rj = rejected[row.analyte];
            const std::int64_t after = row.final_count();
            violations += !(row.initial >= row.numeric_only && row.numeric_only >= row.not_null &&
                            row.not_null >= row.in_range && row.in_range >= after);
            violations += row.numeric_only + rj[Stage::NumericOnly] != row.initial;
            violations += row.not_null + rj[Stage::NotNull] != row.numeric_only;
            violations += row.in_range + rj[Stage::Range] != row.not_null;
            violations += after + rj[Stage::StdClip] != row.in_range;
            final_total += after;
        }
        violations += final_total != static_cast<std::int64_t>(res.cleaned.size());
        violations += res.cleaned.size() + res.rejects.size() != tests.size();
    }
    return {violations == 0, "1000 corpora, " + std::to_string(violations) + " violations"};
}

Outcome criterion5() {
    std::mt19937_64 g(5);
    std::int64_t mismatches = 0, comparisons = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> v(1 + g() % 1000);
        switch (trial % 3) {
            case 0: {
                std::normal_distribution<double> nd(100, 15);
                for (auto& x : v) x = std::round(nd(g) * 100) / 100;
                break;
            }
            case 1: {
                std::lognormal_distribution<double> ln(1, 1.2);
                for (auto& x : v) x = ln(g);
                break;
            }
            default:
                for (auto& x : v) x = static_cast<double>(g() % 7);
        }
        for (double k : {0.2, 0.5, 2.0}) {
            auto got = std_clip(v, k);
            auto want = oracle::std_clip(v, k);
            std::sort(got.begin(), got.end());
            std::sort(want.begin(), want.end());
            mismatches += got != want;
            ++comparisons;
        }
    }
    return {mismatches == 0, std::to_string(comparisons) + " clips, " + std::to_string(mismatches) + " mismatches"};
}

// Naive full-scan oracles over the raw strings.
bool oracle_null(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n\f\v");
    s = b == std::string::npos ? "" : s.substr(b, s.find_last_not_of(" \t\r\n\f\v") - b + 1);
    s = oracle::lower_ascii(s);
    return s.empty() || s == "nan" || s == "null" || s == "none" || s == "n/a";
}

std::string oracle_trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n\f\v");
    return b == std::string::npos ? "" : s.substr(b, s.find_last_not_of(" \t\r\n\f\v") - b + 1);
}

std::vector<std::string> cells(const TestRecord& t) {
    return {t.patient_id(), to_iso(t.collected_on()), t.origin(), t.exam(), t.analyte(), t.raw_result(),
            t.unit().value_or(""), t.raw_reference().value_or("")};
}

Outcome criterion6() {
    int failures = 0;
    std::int64_t covid_rows = 0, months_seen = 0;
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) {
            ++failures;
            failed.push_back(what);
        }
    };
    for (std::uint64_t seed : {61u, 62u, 63u}) {
        testsupport::TempDir dir;
        auto spec = synth_preset("small");
        spec.seed = seed;
        spec.n_tests = 10000;
        spec.n_patients = 800;
        spec.covid_tests = 1200;
        const auto out = generate(spec, dir.path());
        const auto tests = ingest_all(out.tests);
        const auto tag = " seed " + std::to_string(seed);

        // describe
        const std::vector<std::string> cols(std::begin(TestsProfiler::kColumns), std::end(TestsProfiler::kColumns));
        std::vector<std::vector<std::string>> rows;
        for (const auto& t : tests) rows.push_back(cells(t));
        std::vector<ColumnSummary> want;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            oracle::Counts counts;
            for (const auto& r : rows)
                if (!oracle_null(r[c])) counts.add(oracle_trim(r[c]));
            const auto mode = counts.mode();
            want.push_back({cols[c], counts.total, static_cast<std::int64_t>(counts.freq.size()), mode.first,
                            mode.second});
        }
        check(describe(cols, rows) == want, "describe" + tag);
        TestsProfiler profiler{TestsProfileOptions{}};
        for (const auto& t : tests) profiler.add(t);
        const auto profile = profiler.finish();
        check(profile.columns == want, "profiler columns" + tag);

        // top_k_by_month
        for (TestField field : {TestField::Exam, TestField::Analyte}) {
            std::map<std::string, oracle::Counts> by_month;
            for (const auto& t : tests)
                by_month[to_month_key(t.collected_on())].add(field == TestField::Exam ? t.exam() : t.analyte());
            for (std::size_t k : {3u, 20u}) {
                MonthlyRanking expected;
                for (const auto& [m, counts] : by_month)
                    for (const auto& [v, n] : counts.top(k)) expected[m].push_back({v, n});
                check(top_k_by_month(tests, field, k) == expected, "top_k" + tag);
            }
            std::map<std::string, std::map<std::string, std::int64_t>> truth;
            for (const auto& [m, counts] : by_month) truth[m] = counts.freq;
            check(truth == (field == TestField::Exam ? out.manifest.exams_per_month : out.manifest.analytes_per_month),
                  "monthly counts vs manifest" + tag);
        }

        // exams_per_period
        std::map<std::string, std::int64_t> per_day, per_month;
        for (const auto& t : tests) {
            ++per_day[to_iso(t.collected_on())];
            ++per_month[to_iso(t.collected_on()).substr(0, 7)];
        }
        check(per_day == out.manifest.tests_per_day, "days vs manifest" + tag);
        std::vector<PeriodCount> want_days, want_months;
        {
            using namespace std::chrono;
            const sys_days first{*parse_date(per_day.begin()->first)};
            const sys_days last{*parse_date(per_day.rbegin()->first)};
            for (sys_days d = first; d <= last; d += days{1}) {
                const auto key = to_iso(year_month_day{d});
                want_days.push_back({key, per_day.count(key) ? per_day.at(key) : 0});
            }
            int y = std::stoi(per_month.begin()->first.substr(0, 4));
            int m = std::stoi(per_month.begin()->first.substr(5, 2));
            for (;;) {
                char key[8];
                std::snprintf(key, sizeof key, "%04d-%02d", y, m);
                want_months.push_back({key, per_month.count(key) ? per_month.at(key) : 0});
                if (key == per_month.rbegin()->first) break;
                if (++m == 13) {
                    m = 1;
                    ++y;
                }
            }
        }
        check(exams_per_period(tests, Granularity::Day) == want_days, "per day" + tag);
        check(exams_per_period(tests, Granularity::Month) == want_months, "per month" + tag);
        check(profile.per_day == want_days && profile.per_month == want_months, "profiler periods" + tag);

        // covid_by_month
        std::map<std::string, CovidMonth> covid;
        for (const auto& t : tests) {
            const auto analyte = oracle::lower_ascii(t.analyte());
            if (analyte.find("covid") == std::string::npos && analyte.find("sars-cov") == std::string::npos) continue;
            const auto label = oracle::lower_ascii(oracle_trim(t.raw_result()));
            const auto month = to_iso(t.collected_on()).substr(0, 7);
            auto& c = covid[month];
            c.month = month;
            if (label == "detectado") ++c.detected;
            else if (label == "não detectado") ++c.not_detected;
            else if (label == "inconclusivo") ++c.inconclusive;
        }
        std::vector<CovidMonth> want_covid;
        for (const auto& [m, c] : covid) {
            want_covid.push_back(c);
            covid_rows += c.detected + c.not_detected + c.inconclusive;
        }
        months_seen += static_cast<std::int64_t>(want_months.size());
        check(covid_by_month(tests, CovidVocabulary::einstein_default()) == want_covid, "covid" + tag);
        check(covid == out.manifest.covid_per_month, "covid vs manifest" + tag);
        check(profile.covid == want_covid, "profiler covid" + tag);
    }
    std::string detail = "3 corpora x 10000 rows, " + std::to_string(months_seen) + " months, " +
                         std::to_string(covid_rows) + " covid results, " + std::to_string(failures) +
                         " oracle mismatches";
    for (const auto& f : failed) detail += "; " + f;
    return {failures == 0, detail};
}

Outcome criterion7() {
    testsupport::TempDir dir;
    auto spec = synth_preset("small");
    spec.seed = 77;
    spec.n_tests = 4000;
    const auto out = generate(spec, dir.path());
    auto tests = ingest_all(out.tests);
    PipelineConfig with_std;
    with_std.std_multiplier = 2.0;
    auto summarize = [&](const std::vector<TestRecord>& ts) {
        TestsProfiler p{TestsProfileOptions{}};
        for (const auto& t : ts) p.add(t);
        return std::make_tuple(run_pipeline(ts, PipelineConfig{}).rows, run_pipeline(ts, with_std).rows, p.finish());
    };
    const auto base = summarize(tests);
    std::mt19937_64 g(7);
    int differing = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::shuffle(tests.begin(), tests.end(), g);
        differing += summarize(tests) != base;
    }
    return {differing == 0, "100 shuffles of " + std::to_string(tests.size()) + " rows, " +
                                std::to_string(differing) + " differing"};
}

Outcome criterion8() {
    if (cli_path.empty()) return {false, "no CLI path given"};
    testsupport::TempDir dir;
    auto spec = synth_preset("fleury");
    const auto t_gen = Clock::now();
    const auto corpus = generate(spec, dir.path());
    const double gen_secs = seconds_since(t_gen);
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    const auto out_dir = dir / "out";
    const std::string threads = std::to_string(std::min(cores, 4u));
    std::vector<std::string> args{cli_path, "clean", "-i", corpus.tests.string(), "-o", out_dir.string(),
                                  "--threads", threads};

    const auto t0 = Clock::now();
    const pid_t pid = fork();
    if (pid < 0) return {false, "fork failed"};
    if (pid == 0) {
        const int devnull = open("/dev/null", O_WRONLY);
        dup2(devnull, STDOUT_FILENO);
        dup2(devnull, STDERR_FILENO);
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        execv(argv[0], argv.data());
        _exit(127);
    }
    int status = 0;
    rusage usage{};
    wait4(pid, &status, 0, &usage);
    const double secs = seconds_since(t0);
    const double peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;
    const bool exited_ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;

    bool matches = false;
    if (exited_ok) {
        const auto rows = parse_reduction_csv(testsupport::read_file(out_dir / "reduction.csv"));
        matches = rows == corpus.manifest.expected;
    }
    std::ostringstream d;
    d.setf(std::ios::fixed);
    d.precision(1);
    d << spec.n_tests << " rows: clean " << secs << " s, peak RSS " << peak_mb << " MB, " << threads
      << " thread(s) on " << cores << " available core(s); reduction " << (matches ? "matches" : "DIFFERS from")
      << " manifest (corpus generated in " << gen_secs << " s)";
    return {exited_ok && matches && secs < 120.0 && peak_mb < 2048.0, d.str()};
}

Outcome criterion9() {
    int failures = 0;
    std::ostringstream d;
    for (Encoding enc : {Encoding::Latin1, Encoding::Utf8}) {
        testsupport::TempDir dir;
        auto spec = synth_preset("small");
        spec.seed = 9;
        spec.encoding = enc;
        for (auto& a : spec.analytes) {
            const bool ascii = std::all_of(a.exam.begin(), a.exam.end(), [](char c) { return (c & 0x80) == 0; });
            if (!ascii) a.mojibake_rate = 0.04;
        }
        const auto out = generate(spec, dir.path());
        IngestReport report;
        ingest_all(out.tests, '|', &report);
        IngestReport patients_report;
        {
            IngestConfig cfg;
            cfg.write_quarantine = false;
            patients_report = read_patients(out.patients, cfg).second;
        }
        const bool ok = report.encoding_used == enc && report.mojibake_suspects == out.manifest.mojibake_rows &&
                        out.manifest.mojibake_rows > 0 && patients_report.encoding_used == Encoding::Utf8;
        failures += !ok;
        d << to_string(enc) << " file: encoding_used=" << to_string(report.encoding_used)
          << ", mojibake " << report.mojibake_suspects << "/" << out.manifest.mojibake_rows << "; ";
    }
    d << "patients file stays utf8";
    return {failures == 0, d.str()};
}

Outcome criterion10() {
    testsupport::TempDir dir;
    auto spec = synth_preset("small");
    spec.seed = 10;
    spec.n_tests = 60000;
    spec.malformed_rate = 0.002;
    const auto out = generate(spec, dir.path());
    std::string reduction0, profile0;
    int differing = 0;
    const unsigned thread_counts[] = {1, 2, 3, 4, 8};
    for (std::size_t run = 0; run < std::size(thread_counts); ++run) {
        const auto t = std::to_string(thread_counts[run]);
        const auto o = dir / ("run" + std::to_string(run));
        std::ostringstream sink_out, sink_err;
        const int c1 = run_cli({"clean", "-i", out.tests.string(), "-o", (o / "clean").string(), "--threads", t},
                               sink_out, sink_err);
        const int c2 = run_cli({"profile", "-i", out.tests.string(), "-o", (o / "profile").string(), "--threads", t},
                               sink_out, sink_err);
        if (c1 != 0 || c2 != 0) return {false, "CLI exited with " + std::to_string(c1) + "/" + std::to_string(c2)};
        const auto r = testsupport::read_file(o / "clean" / "reduction.csv");
        const auto p = testsupport::read_file(o / "profile" / "profile.json");
        if (run == 0) {
            reduction0 = r;
            profile0 = p;
        } else {
            differing += r != reduction0 || p != profile0;
        }
    }
    return {differing == 0 && !reduction0.empty() && !profile0.empty(),
            "5 runs with threads 1,2,3,4,8; " + std::to_string(differing) + " differing; reduction.csv " +
                fnv1a_hex(reduction0) + ", profile.json " + fnv1a_hex(profile0)};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) cli_path = argv[1];
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"reduction arithmetic", criterion1},  {"reference grammar", criterion2},
        {"pipeline vs manifest", criterion3},  {"stage monotonicity and conservation", criterion4},
        {"std_clip oracle", criterion5},       {"profiler oracle", criterion6},
        {"permutation invariance", criterion7}, {"scale and throughput", criterion8},
        {"encoding handling", criterion9},     {"determinism", criterion10},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures;
}
