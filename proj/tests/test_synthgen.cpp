#include "doctest.h"

#include "labclean/cleanse.hpp"
#include "labclean/error.hpp"
#include "labclean/ingest.hpp"
#include "labclean/synthgen.hpp"
#include "support.hpp"

using namespace labclean;
using testsupport::read_file;
using testsupport::TempDir;

namespace {

SynthSpec one_analyte(double outlier_rate, std::int64_t n) {
    SynthSpec s;
    s.seed = 9;
    s.n_tests = n;
    s.n_patients = 20;
    AnalyteSpec a;
    a.name = "Glicose";
    a.exam = "Glicose";
    a.unit = "mg/dL";
    a.low = 75;
    a.high = 99;
    a.outlier_rate = outlier_rate;
    s.analytes = {a};
    return s;
}

std::vector<ReductionRow> clean_rows(const SynthOutput& out) {
    IngestConfig cfg;
    cfg.write_quarantine = false;
    auto [tests, report] = read_tests(out.tests, cfg);
    return run_pipeline(tests, PipelineConfig{}).rows;
}

}  // namespace

TEST_CASE("the same seed gives identical files") {
    TempDir a, b;
    auto spec = synth_preset("small");
    spec.seed = 5;
    const auto x = generate(spec, a.path());
    const auto y = generate(spec, b.path());
    CHECK(read_file(x.tests) == read_file(y.tests));
    CHECK(read_file(x.patients) == read_file(y.patients));
    CHECK(read_file(x.manifest_path) == read_file(y.manifest_path));
    spec.seed = 6;
    TempDir c;
    CHECK(read_file(generate(spec, c.path()).tests) != read_file(x.tests));
}

TEST_CASE("a clean analyte reduces by zero and planted outliers reduce exactly") {
    TempDir dir;
    const auto clean = generate(one_analyte(0.0, 400), dir.path());
    auto rows = clean_rows(clean);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].reduction.str() == "0.00");
    CHECK(rows == clean.manifest.expected);

    TempDir dir2;
    const auto dirty = generate(one_analyte(0.25, 400), dir2.path());
    rows = clean_rows(dirty);
    CHECK(rows[0].in_range == 300);
    CHECK(rows[0].reduction.str() == "25.00");
    CHECK(rows == dirty.manifest.expected);
}

TEST_CASE("the default catalog stage counts agree with the manifest") {
    TempDir dir;
    auto spec = synth_preset("small");
    spec.seed = 12;
    const auto out = generate(spec, dir.path());
    CHECK(clean_rows(out) == out.manifest.expected);
    CHECK(out.manifest.test_rows == spec.n_tests);
}

TEST_CASE("invalid specs are refused") {
    auto s = one_analyte(0.0, 10);
    s.analytes[0].null_rate = 1.5;
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    s.analytes[0].null_rate = 0.6;
    s.analytes[0].outlier_rate = 0.6;
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    s = one_analyte(0.0, 10);
    s.end = testsupport::ymd(2019, 1, 1);
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    s = one_analyte(0.0, 10);
    s.analytes[0].name = "A|B";
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    CHECK_THROWS_AS(synth_preset("nope"), InvalidSpec);
    CHECK(InvalidSpec("x").exit_code() == 1);
    TempDir dir;
    auto bad = one_analyte(0.0, 10);
    bad.n_patients = 0;
    CHECK_THROWS_AS(generate(bad, dir.path()), InvalidSpec);
}

TEST_CASE("spec text parsing") {
    const auto s = parse_synth_spec(
        "seed = 4\nn_tests = 50\nn_patients = 5\ndate_start = 2020-02-01\ndate_end = 2020-02-28\n"
        "[[analyte]]\nname = \"Sódio\"\nunit = \"mEq/L\"\nlow = 136\nhigh = 145\nnull_rate = 0.1\n");
    CHECK(s.seed == 4);
    CHECK(s.n_tests == 50);
    REQUIRE(s.analytes.size() == 1);
    CHECK(s.analytes[0].exam == "Sódio");
    CHECK(s.analytes[0].null_rate == 0.1);
    CHECK(parse_synth_spec("preset = \"small\"\nseed = 2\n").analytes.size() == default_catalog().size());
    CHECK_THROWS_AS(parse_synth_spec("bogus = 1\n"), InvalidSpec);
    CHECK_THROWS_AS(parse_synth_spec("seed = -1\n"), InvalidSpec);
    CHECK_THROWS_AS(parse_synth_spec("malformed_rate = 1.2\n"), InvalidSpec);
    CHECK_THROWS_AS(parse_synth_spec("n_tests = x\n"), InvalidSpec);
    auto reseeded = s;
    reseeded.seed = 5;
    CHECK(canonical_spec_text(s) == canonical_spec_text(s));
    CHECK(canonical_spec_text(s) != canonical_spec_text(reseeded));
}

TEST_CASE("manifest survives a JSON round-trip") {
    TempDir dir;
    auto spec = synth_preset("small");
    spec.malformed_rate = 0.01;
    const auto out = generate(spec, dir.path());
    const auto back = manifest_from_json(nlohmann::json::parse(read_file(out.manifest_path)));
    CHECK(to_json(back).dump() == to_json(out.manifest).dump());
    CHECK(back.expected == out.manifest.expected);
    CHECK(back.malformed == out.manifest.malformed);

    const auto labels = read_file(out.labels);
    std::size_t lines = 0;
    for (char c : labels) lines += c == '\n';
    CHECK(lines == static_cast<std::size_t>(out.manifest.test_rows) + 1);
    CHECK(labels.rfind("line_no,label\n", 0) == 0);
}

TEST_CASE("latin-1 output and planted mojibake are observable on ingest") {
    TempDir dir;
    auto spec = synth_preset("small");
    spec.encoding = Encoding::Latin1;
    spec.analytes[0].mojibake_rate = 0.05;
    const auto out = generate(spec, dir.path());
    IngestConfig cfg;
    cfg.write_quarantine = false;
    auto [tests, report] = read_tests(out.tests, cfg);
    CHECK(report.encoding_used == Encoding::Latin1);
    CHECK(report.mojibake_suspects == out.manifest.mojibake_rows);
    CHECK(out.manifest.mojibake_rows > 0);
}
