#include "doctest.h"

#include "labclean/error.hpp"
#include "labclean/ingest.hpp"
#include "labclean/synthgen.hpp"
#include "labclean/text.hpp"
#include "support.hpp"

using namespace labclean;
using testsupport::kTestsHeader;
using testsupport::read_file;
using testsupport::TempDir;
using testsupport::write_file;
using testsupport::ymd;

namespace {

// Byte-table oracle: each Latin-1 byte is the code point of the same value.
std::string latin1_oracle(std::string_view bytes) {
    std::string out;
    for (unsigned char b : bytes) {
        if (b < 0x80) {
            out.push_back(static_cast<char>(b));
        } else {
            out.push_back(static_cast<char>(0xC0 | (b >> 6)));
            out.push_back(static_cast<char>(0x80 | (b & 0x3F)));
        }
    }
    return out;
}

IngestConfig quiet() {
    IngestConfig c;
    c.write_quarantine = false;
    return c;
}

}  // namespace

TEST_CASE("decode_bytes examples") {
    auto ascii = decode_bytes("Glicose", EncodingPolicy::Utf8ThenLatin1);
    CHECK(ascii.text == "Glicose");
    CHECK(ascii.encoding == Encoding::Utf8);
    CHECK(ascii.mojibake_suspects == 0);

    const std::string raw = "Caf\xE9 com leite";
    auto latin = decode_bytes(raw, EncodingPolicy::Utf8ThenLatin1);
    CHECK(latin.text == latin1_oracle(raw));
    CHECK(latin.text == "Café com leite");
    CHECK(latin.encoding == Encoding::Latin1);
    CHECK(latin.mojibake_suspects == 0);
    CHECK(text::utf8_to_latin1(latin.text) == raw);

    auto moji = decode_bytes("LinfÃ³citos", EncodingPolicy::Utf8ThenLatin1);
    CHECK(moji.text == "LinfÃ³citos");
    CHECK(moji.encoding == Encoding::Utf8);
    CHECK(moji.mojibake_suspects == 1);

    CHECK(decode_bytes("a\nMagnÃ©sio\nb FunÃ§Ã£o\n", EncodingPolicy::StrictUtf8).mojibake_suspects == 2);
    CHECK_THROWS_AS(decode_bytes(raw, EncodingPolicy::StrictUtf8), UndecodableInput);
    try {
        decode_bytes(raw, EncodingPolicy::StrictUtf8);
    } catch (const UndecodableInput& e) {
        CHECK(e.byte_offset() == 3);
        CHECK(e.exit_code() == 2);
    }
}

TEST_CASE("normalize_headers") {
    const std::vector<std::string> two{"ID_PACIENTE", "DT_COLETA"};
    CHECK(normalize_headers(two) == std::vector<std::string>{"patient_id", "collected_on"});
    const std::vector<std::string> spaced{" De_Analito "};
    CHECK(normalize_headers(spaced) == std::vector<std::string>{"analyte"});
    const std::vector<std::string> unknown{"Extra Col"};
    CHECK(normalize_headers(unknown) == std::vector<std::string>{"extra col"});

    const std::vector<std::string> only_id{"id_paciente"};
    try {
        normalize_headers(only_id, TableKind::Tests);
        FAIL("missing columns accepted");
    } catch (const MissingRequiredColumn& e) {
        const auto& m = e.missing();
        CHECK(std::find(m.begin(), m.end(), "analyte") != m.end());
        CHECK(std::find(m.begin(), m.end(), "raw_result") != m.end());
        CHECK(std::find(m.begin(), m.end(), "patient_id") == m.end());
    }
    const std::vector<std::string> dup{"ID_PACIENTE", "patient_id"};
    CHECK_THROWS_AS(normalize_headers(dup), DuplicateHeader);
}

TEST_CASE("load_tests on a well-formed fixture") {
    TempDir dir;
    const auto path = dir / "t.csv";
    write_file(path, std::string(kTestsHeader) +
                         "P1|2020/04/01|HOSP|Hemograma|Hemoglobina|13,5|g/dL|13.5 - 17.5\n"
                         "P2|2020-04-02|LAB|Glicose|Glicose| 90 ||75 to 99\n"
                         "P3|2020-04-03|LAB|PCR|Covid|Não Detectado||Não Detectado/Detectado\n");
    std::vector<TestRecord> got;
    auto report = load_tests(path, IngestConfig{}, [&](TestRecord&& t) { got.push_back(std::move(t)); });
    CHECK(report.rows_read == 3);
    CHECK(report.rows_ok == 3);
    CHECK(report.rows_quarantined == 0);
    CHECK(report.encoding_used == Encoding::Utf8);
    REQUIRE(got.size() == 3);
    CHECK(got[0].collected_on() == ymd(2020, 4, 1));
    CHECK(got[0].unit() == "g/dL");
    CHECK(got[1].raw_result() == " 90 ");
    CHECK_FALSE(got[1].unit());
    CHECK(got[2].raw_reference() == "Não Detectado/Detectado");
    CHECK(read_file(default_quarantine_path(path)) == "line_no,reason,raw_line\n");
}

TEST_CASE("malformed rows are quarantined losslessly") {
    TempDir dir;
    const auto path = dir / "t.csv";
    const std::string bad_date = "P1|2020-13-40|HOSP|e|a|1|u|r";
    const std::string no_id = "|2020-01-01|HOSP|e|a|1|u|r";
    const std::string short_row = "P1|2020-01-01|HOSP|e|a|1|u";
    write_file(path, std::string(kTestsHeader) + bad_date + "\n" + no_id + "\nP9|2020-01-01|H|e|a|1|u|r\n" +
                         short_row + "\n");
    std::int64_t ok = 0;
    auto report = load_tests(path, IngestConfig{}, [&](TestRecord&&) { ++ok; });
    CHECK(ok == 1);
    CHECK(report.rows_read == 4);
    CHECK(report.rows_quarantined == 3);
    REQUIRE(report.issues.size() == 3);
    CHECK(report.issues[0] == IngestIssue{2, "collected_on", "BadDate"});
    CHECK(report.issues[1].reason == "EmptyPatientId");
    CHECK(report.issues[2].reason == "WrongColumnCount");
    CHECK(report.issues[2].line_no == 5);
    const auto sidecar = read_file(default_quarantine_path(path));
    CHECK(sidecar.find("line_no,reason,raw_line\n") == 0);
    CHECK(sidecar.find("2,BadDate," + bad_date + "\n") != std::string::npos);
    CHECK(sidecar.find(short_row) != std::string::npos);
}

TEST_CASE("load_patients handles sentinels and closed sex values") {
    TempDir dir;
    const auto path = dir / "p.csv";
    write_file(path,
               "ID_PACIENTE|IC_SEXO|AA_NASCIMENTO|CD_PAIS|CD_UF|CD_MUNICIPIO|CD_CEPREDUZIDO\n"
               "A|F|1959|BR|SP|SAO PAULO|01234\n"
               "B|m|AAAA|BR|SP|MMMM|CCCC\n"
               "C|X|1980|BR|SP|SAO PAULO|01234\n"
               "D|F|1930|BR|SP|SAO PAULO|01234\n"
               "E|F|1980|BR|SP|SAO PAULO|1234\n");
    auto [patients, report] = read_patients(path, quiet());
    REQUIRE(patients.size() == 2);
    CHECK(std::get<int>(patients[0].birth_year()) == 1959);
    CHECK(std::holds_alternative<SentinelAAAA>(patients[1].birth_year()));
    CHECK(std::holds_alternative<SentinelMMMM>(patients[1].municipality()));
    CHECK(std::holds_alternative<SentinelCCCC>(patients[1].postal_prefix()));
    CHECK(patients[1].sex() == Sex::M);
    REQUIRE(report.issues.size() == 3);
    CHECK(report.issues[0].reason == "BadSex");
    CHECK(report.issues[1].reason == "BadBirthYear");
    CHECK(report.issues[2].reason == "BadPostalPrefix");
}

TEST_CASE("outcomes keep unknown columns") {
    TempDir dir;
    const auto path = dir / "o.csv";
    write_file(path, "ID_PACIENTE|DT_DESFECHO|DE_DESFECHO|DE_CLINICA\nA|2020-05-01|Alta|UTI\n");
    std::vector<OutcomeRecord> got;
    auto report = load_outcomes(path, quiet(), [&](OutcomeRecord&& o) { got.push_back(std::move(o)); });
    CHECK(report.rows_ok == 1);
    REQUIRE(got.size() == 1);
    CHECK(got[0].description() == "Alta");
    CHECK(got[0].extra().at("de_clinica") == "UTI");
}

TEST_CASE("line handling: BOM, CRLF, blank lines, quoted line breaks, empty file") {
    TempDir dir;
    const auto path = dir / "t.csv";
    write_file(path, "\xEF\xBB\xBF" + std::string(kTestsHeader).substr(0, std::string(kTestsHeader).size() - 1) +
                         "\r\nP1|2020-01-01|H|e|a|\"multi\nline\"|u|r\r\n\r\nP2|2020-01-02|H|e|a|2|u|r\r\n");
    auto [tests, report] = read_tests(path, quiet());
    REQUIRE(tests.size() == 2);
    CHECK(tests[0].raw_result() == "multi\nline");
    CHECK(tests[1].raw_result() == "2");
    CHECK(report.rows_read == 2);

    const auto empty = dir / "empty.csv";
    write_file(empty, "");
    auto [none, empty_report] = read_tests(empty, quiet());
    CHECK(none.empty());
    CHECK(empty_report.rows_read == 0);

    CHECK_THROWS_AS(read_tests(dir / "missing.csv", quiet()), IoError);
    const auto headerless = dir / "bad.csv";
    write_file(headerless, "foo|bar\n1|2\n");
    CHECK_THROWS_AS(read_tests(headerless, quiet()), MissingRequiredColumn);
}

TEST_CASE("latin-1 files fall back per file and re-encode to the original bytes") {
    TempDir dir;
    const auto path = dir / "t.csv";
    const std::string body = std::string(kTestsHeader) + "P1|2020-01-01|H|S\xF3" "dio|S\xF3" "dio|140|mEq/L|136 a 145\n";
    write_file(path, body);
    auto [tests, report] = read_tests(path, quiet());
    CHECK(report.encoding_used == Encoding::Latin1);
    REQUIRE(tests.size() == 1);
    CHECK(tests[0].analyte() == "Sódio");
    CHECK(text::utf8_to_latin1(tests[0].analyte()) == "S\xF3" "dio");
    IngestConfig strict = quiet();
    strict.encoding = EncodingPolicy::StrictUtf8;
    CHECK_THROWS_AS(read_tests(path, strict), UndecodableInput);
}

TEST_CASE("fix-mojibake repairs double-encoded fields") {
    TempDir dir;
    const auto path = dir / "t.csv";
    write_file(path, std::string(kTestsHeader) + "P1|2020-01-01|H|MagnÃ©sio|MagnÃ©sio|2|mg/dL|1.6 a 2.6\n");
    auto cfg = quiet();
    auto [raw, r1] = read_tests(path, cfg);
    CHECK(raw[0].exam() == "MagnÃ©sio");
    CHECK(r1.mojibake_suspects == 1);
    cfg.fix_mojibake = true;
    auto [fixed, r2] = read_tests(path, cfg);
    CHECK(fixed[0].exam() == "Magnésio");
    CHECK(fixed[0].analyte() == "Magnésio");
    CHECK(r2.mojibake_suspects == 1);
}

TEST_CASE("synthetic corpus: quarantine equals the planted count, threads do not change output") {
    TempDir dir;
    SynthSpec spec = synth_preset("small");
    spec.n_tests = 10000;
    spec.malformed_rate = 0.02;
    spec.seed = 17;
    const auto out = generate(spec, dir.path());
    REQUIRE(out.manifest.malformed_total() == 200);

    IngestConfig one = quiet();
    auto [seq, seq_report] = read_tests(out.tests, one);
    CHECK(seq_report.rows_quarantined == 200);
    CHECK(seq_report.rows_read == seq_report.rows_ok + seq_report.rows_quarantined);
    CHECK(static_cast<std::int64_t>(seq.size()) == out.manifest.valid_test_rows());
    std::map<std::string, std::int64_t> reasons;
    for (const auto& i : seq_report.issues) ++reasons[i.reason];
    CHECK(reasons == out.manifest.malformed);

    IngestConfig many = quiet();
    many.threads = 4;
    many.batch_rows = 1500;
    auto [par, par_report] = read_tests(out.tests, many);
    CHECK(par == seq);
    CHECK(par_report == seq_report);
}

TEST_CASE("compare_ids counts one-sided ids") {
    auto m = compare_ids({"a", "b", "c"}, {"b", "c", "d", "d"});
    CHECK(m.shared == 2);
    CHECK(m.only_in_patients == 1);
    CHECK(m.only_in_tests == 1);
}
