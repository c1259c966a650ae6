#include "labclean/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "labclean/error.hpp"
#include "labclean/kvconfig.hpp"
#include "labclean/report.hpp"
#include "labclean/text.hpp"
#include "labclean/valueparse.hpp"

namespace labclean {

namespace {

using std::int64_t;
namespace chr = std::chrono;

// Uniform helpers on top of the raw engine so output does not depend on the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    int64_t between(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    template <class T, std::size_t N>
    const T& pick(const std::array<T, N>& items) {
        return items[below(N)];
    }

private:
    std::mt19937_64 engine_;
};

int64_t planted(double rate, int64_t n) {
    return static_cast<int64_t>(std::floor(rate * static_cast<double>(n)));
}

bool in_unit(double r) { return r >= 0.0 && r <= 1.0 && !std::isnan(r); }

void check_rate(const std::string& where, double r) {
    if (!in_unit(r)) throw InvalidSpec(where + " must lie in [0, 1], got " + format_number(r));
}

bool is_ascii(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

std::string double_encode(std::string_view utf8) { return text::latin1_to_utf8(utf8); }

// Row kinds inside an analyte slice.
enum Kind : std::uint8_t { Clean, Null, NonNumeric, CensoredKind, Outlier, Covid, Malformed };
enum Flag : std::uint8_t { MissingReference = 1, Mojibake = 2 };
enum CovidKind : std::uint8_t { CovidDetected, CovidNotDetected, CovidInconclusive };
enum MalformedKind : std::uint8_t { BadDate, EmptyPatientId, WrongColumnCount };

constexpr std::uint16_t kCovidIndex = 0xFFFF;
constexpr std::uint16_t kMalformedIndex = 0xFFFE;

struct RowPlan {
    std::uint16_t analyte;
    std::uint8_t kind;
    std::uint8_t flags;  // Flag bits, or the covid/malformed sub-kind
};

const char* kind_label(std::uint8_t k) {
    switch (k) {
        case Clean: return "clean";
        case Null: return "null";
        case NonNumeric: return "non_numeric";
        case CensoredKind: return "censored";
        case Outlier: return "outlier";
        default: return "?";
    }
}

const char* malformed_reason(std::uint8_t k) {
    switch (k) {
        case BadDate: return "BadDate";
        case EmptyPatientId: return "EmptyPatientId";
        default: return "WrongColumnCount";
    }
}

std::string hundredths_text(int64_t h, char sep) {
    const bool neg = h < 0;
    const int64_t a = neg ? -h : h;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld%c%02lld", neg ? "-" : "", static_cast<long long>(a / 100),
                  sep, static_cast<long long>(a % 100));
    return buf;
}

std::string with_comma(std::string s) {
    std::replace(s.begin(), s.end(), '.', ',');
    return s;
}

bool parses_to(const std::string& ref, double lo, double hi) {
    auto r = parse_reference(std::string_view(ref));
    const auto* iv = std::get_if<Interval>(&r);
    return iv && iv->min == lo && iv->max == hi;
}

// Reference spellings of [low, high] that parse back to the exact interval.
std::vector<std::string> reference_forms(const AnalyteSpec& a) {
    const std::string lo = format_number(a.low);
    const std::string hi = format_number(a.high);
    std::vector<std::string> candidates = {
        lo + " to " + hi,
        lo + " a " + hi,
        with_comma(lo) + " a " + with_comma(hi),
        lo + " - " + hi,
        lo + " até " + hi,
    };
    if (!a.unit.empty()) {
        candidates.push_back(lo + " - " + hi + " " + a.unit);
        candidates.push_back(with_comma(lo) + " a " + with_comma(hi) + " " + a.unit);
    }
    std::vector<std::string> out;
    for (auto& c : candidates)
        if (parses_to(c, a.low, a.high)) out.push_back(std::move(c));
    return out;
}

struct AnalytePlan {
    int64_t rows = 0;
    int64_t nulls = 0, non_numeric = 0, censored = 0, outliers = 0, missing_ref = 0, mojibake = 0;
    int64_t klo = 0, khi = 0;  // clean value grid in hundredths
    std::vector<std::string> references;
    std::string mojibake_exam;
};

class Writer {
public:
    Writer(const std::filesystem::path& path, bool latin1) : path_(path), latin1_(latin1) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError(path.string(), "cannot create file");
    }

    void line(const std::string& utf8) {
        if (latin1_) {
            auto bytes = text::utf8_to_latin1(utf8);
            if (!bytes) throw InvalidSpec("text not representable in Latin-1: " + utf8);
            if (text::find_invalid_utf8(*bytes)) saw_invalid_utf8_ = true;
            buffer_ += *bytes;
        } else {
            buffer_ += utf8;
        }
        buffer_ += '\n';
        if (buffer_.size() > (1u << 20)) flush();
    }

    void close() {
        flush();
        out_.close();
        if (!out_) throw IoError(path_.string(), "write failed");
    }

    bool saw_invalid_utf8() const { return saw_invalid_utf8_; }

private:
    void flush() {
        out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
        buffer_.clear();
    }

    std::filesystem::path path_;
    std::ofstream out_;
    std::string buffer_;
    bool latin1_;
    bool saw_invalid_utf8_ = false;
};

std::string join(const std::vector<std::string>& f, char d) { return text::join_record(f, d); }

constexpr std::array<std::string_view, 4> kNullTokens = {"", "nan", "NULL", "NaN"};
constexpr std::array<std::string_view, 5> kNonNumeric = {"Hemolisado", "Ver laudo", "Indeterminado",
                                                         "Amostra coagulada", "Negativo"};
constexpr std::array<std::string_view, 4> kStates = {"SP", "RJ", "MG", "PR"};
constexpr std::array<std::string_view, 5> kMunicipalities = {"SAO PAULO", "CAMPINAS", "SANTOS",
                                                             "GUARULHOS", "MMMM"};
constexpr std::array<std::string_view, 3> kOrigins = {"HOSP", "LAB", "UTI"};

std::string patient_id(int64_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "P%08lld", static_cast<long long>(i + 1));
    return buf;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_patients < 1) throw InvalidSpec("n_patients must be at least 1");
    if (n_tests < 0) throw InvalidSpec("n_tests must not be negative");
    if (!start.ok() || !end.ok() || end < start) throw InvalidSpec("date span must be start <= end");
    if (delimiter == '"' || delimiter == '\n' || delimiter == '\r')
        throw InvalidSpec("unusable delimiter");
    check_rate("female_fraction", female_fraction);
    check_rate("aaaa_rate", aaaa_rate);
    check_rate("malformed_rate", malformed_rate);
    check_rate("covid_detected_rate", covid_detected_rate);
    check_rate("covid_inconclusive_rate", covid_inconclusive_rate);
    if (covid_detected_rate + covid_inconclusive_rate > 1.0)
        throw InvalidSpec("covid rates sum above 1");
    if (covid_tests < 0) throw InvalidSpec("covid_tests must not be negative");
    const int64_t valid = n_tests - planted(malformed_rate, n_tests);
    if (covid_tests > valid) throw InvalidSpec("covid_tests exceeds the valid row budget");
    if (valid - covid_tests > 0 && analytes.empty())
        throw InvalidSpec("analyte catalog is empty");
    if (analytes.size() >= kMalformedIndex) throw InvalidSpec("too many analytes");

    std::set<std::string> names;
    for (const auto& a : analytes) {
        const std::string where = "analyte '" + a.name + "'";
        if (a.name.empty()) throw InvalidSpec("analyte name must not be empty");
        if (!names.insert(a.name).second) throw InvalidSpec("duplicate " + where);
        if (a.name == kSynthCovidAnalyte) throw InvalidSpec(where + " clashes with the COVID analyte");
        for (const std::string* s : {&a.name, &a.exam, &a.unit}) {
            if (s->find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos)
                throw InvalidSpec(where + ": text holds the delimiter, a quote or a line break");
            if (text::find_invalid_utf8(*s)) throw InvalidSpec(where + ": text is not UTF-8");
            if (text::has_mojibake(*s)) throw InvalidSpec(where + ": text already looks double-encoded");
            if (encoding == Encoding::Latin1 && !text::utf8_to_latin1(*s))
                throw InvalidSpec(where + ": text not representable in Latin-1");
        }
        if (a.name != text::trim(a.name) || a.exam != text::trim(a.exam))
            throw InvalidSpec(where + ": surrounding whitespace");
        if (!(a.weight >= 0) || !std::isfinite(a.weight)) throw InvalidSpec(where + ": weight must be >= 0");
        if (!std::isfinite(a.low) || !std::isfinite(a.high) || std::fabs(a.low) > 1e12 ||
            std::fabs(a.high) > 1e12)
            throw InvalidSpec(where + ": range bounds must be finite");
        if (std::ceil(a.low * 100) > std::floor(a.high * 100))
            throw InvalidSpec(where + ": range must span at least 0.01");
        if (!(a.outlier_multiple > 0) || !std::isfinite(a.outlier_multiple))
            throw InvalidSpec(where + ": outlier_multiple must be positive");
        check_rate(where + " null_rate", a.null_rate);
        check_rate(where + " non_numeric_rate", a.non_numeric_rate);
        check_rate(where + " censored_rate", a.censored_rate);
        check_rate(where + " outlier_rate", a.outlier_rate);
        check_rate(where + " missing_reference_rate", a.missing_reference_rate);
        check_rate(where + " mojibake_rate", a.mojibake_rate);
        if (a.null_rate + a.non_numeric_rate + a.censored_rate + a.outlier_rate > 1.0 + 1e-12)
            throw InvalidSpec(where + ": value dirt rates sum above 1");
        if (a.mojibake_rate > 0 && is_ascii(a.exam))
            throw InvalidSpec(where + ": mojibake needs a non-ASCII exam name");
        if (!a.reference_absent && reference_forms(a).empty())
            throw InvalidSpec(where + ": range cannot be written as a reference");
    }
}

std::vector<AnalyteSpec> default_catalog() {
    struct Row {
        const char* name;
        const char* exam;
        const char* unit;
        double low, high;
        int initial, not_null, in_range;
    };
    // Target stage counts drive weights and dirt rates.
    static const Row rows[] = {
        {"Magnésio", "Magnésio", "mg/dL", 1.6, 2.6, 2733, 2725, 675},
        {"TGO", "Transaminase Oxalacética", "U/L", 0, 40, 1884, 1865, 1799},
        {"TGP", "Transaminase Pirúvica", "U/L", 0, 41, 1887, 1873, 748},
        {"Cálcio Iônico mmol/L", "Cálcio Iônico", "mmol/L", 1.11, 1.4, 3585, 3553, 3494},
        {"Neutrófilos #", "Hemograma", "mil/mm3", 1.6, 7, 3770, 3746, 3704},
        {"Creatinina", "Creatinina", "mg/dL", 0.7, 1.3, 4959, 4948, 2499},
        {"Sódio", "Sódio", "mEq/L", 136, 145, 5316, 5301, 3684},
        {"Potássio", "Potássio", "mEq/L", 3.5, 5.1, 5825, 5787, 4436},
        {"Uréia", "Uréia", "mg/dL", 17, 43, 5328, 5319, 2710},
        {"Basófilos #", "Hemograma", "mil/mm3", 0, 0.2, 5525, 5500, 3555},
        {"RDW", "Hemograma", "%", 11.5, 15.5, 5540, 5514, 4554},
        {"Eosinófilos #", "Hemograma", "mil/mm3", 0.02, 0.5, 5543, 5518, 3936},
        {"HCM", "Hemograma", "pg", 26, 34, 5553, 5529, 5457},
        {"Monócitos #", "Hemograma", "mil/mm3", 0.2, 1, 5569, 5544, 5354},
        {"Linfócitos #", "Hemograma", "mil/mm3", 1, 4, 5570, 5545, 5374},
        {"CHCM", "Hemograma", "g/dL", 31, 36, 5561, 5537, 5515},
        {"VCM", "Hemograma", "fL", 80, 100, 5563, 5540, 5485},
        {"Leucócitos #", "Hemograma", "mil/mm3", 4, 11, 5567, 5544, 4778},
        {"Volume Médio Plaquetário", "Hemograma", "fL", 9.2, 12.6, 5656, 5632, 5632},
        {"Hemácias", "Hemograma", "milhões/mm3", 4.3, 5.7, 5585, 5562, 4561},
        {"Hemoglobina", "Hemograma", "g/dL", 13.5, 17.5, 5818, 5793, 4572},
        {"Hematócrito", "Hemograma", "%", 39, 50, 5815, 5790, 4292},
    };
    std::vector<AnalyteSpec> out;
    for (const auto& r : rows) {
        AnalyteSpec a;
        a.name = r.name;
        a.exam = r.exam;
        a.unit = r.unit;
        a.low = r.low;
        a.high = r.high;
        a.weight = r.initial;
        a.null_rate = static_cast<double>(r.initial - r.not_null) / r.initial;
        a.outlier_rate = static_cast<double>(r.not_null - r.in_range) / r.initial;
        out.push_back(std::move(a));
    }
    // Analytes without any usable reference.
    static const std::pair<const char*, const char*> absent[] = {
        {"Neutrófilos", "Hemograma"}, {"Dosagem de Glicose", "Glicose"},
        {"Basófilos", "Hemograma"},   {"Eosinófilos", "Hemograma"},
        {"Monócitos", "Hemograma"},   {"Linfócitos", "Hemograma"},
        {"Leucócitos", "Hemograma"},  {"Plaquetas", "Hemograma"},
    };
    for (const auto& [name, exam] : absent) {
        AnalyteSpec a;
        a.name = name;
        a.exam = exam;
        a.unit = "%";
        a.low = 0;
        a.high = 100;
        a.weight = 600;
        a.null_rate = 0.005;
        a.reference_absent = true;
        out.push_back(std::move(a));
    }
    return out;
}

SynthSpec synth_preset(std::string_view name) {
    using chr::day;
    using chr::month;
    using chr::year;
    SynthSpec s;
    s.analytes = default_catalog();
    s.female_fraction = 0.55;
    s.aaaa_rate = 0.005;
    s.malformed_rate = 0.001;
    s.covid_detected_rate = 0.3;
    s.covid_inconclusive_rate = 0.01;
    if (name == "einstein") {
        s.n_patients = 43562;
        s.n_tests = 1853695;
        s.start = Date{year{2020}, month{1}, day{1}};
        s.end = Date{year{2020}, month{6}, day{24}};
    } else if (name == "fleury") {
        s.n_patients = 129596;
        s.n_tests = 2496591;
        s.start = Date{year{2019}, month{11}, day{1}};
        s.end = Date{year{2020}, month{6}, day{15}};
    } else if (name == "sl") {
        s.n_patients = 2731;
        s.n_tests = 371357;
        s.start = Date{year{2020}, month{2}, day{26}};
        s.end = Date{year{2020}, month{6}, day{27}};
    } else if (name == "small") {
        s.n_patients = 500;
        s.n_tests = 10000;
        s.start = Date{year{2020}, month{3}, day{1}};
        s.end = Date{year{2020}, month{5}, day{31}};
    } else {
        throw InvalidSpec("unknown preset '" + std::string(name) + "'");
    }
    s.covid_tests = s.n_tests / 20;
    return s;
}

SynthSpec parse_synth_spec(std::string_view content) {
    static const std::set<std::string> root_keys = {
        "preset", "seed", "n_patients", "n_tests", "date_start", "date_end", "delimiter", "encoding",
        "female_fraction", "aaaa_rate", "malformed_rate", "covid_tests", "covid_detected_rate",
        "covid_inconclusive_rate"};
    static const std::set<std::string> analyte_keys = {
        "name", "exam", "unit", "low", "high", "weight", "null_rate", "non_numeric_rate",
        "censored_rate", "outlier_rate", "missing_reference_rate", "mojibake_rate",
        "reference_absent", "outlier_multiple"};
    try {
        const KvDocument doc = parse_kv(content, "synth spec");
        for (const auto& [name, tables] : doc.arrays)
            if (name != "analyte") throw InvalidSpec("unknown table [[" + name + "]]");
        for (const auto& k : doc.root.keys())
            if (!root_keys.count(k)) throw InvalidSpec("unknown key '" + k + "'");

        const auto& r = doc.root;
        SynthSpec s = r.has("preset") ? synth_preset(*r.get("preset")) : SynthSpec{};
        const long long seed = r.get_int("seed", static_cast<long long>(s.seed));
        if (seed < 0) throw InvalidSpec("seed must not be negative");
        s.seed = static_cast<std::uint64_t>(seed);
        s.n_patients = r.get_int("n_patients", s.n_patients);
        s.n_tests = r.get_int("n_tests", s.n_tests);
        for (auto [key, field] : {std::pair{"date_start", &s.start}, std::pair{"date_end", &s.end}}) {
            if (auto v = r.get(key)) {
                auto d = parse_date(*v);
                if (!d) throw InvalidSpec(std::string(key) + ": not a date: " + *v);
                *field = *d;
            }
        }
        if (auto d = r.get("delimiter")) {
            if (d->size() != 1) throw InvalidSpec("delimiter must be one character");
            s.delimiter = (*d)[0];
        }
        if (auto e = r.get("encoding")) {
            if (*e == "utf8") s.encoding = Encoding::Utf8;
            else if (*e == "latin1") s.encoding = Encoding::Latin1;
            else throw InvalidSpec("encoding must be utf8 or latin1");
        }
        s.female_fraction = r.get_double("female_fraction", s.female_fraction);
        s.aaaa_rate = r.get_double("aaaa_rate", s.aaaa_rate);
        s.malformed_rate = r.get_double("malformed_rate", s.malformed_rate);
        s.covid_tests = r.get_int("covid_tests", s.covid_tests);
        s.covid_detected_rate = r.get_double("covid_detected_rate", s.covid_detected_rate);
        s.covid_inconclusive_rate = r.get_double("covid_inconclusive_rate", s.covid_inconclusive_rate);

        if (auto it = doc.arrays.find("analyte"); it != doc.arrays.end()) {
            s.analytes.clear();
            for (const auto& t : it->second) {
                for (const auto& k : t.keys())
                    if (!analyte_keys.count(k)) throw InvalidSpec("unknown analyte key '" + k + "'");
                AnalyteSpec a;
                auto name = t.get("name");
                if (!name) throw InvalidSpec("analyte table without a name");
                a.name = *name;
                a.exam = t.get_string("exam", a.name);
                a.unit = t.get_string("unit", "");
                a.low = t.get_double("low", a.low);
                a.high = t.get_double("high", a.high);
                a.weight = t.get_double("weight", a.weight);
                a.null_rate = t.get_double("null_rate", 0);
                a.non_numeric_rate = t.get_double("non_numeric_rate", 0);
                a.censored_rate = t.get_double("censored_rate", 0);
                a.outlier_rate = t.get_double("outlier_rate", 0);
                a.missing_reference_rate = t.get_double("missing_reference_rate", 0);
                a.mojibake_rate = t.get_double("mojibake_rate", 0);
                a.reference_absent = t.get_bool("reference_absent", false);
                a.outlier_multiple = t.get_double("outlier_multiple", 1.0);
                s.analytes.push_back(std::move(a));
            }
        }
        s.validate();
        return s;
    } catch (const ConfigError& e) {
        throw InvalidSpec(e.what());
    }
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_synth_spec(ss.str());
}

std::string canonical_spec_text(const SynthSpec& s) {
    std::ostringstream o;
    o << "seed=" << s.seed << "\nn_patients=" << s.n_patients << "\nn_tests=" << s.n_tests
      << "\nstart=" << to_iso(s.start) << "\nend=" << to_iso(s.end) << "\ndelimiter=" << s.delimiter
      << "\nencoding=" << to_string(s.encoding) << "\nfemale_fraction=" << format_number(s.female_fraction)
      << "\naaaa_rate=" << format_number(s.aaaa_rate) << "\nmalformed_rate=" << format_number(s.malformed_rate)
      << "\ncovid_tests=" << s.covid_tests << "\ncovid_detected_rate=" << format_number(s.covid_detected_rate)
      << "\ncovid_inconclusive_rate=" << format_number(s.covid_inconclusive_rate) << "\n";
    for (const auto& a : s.analytes) {
        o << "[analyte]\nname=" << a.name << "\nexam=" << a.exam << "\nunit=" << a.unit
          << "\nlow=" << format_number(a.low) << "\nhigh=" << format_number(a.high)
          << "\nweight=" << format_number(a.weight) << "\nnull_rate=" << format_number(a.null_rate)
          << "\nnon_numeric_rate=" << format_number(a.non_numeric_rate)
          << "\ncensored_rate=" << format_number(a.censored_rate)
          << "\noutlier_rate=" << format_number(a.outlier_rate)
          << "\nmissing_reference_rate=" << format_number(a.missing_reference_rate)
          << "\nmojibake_rate=" << format_number(a.mojibake_rate)
          << "\nreference_absent=" << (a.reference_absent ? "true" : "false")
          << "\noutlier_multiple=" << format_number(a.outlier_multiple) << "\n";
    }
    return o.str();
}

std::int64_t Manifest::malformed_total() const {
    std::int64_t n = 0;
    for (const auto& [reason, count] : malformed) n += count;
    return n;
}

nlohmann::ordered_json to_json(const Manifest& m) {
    nlohmann::ordered_json j;
    j["seed"] = m.seed;
    j["spec_hash"] = m.spec_hash;
    j["patient_rows"] = m.patient_rows;
    j["test_rows"] = m.test_rows;
    j["malformed"] = m.malformed;
    j["mojibake_rows"] = m.mojibake_rows;
    j["tests_encoding"] = std::string(to_string(m.tests_encoding));
    auto& rows = j["expected"] = nlohmann::ordered_json::array();
    for (const auto& r : m.expected) rows.push_back(to_json(r));
    j["tests_per_day"] = m.tests_per_day;
    j["tests_per_month"] = m.tests_per_month;
    j["exams_per_month"] = m.exams_per_month;
    j["analytes_per_month"] = m.analytes_per_month;
    auto& covid = j["covid_per_month"] = nlohmann::ordered_json::object();
    for (const auto& [month, c] : m.covid_per_month)
        covid[month] = {{"detected", c.detected}, {"not_detected", c.not_detected},
                        {"inconclusive", c.inconclusive}};
    j["female"] = m.female;
    j["male"] = m.male;
    j["aaaa"] = m.aaaa;
    auto& years = j["birth_years"] = nlohmann::ordered_json::object();
    for (const auto& [y, c] : m.birth_years) years[std::to_string(y)] = c;
    return j;
}

Manifest manifest_from_json(const nlohmann::json& j) {
    try {
        Manifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.spec_hash = j.at("spec_hash").get<std::string>();
        m.patient_rows = j.at("patient_rows").get<int64_t>();
        m.test_rows = j.at("test_rows").get<int64_t>();
        m.malformed = j.at("malformed").get<std::map<std::string, int64_t>>();
        m.mojibake_rows = j.at("mojibake_rows").get<int64_t>();
        m.tests_encoding = j.at("tests_encoding").get<std::string>() == "latin1" ? Encoding::Latin1
                                                                                : Encoding::Utf8;
        for (const auto& r : j.at("expected")) {
            std::optional<int64_t> clip;
            if (r.contains("std_clip")) clip = r.at("std_clip").get<int64_t>();
            m.expected.push_back(ReductionRow::create(
                r.at("analyte").get<std::string>(), r.at("initial").get<int64_t>(),
                r.at("only_numericals").get<int64_t>(), r.at("not_null").get<int64_t>(),
                r.at("range").get<int64_t>(), clip));
        }
        m.tests_per_day = j.at("tests_per_day").get<std::map<std::string, int64_t>>();
        m.tests_per_month = j.at("tests_per_month").get<std::map<std::string, int64_t>>();
        m.exams_per_month =
            j.at("exams_per_month").get<std::map<std::string, std::map<std::string, int64_t>>>();
        m.analytes_per_month =
            j.at("analytes_per_month").get<std::map<std::string, std::map<std::string, int64_t>>>();
        for (const auto& [month, c] : j.at("covid_per_month").items())
            m.covid_per_month[month] = CovidMonth{month, c.at("detected").get<int64_t>(),
                                                  c.at("not_detected").get<int64_t>(),
                                                  c.at("inconclusive").get<int64_t>()};
        m.female = j.at("female").get<int64_t>();
        m.male = j.at("male").get<int64_t>();
        m.aaaa = j.at("aaaa").get<int64_t>();
        for (const auto& [y, c] : j.at("birth_years").items()) m.birth_years[std::stoi(y)] = c.get<int64_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest", "", e.what());
    }
}

SynthOutput generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir.string(), "cannot create directory");

    Rng rng(spec.seed);
    SynthOutput out;
    out.patients = out_dir / "patients.csv";
    out.tests = out_dir / "tests.csv";
    out.manifest_path = out_dir / "manifest.json";
    out.labels = out_dir / "labels.csv";
    Manifest& m = out.manifest;
    m.seed = spec.seed;
    m.spec_hash = fnv1a_hex(canonical_spec_text(spec));
    m.patient_rows = spec.n_patients;
    m.test_rows = spec.n_tests;
    const char d = spec.delimiter;

    // Patients: exact sex and sentinel counts, placed by shuffle.
    {
        const int64_t n = spec.n_patients;
        std::vector<std::uint8_t> female(static_cast<std::size_t>(n), 0), aaaa(static_cast<std::size_t>(n), 0);
        std::fill_n(female.begin(), planted(spec.female_fraction, n), 1);
        std::fill_n(aaaa.begin(), planted(spec.aaaa_rate, n), 1);
        rng.shuffle(female);
        rng.shuffle(aaaa);
        Writer w(out.patients, false);
        w.line(join({"ID_PACIENTE", "IC_SEXO", "AA_NASCIMENTO", "CD_PAIS", "CD_UF", "CD_MUNICIPIO",
                     "CD_CEPREDUZIDO"},
                    d));
        for (int64_t i = 0; i < n; ++i) {
            const bool f = female[static_cast<std::size_t>(i)];
            (f ? m.female : m.male)++;
            std::string year;
            if (aaaa[static_cast<std::size_t>(i)]) {
                year = "AAAA";
                ++m.aaaa;
            } else {
                const int y = static_cast<int>(rng.between(kEarliestExplicitBirthYear, kDefaultReferenceYear - 1));
                ++m.birth_years[y];
                year = std::to_string(y);
            }
            std::string cep = rng.below(10) == 0 ? "CCCC" : std::to_string(rng.between(10000, 99999));
            w.line(join({patient_id(i), f ? "F" : "M", year, "BR", std::string(rng.pick(kStates)),
                         std::string(rng.pick(kMunicipalities)), cep},
                        d));
        }
        w.close();
    }

    // Row budget.
    const int64_t n_malformed = planted(spec.malformed_rate, spec.n_tests);
    const int64_t n_lab = spec.n_tests - n_malformed - spec.covid_tests;
    std::vector<AnalytePlan> plans(spec.analytes.size());
    {
        double total_weight = 0;
        for (const auto& a : spec.analytes) total_weight += a.weight;
        int64_t assigned = 0;
        for (std::size_t i = 0; i < plans.size(); ++i) {
            plans[i].rows = total_weight > 0
                ? static_cast<int64_t>(std::floor(static_cast<double>(n_lab) * spec.analytes[i].weight / total_weight))
                : 0;
            assigned += plans[i].rows;
        }
        for (std::size_t i = 0; assigned < n_lab; i = (i + 1) % plans.size(), ++assigned) ++plans[i].rows;
    }

    std::vector<RowPlan> rows;
    rows.reserve(static_cast<std::size_t>(spec.n_tests));
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const auto& a = spec.analytes[i];
        auto& p = plans[i];
        const int64_t n = p.rows;
        p.nulls = planted(a.null_rate, n);
        p.non_numeric = planted(a.non_numeric_rate, n);
        p.censored = planted(a.censored_rate, n);
        p.outliers = planted(a.outlier_rate, n);
        p.missing_ref = a.reference_absent ? n : planted(a.missing_reference_rate, n);
        p.mojibake = planted(a.mojibake_rate, n);
        p.klo = static_cast<int64_t>(std::ceil(a.low * 100));
        p.khi = static_cast<int64_t>(std::floor(a.high * 100));
        if (!a.reference_absent) p.references = reference_forms(a);
        if (p.mojibake > 0) p.mojibake_exam = double_encode(a.exam);

        std::vector<RowPlan> slice(static_cast<std::size_t>(n),
                                   RowPlan{static_cast<std::uint16_t>(i), Clean, 0});
        auto it = slice.begin();
        for (auto [kind, count] : {std::pair{Null, p.nulls}, std::pair{NonNumeric, p.non_numeric},
                                   std::pair{CensoredKind, p.censored}, std::pair{Outlier, p.outliers}}) {
            for (int64_t k = 0; k < count; ++k) (it++)->kind = kind;
        }
        rng.shuffle(slice);
        for (int64_t k = 0; k < p.missing_ref; ++k) slice[static_cast<std::size_t>(k)].flags |= MissingReference;
        rng.shuffle(slice);
        for (int64_t k = 0; k < p.mojibake; ++k) slice[static_cast<std::size_t>(k)].flags |= Mojibake;
        rows.insert(rows.end(), slice.begin(), slice.end());

        const int64_t numeric_only = n - p.non_numeric - p.censored;
        const int64_t not_null = numeric_only - p.nulls;
        const bool has_reference = !a.reference_absent && p.missing_ref < n;
        const int64_t in_range = has_reference ? not_null - p.outliers : 0;
        m.expected.push_back(ReductionRow::create(a.name, n, numeric_only, not_null, in_range));
        m.mojibake_rows += p.mojibake;
    }
    {
        const int64_t det = planted(spec.covid_detected_rate, spec.covid_tests);
        const int64_t inc = planted(spec.covid_inconclusive_rate, spec.covid_tests);
        for (int64_t k = 0; k < spec.covid_tests; ++k) {
            const std::uint8_t sub = k < det ? CovidDetected : k < det + inc ? CovidInconclusive : CovidNotDetected;
            rows.push_back(RowPlan{kCovidIndex, Covid, sub});
        }
        if (spec.covid_tests > 0)
            m.expected.push_back(ReductionRow::create(std::string(kSynthCovidAnalyte), spec.covid_tests, 0, 0, 0));
        for (int64_t k = 0; k < n_malformed; ++k)
            rows.push_back(RowPlan{kMalformedIndex, Malformed, static_cast<std::uint8_t>(k % 3)});
    }
    std::sort(m.expected.begin(), m.expected.end(),
              [](const ReductionRow& x, const ReductionRow& y) { return x.analyte < y.analyte; });
    rng.shuffle(rows);

    // Tests file.
    const auto first_day = chr::sys_days{spec.start};
    const int64_t span_days = (chr::sys_days{spec.end} - first_day).count();
    Writer tests(out.tests, spec.encoding == Encoding::Latin1);
    Writer labels(out.labels, false);
    tests.line(join({"ID_PACIENTE", "DT_COLETA", "DE_ORIGEM", "DE_EXAME", "DE_ANALITO", "DE_RESULTADO",
                     "CD_UNIDADE", "DE_VALOR_REFERENCIA"},
                    d));
    labels.line("line_no,label");
    int64_t line_no = 1;
    std::vector<std::string> f(8);
    for (const RowPlan& row : rows) {
        ++line_no;
        const Date date{first_day + chr::days{rng.between(0, span_days)}};
        const std::string iso = to_iso(date);
        std::string date_text = iso;
        if (rng.below(4) == 0) std::replace(date_text.begin(), date_text.end(), '-', '/');
        f[0] = patient_id(static_cast<int64_t>(rng.below(static_cast<std::uint64_t>(spec.n_patients))));
        f[1] = date_text;
        f[2] = std::string(rng.pick(kOrigins));
        std::string label;

        if (row.kind == Covid) {
            static const std::array<const char*, 3> results = {"Detectado", "Não Detectado", "Inconclusivo"};
            f[3] = std::string(kSynthCovidExam);
            f[4] = std::string(kSynthCovidAnalyte);
            f[5] = results[row.flags];
            f[6] = "";
            f[7] = "Não Detectado/Detectado";
            auto& c = m.covid_per_month[to_month_key(date)];
            c.month = to_month_key(date);
            if (row.flags == CovidDetected) ++c.detected;
            else if (row.flags == CovidNotDetected) ++c.not_detected;
            else ++c.inconclusive;
            label = "covid";
        } else {
            const std::size_t ai = row.kind == Malformed ? rng.below(std::max<std::size_t>(plans.size(), 1))
                                                         : row.analyte;
            if (plans.empty()) {
                f[3] = std::string(kSynthCovidExam);
                f[4] = std::string(kSynthCovidAnalyte);
                f[5] = "Detectado";
                f[6] = "";
                f[7] = "";
            } else {
                const auto& a = spec.analytes[ai];
                const auto& p = plans[ai];
                f[3] = (row.kind != Malformed && (row.flags & Mojibake)) ? p.mojibake_exam : a.exam;
                f[4] = a.name;
                f[6] = a.unit;
                if (a.reference_absent || (row.kind != Malformed && (row.flags & MissingReference)))
                    f[7] = rng.below(2) ? "nan" : "";
                else
                    f[7] = p.references[rng.below(p.references.size())];
                const int64_t width = p.khi - p.klo;
                switch (row.kind) {
                    case Null:
                        f[5] = std::string(rng.pick(kNullTokens));
                        break;
                    case NonNumeric:
                        f[5] = std::string(rng.pick(kNonNumeric));
                        break;
                    case CensoredKind: {
                        static const std::array<const char*, 5> prefixes = {"<", "> ", "<= ", "Inferior a ",
                                                                           "Superior a "};
                        f[5] = prefixes[rng.below(prefixes.size())] +
                               hundredths_text(rng.between(p.klo, p.khi), '.');
                        break;
                    }
                    case Outlier: {
                        const auto reach = static_cast<int64_t>(std::ceil(static_cast<double>(std::max<int64_t>(width, 1)) *
                                                                          a.outlier_multiple));
                        const int64_t delta = rng.between(1, std::max<int64_t>(reach, 1));
                        const int64_t h = rng.below(2) ? static_cast<int64_t>(std::ceil(a.high * 100)) + delta
                                                       : static_cast<int64_t>(std::floor(a.low * 100)) - delta;
                        f[5] = hundredths_text(h, rng.below(5) == 0 ? ',' : '.');
                        auto v = parse_decimal(f[5]);
                        if (!v || (*v >= a.low && *v <= a.high))
                            throw std::logic_error("synthgen: outlier landed inside the range");
                        break;
                    }
                    default: {
                        f[5] = hundredths_text(rng.between(p.klo, p.khi), rng.below(5) == 0 ? ',' : '.');
                        auto v = parse_decimal(f[5]);
                        if (!v || *v < a.low || *v > a.high)
                            throw std::logic_error("synthgen: clean value landed outside the range");
                        break;
                    }
                }
                if (row.kind != Malformed) {
                    label = kind_label(row.kind);
                    if (row.flags & MissingReference) label += "+missing_reference";
                    if (row.flags & Mojibake) label += "+mojibake";
                }
            }
        }

        if (row.kind == Malformed) {
            label = std::string("malformed:") + malformed_reason(row.flags);
            ++m.malformed[malformed_reason(row.flags)];
            if (row.flags == BadDate) {
                f[1] = "2020-02-30";
                tests.line(join(f, d));
            } else if (row.flags == EmptyPatientId) {
                f[0] = "";
                tests.line(join(f, d));
            } else {
                std::vector<std::string> shorter(f.begin(), f.end() - 1);
                tests.line(join(shorter, d));
            }
        } else {
            tests.line(join(f, d));
            ++m.tests_per_day[iso];
            const std::string month = to_month_key(date);
            ++m.tests_per_month[month];
            ++m.exams_per_month[month][f[3]];
            ++m.analytes_per_month[month][f[4]];
        }
        labels.line(std::to_string(line_no) + "," + label);
    }
    tests.close();
    labels.close();
    m.tests_encoding = tests.saw_invalid_utf8() ? Encoding::Latin1 : Encoding::Utf8;
    // A Latin-1 file that happens to be valid UTF-8 is read as UTF-8, which undoes the corruption.
    if (spec.encoding == Encoding::Latin1 && m.tests_encoding == Encoding::Utf8) m.mojibake_rows = 0;

    write_text_file(out.manifest_path, to_json(m).dump(2) + "\n");
    return out;
}

}  // namespace labclean
