#include "labclean/ingest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <variant>

#include "labclean/text.hpp"

namespace labclean {

std::string_view to_string(TableKind k) {
    switch (k) {
        case TableKind::Patient: return "patient";
        case TableKind::Tests: return "tests";
        case TableKind::Outcome: return "outcome";
    }
    return "?";
}

std::string_view to_string(EncodingPolicy p) {
    return p == EncodingPolicy::StrictUtf8 ? "strict-utf8" : "utf8-then-latin1";
}

std::string_view to_string(Encoding e) { return e == Encoding::Utf8 ? "utf8" : "latin1"; }

std::optional<TableKind> parse_table_kind(std::string_view s) {
    if (s == "patient") return TableKind::Patient;
    if (s == "tests") return TableKind::Tests;
    if (s == "outcome") return TableKind::Outcome;
    return std::nullopt;
}

std::optional<EncodingPolicy> parse_encoding_policy(std::string_view s) {
    if (s == "strict-utf8") return EncodingPolicy::StrictUtf8;
    if (s == "utf8-then-latin1") return EncodingPolicy::Utf8ThenLatin1;
    return std::nullopt;
}

namespace {

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

}  // namespace

MissingRequiredColumn::MissingRequiredColumn(std::vector<std::string> missing)
    : HeaderError("missing required column(s): " + join_names(missing)),
      missing_(std::move(missing)) {}

DecodedText decode_bytes(std::string_view raw, EncodingPolicy policy,
                         std::string_view source_name) {
    DecodedText out;
    if (auto bad = text::find_invalid_utf8(raw)) {
        if (policy == EncodingPolicy::StrictUtf8)
            throw UndecodableInput(*bad, std::string(source_name));
        out.text = text::latin1_to_utf8(raw);
        out.encoding = Encoding::Latin1;
    } else {
        out.text = std::string(raw);
        out.encoding = Encoding::Utf8;
    }
    std::size_t start = 0;
    const std::string_view t = out.text;
    while (start <= t.size()) {
        auto nl = t.find('\n', start);
        auto line = t.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                 : nl - start);
        if (text::has_mojibake(line)) ++out.mojibake_suspects;
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

namespace {

const std::unordered_map<std::string, std::string>& header_aliases() {
    static const std::unordered_map<std::string, std::string> aliases = {
        {"id_paciente", "patient_id"},
        {"dt_coleta", "collected_on"},
        {"de_origem", "origin"},
        {"de_exame", "exam"},
        {"de_analito", "analyte"},
        {"de_resultado", "raw_result"},
        {"cd_unidade", "unit"},
        {"de_valor_referencia", "raw_reference"},
        {"ic_sexo", "sex"},
        {"aa_nascimento", "birth_year"},
        {"cd_pais", "country"},
        {"cd_uf", "state"},
        {"cd_municipio", "municipality"},
        {"cd_cep", "postal_prefix"},
        {"cd_cepreduzido", "postal_prefix"},
        {"dt_desfecho", "occurred_on"},
        {"de_desfecho", "description"},
    };
    return aliases;
}

constexpr std::array<std::string_view, 5> kTestsRequired{"patient_id", "collected_on", "exam",
                                                         "analyte", "raw_result"};
constexpr std::array<std::string_view, 3> kPatientRequired{"patient_id", "sex", "birth_year"};
constexpr std::array<std::string_view, 3> kOutcomeRequired{"patient_id", "occurred_on",
                                                           "description"};

}  // namespace

std::span<const std::string_view> required_columns(TableKind kind) {
    switch (kind) {
        case TableKind::Tests: return kTestsRequired;
        case TableKind::Patient: return kPatientRequired;
        case TableKind::Outcome: return kOutcomeRequired;
    }
    return {};
}

std::vector<std::string> normalize_headers(std::span<const std::string> raw_headers,
                                           std::optional<TableKind> kind) {
    if (raw_headers.empty()) throw HeaderError("header row is empty");
    const auto& aliases = header_aliases();
    std::vector<std::string> out;
    out.reserve(raw_headers.size());
    for (const auto& raw : raw_headers) {
        std::string name = text::casefold(text::trim(raw));
        if (auto it = aliases.find(name); it != aliases.end()) name = it->second;
        if (std::find(out.begin(), out.end(), name) != out.end()) throw DuplicateHeader(name);
        out.push_back(std::move(name));
    }
    if (kind) {
        std::vector<std::string> missing;
        for (auto req : required_columns(*kind))
            if (std::find(out.begin(), out.end(), req) == out.end()) missing.emplace_back(req);
        if (!missing.empty()) throw MissingRequiredColumn(std::move(missing));
    }
    return out;
}

nlohmann::ordered_json to_json(const IngestReport& r) {
    nlohmann::ordered_json issues = nlohmann::ordered_json::array();
    for (const auto& i : r.issues)
        issues.push_back({{"row", i.line_no}, {"field", i.field}, {"reason", i.reason}});
    return {{"rows_read", r.rows_read},
            {"rows_ok", r.rows_ok},
            {"rows_quarantined", r.rows_quarantined},
            {"encoding_used", to_string(r.encoding_used)},
            {"mojibake_suspects", r.mojibake_suspects},
            {"issues", std::move(issues)}};
}

std::filesystem::path default_quarantine_path(const std::filesystem::path& input) {
    return std::filesystem::path(input.string() + ".quarantine.csv");
}

namespace {

/// First pass over the raw bytes: which encoding does the file need?
Encoding detect_file_encoding(const std::filesystem::path& path, EncodingPolicy policy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string());
    std::vector<char> block(1 << 20);
    std::string pending;
    std::size_t consumed = 0;
    for (;;) {
        in.read(block.data(), static_cast<std::streamsize>(block.size()));
        pending.append(block.data(), static_cast<std::size_t>(in.gcount()));
        const bool last = !in;
        // validate whole lines only; a multi-byte sequence never spans a newline
        std::size_t cut = last ? pending.size() : pending.rfind('\n');
        if (cut == std::string::npos) continue;
        if (!last) ++cut;
        if (auto bad = text::find_invalid_utf8(std::string_view(pending).substr(0, cut))) {
            if (policy == EncodingPolicy::StrictUtf8)
                throw UndecodableInput(consumed + *bad, path.string());
            return Encoding::Latin1;
        }
        consumed += cut;
        pending.erase(0, cut);
        if (last) break;
    }
    return Encoding::Utf8;
}

struct LogicalLine {
    std::int64_t line_no = 0;
    std::string text;
};

/// Yields decoded logical records; a quoted field may span physical lines.
class LineReader {
public:
    LineReader(const std::filesystem::path& path, Encoding enc, char delimiter)
        : in_(path, std::ios::binary), enc_(enc), delimiter_(delimiter) {
        if (!in_) throw IoError(path.string());
    }

    bool next(LogicalLine& out) {
        std::string raw;
        if (!std::getline(in_, raw)) return false;
        ++physical_;
        out.line_no = physical_;
        strip_cr(raw);
        if (physical_ == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
        out.text = decode(raw);
        while (text::has_open_quote(out.text, delimiter_)) {
            std::string more;
            if (!std::getline(in_, more)) break;
            ++physical_;
            strip_cr(more);
            out.text += '\n';
            out.text += decode(more);
        }
        return true;
    }

private:
    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }
    std::string decode(const std::string& raw) const {
        return enc_ == Encoding::Latin1 ? text::latin1_to_utf8(raw) : raw;
    }

    std::ifstream in_;
    Encoding enc_;
    char delimiter_;
    std::int64_t physical_ = 0;
};

class ColumnMap {
public:
    explicit ColumnMap(std::vector<std::string> names) : names_(std::move(names)) {}

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return i;
        return std::nullopt;
    }
    std::size_t at(std::string_view name) const { return *find(name); }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
};

template <class Record>
using RowResult = std::variant<Record, IngestIssue>;

std::string field_text(const std::vector<std::string>& fields, std::optional<std::size_t> idx) {
    if (!idx) return {};
    return std::string(text::trim(fields[*idx]));
}

std::optional<std::string> optional_field(const std::vector<std::string>& fields,
                                          std::optional<std::size_t> idx) {
    auto v = field_text(fields, idx);
    if (v.empty()) return std::nullopt;
    return v;
}

/// Untrimmed cell text, or nullopt when the column is absent or blank.
std::optional<std::string> raw_field(const std::vector<std::string>& fields,
                                     std::optional<std::size_t> idx) {
    if (!idx || text::trim(fields[*idx]).empty()) return std::nullopt;
    return fields[*idx];
}

struct TestsColumns {
    std::size_t patient_id, collected_on, exam, analyte, raw_result;
    std::optional<std::size_t> origin, unit, raw_reference;

    explicit TestsColumns(const ColumnMap& m)
        : patient_id(m.at("patient_id")),
          collected_on(m.at("collected_on")),
          exam(m.at("exam")),
          analyte(m.at("analyte")),
          raw_result(m.at("raw_result")),
          origin(m.find("origin")),
          unit(m.find("unit")),
          raw_reference(m.find("raw_reference")) {}

    RowResult<TestRecord> parse(const std::vector<std::string>& f, std::int64_t line_no,
                                const IngestConfig&) const {
        std::string pid = field_text(f, patient_id);
        if (pid.empty()) return IngestIssue{line_no, "patient_id", "EmptyPatientId"};
        auto date = parse_date(text::trim(f[collected_on]));
        if (!date) return IngestIssue{line_no, "collected_on", "BadDate"};
        return TestRecord::create(std::move(pid), *date, field_text(f, origin),
                                  field_text(f, exam), field_text(f, analyte), f[raw_result],
                                  optional_field(f, unit), raw_field(f, raw_reference));
    }
};

struct PatientColumns {
    std::size_t patient_id, sex, birth_year;
    std::optional<std::size_t> country, state, municipality, postal_prefix;

    explicit PatientColumns(const ColumnMap& m)
        : patient_id(m.at("patient_id")),
          sex(m.at("sex")),
          birth_year(m.at("birth_year")),
          country(m.find("country")),
          state(m.find("state")),
          municipality(m.find("municipality")),
          postal_prefix(m.find("postal_prefix")) {}

    RowResult<PatientRecord> parse(const std::vector<std::string>& f, std::int64_t line_no,
                                   const IngestConfig& cfg) const {
        std::string pid = field_text(f, patient_id);
        if (pid.empty()) return IngestIssue{line_no, "patient_id", "EmptyPatientId"};

        std::string sex_text = text::casefold(text::trim(f[sex]));
        Sex s;
        if (sex_text == "f")
            s = Sex::F;
        else if (sex_text == "m")
            s = Sex::M;
        else
            return IngestIssue{line_no, "sex", "BadSex"};

        std::string year_text = field_text(f, birth_year);
        BirthYear year;
        if (year_text == "AAAA") {
            year = SentinelAAAA{};
        } else {
            auto v = four_digit_year(year_text);
            if (!v) return IngestIssue{line_no, "birth_year", "BadBirthYear"};
            year = *v;
        }

        std::string muni_text = field_text(f, municipality);
        Municipality muni = muni_text == "MMMM" ? Municipality{SentinelMMMM{}}
                                                : Municipality{muni_text};
        std::string cep_text = field_text(f, postal_prefix);
        PostalPrefix cep = cep_text == "CCCC" ? PostalPrefix{SentinelCCCC{}}
                                              : PostalPrefix{cep_text};
        try {
            return PatientRecord::create(std::move(pid), s, year, field_text(f, country),
                                         field_text(f, state), std::move(muni), std::move(cep),
                                         cfg.reference_year);
        } catch (const ValidationError& e) {
            if (e.field() == "birth_year") return IngestIssue{line_no, e.field(), "BadBirthYear"};
            if (e.field() == "postal_prefix")
                return IngestIssue{line_no, e.field(), "BadPostalPrefix"};
            return IngestIssue{line_no, e.field(), "Invalid"};
        }
    }

    static std::optional<int> four_digit_year(const std::string& s) {
        if (s.size() != 4) return std::nullopt;
        int v = 0;
        for (char c : s) {
            if (c < '0' || c > '9') return std::nullopt;
            v = v * 10 + (c - '0');
        }
        return v;
    }
};

struct OutcomeColumns {
    std::size_t patient_id, occurred_on, description;
    std::vector<std::pair<std::string, std::size_t>> extras;

    explicit OutcomeColumns(const ColumnMap& m)
        : patient_id(m.at("patient_id")),
          occurred_on(m.at("occurred_on")),
          description(m.at("description")) {
        for (std::size_t i = 0; i < m.size(); ++i)
            if (i != patient_id && i != occurred_on && i != description)
                extras.emplace_back(m.names()[i], i);
    }

    RowResult<OutcomeRecord> parse(const std::vector<std::string>& f, std::int64_t line_no,
                                   const IngestConfig&) const {
        std::string pid = field_text(f, patient_id);
        if (pid.empty()) return IngestIssue{line_no, "patient_id", "EmptyPatientId"};
        auto date = parse_date(text::trim(f[occurred_on]));
        if (!date) return IngestIssue{line_no, "occurred_on", "BadDate"};
        std::map<std::string, std::string> bag;
        for (const auto& [name, idx] : extras) bag.emplace(name, f[idx]);
        return OutcomeRecord::create(std::move(pid), *date, field_text(f, description),
                                     std::move(bag));
    }
};

template <class Record>
struct ParsedRow {
    RowResult<Record> result;
    bool mojibake = false;
};

template <class Record, class Columns>
ParsedRow<Record> parse_line(const Columns& cols, std::size_t expected_fields,
                             const LogicalLine& line, const IngestConfig& cfg) {
    ParsedRow<Record> out{IngestIssue{}, false};
    auto fields = text::split_record(line.text, cfg.delimiter);
    if (fields.size() != expected_fields) {
        out.result = IngestIssue{line.line_no, "*", "WrongColumnCount"};
        return out;
    }
    out.mojibake = text::has_mojibake(line.text);
    if (cfg.fix_mojibake && out.mojibake)
        for (auto& f : fields) f = text::fix_mojibake(f);
    out.result = cols.parse(fields, line.line_no, cfg);
    return out;
}

class QuarantineWriter {
public:
    QuarantineWriter(const std::filesystem::path& input, const IngestConfig& cfg) {
        if (!cfg.write_quarantine) return;
        auto path = cfg.quarantine_path.value_or(default_quarantine_path(input));
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError(path.string(), "cannot write quarantine file");
        out_ << "line_no,reason,raw_line\n";
    }

    void write(const IngestIssue& issue, const std::string& raw) {
        if (!out_.is_open()) return;
        out_ << issue.line_no << ',' << issue.reason << ',' << text::quote_field(raw, ',') << '\n';
    }

private:
    std::ofstream out_;
};

template <class Record, class Columns>
IngestReport load_table(const std::filesystem::path& path, const IngestConfig& cfg,
                        TableKind kind, const RecordSink<Record>& sink) {
    if (!std::filesystem::exists(path)) throw IoError(path.string(), "no such file");
    IngestReport report;
    report.encoding_used = detect_file_encoding(path, cfg.encoding);
    QuarantineWriter quarantine(path, cfg);

    LineReader reader(path, report.encoding_used, cfg.delimiter);
    LogicalLine header;
    if (!reader.next(header)) return report;  // empty file: nothing to do
    auto raw_headers = text::split_record(header.text, cfg.delimiter);
    ColumnMap columns(normalize_headers(raw_headers, kind));
    const Columns cols(columns);
    const std::size_t expected = columns.size();

    const unsigned threads = std::max(1u, cfg.threads);
    const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch_rows);
    std::vector<LogicalLine> batch;
    std::vector<ParsedRow<Record>> parsed;

    auto flush = [&] {
        parsed.assign(batch.size(), ParsedRow<Record>{IngestIssue{}, false});
        if (threads == 1 || batch.size() < 1024) {
            for (std::size_t i = 0; i < batch.size(); ++i)
                parsed[i] = parse_line<Record>(cols, expected, batch[i], cfg);
        } else {
            std::vector<std::jthread> pool;
            const std::size_t per = (batch.size() + threads - 1) / threads;
            for (unsigned t = 0; t < threads; ++t) {
                std::size_t lo = t * per, hi = std::min(batch.size(), lo + per);
                if (lo >= hi) break;
                pool.emplace_back([&, lo, hi] {
                    for (std::size_t i = lo; i < hi; ++i)
                        parsed[i] = parse_line<Record>(cols, expected, batch[i], cfg);
                });
            }
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ++report.rows_read;
            auto& row = parsed[i];
            if (auto* rec = std::get_if<Record>(&row.result)) {
                ++report.rows_ok;
                if (row.mojibake) ++report.mojibake_suspects;
                sink(std::move(*rec));
            } else {
                auto& issue = std::get<IngestIssue>(row.result);
                ++report.rows_quarantined;
                quarantine.write(issue, batch[i].text);
                report.issues.push_back(std::move(issue));
            }
        }
        batch.clear();
    };

    LogicalLine line;
    while (reader.next(line)) {
        if (line.text.empty()) continue;  // blank lines are not rows
        batch.push_back(std::move(line));
        if (batch.size() >= batch_size) flush();
    }
    flush();
    return report;
}

}  // namespace

IngestReport load_tests(const std::filesystem::path& path, const IngestConfig& config,
                        const RecordSink<TestRecord>& sink) {
    return load_table<TestRecord, TestsColumns>(path, config, TableKind::Tests, sink);
}

IngestReport load_patients(const std::filesystem::path& path, const IngestConfig& config,
                           const RecordSink<PatientRecord>& sink) {
    return load_table<PatientRecord, PatientColumns>(path, config, TableKind::Patient, sink);
}

IngestReport load_outcomes(const std::filesystem::path& path, const IngestConfig& config,
                           const RecordSink<OutcomeRecord>& sink) {
    return load_table<OutcomeRecord, OutcomeColumns>(path, config, TableKind::Outcome, sink);
}

std::pair<std::vector<TestRecord>, IngestReport> read_tests(const std::filesystem::path& path,
                                                            const IngestConfig& config) {
    std::vector<TestRecord> out;
    auto report = load_tests(path, config, [&](TestRecord&& r) { out.push_back(std::move(r)); });
    return {std::move(out), std::move(report)};
}

std::pair<std::vector<PatientRecord>, IngestReport> read_patients(
    const std::filesystem::path& path, const IngestConfig& config) {
    std::vector<PatientRecord> out;
    auto report =
        load_patients(path, config, [&](PatientRecord&& r) { out.push_back(std::move(r)); });
    return {std::move(out), std::move(report)};
}

IdMismatch compare_ids(std::vector<std::string> patient_ids, std::vector<std::string> test_ids) {
    auto dedupe = [](std::vector<std::string>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(patient_ids);
    dedupe(test_ids);
    std::vector<std::string> common;
    std::set_intersection(patient_ids.begin(), patient_ids.end(), test_ids.begin(),
                          test_ids.end(), std::back_inserter(common));
    IdMismatch m;
    m.shared = static_cast<std::int64_t>(common.size());
    m.only_in_patients = static_cast<std::int64_t>(patient_ids.size()) - m.shared;
    m.only_in_tests = static_cast<std::int64_t>(test_ids.size()) - m.shared;
    return m;
}

}  // namespace labclean
