#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "labclean/error.hpp"
#include "labclean/schema.hpp"

namespace labclean {

enum class TableKind { Patient, Tests, Outcome };
enum class EncodingPolicy { StrictUtf8, Utf8ThenLatin1 };
enum class Encoding { Utf8, Latin1 };

std::string_view to_string(TableKind k);
std::string_view to_string(EncodingPolicy p);
std::string_view to_string(Encoding e);
std::optional<TableKind> parse_table_kind(std::string_view s);
std::optional<EncodingPolicy> parse_encoding_policy(std::string_view s);

class DuplicateHeader : public HeaderError {
public:
    explicit DuplicateHeader(const std::string& name)
        : HeaderError("duplicate header after normalization: " + name), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class MissingRequiredColumn : public HeaderError {
public:
    explicit MissingRequiredColumn(std::vector<std::string> missing);
    const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

struct DecodedText {
    std::string text;
    Encoding encoding = Encoding::Utf8;
    std::size_t mojibake_suspects = 0;
};

/// Whole-buffer decode. Under Utf8ThenLatin1 any invalid UTF-8 switches the
/// entire buffer to Latin-1. Throws UndecodableInput under StrictUtf8.
DecodedText decode_bytes(std::string_view raw, EncodingPolicy policy,
                         std::string_view source_name = "input");

/// Trim, lowercase, map known aliases (id_paciente -> patient_id, ...).
/// Unknown headers pass through lowercased. When `kind` is given, the
/// required columns for that table must all be present.
std::vector<std::string> normalize_headers(std::span<const std::string> raw_headers,
                                           std::optional<TableKind> kind = std::nullopt);

std::span<const std::string_view> required_columns(TableKind kind);

struct IngestConfig {
    char delimiter = '|';
    EncodingPolicy encoding = EncodingPolicy::Utf8ThenLatin1;
    bool fix_mojibake = false;
    int reference_year = kDefaultReferenceYear;
    /// Sidecar for malformed rows; defaults to "<input>.quarantine.csv".
    std::optional<std::filesystem::path> quarantine_path;
    bool write_quarantine = true;
    unsigned threads = 1;
    std::size_t batch_rows = 1 << 14;
};

struct IngestIssue {
    std::int64_t line_no = 0;
    std::string field;
    std::string reason;

    bool operator==(const IngestIssue&) const = default;
};

struct IngestReport {
    std::int64_t rows_read = 0;
    std::int64_t rows_ok = 0;
    std::int64_t rows_quarantined = 0;
    Encoding encoding_used = Encoding::Utf8;
    std::int64_t mojibake_suspects = 0;
    std::vector<IngestIssue> issues;

    bool operator==(const IngestReport&) const = default;
};

nlohmann::ordered_json to_json(const IngestReport& r);

std::filesystem::path default_quarantine_path(const std::filesystem::path& input);

template <class Record>
using RecordSink = std::function<void(Record&&)>;

/// Stream records in file order. Malformed rows go to the quarantine sidecar
/// and the report; header problems and unreadable files throw.
IngestReport load_tests(const std::filesystem::path& path, const IngestConfig& config,
                        const RecordSink<TestRecord>& sink);
IngestReport load_patients(const std::filesystem::path& path, const IngestConfig& config,
                           const RecordSink<PatientRecord>& sink);
IngestReport load_outcomes(const std::filesystem::path& path, const IngestConfig& config,
                           const RecordSink<OutcomeRecord>& sink);

/// Collecting convenience wrappers.
std::pair<std::vector<TestRecord>, IngestReport> read_tests(const std::filesystem::path& path,
                                                            const IngestConfig& config);
std::pair<std::vector<PatientRecord>, IngestReport> read_patients(
    const std::filesystem::path& path, const IngestConfig& config);

/// Patient ids present in only one of two files (e.g. a patient file and its
/// tests file). Recorded, never resolved.
struct IdMismatch {
    std::int64_t only_in_patients = 0;
    std::int64_t only_in_tests = 0;
    std::int64_t shared = 0;
};

IdMismatch compare_ids(std::vector<std::string> patient_ids, std::vector<std::string> test_ids);

}  // namespace labclean
