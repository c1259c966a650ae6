#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "labclean/cleanse.hpp"
#include "labclean/ingest.hpp"
#include "labclean/profile.hpp"
#include "labclean/schema.hpp"

namespace labclean {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum class TableFormat { Csv, Markdown, Structured };

/// Column sums with the reduction recomputed from the summed counts.
ReductionRow total_row(std::span<const ReductionRow> rows);

/// Columns: analyte, initial, only_numericals, not_null, range[, std_clip], reduction,
/// followed by a "Total" row. The std_clip column appears only when some row carries it.
std::string emit_reduction_table(std::span<const ReductionRow> rows, TableFormat format);

/// Inverse of the CSV form. The Total row is checked against the column sums and dropped.
/// Throws ValidationError on malformed input or an inconsistent total.
std::vector<ReductionRow> parse_reduction_csv(std::string_view csv);

struct SvgOptions {
    int box_width = 40;
    int spacing = 80;
    int plot_height = 360;
    int margin = 50;
    std::string title = "Boxplot";
};

/// One <g class="box"> group per analyte, outliers as <circle> points.
/// Identical input and options give identical bytes. Throws EmptyInput.
std::string emit_boxplot_svg(std::span<const BoxplotStats> stats, const SvgOptions& options = {});

struct ReportMetadata {
    std::string tool_version{kToolVersion};
    std::string config_hash;
};

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

nlohmann::ordered_json to_json(const ColumnSummary& s);
nlohmann::ordered_json to_json(const BoxplotStats& s);
nlohmann::ordered_json to_json(const ReductionRow& r);
nlohmann::ordered_json to_json(const TestsProfile& p, const ReportMetadata& meta);
nlohmann::ordered_json to_json(const PatientsProfile& p, const ReportMetadata& meta);
nlohmann::ordered_json to_json(const OutcomesProfile& p, const ReportMetadata& meta);

std::string periods_csv(std::span<const PeriodCount> periods);
std::string ranking_csv(const MonthlyRanking& ranking);
std::string covid_csv(std::span<const CovidMonth> months);
std::string sex_csv(const SexDistribution& d);
std::string age_csv(const AgeDistribution& d);

/// Header (patient_id, analyte, raw_result, stage, reason) plus one line per reject.
std::string rejects_csv_header();
std::string rejects_csv_line(const Reject& r);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace labclean
