#include "labclean/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "labclean/error.hpp"
#include "labclean/text.hpp"

namespace labclean {

ReductionRow total_row(std::span<const ReductionRow> rows) {
    std::int64_t initial = 0, numeric = 0, not_null = 0, in_range = 0, after = 0;
    bool has_std = false;
    for (const auto& r : rows) {
        initial += r.initial;
        numeric += r.numeric_only;
        not_null += r.not_null;
        in_range += r.in_range;
        if (r.after_std_clip) {
            has_std = true;
            after += *r.after_std_clip;
        } else {
            after += r.in_range;
        }
    }
    return ReductionRow::create("Total", initial, numeric, not_null, in_range,
                                has_std ? std::optional<std::int64_t>(after) : std::nullopt);
}

namespace {

bool any_std(std::span<const ReductionRow> rows) {
    return std::any_of(rows.begin(), rows.end(),
                       [](const ReductionRow& r) { return r.after_std_clip.has_value(); });
}

std::vector<std::string> header_names(bool with_std) {
    std::vector<std::string> h{"analyte", "initial", "only_numericals", "not_null", "range"};
    if (with_std) h.emplace_back("std_clip");
    h.emplace_back("reduction");
    return h;
}

std::vector<std::string> row_cells(const ReductionRow& r, bool with_std) {
    std::vector<std::string> c{r.analyte, std::to_string(r.initial),
                               std::to_string(r.numeric_only), std::to_string(r.not_null),
                               std::to_string(r.in_range)};
    if (with_std) c.push_back(std::to_string(r.after_std_clip.value_or(r.in_range)));
    c.push_back(r.reduction.str());
    return c;
}

std::string markdown_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string emit_reduction_table(std::span<const ReductionRow> rows, TableFormat format) {
    const bool with_std = any_std(rows);
    const auto total = total_row(rows);
    const auto header = header_names(with_std);

    if (format == TableFormat::Structured) {
        nlohmann::ordered_json doc;
        doc["columns"] = header;
        doc["rows"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) doc["rows"].push_back(to_json(r));
        doc["total"] = to_json(total);
        return doc.dump(2) + "\n";
    }

    std::string out;
    if (format == TableFormat::Csv) {
        out += text::join_record(header, ',') + "\n";
        for (const auto& r : rows) out += text::join_record(row_cells(r, with_std), ',') + "\n";
        out += text::join_record(row_cells(total, with_std), ',') + "\n";
        return out;
    }

    auto line = [&](const std::vector<std::string>& cells) {
        out += "|";
        for (const auto& c : cells) out += " " + markdown_cell(c) + " |";
        out += "\n";
    };
    line(header);
    out += "|---|";
    for (std::size_t i = 1; i < header.size(); ++i) out += "---:|";
    out += "\n";
    for (const auto& r : rows) line(row_cells(r, with_std));
    line(row_cells(total, with_std));
    return out;
}

namespace {

std::int64_t parse_count(const std::string& s, const char* field) {
    if (s.empty()) throw ValidationError(field, s, "expected a count");
    std::int64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') throw ValidationError(field, s, "expected a count");
        v = v * 10 + (c - '0');
    }
    return v;
}

Percent2 parse_percent(const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos || s.size() - dot != 3)
        throw ValidationError("reduction", s, "expected a two-decimal percentage");
    return Percent2{parse_count(s.substr(0, dot), "reduction") * 100 +
                    parse_count(s.substr(dot + 1), "reduction")};
}

}  // namespace

std::vector<ReductionRow> parse_reduction_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("header", "", "empty reduction table");
    const auto header = text::split_record(line, ',');
    bool with_std;
    if (header == header_names(false))
        with_std = false;
    else if (header == header_names(true))
        with_std = true;
    else
        throw ValidationError("header", line, "unexpected reduction table header");

    std::vector<ReductionRow> rows;
    std::string pending;
    while (std::getline(in, line)) {
        pending += pending.empty() ? line : "\n" + line;
        if (text::has_open_quote(pending, ',')) continue;
        auto c = text::split_record(pending, ',');
        pending.clear();
        if (c.size() != header.size())
            throw ValidationError("row", line, "wrong number of cells");
        std::optional<std::int64_t> after;
        if (with_std) after = parse_count(c[5], "std_clip");
        auto row = ReductionRow::create(c[0], parse_count(c[1], "initial"),
                                        parse_count(c[2], "only_numericals"),
                                        parse_count(c[3], "not_null"), parse_count(c[4], "range"),
                                        after);
        if (row.reduction != parse_percent(c.back()))
            throw ValidationError("reduction", c.back(), "does not match the row counts");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("total", "", "missing Total row");
    ReductionRow total = rows.back();
    rows.pop_back();
    auto expected = total_row(rows);
    expected.analyte = total.analyte;
    if (total != expected)
        throw ValidationError("total", total.analyte, "does not equal the column sums");
    return rows;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

}  // namespace

std::string emit_boxplot_svg(std::span<const BoxplotStats> stats, const SvgOptions& o) {
    if (stats.empty()) throw EmptyInput("no boxplots to draw");
    double lo = stats.front().whisker_low, hi = stats.front().whisker_high;
    for (const auto& s : stats) {
        lo = std::min(lo, s.whisker_low);
        hi = std::max(hi, s.whisker_high);
        for (double x : s.outliers) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const double top = o.margin;
    const double bottom = o.margin + o.plot_height;
    auto y = [&](double v) { return bottom - (v - lo) / span * o.plot_height; };

    const int width = 2 * o.margin + o.spacing * static_cast<int>(stats.size());
    const int height = 2 * o.margin + o.plot_height + 40;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<title>" << xml_escape(o.title) << "</title>\n"
        << "<line class=\"axis\" x1=\"" << o.margin << "\" y1=\"" << num(top) << "\" x2=\""
        << o.margin << "\" y2=\"" << num(bottom) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << o.margin - 5 << "\" y=\"" << num(y(hi)) << "\" text-anchor=\"end\">"
        << num(hi) << "</text>\n"
        << "<text x=\"" << o.margin - 5 << "\" y=\"" << num(y(lo)) << "\" text-anchor=\"end\">"
        << num(lo) << "</text>\n";

    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        const double cx = o.margin + o.spacing * (static_cast<double>(i) + 0.5);
        const double half = o.box_width / 2.0;
        svg << "<g class=\"box\" data-analyte=\"" << xml_escape(s.analyte) << "\" data-n=\""
            << s.n << "\">\n"
            << "  <line class=\"whisker\" x1=\"" << num(cx) << "\" y1=\"" << num(y(s.whisker_low))
            << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y(s.q1)) << "\" stroke=\"black\"/>\n"
            << "  <line class=\"whisker\" x1=\"" << num(cx) << "\" y1=\"" << num(y(s.q3))
            << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y(s.whisker_high))
            << "\" stroke=\"black\"/>\n"
            << "  <rect class=\"iqr\" x=\"" << num(cx - half) << "\" y=\"" << num(y(s.q3))
            << "\" width=\"" << o.box_width << "\" height=\"" << num(y(s.q1) - y(s.q3))
            << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n"
            << "  <line class=\"median\" x1=\"" << num(cx - half) << "\" y1=\"" << num(y(s.median))
            << "\" x2=\"" << num(cx + half) << "\" y2=\"" << num(y(s.median))
            << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        for (double x : s.outliers)
            svg << "  <circle class=\"outlier\" cx=\"" << num(cx) << "\" cy=\"" << num(y(x))
                << "\" r=\"2\" fill=\"none\" stroke=\"red\"/>\n";
        svg << "  <text x=\"" << num(cx) << "\" y=\"" << num(bottom + 20)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << xml_escape(s.analyte)
            << "</text>\n"
            << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---------------------------------------------------------------------------
// JSON and CSV

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::ordered_json to_json(const ColumnSummary& s) {
    return {{"name", s.name},
            {"count", s.count},
            {"distinct", s.distinct},
            {"mode", s.mode},
            {"mode_freq", s.mode_freq}};
}

nlohmann::ordered_json to_json(const BoxplotStats& s) {
    return {{"analyte", s.analyte},   {"n", s.n},
            {"q1", s.q1},             {"median", s.median},
            {"q3", s.q3},             {"whisker_low", s.whisker_low},
            {"whisker_high", s.whisker_high}, {"outliers", s.outliers}};
}

nlohmann::ordered_json to_json(const ReductionRow& r) {
    nlohmann::ordered_json j = {{"analyte", r.analyte},
                                {"initial", r.initial},
                                {"only_numericals", r.numeric_only},
                                {"not_null", r.not_null},
                                {"range", r.in_range}};
    if (r.after_std_clip) j["std_clip"] = *r.after_std_clip;
    j["reduction"] = r.reduction.str();
    return j;
}

namespace {

nlohmann::ordered_json meta_json(const ReportMetadata& m, std::string_view kind) {
    return {{"kind", kind}, {"tool_version", m.tool_version}, {"config_hash", m.config_hash}};
}

nlohmann::ordered_json columns_json(const std::vector<ColumnSummary>& cols) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& c : cols) out.push_back(to_json(c));
    return out;
}

nlohmann::ordered_json periods_json(const std::vector<PeriodCount>& periods) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& p : periods) out.push_back({{"period", p.period}, {"count", p.count}});
    return out;
}

nlohmann::ordered_json ranking_json(const MonthlyRanking& ranking) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [month, list] : ranking) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& v : list) arr.push_back({{"value", v.value}, {"count", v.count}});
        out[month] = std::move(arr);
    }
    return out;
}

}  // namespace

nlohmann::ordered_json to_json(const TestsProfile& p, const ReportMetadata& meta) {
    nlohmann::ordered_json j;
    j["metadata"] = meta_json(meta, "tests");
    j["records"] = p.records;
    j["columns"] = columns_json(p.columns);
    j["exams_per_day"] = periods_json(p.per_day);
    j["exams_per_month"] = periods_json(p.per_month);
    j["top_exams_by_month"] = ranking_json(p.top_exams);
    j["top_analytes_by_month"] = ranking_json(p.top_analytes);
    auto covid = nlohmann::ordered_json::array();
    for (const auto& c : p.covid)
        covid.push_back({{"month", c.month},
                         {"detected", c.detected},
                         {"not_detected", c.not_detected},
                         {"inconclusive", c.inconclusive}});
    j["covid_by_month"] = std::move(covid);
    j["unmapped_covid_labels"] = p.unmapped_covid_labels;
    auto boxes = nlohmann::ordered_json::array();
    for (const auto& b : p.boxplots) boxes.push_back(to_json(b));
    j["boxplots"] = std::move(boxes);
    return j;
}

nlohmann::ordered_json to_json(const PatientsProfile& p, const ReportMetadata& meta) {
    nlohmann::ordered_json j;
    j["metadata"] = meta_json(meta, "patient");
    j["records"] = p.records;
    j["columns"] = columns_json(p.columns);
    j["sex_distribution"] = {{"F", {{"count", p.sex.female}, {"pct", p.sex.female_pct.str()}}},
                             {"M", {{"count", p.sex.male}, {"pct", p.sex.male_pct.str()}}}};
    auto ages = nlohmann::ordered_json::array();
    for (const auto& [age, n] : p.age.by_age) ages.push_back({{"age", age}, {"count", n}});
    j["age_distribution"] = {{"reference_year", p.age.reference_year},
                             {"ages", std::move(ages)},
                             {"90+", p.age.sentinel_90_plus}};
    return j;
}

nlohmann::ordered_json to_json(const OutcomesProfile& p, const ReportMetadata& meta) {
    nlohmann::ordered_json j;
    j["metadata"] = meta_json(meta, "outcome");
    j["records"] = p.records;
    j["columns"] = columns_json(p.columns);
    j["outcomes_per_month"] = periods_json(p.per_month);
    return j;
}

std::string periods_csv(std::span<const PeriodCount> periods) {
    std::string out = "period,count\n";
    for (const auto& p : periods) out += p.period + "," + std::to_string(p.count) + "\n";
    return out;
}

std::string ranking_csv(const MonthlyRanking& ranking) {
    std::string out = "month,rank,value,count\n";
    for (const auto& [month, list] : ranking)
        for (std::size_t i = 0; i < list.size(); ++i)
            out += month + "," + std::to_string(i + 1) + "," + text::quote_field(list[i].value, ',') +
                   "," + std::to_string(list[i].count) + "\n";
    return out;
}

std::string covid_csv(std::span<const CovidMonth> months) {
    std::string out = "month,detected,not_detected,inconclusive\n";
    for (const auto& m : months)
        out += m.month + "," + std::to_string(m.detected) + "," + std::to_string(m.not_detected) +
               "," + std::to_string(m.inconclusive) + "\n";
    return out;
}

std::string sex_csv(const SexDistribution& d) {
    return "sex,count,pct\nF," + std::to_string(d.female) + "," + d.female_pct.str() + "\nM," +
           std::to_string(d.male) + "," + d.male_pct.str() + "\n";
}

std::string age_csv(const AgeDistribution& d) {
    std::string out = "age,count\n";
    for (const auto& [age, n] : d.by_age) out += std::to_string(age) + "," + std::to_string(n) + "\n";
    out += "90+," + std::to_string(d.sentinel_90_plus) + "\n";
    return out;
}

std::string rejects_csv_header() { return "patient_id,analyte,raw_result,stage,reason\n"; }

std::string rejects_csv_line(const Reject& r) {
    return text::join_record({r.patient_id, r.analyte, r.raw_result, std::string(to_string(r.stage)),
                              std::string(to_string(r.reason))},
                             ',') +
           "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot write");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace labclean
