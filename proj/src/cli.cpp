#include "labclean/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "labclean/cleanse.hpp"
#include "labclean/covid.hpp"
#include "labclean/error.hpp"
#include "labclean/ingest.hpp"
#include "labclean/kvconfig.hpp"
#include "labclean/profile.hpp"
#include "labclean/report.hpp"
#include "labclean/synthgen.hpp"
#include "labclean/text.hpp"

namespace labclean {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

class Logger {
public:
    explicit Logger(std::ostream& err) : err_(err) {}

    void write(std::string_view level, std::string_view event, ordered_json fields = ordered_json::object()) {
        ordered_json line;
        line["level"] = level;
        line["event"] = event;
        for (auto& [k, v] : fields.items()) line[k] = v;
        err_ << line.dump() << '\n';
    }

    void info(std::string_view event, ordered_json fields = ordered_json::object()) {
        write("info", event, std::move(fields));
    }

private:
    std::ostream& err_;
};

// Flag values as parsed; unset options fall back to the config file, then to defaults.
struct Flags {
    std::vector<std::string> inputs;
    std::optional<std::string> config;
    std::optional<std::string> kind;
    std::optional<std::string> delimiter;
    std::optional<std::string> encoding;
    std::optional<bool> fix_mojibake;
    std::optional<double> std_k;
    std::optional<int> reference_year;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<std::string> covid_vocab;
    std::optional<std::string> reference_table;
    std::optional<bool> positive_window;
};

struct RunConfig {
    std::vector<fs::path> inputs;
    TableKind kind = TableKind::Tests;
    char delimiter = '|';
    EncodingPolicy encoding = EncodingPolicy::Utf8ThenLatin1;
    bool fix_mojibake = false;
    std::optional<double> std_k;
    int reference_year = kDefaultReferenceYear;
    fs::path out = ".";
    unsigned threads = 1;
    std::optional<fs::path> covid_vocab;
    std::optional<fs::path> reference_table;
    bool positive_window = false;

    IngestConfig ingest(const fs::path& input) const {
        IngestConfig c;
        c.quarantine_path = default_quarantine_path(input);
        c.delimiter = delimiter;
        c.encoding = encoding;
        c.fix_mojibake = fix_mojibake;
        c.reference_year = reference_year;
        c.threads = threads;
        return c;
    }

    CovidVocabulary vocabulary() const {
        return covid_vocab ? CovidVocabulary::load(*covid_vocab) : CovidVocabulary::einstein_default();
    }

    /// Everything that affects output bytes; threads and paths are left out.
    std::string canonical() const {
        std::ostringstream o;
        o << "kind=" << to_string(kind) << ";delimiter=" << delimiter << ";encoding=" << to_string(encoding)
          << ";fix_mojibake=" << fix_mojibake << ";std_k=" << (std_k ? format_number(*std_k) : "off")
          << ";reference_year=" << reference_year << ";positive_window=" << positive_window;
        if (covid_vocab) o << ";covid_vocab=" << fnv1a_hex(read_file(*covid_vocab));
        if (reference_table) o << ";reference_table=" << fnv1a_hex(read_file(*reference_table));
        return o.str();
    }

    static std::string read_file(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw IoError(p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

char parse_delimiter(const std::string& s) {
    if (s == "\\t" || s == "tab") return '\t';
    if (s.size() != 1 || s[0] == '"' || s[0] == '\n' || s[0] == '\r')
        throw ConfigError("delimiter must be a single character, got '" + s + "'");
    return s[0];
}

unsigned default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

RunConfig resolve(const Flags& f) {
    static const std::set<std::string> known = {"kind", "delimiter", "encoding", "fix_mojibake", "std_k",
                                                "reference_year", "out", "threads", "covid_vocab",
                                                "reference_table", "positive_window", "input"};
    KvTable file;
    if (f.config) {
        auto doc = load_kv(*f.config);
        if (!doc.arrays.empty()) throw ConfigError(*f.config + ": tables are not allowed in a run config");
        for (const auto& k : doc.root.keys())
            if (!known.count(k)) throw ConfigError(*f.config + ": unknown key '" + k + "'");
        file = doc.root;
    }
    auto pick = [&](const auto& flag, const char* key) -> std::optional<std::string> {
        if (flag) {
            std::ostringstream o;
            o << *flag;
            return o.str();
        }
        return file.get(key);
    };

    RunConfig c;
    if (!f.inputs.empty()) {
        c.inputs.assign(f.inputs.begin(), f.inputs.end());
    } else {
        for (const auto& p : file.get_list("input", {})) c.inputs.emplace_back(p);
    }
    if (auto k = f.kind ? f.kind : file.get("kind")) {
        auto parsed = parse_table_kind(*k);
        if (!parsed) throw ConfigError("kind must be patient, tests or outcome, got '" + *k + "'");
        c.kind = *parsed;
    }
    if (auto d = f.delimiter ? f.delimiter : file.get("delimiter")) c.delimiter = parse_delimiter(*d);
    if (auto e = f.encoding ? f.encoding : file.get("encoding")) {
        auto parsed = parse_encoding_policy(*e);
        if (!parsed) throw ConfigError("encoding must be strict-utf8 or utf8-then-latin1, got '" + *e + "'");
        c.encoding = *parsed;
    }
    c.fix_mojibake = f.fix_mojibake ? *f.fix_mojibake : file.get_bool("fix_mojibake", false);
    if (f.std_k) c.std_k = *f.std_k;
    else if (file.has("std_k")) c.std_k = file.get_double("std_k", 0);
    if (c.std_k && !(*c.std_k > 0)) throw ConfigError("std-k must be positive");
    c.reference_year = f.reference_year ? *f.reference_year
                                        : static_cast<int>(file.get_int("reference_year", kDefaultReferenceYear));
    if (auto o = pick(f.out, "out")) c.out = *o;
    const long long threads = f.threads ? *f.threads : file.get_int("threads", default_threads());
    if (threads < 1) throw ConfigError("threads must be at least 1");
    c.threads = static_cast<unsigned>(threads);
    if (auto v = pick(f.covid_vocab, "covid_vocab")) c.covid_vocab = *v;
    if (auto v = pick(f.reference_table, "reference_table")) c.reference_table = *v;
    c.positive_window = f.positive_window ? *f.positive_window : file.get_bool("positive_window", false);
    return c;
}

void require_inputs(const RunConfig& c) {
    if (c.inputs.empty()) throw ConfigError("no --input given");
    for (const auto& p : c.inputs)
        if (!fs::is_regular_file(p)) throw IoError(p.string(), "input not found");
}

void prepare_out(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create output directory");
}

void add_ingest_fields(ordered_json& j, const fs::path& input, const IngestReport& r) {
    j["input"] = input.string();
    j["rows_read"] = r.rows_read;
    j["rows_ok"] = r.rows_ok;
    j["rows_quarantined"] = r.rows_quarantined;
    j["encoding_used"] = std::string(to_string(r.encoding_used));
    j["mojibake_suspects"] = r.mojibake_suspects;
}

ordered_json ingest_reports_json(const std::vector<std::pair<fs::path, IngestReport>>& reports) {
    if (reports.size() == 1) return to_json(reports.front().second);
    auto arr = ordered_json::array();
    for (const auto& [path, r] : reports) {
        auto j = to_json(r);
        j["input"] = path.filename().string();
        arr.push_back(std::move(j));
    }
    return arr;
}

// ---------------------------------------------------------------------------

std::string utc_now() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    const auto day = std::chrono::floor<std::chrono::days>(now);
    const std::chrono::hh_mm_ss hms{now - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", to_iso(Date{day}).c_str(),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

// Timestamps live here so the main artifacts stay byte-stable across runs.
void write_run_metadata(const RunConfig& c, std::string_view command, const std::string& started) {
    ordered_json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = fnv1a_hex(c.canonical());
    j["threads"] = c.threads;
    j["started_at"] = started;
    j["finished_at"] = utc_now();
    write_text_file(c.out / "run_metadata.json", j.dump(2) + "\n");
}

int cmd_profile(const RunConfig& c, std::ostream& out, Logger& log) {
    const std::string started = utc_now();
    require_inputs(c);
    prepare_out(c.out);
    const ReportMetadata meta{std::string(kToolVersion), fnv1a_hex(c.canonical())};
    std::vector<std::pair<fs::path, IngestReport>> reports;
    ordered_json profile;

    if (c.kind == TableKind::Tests) {
        TestsProfileOptions opts;
        opts.covid = c.vocabulary();
        TestsProfiler profiler(opts);
        for (const auto& in : c.inputs)
            reports.emplace_back(in, load_tests(in, c.ingest(in), [&](TestRecord&& t) { profiler.add(t); }));
        const auto p = profiler.finish();
        profile = to_json(p, meta);
        write_text_file(c.out / "exams_per_day.csv", periods_csv(p.per_day));
        write_text_file(c.out / "exams_per_month.csv", periods_csv(p.per_month));
        write_text_file(c.out / "top_exams_by_month.csv", ranking_csv(p.top_exams));
        write_text_file(c.out / "top_analytes_by_month.csv", ranking_csv(p.top_analytes));
        write_text_file(c.out / "covid_by_month.csv", covid_csv(p.covid));
        if (!p.boxplots.empty()) write_text_file(c.out / "boxplots.svg", emit_boxplot_svg(p.boxplots));
        if (!p.unmapped_covid_labels.empty())
            log.write("warn", "unmapped_covid_labels", {{"labels", p.unmapped_covid_labels}});
    } else if (c.kind == TableKind::Patient) {
        PatientsProfiler profiler(c.reference_year);
        for (const auto& in : c.inputs)
            reports.emplace_back(in, load_patients(in, c.ingest(in), [&](PatientRecord&& r) { profiler.add(r); }));
        const auto p = profiler.finish();
        profile = to_json(p, meta);
        write_text_file(c.out / "sex_distribution.csv", sex_csv(p.sex));
        write_text_file(c.out / "age_distribution.csv", age_csv(p.age));
    } else {
        OutcomesProfiler profiler;
        for (const auto& in : c.inputs)
            reports.emplace_back(in, load_outcomes(in, c.ingest(in), [&](OutcomeRecord&& r) { profiler.add(r); }));
        const auto p = profiler.finish();
        profile = to_json(p, meta);
        write_text_file(c.out / "outcomes_per_month.csv", periods_csv(p.per_month));
    }

    write_text_file(c.out / "profile.json", profile.dump(2) + "\n");
    write_text_file(c.out / "ingest_report.json", ingest_reports_json(reports).dump(2) + "\n");
    for (const auto& [path, r] : reports) {
        ordered_json j;
        add_ingest_fields(j, path, r);
        log.info("ingested", j);
    }
    write_run_metadata(c, "profile", started);
    out << (c.out / "profile.json").string() << "\n";
    log.info("profile_written", {{"out", c.out.string()}, {"config_hash", meta.config_hash}});
    return 0;
}

std::string cleaned_header(char d) {
    return text::join_record({"patient_id", "collected_on", "origin", "exam", "analyte", "raw_result", "unit",
                              "raw_reference", "clean_stage_passed"},
                             d) +
           "\n";
}

std::string cleaned_line(const TestRecord& t, Stage stage, char d) {
    return text::join_record({t.patient_id(), to_iso(t.collected_on()), t.origin(), t.exam(), t.analyte(),
                              t.raw_result(), t.unit().value_or(""), t.raw_reference().value_or(""),
                              std::string(to_string(stage))},
                             d) +
           "\n";
}

class BufferedFile {
public:
    explicit BufferedFile(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw IoError(path.string(), "cannot write");
    }
    void put(const std::string& s) {
        buffer_ += s;
        if (buffer_.size() > (1u << 20)) flush();
    }
    void close() {
        flush();
        out_.close();
        if (!out_) throw IoError(path_.string(), "write failed");
    }

private:
    void flush() {
        out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
        buffer_.clear();
    }
    fs::path path_;
    std::ofstream out_;
    std::string buffer_;
};

int cmd_clean(const RunConfig& c, std::ostream& out, Logger& log) {
    if (c.kind != TableKind::Tests) throw ConfigError("clean works on tests tables only");
    const std::string started = utc_now();
    require_inputs(c);
    prepare_out(c.out);

    PipelineConfig pc;
    pc.std_multiplier = c.std_k;
    pc.threads = c.threads;
    if (c.reference_table) {
        pc.reference_source = ReferenceSource::ExternalTable;
        pc.external_references = load_reference_table(*c.reference_table);
    }
    pc.validate();

    auto quiet = [&](const fs::path& in) {
        auto cfg = c.ingest(in);
        cfg.write_quarantine = false;
        return cfg;
    };
    std::optional<PositiveWindows> windows;
    if (c.positive_window) {
        const auto vocab = c.vocabulary();
        std::vector<CovidEvent> events;
        for (const auto& in : c.inputs)
            load_tests(in, quiet(in), [&](TestRecord&& t) {
                if (!vocab.covers(t.analyte())) return;
                if (auto s = vocab.classify(t.analyte(), parse_result(t.raw_result())))
                    events.push_back(CovidEvent{t.patient_id(), t.collected_on(), *s});
            });
        windows.emplace(events);
        log.info("positive_windows", {{"patients", windows->patients()}});
    }
    auto selected = [&](const TestRecord& t) {
        return !windows || windows->contains(t.patient_id(), t.collected_on());
    };

    CleansingPipeline pipeline(pc);
    std::vector<std::pair<fs::path, IngestReport>> reports;
    for (const auto& in : c.inputs)
        reports.emplace_back(in, load_tests(in, c.ingest(in), [&](TestRecord&& t) {
                                 if (selected(t)) pipeline.observe(t);
                             }));
    pipeline.finalize();

    BufferedFile cleaned(c.out / "cleaned.csv");
    BufferedFile rejects(c.out / "rejects.csv");
    cleaned.put(cleaned_header(c.delimiter));
    rejects.put(rejects_csv_header());
    for (const auto& in : c.inputs)
        load_tests(in, quiet(in), [&](TestRecord&& t) {
            if (!selected(t)) return;
            const Verdict v = pipeline.judge(t);
            if (v.kept)
                cleaned.put(cleaned_line(t, v.stage, c.delimiter));
            else
                rejects.put(rejects_csv_line(Reject{t.patient_id(), t.analyte(), t.raw_result(), v.stage, v.reason}));
        });
    cleaned.close();
    rejects.close();

    const auto rows = pipeline.reduction();
    write_text_file(c.out / "reduction.csv", emit_reduction_table(rows, TableFormat::Csv));
    write_text_file(c.out / "ingest_report.json", ingest_reports_json(reports).dump(2) + "\n");
    write_run_metadata(c, "clean", started);
    out << emit_reduction_table(rows, TableFormat::Markdown);

    for (const auto& [path, r] : reports) {
        ordered_json j;
        add_ingest_fields(j, path, r);
        log.info("ingested", j);
    }
    const auto missing = pipeline.analytes_without_reference();
    if (!missing.empty()) log.write("warn", "analytes_without_reference", {{"analytes", missing}});
    if (pipeline.reference_parse_misses() > 0 || pipeline.reference_swaps() > 0)
        log.write("warn", "reference_parse",
                  {{"misses", pipeline.reference_parse_misses()}, {"swapped", pipeline.reference_swaps()}});
    log.info("clean_written", {{"out", c.out.string()}, {"analytes", rows.size()}});
    return 0;
}

BoxplotStats boxplot_from_json(const nlohmann::json& j) {
    BoxplotStats b;
    b.analyte = j.at("analyte").get<std::string>();
    b.n = j.at("n").get<decltype(b.n)>();
    b.q1 = j.at("q1").get<double>();
    b.median = j.at("median").get<double>();
    b.q3 = j.at("q3").get<double>();
    b.whisker_low = j.at("whisker_low").get<double>();
    b.whisker_high = j.at("whisker_high").get<double>();
    b.outliers = j.at("outliers").get<std::vector<double>>();
    return b;
}

int cmd_report(const RunConfig& c, std::ostream& out, Logger& log) {
    require_inputs(c);
    prepare_out(c.out);
    for (const auto& in : c.inputs) {
        const std::string content = RunConfig::read_file(in);
        if (in.extension() == ".json") {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(content);
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError(in.string(), "", e.what());
            }
            std::vector<BoxplotStats> boxes;
            try {
                for (const auto& b : j.at("boxplots")) boxes.push_back(boxplot_from_json(b));
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError(in.string(), "boxplots", e.what());
            }
            write_text_file(c.out / "boxplots.svg", emit_boxplot_svg(boxes));
            log.info("boxplots_written", {{"input", in.string()}, {"analytes", boxes.size()}});
        } else {
            const auto rows = parse_reduction_csv(content);
            write_text_file(c.out / "reduction.md", emit_reduction_table(rows, TableFormat::Markdown));
            write_text_file(c.out / "reduction.json", emit_reduction_table(rows, TableFormat::Structured));
            out << emit_reduction_table(rows, TableFormat::Markdown);
            log.info("reduction_rendered", {{"input", in.string()}, {"analytes", rows.size()}});
        }
    }
    return 0;
}

int cmd_synth(const std::optional<std::string>& spec_path, const std::optional<std::string>& preset,
              const std::optional<long long>& seed, const Flags& f, std::ostream& out, Logger& log) {
    SynthSpec spec;
    if (spec_path && preset) throw ConfigError("give either a spec file or --preset, not both");
    if (spec_path) {
        if (!fs::is_regular_file(*spec_path)) throw IoError(*spec_path, "spec not found");
        spec = load_synth_spec(*spec_path);
    } else if (preset) {
        spec = synth_preset(*preset);
    } else {
        throw ConfigError("synth needs a spec file or --preset");
    }
    if (seed) {
        if (*seed < 0) throw ConfigError("seed must not be negative");
        spec.seed = static_cast<std::uint64_t>(*seed);
    }
    if (f.delimiter) spec.delimiter = parse_delimiter(*f.delimiter);
    spec.validate();
    const fs::path dir = f.out ? fs::path(*f.out) : fs::path(".");
    const auto result = generate(spec, dir);
    out << result.manifest_path.string() << "\n";
    log.info("synth_written", {{"out", dir.string()},
                               {"test_rows", result.manifest.test_rows},
                               {"patient_rows", result.manifest.patient_rows},
                               {"spec_hash", result.manifest.spec_hash}});
    return 0;
}

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--input,-i", f.inputs, "Input file (repeatable)");
    cmd->add_option("--config", f.config, "Flat key = value run config; flags win");
    cmd->add_option("--kind", f.kind, "patient | tests | outcome");
    cmd->add_option("--delimiter", f.delimiter, "Field delimiter (default |)");
    cmd->add_option("--encoding", f.encoding, "strict-utf8 | utf8-then-latin1");
    cmd->add_flag("--fix-mojibake", f.fix_mojibake, "Repair double-encoded text");
    cmd->add_option("--reference-year", f.reference_year, "Year ages are computed against");
    cmd->add_option("--out,-o", f.out, "Output directory");
    cmd->add_option("--threads", f.threads, "Worker threads (default: all cores)");
    cmd->add_option("--covid-vocab", f.covid_vocab, "analyte|label|status vocabulary file");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Logger log(err);
    CLI::App app{"Clinical laboratory data cleaning toolkit", "labclean"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Flags f;
    auto* profile = app.add_subcommand("profile", "Profile a patient, tests or outcome table");
    add_common(profile, f);

    auto* clean = app.add_subcommand("clean", "Run the staged cleaning pipeline on a tests table");
    add_common(clean, f);
    clean->add_option("--std-k", f.std_k, "Enable the std-clip stage with this multiplier");
    clean->add_option("--reference-table", f.reference_table, "analyte,reference CSV replacing in-data ranges");
    clean->add_flag("--positive-window", f.positive_window, "Keep only tests inside COVID positive windows");

    auto* report = app.add_subcommand("report", "Re-render reduction.csv or profile.json boxplots");
    add_common(report, f);

    std::optional<std::string> spec_path, preset;
    std::optional<long long> seed;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with a ground-truth manifest");
    synth->add_option("spec", spec_path, "Spec file");
    synth->add_option("--preset", preset, "einstein | fleury | sl | small");
    synth->add_option("--seed", seed, "Override the spec seed");
    synth->add_option("--out,-o", f.out, "Output directory");
    synth->add_option("--delimiter", f.delimiter, "Field delimiter");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(spec_path, preset, seed, f, out, log);
        const RunConfig c = resolve(f);
        if (profile->parsed()) return cmd_profile(c, out, log);
        if (clean->parsed()) return cmd_clean(c, out, log);
        return cmd_report(c, out, log);
    } catch (const Error& e) {
        log.write("error", "failed", {{"message", e.what()}, {"exit_code", e.exit_code()}});
        return e.exit_code();
    } catch (const std::exception& e) {
        log.write("error", "internal", {{"message", e.what()}});
        return 2;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace labclean
