#include "labclean/cleanse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "labclean/error.hpp"
#include "labclean/text.hpp"

namespace labclean {

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::NumericOnly: return "numeric_only";
        case Stage::NotNull: return "not_null";
        case Stage::Range: return "range";
        case Stage::StdClip: return "std_clip";
    }
    return "?";
}

std::string_view to_string(RejectReason r) {
    switch (r) {
        case RejectReason::NonNumeric: return "NonNumeric";
        case RejectReason::Censored: return "Censored";
        case RejectReason::Null: return "Null";
        case RejectReason::NoReference: return "NoReference";
        case RejectReason::OutOfRange: return "OutOfRange";
        case RejectReason::StdClip: return "StdClip";
    }
    return "?";
}

void PipelineConfig::validate() const {
    if (std_multiplier && !(*std_multiplier > 0.0 && std::isfinite(*std_multiplier)))
        throw ConfigError("std multiplier must be a positive finite number, got " +
                          std::to_string(*std_multiplier));
}

std::map<std::string, ReferenceRange> load_reference_table(const std::filesystem::path& path,
                                                           const ValueParseConfig& values) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string());
    std::map<std::string, std::vector<ReferenceRange>> collected;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header) {
            header = false;
            continue;
        }
        if (text::trim(line).empty()) continue;
        auto fields = text::split_record(line, ',');
        if (fields.size() != 2)
            throw ConfigError("reference table " + path.string() + ": expected analyte,reference");
        collected[std::string(text::trim(fields[0]))].push_back(
            parse_reference(std::string_view(fields[1]), values));
    }
    std::map<std::string, ReferenceRange> out;
    for (auto& [analyte, ranges] : collected) out[analyte] = merge_references(ranges);
    return out;
}

double sorted_median(std::span<const double> sorted) {
    if (sorted.empty()) throw EmptyInput("median of an empty sequence");
    const std::size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

double sorted_sample_std(std::span<const double> sorted) {
    const std::size_t n = sorted.size();
    if (n < 2) return 0.0;
    double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : sorted) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

StdWindow StdWindow::fit(std::span<const double> sorted, double k) {
    StdWindow w;
    if (sorted.size() <= 1) return w;
    const double sd = sorted_sample_std(sorted);
    if (sd == 0.0) return w;
    w.keep_all_ = false;
    w.median_ = sorted_median(sorted);
    w.half_width_ = k * sd;
    return w;
}

bool StdWindow::contains(double x) const noexcept {
    return keep_all_ || std::abs(x - median_) <= half_width_;
}

std::vector<double> std_clip(std::span<const double> values, double k) {
    if (values.empty()) throw EmptyInput("std_clip needs at least one value");
    if (!(k > 0.0)) throw ValidationError("k", std::to_string(k), "must be positive");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto window = StdWindow::fit(sorted, k);
    std::vector<double> kept;
    kept.reserve(values.size());
    for (double x : values)
        if (window.contains(x)) kept.push_back(x);
    return kept;
}

bool in_envelope(double x, const ReferenceRange& envelope) noexcept {
    if (const auto* i = std::get_if<Interval>(&envelope)) return x >= i->min && x <= i->max;
    if (const auto* l = std::get_if<LowerOnly>(&envelope)) return x >= l->min;
    if (const auto* u = std::get_if<UpperOnly>(&envelope)) return x <= u->max;
    return false;
}

namespace {

bool has_numeric_bound(const ReferenceRange& r) {
    return std::holds_alternative<Interval>(r) || std::holds_alternative<LowerOnly>(r) ||
           std::holds_alternative<UpperOnly>(r);
}

}  // namespace

RangeSplit range_filter(std::span<const double> values, const ReferenceRange& envelope) {
    RangeSplit out;
    if (!has_numeric_bound(envelope)) {
        out.reason = RejectReason::NoReference;
        out.rejected.resize(values.size());
        std::iota(out.rejected.begin(), out.rejected.end(), std::size_t{0});
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i)
        (in_envelope(values[i], envelope) ? out.kept : out.rejected).push_back(i);
    return out;
}

// ---------------------------------------------------------------------------

CleansingPipeline::CleansingPipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
}

const ReferenceParse& CleansingPipeline::parse_reference_cached(
    const std::optional<std::string>& raw) {
    static const ReferenceParse absent{};
    if (!raw) return absent;
    auto it = reference_cache_.find(*raw);
    if (it == reference_cache_.end())
        it = reference_cache_
                 .emplace(*raw, parse_reference_detailed(std::string_view(*raw), config_.values))
                 .first;
    return it->second;
}

Verdict CleansingPipeline::classify_value(const ParsedResult& parsed, double* value) const {
    Verdict v;
    v.kept = true;
    v.stage = Stage::NumericOnly;
    if (config_.numeric_stage) {
        if (std::holds_alternative<Qualitative>(parsed))
            return {false, Stage::NumericOnly, RejectReason::NonNumeric};
        if (std::holds_alternative<Censored>(parsed))
            return {false, Stage::NumericOnly, RejectReason::Censored};
    }
    v.stage = Stage::NotNull;
    if (config_.not_null_stage && std::holds_alternative<Missing>(parsed))
        return {false, Stage::NotNull, RejectReason::Null};
    if (const auto* n = std::get_if<Numeric>(&parsed)) *value = n->value;
    return v;
}

void CleansingPipeline::observe(const TestRecord& record) {
    if (finalized_) throw std::logic_error("CleansingPipeline::observe after finalize");
    auto it = groups_.find(record.analyte());
    if (it == groups_.end()) it = groups_.emplace(record.analyte(), Group{}).first;
    Group& g = it->second;
    ++g.initial;

    if (config_.reference_source == ReferenceSource::DataEnvelope) {
        const auto& ref = parse_reference_cached(record.raw_reference());
        if (ref.miss) ++parse_misses_;
        if (ref.swapped) ++swaps_;
        if (has_numeric_bound(ref.range)) {
            const ReferenceRange pair[] = {g.envelope, ref.range};
            g.envelope = merge_references(pair);
        }
    }

    const auto parsed = parse_result(record.raw_result(), config_.values);
    double value = std::numeric_limits<double>::quiet_NaN();
    const auto verdict = classify_value(parsed, &value);
    if (!verdict.kept) {
        if (verdict.stage == Stage::NotNull) ++g.numeric_only;
        return;
    }
    ++g.numeric_only;
    ++g.not_null;
    // NaN marks a non-numeric survivor (only when stage 1 or 2 is disabled)
    g.values.push_back(value);
}

void CleansingPipeline::finalize() {
    if (finalized_) return;
    std::vector<Group*> work;
    work.reserve(groups_.size());
    for (auto& [analyte, g] : groups_) {
        if (config_.reference_source == ReferenceSource::ExternalTable) {
            auto ext = config_.external_references.find(analyte);
            g.envelope = ext == config_.external_references.end() ? ReferenceRange{NoRange{}}
                                                                  : ext->second;
        }
        work.push_back(&g);
    }

    auto process = [this](Group& g) {
        std::vector<double> kept;
        std::int64_t passthrough = 0;
        for (double x : g.values) {
            if (std::isnan(x)) {
                ++passthrough;
            } else if (!config_.range_stage || in_envelope(x, g.envelope)) {
                kept.push_back(x);
            }
        }
        g.in_range = static_cast<std::int64_t>(kept.size()) + passthrough;
        g.after_std = g.in_range;
        if (config_.std_multiplier && !kept.empty()) {
            std::sort(kept.begin(), kept.end());
            g.window = StdWindow::fit(kept, *config_.std_multiplier);
            g.after_std = passthrough + std::count_if(kept.begin(), kept.end(), [&](double x) {
                              return g.window->contains(x);
                          });
        }
        g.values.clear();
        g.values.shrink_to_fit();
    };

    const unsigned threads = std::max(1u, config_.threads);
    if (threads == 1 || work.size() < 2) {
        for (auto* g : work) process(*g);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < work.size(); i += threads) process(*work[i]);
            });
    }
    finalized_ = true;
}

Verdict CleansingPipeline::judge(const TestRecord& record) const {
    if (!finalized_) throw std::logic_error("CleansingPipeline::judge before finalize");
    auto it = groups_.find(record.analyte());
    if (it == groups_.end())
        throw std::logic_error("CleansingPipeline::judge on unobserved analyte " +
                               record.analyte());
    const Group& g = it->second;

    const auto parsed = parse_result(record.raw_result(), config_.values);
    double value = std::numeric_limits<double>::quiet_NaN();
    auto verdict = classify_value(parsed, &value);
    if (!verdict.kept || std::isnan(value)) return verdict;

    if (config_.range_stage) {
        if (!has_numeric_bound(g.envelope))
            return {false, Stage::Range, RejectReason::NoReference};
        if (!in_envelope(value, g.envelope))
            return {false, Stage::Range, RejectReason::OutOfRange};
        verdict.stage = Stage::Range;
    }
    if (g.window) {
        if (!g.window->contains(value)) return {false, Stage::StdClip, RejectReason::StdClip};
        verdict.stage = Stage::StdClip;
    }
    return verdict;
}

ReductionRow CleansingPipeline::reduction_for(const std::string& analyte) const {
    auto it = groups_.find(analyte);
    if (it == groups_.end()) return ReductionRow::create(analyte, 0, 0, 0, 0);
    const Group& g = it->second;
    std::optional<std::int64_t> after;
    if (config_.std_multiplier) after = g.after_std;
    return ReductionRow::create(analyte, g.initial, g.numeric_only, g.not_null, g.in_range,
                                after);
}

std::vector<ReductionRow> CleansingPipeline::reduction() const {
    if (!finalized_) throw std::logic_error("CleansingPipeline::reduction before finalize");
    std::vector<ReductionRow> rows;
    rows.reserve(groups_.size());
    for (const auto& [analyte, g] : groups_) rows.push_back(reduction_for(analyte));
    return rows;
}

const ReferenceRange& CleansingPipeline::envelope(const std::string& analyte) const {
    static const ReferenceRange none = NoRange{};
    auto it = groups_.find(analyte);
    return it == groups_.end() ? none : it->second.envelope;
}

std::vector<std::string> CleansingPipeline::analytes_without_reference() const {
    std::vector<std::string> out;
    for (const auto& [analyte, g] : groups_)
        if (!has_numeric_bound(g.envelope)) out.push_back(analyte);
    return out;
}

PipelineResult run_pipeline(std::span<const TestRecord> records, const PipelineConfig& config) {
    CleansingPipeline pipeline(config);
    for (const auto& r : records) pipeline.observe(r);
    pipeline.finalize();
    PipelineResult out;
    for (const auto& r : records) {
        auto v = pipeline.judge(r);
        if (v.kept)
            out.cleaned.push_back(r);
        else
            out.rejects.push_back({r.patient_id(), r.analyte(), r.raw_result(), v.stage, v.reason});
    }
    out.rows = pipeline.reduction();
    return out;
}

// ---------------------------------------------------------------------------

PositiveWindows::PositiveWindows(std::span<const CovidEvent> events) {
    std::unordered_map<std::string, std::vector<const CovidEvent*>> by_patient;
    for (const auto& e : events) by_patient[e.patient_id].push_back(&e);
    for (auto& [patient, list] : by_patient) {
        std::stable_sort(list.begin(), list.end(),
                         [](const CovidEvent* a, const CovidEvent* b) { return a->date < b->date; });
        auto first = std::find_if(list.begin(), list.end(), [](const CovidEvent* e) {
            return e->status == CovidStatus::Detected;
        });
        if (first == list.end()) continue;
        Window w{(*first)->date, std::nullopt};
        for (auto it = first; it != list.end(); ++it) {
            if ((*it)->status == CovidStatus::NotDetected && (*it)->date > w.start) {
                w.end = (*it)->date;
                break;
            }
        }
        windows_.emplace(patient, w);
    }
}

bool PositiveWindows::contains(const std::string& patient_id, Date date) const {
    auto it = windows_.find(patient_id);
    if (it == windows_.end()) return false;
    const Window& w = it->second;
    return date >= w.start && (!w.end || date <= *w.end);
}

std::vector<TestRecord> positive_window_filter(std::span<const TestRecord> tests,
                                               std::span<const CovidEvent> events) {
    PositiveWindows windows(events);
    std::vector<TestRecord> out;
    for (const auto& t : tests)
        if (windows.contains(t.patient_id(), t.collected_on())) out.push_back(t);
    return out;
}

}  // namespace labclean
