#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "labclean/schema.hpp"
#include "labclean/valueparse.hpp"

namespace labclean {

enum class Stage { NumericOnly, NotNull, Range, StdClip };

enum class RejectReason {
    NonNumeric,   // qualitative text
    Censored,     // "<5", "superior a 10"
    Null,         // null vocabulary or blank
    NoReference,  // the analyte has no numeric reference bound at all
    OutOfRange,
    StdClip,
};

std::string_view to_string(Stage s);
std::string_view to_string(RejectReason r);

enum class ReferenceSource { DataEnvelope, ExternalTable };

struct PipelineConfig {
    bool numeric_stage = true;
    bool not_null_stage = true;
    bool range_stage = true;
    /// Enables the std-clip stage with this multiplier; window centred on the median.
    std::optional<double> std_multiplier;
    ReferenceSource reference_source = ReferenceSource::DataEnvelope;
    /// Used when reference_source is ExternalTable; analytes absent here have no reference.
    std::map<std::string, ReferenceRange> external_references;
    ValueParseConfig values;
    unsigned threads = 1;

    /// Throws ConfigError.
    void validate() const;
};

/// `analyte,reference` CSV. Repeated analytes merge into their envelope.
std::map<std::string, ReferenceRange> load_reference_table(const std::filesystem::path& path,
                                                           const ValueParseConfig& values = {});

struct Reject {
    std::string patient_id;
    std::string analyte;
    std::string raw_result;
    Stage stage = Stage::NumericOnly;
    RejectReason reason = RejectReason::NonNumeric;

    bool operator==(const Reject&) const = default;
};

struct Verdict {
    bool kept = true;
    /// For kept records: the last stage passed. For rejects: the failing stage.
    Stage stage = Stage::Range;
    RejectReason reason = RejectReason::NonNumeric;
};

/// Median-centred std window. Holds everything when n <= 1 or std == 0.
class StdWindow {
public:
    /// `sorted` must be ascending.
    static StdWindow fit(std::span<const double> sorted, double k);

    bool contains(double x) const noexcept;
    double median() const noexcept { return median_; }
    double half_width() const noexcept { return half_width_; }
    bool keeps_all() const noexcept { return keep_all_; }

private:
    double median_ = 0.0;
    double half_width_ = 0.0;
    bool keep_all_ = true;
};

/// Median of an ascending sequence; mean of the two central values for even n.
double sorted_median(std::span<const double> sorted);

/// Sample standard deviation (n - 1 denominator) of an ascending sequence.
double sorted_sample_std(std::span<const double> sorted);

/// Keeps x with |x - median| <= k * std, in input order. Throws EmptyInput.
std::vector<double> std_clip(std::span<const double> values, double k);

/// Stage 3 on its own. A NoRange envelope rejects every value with NoReference.
struct RangeSplit {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> rejected;
    RejectReason reason = RejectReason::OutOfRange;
};
RangeSplit range_filter(std::span<const double> values, const ReferenceRange& envelope);

bool in_envelope(double x, const ReferenceRange& envelope) noexcept;

/// The staged cleaning procedure, split so it can run over a stream twice:
/// `observe` every record, `finalize`, then `judge` every record again.
///
/// Per analyte, in order: drop non-numeric results (qualitative or censored),
/// drop null results, keep values inside the merged reference envelope
/// (inclusive), and optionally std-clip around the group median.
class CleansingPipeline {
public:
    explicit CleansingPipeline(PipelineConfig config);

    void observe(const TestRecord& record);
    void finalize();
    Verdict judge(const TestRecord& record) const;

    /// One row per analyte, ordered by analyte name.
    std::vector<ReductionRow> reduction() const;
    ReductionRow reduction_for(const std::string& analyte) const;

    const ReferenceRange& envelope(const std::string& analyte) const;
    /// Analytes whose envelope ended up with no numeric bound.
    std::vector<std::string> analytes_without_reference() const;
    std::int64_t reference_parse_misses() const noexcept { return parse_misses_; }
    std::int64_t reference_swaps() const noexcept { return swaps_; }

    const PipelineConfig& config() const noexcept { return config_; }

private:
    struct Group {
        std::int64_t initial = 0;
        std::int64_t numeric_only = 0;
        std::int64_t not_null = 0;
        std::int64_t in_range = 0;
        std::int64_t after_std = 0;
        ReferenceRange envelope = NoRange{};
        std::vector<double> values;  // stage-2 survivors, for range and std
        std::optional<StdWindow> window;
    };

    Verdict classify_value(const ParsedResult& parsed, double* value) const;
    const ReferenceParse& parse_reference_cached(const std::optional<std::string>& raw);

    PipelineConfig config_;
    std::map<std::string, Group, std::less<>> groups_;
    std::unordered_map<std::string, ReferenceParse> reference_cache_;
    std::int64_t parse_misses_ = 0;
    std::int64_t swaps_ = 0;
    bool finalized_ = false;
};

struct PipelineResult {
    std::vector<TestRecord> cleaned;
    std::vector<ReductionRow> rows;
    std::vector<Reject> rejects;
};

/// In-memory run: records keep their input order in `cleaned` and `rejects`.
PipelineResult run_pipeline(std::span<const TestRecord> records, const PipelineConfig& config);

/// Keeps tests that fall inside their patient's positive window: from the first
/// Detected event to the first NotDetected event strictly after it (both
/// inclusive), open-ended when no such NotDetected exists.
class PositiveWindows {
public:
    explicit PositiveWindows(std::span<const CovidEvent> events);

    bool contains(const std::string& patient_id, Date date) const;
    std::size_t patients() const noexcept { return windows_.size(); }

private:
    struct Window {
        Date start;
        std::optional<Date> end;
    };
    std::unordered_map<std::string, Window> windows_;
};

std::vector<TestRecord> positive_window_filter(std::span<const TestRecord> tests,
                                               std::span<const CovidEvent> events);

}  // namespace labclean
