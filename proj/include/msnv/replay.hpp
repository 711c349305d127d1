#pragma once

// Synthetic readers, deterministic trace replay, participant screening and
// cohort trigger-rate summaries.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msnv/document.hpp"
#include "msnv/gaze.hpp"
#include "msnv/pipeline.hpp"

namespace msnv {

inline constexpr std::string_view kReportFormat = "report/1";

struct ReaderProfile {
    /// Fraction of each reference's mean fixation count the reader produces.
    double speed_factor = 1.0;
    double skip_probability = 0.0;
    /// Fixation durations are lognormal around the median, clipped.
    double fixation_median_ms = 180;
    double fixation_log_sd = 0.35;
    double fixation_min_ms = 100;
    double fixation_max_ms = 600;
    /// Chance, after each sentence, of glancing back at an earlier one.
    double revisit_probability = 0.0;
    /// Uniform per-sample jitter, +-noise_px on each axis.
    double noise_px = 0.0;
    /// Share of samples lost to tracker dropouts (bursts too long to bridge).
    double dropout_rate = 0.0;
    /// Constant calibration error added to every valid sample.
    double offset_x_px = 0.0;
    double offset_y_px = 0.0;

    void validate() const;
};

/// 120 Hz sample stream of a reader going through the text in sentence order.
std::vector<GazeSample> synthesize_trace(const Document& doc, const ReaderProfile& profile, std::uint64_t seed);

/// Fixation count a profile gives a reference when none of its sentences is
/// skipped: floor(speed_factor * mean_fixations).
int synthetic_fixations(const Reference& reference, double speed_factor);

struct DocumentReplay {
    std::string document_id;
    std::size_t available = 0;
    std::vector<TriggerEvent> triggers;
    std::size_t samples = 0;
    std::size_t invalid = 0;
    std::size_t fixations = 0;
    bool operator==(const DocumentReplay&) const = default;
};

inline constexpr double kHeatmapCellPx = 32;

struct ReplayReport {
    std::string participant;
    Strategy strategy = Strategy::DesaturatePrevious;
    double fraction = kDefaultTriggerFraction;
    std::vector<DocumentReplay> documents;
    Heatmap heatmap;

    std::size_t triggered_count() const;
    std::size_t available_count() const;
    /// Triggered over available, as a fraction in [0, 1].
    double trigger_percentage() const;
    double invalid_ratio() const;
    /// Every trigger fired exactly at its threshold ordinal.
    bool firing_ordinals_exact() const;
    bool operator==(const ReplayReport& o) const;
};

/// Replays one document's trace through gap filling, streaming fixation
/// detection and the engine, then appends the result to report.
void replay_into(ReplayReport& report, std::span<const GazeSample> trace, const Document& doc,
                 const PipelineConfig& config);

ReplayReport replay(std::span<const GazeSample> trace, const Document& doc, const PipelineConfig& config,
                    const std::string& participant = "");

std::string serialize_report(const ReplayReport& report);
ReplayReport parse_report(std::string_view text);
std::string format_report_table(const ReplayReport& report);
void write_heatmap_csv(const std::string& path, const Heatmap& heatmap);

enum class Verdict { Keep, DiscardInvalidGaze, FlagLowTrigger };
std::string_view to_string(Verdict v);

struct ScreeningConfig {
    double invalid_threshold = 0.25;
    double inspection_threshold = 0.75;
};

struct ScreeningResult {
    Verdict verdict = Verdict::Keep;
    double invalid_ratio = 0;
    double trigger_percentage = 0;
    /// Where the heat map for manual inspection goes, for flagged reports.
    std::optional<std::string> heatmap_path;
};

ScreeningResult screen_participant(const ReplayReport& report, const ScreeningConfig& config = {},
                                   const std::string& heatmap_path = "");

struct CohortSummary {
    std::size_t discarded_invalid = 0;
    std::size_t participants = 0;  // after invalid-gaze screening
    double mean = 0;
    std::optional<double> sd;
    std::vector<std::size_t> histogram;  // 10 bins of width 10%, last bin closed
    std::size_t above = 0;               // strictly above the inspection threshold
    std::size_t below = 0;
    double fraction_above = 0;
    std::vector<std::string> flagged;  // below threshold, for heat-map inspection
    std::size_t retained = 0;          // after removing inspection exclusions
    double retained_mean = 0;
    std::optional<double> retained_sd;
};

/// Screens every report, then summarizes trigger percentages of the kept and
/// flagged participants. Participants in inspection_exclusions (heat maps
/// judged misaligned) are dropped from the retained statistics.
CohortSummary cohort_report(std::span<const ReplayReport> reports, const ScreeningConfig& config = {},
                            const std::set<std::string>& inspection_exclusions = {});

std::string format_cohort_table(const CohortSummary& summary);

}  // namespace msnv
