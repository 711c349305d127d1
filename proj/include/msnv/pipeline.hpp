#pragma once

// Raw samples -> gap filling -> streaming fixation detection -> engine.
// Shared by live sessions and trace replay so both run identical logic.

#include <optional>
#include <vector>

#include "msnv/document.hpp"
#include "msnv/engine.hpp"
#include "msnv/gaze.hpp"

namespace msnv {

struct PipelineConfig {
    EngineConfig engine;
    FixationParams fixation;
    DisplayBounds display;
    double max_gap_ms = kDefaultMaxGapMs;
    bool operator==(const PipelineConfig&) const = default;
};

struct TriggerEvent {
    std::string reference_id;
    double t_ms = 0;    // timestamp of the sample that completed the fixation
    int ordinal = 0;    // fixations counted on the reference when it fired
    int threshold = 0;
    bool operator==(const TriggerEvent&) const = default;
};

class GazePipeline {
public:
    GazePipeline(const Document& doc, const PipelineConfig& config);

    /// Throws StreamOrderError, without changing state, for a sample older
    /// than the previous one. Commands produced are appended to commands.
    void push(const GazeSample& sample, std::vector<InterventionCommand>& commands);

    /// Flushes pending samples and the open fixation. With feed_engine false
    /// the final fixation is recorded but not shown to the engine.
    void finish(std::vector<InterventionCommand>& commands, bool feed_engine = true);

    const AdaptationEngine& engine() const { return engine_; }
    const std::vector<Fixation>& fixations() const { return fixations_; }
    const std::vector<TriggerEvent>& triggers() const { return triggers_; }
    std::size_t sample_count() const { return samples_; }
    std::size_t invalid_count() const { return invalid_; }

private:
    void feed(const GazeSample& s, std::vector<InterventionCommand>& commands);
    void on_fixation(const Fixation& f, double t_ms, std::vector<InterventionCommand>& commands);

    PipelineConfig config_;
    GapFiller gaps_;
    FixationStream stream_;
    AdaptationEngine engine_;
    std::vector<GazeSample> scratch_;
    std::vector<Fixation> fixations_;
    std::vector<TriggerEvent> triggers_;
    std::optional<double> last_raw_ts_;
    double last_fed_ts_ = 0;
    std::size_t samples_ = 0;
    std::size_t invalid_ = 0;
};

}  // namespace msnv
