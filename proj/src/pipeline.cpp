#include "msnv/pipeline.hpp"

namespace msnv {

GazePipeline::GazePipeline(const Document& doc, const PipelineConfig& config)
    : config_(config),
      gaps_(config.display, config.max_gap_ms),
      stream_(config.fixation, config.display),
      engine_(doc, config.engine) {}

void GazePipeline::push(const GazeSample& sample, std::vector<InterventionCommand>& commands) {
    if (last_raw_ts_ && sample.timestamp_ms < *last_raw_ts_) {
        throw StreamOrderError("gaze sample at " + std::to_string(sample.timestamp_ms) +
                               "ms precedes previous sample");
    }
    last_raw_ts_ = sample.timestamp_ms;
    ++samples_;
    if (!validate_sample(sample, config_.display)) ++invalid_;

    scratch_.clear();
    gaps_.push(sample, scratch_);
    for (const auto& s : scratch_) feed(s, commands);
}

void GazePipeline::feed(const GazeSample& s, std::vector<InterventionCommand>& commands) {
    last_fed_ts_ = s.timestamp_ms;
    if (auto f = stream_.ingest(s)) on_fixation(*f, s.timestamp_ms, commands);
}

void GazePipeline::on_fixation(const Fixation& f, double t_ms, std::vector<InterventionCommand>& commands) {
    fixations_.push_back(f);
    const auto cmds = engine_.on_fixation(f);
    for (const auto& c : cmds) {
        if (c.kind != CommandKind::Highlight) continue;
        const int count = engine_.counter(c.reference_id);
        int threshold = 0;
        for (const auto& r : engine_.rules())
            if (r.reference_id == c.reference_id) threshold = r.threshold_count;
        triggers_.push_back({c.reference_id, t_ms, count, threshold});
    }
    commands.insert(commands.end(), cmds.begin(), cmds.end());
}

void GazePipeline::finish(std::vector<InterventionCommand>& commands, bool feed_engine) {
    scratch_.clear();
    gaps_.finish(scratch_);
    for (const auto& s : scratch_) feed(s, commands);
    if (auto f = stream_.finish()) {
        if (feed_engine)
            on_fixation(*f, last_fed_ts_, commands);
        else
            fixations_.push_back(*f);
    }
}

}  // namespace msnv
