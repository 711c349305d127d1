#pragma once

// Gaze processing: sample screening, gap filling, dispersion-threshold
// fixation identification (batch and streaming), saccades, AOI features
// and fixation heat maps.

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msnv {

struct Rect {
    double x = 0, y = 0, w = 0, h = 0;

    /// Inclusive of the min edges, exclusive of the max edges.
    bool contains(double px, double py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
    bool intersects(const Rect& o) const {
        return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
    }
    bool operator==(const Rect&) const = default;
};

/// Display area in pixels.
struct DisplayBounds {
    double width = 1280;
    double height = 1024;

    bool contains(double px, double py) const {
        return px >= 0 && px < width && py >= 0 && py < height;
    }
    bool operator==(const DisplayBounds&) const = default;
};

inline constexpr double kSampleRateHz = 120.0;
inline constexpr double kSamplePeriodMs = 1000.0 / kSampleRateHz;

struct GazeSample {
    double timestamp_ms = 0;
    double x = 0, y = 0;
    bool left_valid = false;
    bool right_valid = false;
    std::optional<double> left_pupil_mm;
    std::optional<double> right_pupil_mm;
    std::optional<double> eye_distance_mm;

    bool operator==(const GazeSample&) const = default;
};

struct EyePoint {
    double x = 0, y = 0;
    bool valid = false;
};

/// Builds a sample from per-eye tracker output: both eyes valid averages
/// them, one valid eye is used alone.
GazeSample combine_eyes(double timestamp_ms, const EyePoint& left, const EyePoint& right);

struct Fixation {
    double start_ms = 0;
    double end_ms = 0;
    double centroid_x = 0;
    double centroid_y = 0;
    std::size_t sample_count = 0;

    double duration_ms() const { return end_ms - start_ms; }
    bool operator==(const Fixation&) const = default;
};

struct Saccade {
    std::size_t from_fixation_index = 0;
    std::size_t to_fixation_index = 0;
    double amplitude_px = 0;
    double duration_ms = 0;
};

struct AOI {
    std::string id;
    std::string owner;
    std::vector<Rect> rects;
};

struct AOIFeatures {
    std::size_t fixation_count = 0;
    double total_duration_ms = 0;
    double longest_fixation_ms = 0;
    double fixation_rate_hz = 0;
    double proportion_of_fixations = 0;
};

struct FixationParams {
    double min_fixation_ms = 100;
    double dispersion_px = 35;
    bool operator==(const FixationParams&) const = default;
};

class StreamOrderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool validate_sample(const GazeSample& sample, const DisplayBounds& bounds);

inline constexpr double kDefaultMaxGapMs = 75;

/// Replaces runs of unusable samples whose flanking usable samples are at
/// most max_gap_ms apart with points on the segment between them.
std::vector<GazeSample> interpolate_gaps(std::span<const GazeSample> samples,
                                         const DisplayBounds& bounds,
                                         double max_gap_ms = kDefaultMaxGapMs);

/// Streaming form of interpolate_gaps. Holds back unusable samples until the
/// gap either closes or grows past max_gap_ms.
class GapFiller {
public:
    explicit GapFiller(DisplayBounds bounds = {}, double max_gap_ms = kDefaultMaxGapMs);

    /// Appends the samples that became final to out.
    void push(const GazeSample& sample, std::vector<GazeSample>& out);
    void finish(std::vector<GazeSample>& out);
    void reset();

private:
    DisplayBounds bounds_;
    double max_gap_ms_;
    std::optional<GazeSample> last_usable_;
    std::vector<GazeSample> pending_;
};

std::vector<Fixation> detect_fixations(std::span<const GazeSample> samples,
                                       const FixationParams& params = {},
                                       const DisplayBounds& bounds = {});

/// Incremental I-DT. A fixation is reported when the first sample that does
/// not fit its window arrives, or on finish().
class FixationStream {
public:
    explicit FixationStream(FixationParams params = {}, DisplayBounds bounds = {});

    /// Throws StreamOrderError (leaving the state untouched) when the sample
    /// is older than the last one ingested.
    std::optional<Fixation> ingest(const GazeSample& sample);
    std::optional<Fixation> finish();
    void reset();

    std::optional<double> last_timestamp() const { return last_ts_; }

private:
    struct MonoQueue {
        // Indices into the window, front holds the current extreme.
        std::deque<std::size_t> idx;
    };

    double dispersion() const;
    void push_back(const GazeSample& s);
    void pop_front();
    void clear_window();
    Fixation close_window() const;
    double window_duration() const;

    FixationParams params_;
    DisplayBounds bounds_;
    std::deque<GazeSample> window_;
    std::size_t base_ = 0;  // absolute index of window_.front()
    MonoQueue min_x_, max_x_, min_y_, max_y_;
    bool in_fixation_ = false;
    std::optional<double> last_ts_;
};

std::vector<Saccade> derive_saccades(std::span<const Fixation> fixations);

bool aoi_hit(const Fixation& fixation, const AOI& aoi);

AOIFeatures aoi_features(std::span<const Fixation> fixations, const AOI& aoi, double elapsed_ms);

struct Heatmap {
    double cell_px = 0;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::vector<double> cells;  // row-major, total fixation duration in ms

    double at(std::size_t col, std::size_t row) const { return cells[row * cols + col]; }
    double total() const;
};

Heatmap heatmap(std::span<const Fixation> fixations, double cell_px, const DisplayBounds& bounds);

}  // namespace msnv
