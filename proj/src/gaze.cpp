#include "msnv/gaze.hpp"

#include <algorithm>
#include <cmath>

namespace msnv {

GazeSample combine_eyes(double timestamp_ms, const EyePoint& left, const EyePoint& right) {
    GazeSample s;
    s.timestamp_ms = timestamp_ms;
    s.left_valid = left.valid;
    s.right_valid = right.valid;
    if (left.valid && right.valid) {
        s.x = (left.x + right.x) / 2;
        s.y = (left.y + right.y) / 2;
    } else if (left.valid) {
        s.x = left.x;
        s.y = left.y;
    } else if (right.valid) {
        s.x = right.x;
        s.y = right.y;
    }
    return s;
}

bool validate_sample(const GazeSample& sample, const DisplayBounds& bounds) {
    return (sample.left_valid || sample.right_valid) && bounds.contains(sample.x, sample.y);
}

namespace {

GazeSample interpolated(const GazeSample& orig, const GazeSample& a, const GazeSample& b) {
    const double span = b.timestamp_ms - a.timestamp_ms;
    const double f = span > 0 ? (orig.timestamp_ms - a.timestamp_ms) / span : 0.0;
    GazeSample s = orig;
    s.x = a.x + f * (b.x - a.x);
    s.y = a.y + f * (b.y - a.y);
    s.left_valid = true;
    s.right_valid = true;
    return s;
}

}  // namespace

std::vector<GazeSample> interpolate_gaps(std::span<const GazeSample> samples,
                                         const DisplayBounds& bounds, double max_gap_ms) {
    std::vector<GazeSample> out(samples.begin(), samples.end());
    const std::size_t n = out.size();
    std::size_t i = 0;
    while (i < n) {
        if (validate_sample(out[i], bounds)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !validate_sample(out[j], bounds)) ++j;
        // run is [i, j)
        if (i > 0 && j < n) {
            const GazeSample& before = out[i - 1];
            const GazeSample& after = out[j];
            if (after.timestamp_ms - before.timestamp_ms <= max_gap_ms) {
                for (std::size_t k = i; k < j; ++k) out[k] = interpolated(out[k], before, after);
            }
        }
        i = j;
    }
    return out;
}

GapFiller::GapFiller(DisplayBounds bounds, double max_gap_ms)
    : bounds_(bounds), max_gap_ms_(max_gap_ms) {}

void GapFiller::push(const GazeSample& sample, std::vector<GazeSample>& out) {
    if (validate_sample(sample, bounds_)) {
        if (!pending_.empty()) {
            if (sample.timestamp_ms - last_usable_->timestamp_ms <= max_gap_ms_) {
                for (const auto& p : pending_) out.push_back(interpolated(p, *last_usable_, sample));
            } else {
                out.insert(out.end(), pending_.begin(), pending_.end());
            }
            pending_.clear();
        }
        out.push_back(sample);
        last_usable_ = sample;
        return;
    }
    if (!last_usable_) {
        out.push_back(sample);
        return;
    }
    if (sample.timestamp_ms - last_usable_->timestamp_ms > max_gap_ms_) {
        out.insert(out.end(), pending_.begin(), pending_.end());
        pending_.clear();
        out.push_back(sample);
        last_usable_.reset();
        return;
    }
    pending_.push_back(sample);
}

void GapFiller::finish(std::vector<GazeSample>& out) {
    out.insert(out.end(), pending_.begin(), pending_.end());
    pending_.clear();
    last_usable_.reset();
}

void GapFiller::reset() {
    pending_.clear();
    last_usable_.reset();
}

namespace {

struct Extent {
    double min_x, max_x, min_y, max_y;

    explicit Extent(const GazeSample& s) : min_x(s.x), max_x(s.x), min_y(s.y), max_y(s.y) {}
    void add(const GazeSample& s) {
        min_x = std::min(min_x, s.x);
        max_x = std::max(max_x, s.x);
        min_y = std::min(min_y, s.y);
        max_y = std::max(max_y, s.y);
    }
    double dispersion() const { return (max_x - min_x) + (max_y - min_y); }
    double dispersion_with(const GazeSample& s) const {
        return (std::max(max_x, s.x) - std::min(min_x, s.x)) +
               (std::max(max_y, s.y) - std::min(min_y, s.y));
    }
};

template <typename It>
Fixation make_fixation(It first, It last) {
    Fixation f;
    f.start_ms = first->timestamp_ms;
    double sx = 0, sy = 0;
    std::size_t count = 0;
    for (auto it = first; it != last; ++it) {
        sx += it->x;
        sy += it->y;
        f.end_ms = it->timestamp_ms;
        ++count;
    }
    f.sample_count = count;
    f.centroid_x = sx / static_cast<double>(count);
    f.centroid_y = sy / static_cast<double>(count);
    return f;
}

}  // namespace

std::vector<Fixation> detect_fixations(std::span<const GazeSample> samples,
                                       const FixationParams& params, const DisplayBounds& bounds) {
    std::vector<Fixation> out;
    const std::size_t n = samples.size();
    auto usable = [&](std::size_t k) { return validate_sample(samples[k], bounds); };

    std::size_t i = 0;
    while (i < n) {
        if (!usable(i)) {
            ++i;
            continue;
        }
        // Grow to the minimum duration.
        Extent ext(samples[i]);
        std::size_t j = i;
        bool broken = false;
        while (samples[j].timestamp_ms - samples[i].timestamp_ms < params.min_fixation_ms) {
            if (j + 1 >= n) {
                return out;
            }
            if (!usable(j + 1)) {
                broken = true;
                break;
            }
            ++j;
            ext.add(samples[j]);
        }
        if (broken) {
            // No window starting before the unusable sample can reach the minimum.
            i = j + 2;
            continue;
        }
        if (ext.dispersion() > params.dispersion_px) {
            ++i;
            continue;
        }
        while (j + 1 < n && usable(j + 1) &&
               ext.dispersion_with(samples[j + 1]) <= params.dispersion_px) {
            ++j;
            ext.add(samples[j]);
        }
        out.push_back(make_fixation(samples.begin() + static_cast<std::ptrdiff_t>(i),
                                    samples.begin() + static_cast<std::ptrdiff_t>(j + 1)));
        i = j + 1;
    }
    return out;
}

FixationStream::FixationStream(FixationParams params, DisplayBounds bounds)
    : params_(params), bounds_(bounds) {}

void FixationStream::reset() {
    clear_window();
    last_ts_.reset();
}

void FixationStream::clear_window() {
    base_ += window_.size();
    window_.clear();
    min_x_.idx.clear();
    max_x_.idx.clear();
    min_y_.idx.clear();
    max_y_.idx.clear();
    in_fixation_ = false;
}

void FixationStream::push_back(const GazeSample& s) {
    const std::size_t abs = base_ + window_.size();
    window_.push_back(s);
    auto at = [this](std::size_t a) -> const GazeSample& { return window_[a - base_]; };
    auto push = [&](MonoQueue& q, auto better) {
        while (!q.idx.empty() && !better(at(q.idx.back()), s)) q.idx.pop_back();
        q.idx.push_back(abs);
    };
    push(min_x_, [](const GazeSample& kept, const GazeSample& n) { return kept.x < n.x; });
    push(max_x_, [](const GazeSample& kept, const GazeSample& n) { return kept.x > n.x; });
    push(min_y_, [](const GazeSample& kept, const GazeSample& n) { return kept.y < n.y; });
    push(max_y_, [](const GazeSample& kept, const GazeSample& n) { return kept.y > n.y; });
}

void FixationStream::pop_front() {
    for (MonoQueue* q : {&min_x_, &max_x_, &min_y_, &max_y_}) {
        if (!q->idx.empty() && q->idx.front() == base_) q->idx.pop_front();
    }
    window_.pop_front();
    ++base_;
}

double FixationStream::dispersion() const {
    auto at = [this](std::size_t a) -> const GazeSample& { return window_[a - base_]; };
    return (at(max_x_.idx.front()).x - at(min_x_.idx.front()).x) +
           (at(max_y_.idx.front()).y - at(min_y_.idx.front()).y);
}

double FixationStream::window_duration() const {
    return window_.back().timestamp_ms - window_.front().timestamp_ms;
}

Fixation FixationStream::close_window() const { return make_fixation(window_.begin(), window_.end()); }

std::optional<Fixation> FixationStream::ingest(const GazeSample& sample) {
    if (last_ts_ && sample.timestamp_ms < *last_ts_) {
        throw StreamOrderError("gaze sample at " + std::to_string(sample.timestamp_ms) +
                               "ms precedes last sample at " + std::to_string(*last_ts_) + "ms");
    }
    last_ts_ = sample.timestamp_ms;

    std::optional<Fixation> closed;
    if (!validate_sample(sample, bounds_)) {
        if (in_fixation_) closed = close_window();
        clear_window();
        return closed;
    }

    if (in_fixation_) {
        const double dx = std::max(window_[max_x_.idx.front() - base_].x, sample.x) -
                          std::min(window_[min_x_.idx.front() - base_].x, sample.x);
        const double dy = std::max(window_[max_y_.idx.front() - base_].y, sample.y) -
                          std::min(window_[min_y_.idx.front() - base_].y, sample.y);
        if (dx + dy <= params_.dispersion_px) {
            push_back(sample);
            return std::nullopt;
        }
        closed = close_window();
        clear_window();
    }

    push_back(sample);
    while (!in_fixation_ && !window_.empty() && window_duration() >= params_.min_fixation_ms) {
        if (dispersion() <= params_.dispersion_px) {
            in_fixation_ = true;
        } else {
            pop_front();
        }
    }
    return closed;
}

std::optional<Fixation> FixationStream::finish() {
    std::optional<Fixation> closed;
    if (in_fixation_) closed = close_window();
    clear_window();
    return closed;
}

std::vector<Saccade> derive_saccades(std::span<const Fixation> fixations) {
    std::vector<Saccade> out;
    for (std::size_t i = 1; i < fixations.size(); ++i) {
        const auto& a = fixations[i - 1];
        const auto& b = fixations[i];
        out.push_back({i - 1, i, std::hypot(b.centroid_x - a.centroid_x, b.centroid_y - a.centroid_y),
                       b.start_ms - a.end_ms});
    }
    return out;
}

bool aoi_hit(const Fixation& fixation, const AOI& aoi) {
    return std::any_of(aoi.rects.begin(), aoi.rects.end(), [&](const Rect& r) {
        return r.contains(fixation.centroid_x, fixation.centroid_y);
    });
}

AOIFeatures aoi_features(std::span<const Fixation> fixations, const AOI& aoi, double elapsed_ms) {
    AOIFeatures f;
    for (const auto& fx : fixations) {
        if (!aoi_hit(fx, aoi)) continue;
        ++f.fixation_count;
        f.total_duration_ms += fx.duration_ms();
        f.longest_fixation_ms = std::max(f.longest_fixation_ms, fx.duration_ms());
    }
    if (elapsed_ms > 0) f.fixation_rate_hz = static_cast<double>(f.fixation_count) / (elapsed_ms / 1000.0);
    if (!fixations.empty()) {
        f.proportion_of_fixations =
            static_cast<double>(f.fixation_count) / static_cast<double>(fixations.size());
    }
    return f;
}

double Heatmap::total() const {
    double t = 0;
    for (double c : cells) t += c;
    return t;
}

Heatmap heatmap(std::span<const Fixation> fixations, double cell_px, const DisplayBounds& bounds) {
    if (!(cell_px > 0)) throw std::invalid_argument("heat map cell size must be positive");
    Heatmap h;
    h.cell_px = cell_px;
    h.cols = static_cast<std::size_t>(std::ceil(bounds.width / cell_px));
    h.rows = static_cast<std::size_t>(std::ceil(bounds.height / cell_px));
    h.cells.assign(h.cols * h.rows, 0.0);
    for (const auto& f : fixations) {
        if (!bounds.contains(f.centroid_x, f.centroid_y)) continue;
        const auto c = std::min(h.cols - 1, static_cast<std::size_t>(f.centroid_x / cell_px));
        const auto r = std::min(h.rows - 1, static_cast<std::size_t>(f.centroid_y / cell_px));
        h.cells[r * h.cols + c] += f.duration_ms();
    }
    return h;
}

}  // namespace msnv
