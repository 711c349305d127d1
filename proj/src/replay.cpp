#include "msnv/replay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "msnv/rng.hpp"
#include "msnv/trace_io.hpp"

namespace msnv {

namespace {

constexpr double kSnap = 1e-9;
constexpr double kSlotSpacingPx = 50;
constexpr double kMinJumpPx = 50;
constexpr double kWordsFixationRate = 0.5;
constexpr std::size_t kMinFixationSamples = 14;

std::size_t word_count(const std::string& s) {
    std::istringstream in(s);
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    return n;
}

struct Point {
    double x = 0, y = 0;
};

std::vector<Point> slots_for(const std::vector<Rect>& rects) {
    std::vector<Point> out;
    for (const auto& r : rects) {
        const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(r.w / kSlotSpacingPx));
        for (std::size_t i = 0; i < n; ++i)
            out.push_back({r.x + (static_cast<double>(i) + 0.5) * r.w / static_cast<double>(n), r.y + r.h / 2});
    }
    return out;
}

class TraceWriter {
public:
    TraceWriter(const ReaderProfile& p, SplitMix64& rng) : p_(p), rng_(rng) {}

    void fixate(const Point& at) {
        maybe_drop_out();
        const double d = std::clamp(
            std::exp(std::log(p_.fixation_median_ms) + p_.fixation_log_sd * rng_.normal()), p_.fixation_min_ms,
            p_.fixation_max_ms);
        const auto n = std::max(kMinFixationSamples, static_cast<std::size_t>(std::lround(d / kSamplePeriodMs)) + 1);
        for (std::size_t i = 0; i < n; ++i) {
            GazeSample s;
            s.timestamp_ms = now();
            s.x = at.x + p_.offset_x_px + (p_.noise_px > 0 ? rng_.uniform(-p_.noise_px, p_.noise_px) : 0.0);
            s.y = at.y + p_.offset_y_px + (p_.noise_px > 0 ? rng_.uniform(-p_.noise_px, p_.noise_px) : 0.0);
            s.left_valid = s.right_valid = true;
            s.left_pupil_mm = s.right_pupil_mm = 3.5;
            s.eye_distance_mm = 600;
            out_.push_back(s);
        }
        last_ = at;
    }

    const std::optional<Point>& last() const { return last_; }
    std::vector<GazeSample> take() { return std::move(out_); }

private:
    double now() const { return static_cast<double>(out_.size()) * kSamplePeriodMs; }

    void maybe_drop_out() {
        if (p_.dropout_rate <= 0 || out_.empty()) return;
        if (static_cast<double>(invalid_) >= p_.dropout_rate * static_cast<double>(out_.size())) return;
        const auto n = static_cast<std::size_t>(rng_.uniform(100, 200) / kSamplePeriodMs) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            GazeSample s;
            s.timestamp_ms = now();
            s.x = s.y = -1;
            out_.push_back(s);
        }
        invalid_ += n;
    }

    const ReaderProfile& p_;
    SplitMix64& rng_;
    std::vector<GazeSample> out_;
    std::size_t invalid_ = 0;
    std::optional<Point> last_;
};

double l1(const Point& a, const Point& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

}  // namespace

void ReaderProfile::validate() const {
    auto prob = [](double p) { return p >= 0 && p <= 1; };
    if (!(speed_factor > 0)) throw std::invalid_argument("speed factor must be positive");
    if (!prob(skip_probability)) throw std::invalid_argument("skip probability must be in [0, 1]");
    if (!prob(revisit_probability)) throw std::invalid_argument("revisit probability must be in [0, 1]");
    if (!(dropout_rate >= 0 && dropout_rate < 1)) throw std::invalid_argument("dropout rate must be in [0, 1)");
    if (!(noise_px >= 0)) throw std::invalid_argument("noise must be non-negative");
    if (!std::isfinite(offset_x_px) || !std::isfinite(offset_y_px))
        throw std::invalid_argument("calibration offset must be finite");
    if (!(fixation_median_ms > 0) || !(fixation_log_sd >= 0))
        throw std::invalid_argument("fixation duration distribution is invalid");
    if (!(fixation_min_ms >= 100) || !(fixation_max_ms >= fixation_min_ms))
        throw std::invalid_argument("fixation duration bounds must satisfy 100 <= min <= max");
}

int synthetic_fixations(const Reference& reference, double speed_factor) {
    return static_cast<int>(std::floor(speed_factor * reference.mean_fixations + kSnap));
}

std::vector<GazeSample> synthesize_trace(const Document& doc, const ReaderProfile& profile, std::uint64_t seed) {
    profile.validate();
    if (doc.layout.sentences.size() != doc.sentences.size())
        throw std::invalid_argument("document '" + doc.id + "' has no sentence layout to read from");

    SplitMix64 rng(seed);
    const std::size_t n = doc.sentences.size();

    std::vector<const Reference*> owner(n, nullptr);
    for (const auto& r : doc.references)
        for (auto i : r.sentence_indices)
            if (i < n) owner[i] = &r;

    std::vector<bool> read(n);
    for (std::size_t i = 0; i < n; ++i) read[i] = !rng.bernoulli(profile.skip_probability);

    // Fixations per sentence: a reference's budget is shared by its read sentences.
    std::vector<int> count(n, 0);
    for (const auto& r : doc.references) {
        std::vector<std::size_t> read_idx;
        for (auto i : r.sentence_indices)
            if (i < n && read[i]) read_idx.push_back(i);
        if (read_idx.empty()) continue;
        const double share = static_cast<double>(read_idx.size()) / static_cast<double>(r.sentence_indices.size());
        const int total = static_cast<int>(std::floor(profile.speed_factor * r.mean_fixations * share + kSnap));
        const int k = static_cast<int>(read_idx.size());
        for (int j = 0; j < k; ++j) count[read_idx[j]] = total / k + (j < total % k ? 1 : 0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] || !read[i]) continue;
        count[i] = static_cast<int>(
            std::floor(profile.speed_factor * static_cast<double>(word_count(doc.sentences[i])) * kWordsFixationRate));
    }

    std::vector<std::vector<Point>> slots(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto* r = owner[i];
        auto it = r ? doc.layout.aois.find(r->id) : doc.layout.aois.end();
        slots[i] = slots_for(it != doc.layout.aois.end() ? it->second : doc.layout.sentences[i]);
    }

    TraceWriter w(profile, rng);
    std::vector<std::size_t> cursor(n, 0);
    auto fixate_on = [&](std::size_t i) {
        const auto& s = slots[i];
        if (s.empty()) return;
        std::size_t pick = cursor[i] % s.size();
        for (std::size_t tries = 0; w.last() && tries < s.size(); ++tries) {
            if (l1(s[(cursor[i] + tries) % s.size()], *w.last()) >= kMinJumpPx) {
                pick = (cursor[i] + tries) % s.size();
                break;
            }
        }
        cursor[i] = pick + 1;
        w.fixate(s[pick]);
    };

    std::vector<std::size_t> done;
    for (std::size_t i = 0; i < n; ++i) {
        if (!read[i]) continue;
        for (int k = 0; k < count[i]; ++k) fixate_on(i);
        if (!done.empty() && rng.bernoulli(profile.revisit_probability)) {
            const auto back = done[rng.below(done.size())];
            const auto glances = 1 + rng.below(3);
            for (std::uint64_t g = 0; g < glances; ++g) fixate_on(back);
        }
        done.push_back(i);
    }
    return w.take();
}

std::size_t ReplayReport::triggered_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.triggers.size();
    return n;
}

std::size_t ReplayReport::available_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.available;
    return n;
}

double ReplayReport::trigger_percentage() const {
    const auto avail = available_count();
    return avail ? static_cast<double>(triggered_count()) / static_cast<double>(avail) : 0.0;
}

double ReplayReport::invalid_ratio() const {
    std::size_t samples = 0, invalid = 0;
    for (const auto& d : documents) {
        samples += d.samples;
        invalid += d.invalid;
    }
    return samples ? static_cast<double>(invalid) / static_cast<double>(samples) : 0.0;
}

bool ReplayReport::firing_ordinals_exact() const {
    for (const auto& d : documents)
        for (const auto& t : d.triggers)
            if (t.ordinal != t.threshold) return false;
    return true;
}

bool ReplayReport::operator==(const ReplayReport& o) const {
    return participant == o.participant && strategy == o.strategy && fraction == o.fraction &&
           documents == o.documents && heatmap.cell_px == o.heatmap.cell_px && heatmap.cols == o.heatmap.cols &&
           heatmap.rows == o.heatmap.rows && heatmap.cells == o.heatmap.cells;
}

void replay_into(ReplayReport& report, std::span<const GazeSample> trace, const Document& doc,
                 const PipelineConfig& config) {
    GazePipeline pipeline(doc, config);
    std::vector<InterventionCommand> commands;
    for (const auto& s : trace) pipeline.push(s, commands);
    pipeline.finish(commands);

    DocumentReplay d;
    d.document_id = doc.id;
    d.available = doc.references.size();
    d.triggers = pipeline.triggers();
    d.samples = pipeline.sample_count();
    d.invalid = pipeline.invalid_count();
    d.fixations = pipeline.fixations().size();
    report.documents.push_back(std::move(d));

    const auto h = heatmap(pipeline.fixations(), kHeatmapCellPx, config.display);
    if (report.heatmap.cells.empty()) {
        report.heatmap = h;
    } else if (report.heatmap.cols == h.cols && report.heatmap.rows == h.rows) {
        for (std::size_t i = 0; i < h.cells.size(); ++i) report.heatmap.cells[i] += h.cells[i];
    } else {
        throw std::invalid_argument("document '" + doc.id + "' uses a different display size");
    }
}

ReplayReport replay(std::span<const GazeSample> trace, const Document& doc, const PipelineConfig& config,
                    const std::string& participant) {
    ReplayReport r;
    r.participant = participant;
    r.strategy = config.engine.strategy;
    r.fraction = config.engine.fraction;
    replay_into(r, trace, doc, config);
    return r;
}

std::string serialize_report(const ReplayReport& report) {
    using nlohmann::json;
    json docs = json::array();
    for (const auto& d : report.documents) {
        json trig = json::array();
        for (const auto& t : d.triggers)
            trig.push_back({{"referenceId", t.reference_id},
                            {"tMs", t.t_ms},
                            {"ordinal", t.ordinal},
                            {"threshold", t.threshold}});
        docs.push_back({{"documentId", d.document_id},
                        {"available", d.available},
                        {"samples", d.samples},
                        {"invalid", d.invalid},
                        {"fixations", d.fixations},
                        {"triggers", std::move(trig)}});
    }
    json j = {{"format", kReportFormat},
              {"participant", report.participant},
              {"strategy", to_string(report.strategy)},
              {"fraction", report.fraction},
              {"documents", std::move(docs)},
              {"heatmap",
               {{"cellPx", report.heatmap.cell_px},
                {"cols", report.heatmap.cols},
                {"rows", report.heatmap.rows},
                {"cells", report.heatmap.cells}}},
              {"summary",
               {{"triggered", report.triggered_count()},
                {"available", report.available_count()},
                {"triggerPercentage", report.trigger_percentage()},
                {"invalidRatio", report.invalid_ratio()}}}};
    return j.dump(2);
}

ReplayReport parse_report(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("report is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kReportFormat)
        throw std::invalid_argument("not a " + std::string(kReportFormat) + " report");
    try {
        ReplayReport r;
        r.participant = j.at("participant").get<std::string>();
        r.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        r.fraction = j.at("fraction").get<double>();
        for (const auto& dj : j.at("documents")) {
            DocumentReplay d;
            d.document_id = dj.at("documentId").get<std::string>();
            d.available = dj.at("available").get<std::size_t>();
            d.samples = dj.at("samples").get<std::size_t>();
            d.invalid = dj.at("invalid").get<std::size_t>();
            d.fixations = dj.at("fixations").get<std::size_t>();
            for (const auto& tj : dj.at("triggers"))
                d.triggers.push_back({tj.at("referenceId").get<std::string>(), tj.at("tMs").get<double>(),
                                      tj.at("ordinal").get<int>(), tj.at("threshold").get<int>()});
            r.documents.push_back(std::move(d));
        }
        const auto& hj = j.at("heatmap");
        r.heatmap.cell_px = hj.at("cellPx").get<double>();
        r.heatmap.cols = hj.at("cols").get<std::size_t>();
        r.heatmap.rows = hj.at("rows").get<std::size_t>();
        r.heatmap.cells = hj.at("cells").get<std::vector<double>>();
        if (r.heatmap.cells.size() != r.heatmap.cols * r.heatmap.rows)
            throw std::invalid_argument("heat map has " + std::to_string(r.heatmap.cells.size()) + " cells, expected " +
                                        std::to_string(r.heatmap.cols * r.heatmap.rows));
        return r;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed report: ") + e.what());
    }
}

std::string format_report_table(const ReplayReport& report) {
    std::ostringstream out;
    out << "participant " << (report.participant.empty() ? "-" : report.participant) << "  strategy "
        << to_string(report.strategy) << "  fraction " << format_number(report.fraction) << '\n';
    out << "document              refs  fired  fixations  samples  invalid\n";
    for (const auto& d : report.documents) {
        char line[160];
        std::snprintf(line, sizeof line, "%-20s %5zu %6zu %10zu %8zu %8zu\n", d.document_id.c_str(), d.available,
                      d.triggers.size(), d.fixations, d.samples, d.invalid);
        out << line;
    }
    char tail[160];
    std::snprintf(tail, sizeof tail, "triggered %zu/%zu (%.1f%%), invalid gaze %.1f%%\n", report.triggered_count(),
                  report.available_count(), 100 * report.trigger_percentage(), 100 * report.invalid_ratio());
    out << tail;
    return out.str();
}

void write_heatmap_csv(const std::string& path, const Heatmap& heatmap) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write heat map to " + path);
    for (std::size_t r = 0; r < heatmap.rows; ++r) {
        for (std::size_t c = 0; c < heatmap.cols; ++c) out << (c ? "," : "") << format_number(heatmap.at(c, r));
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing heat map to " + path);
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Keep: return "keep";
        case Verdict::DiscardInvalidGaze: return "discard-invalid-gaze";
        case Verdict::FlagLowTrigger: return "flag-low-trigger";
    }
    return "keep";
}

ScreeningResult screen_participant(const ReplayReport& report, const ScreeningConfig& config,
                                   const std::string& heatmap_path) {
    ScreeningResult r;
    r.invalid_ratio = report.invalid_ratio();
    r.trigger_percentage = report.trigger_percentage();
    if (r.invalid_ratio > config.invalid_threshold) {
        r.verdict = Verdict::DiscardInvalidGaze;
    } else if (!(r.trigger_percentage > config.inspection_threshold)) {
        r.verdict = Verdict::FlagLowTrigger;
        if (!heatmap_path.empty()) {
            write_heatmap_csv(heatmap_path, report.heatmap);
            r.heatmap_path = heatmap_path;
        }
    }
    return r;
}

namespace {

std::pair<double, std::optional<double>> mean_sd(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, std::nullopt};
    double s = 0;
    for (double x : xs) s += x;
    const double m = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return {m, std::nullopt};
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

CohortSummary cohort_report(std::span<const ReplayReport> reports, const ScreeningConfig& config,
                            const std::set<std::string>& inspection_exclusions) {
    CohortSummary s;
    s.histogram.assign(10, 0);
    std::vector<double> all, retained;
    for (const auto& rep : reports) {
        const auto res = screen_participant(rep, config);
        if (res.verdict == Verdict::DiscardInvalidGaze) {
            ++s.discarded_invalid;
            continue;
        }
        const double p = res.trigger_percentage;
        all.push_back(p);
        ++s.histogram[std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(p * 10 + 1e-9)))];
        if (res.verdict == Verdict::FlagLowTrigger) {
            ++s.below;
            s.flagged.push_back(rep.participant);
            if (inspection_exclusions.count(rep.participant)) continue;
        } else {
            ++s.above;
        }
        retained.push_back(p);
    }
    s.participants = all.size();
    std::tie(s.mean, s.sd) = mean_sd(all);
    s.fraction_above = all.empty() ? 0.0 : static_cast<double>(s.above) / static_cast<double>(all.size());
    s.retained = retained.size();
    std::tie(s.retained_mean, s.retained_sd) = mean_sd(retained);
    return s;
}

std::string format_cohort_table(const CohortSummary& s) {
    auto pct = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.1f%%", 100 * v);
        return std::string(b);
    };
    std::ostringstream out;
    out << "discarded (invalid gaze): " << s.discarded_invalid << '\n';
    out << "participants:             " << s.participants << '\n';
    out << "mean trigger percentage:  " << pct(s.mean) << " (sd " << (s.sd ? pct(*s.sd) : "n/a") << ")\n";
    out << "above threshold:          " << s.above << " (" << pct(s.fraction_above) << ")\n";
    out << "below threshold:          " << s.below << '\n';
    out << "histogram:\n";
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
        char line[64];
        std::snprintf(line, sizeof line, "  %3zu-%3zu%% %4zu ", b * 10, b * 10 + 10, s.histogram[b]);
        out << line << std::string(s.histogram[b], '#') << '\n';
    }
    if (!s.flagged.empty()) {
        out << "flagged for heat-map inspection:";
        for (const auto& p : s.flagged) out << ' ' << p;
        out << '\n';
    }
    out << "retained:                 " << s.retained << '\n';
    out << "retained mean:            " << pct(s.retained_mean) << " (sd "
        << (s.retained_sd ? pct(*s.retained_sd) : "n/a") << ")\n";
    return out.str();
}

}  // namespace msnv
