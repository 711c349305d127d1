#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "msnv/analysis.hpp"
#include "msnv/replay.hpp"
#include "msnv/server.hpp"
#include "msnv/trace_io.hpp"

namespace py = pybind11;
using namespace msnv;

namespace {

PipelineConfig pipeline_config(const Document& doc, double fraction, const std::string& strategy) {
    PipelineConfig c;
    c.engine.fraction = fraction;
    c.engine.strategy = strategy_from_string(strategy);
    c.display = doc.layout.display;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gaze-driven highlighting of chart references in narrative text.";

    py::register_exception<DocumentError>(m, "DocumentError", PyExc_ValueError);
    py::register_exception<TraceFormatError>(m, "TraceFormatError", PyExc_ValueError);
    py::register_exception<wire::ProtocolError>(m, "ProtocolError", PyExc_ValueError);
    py::register_exception<MeasureError>(m, "MeasureError", PyExc_ValueError);
    py::register_exception<ExportError>(m, "ExportError", PyExc_OSError);
    py::register_exception<stats::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<StreamOrderError>(m, "StreamOrderError", PyExc_ValueError);

    py::class_<GazeSample>(m, "GazeSample")
        .def(py::init([](double t, double x, double y, bool lv, bool rv) {
                 GazeSample s;
                 s.timestamp_ms = t;
                 s.x = x;
                 s.y = y;
                 s.left_valid = lv;
                 s.right_valid = rv;
                 return s;
             }),
             py::arg("timestamp_ms"), py::arg("x"), py::arg("y"), py::arg("left_valid") = true,
             py::arg("right_valid") = true)
        .def_readwrite("timestamp_ms", &GazeSample::timestamp_ms)
        .def_readwrite("x", &GazeSample::x)
        .def_readwrite("y", &GazeSample::y)
        .def_readwrite("left_valid", &GazeSample::left_valid)
        .def_readwrite("right_valid", &GazeSample::right_valid)
        .def_readwrite("left_pupil_mm", &GazeSample::left_pupil_mm)
        .def_readwrite("right_pupil_mm", &GazeSample::right_pupil_mm)
        .def_readwrite("eye_distance_mm", &GazeSample::eye_distance_mm)
        .def(py::self == py::self)
        .def("__repr__", [](const GazeSample& s) { return "GazeSample(" + format_sample(s) + ")"; });

    py::class_<Fixation>(m, "Fixation")
        .def_readonly("start_ms", &Fixation::start_ms)
        .def_readonly("end_ms", &Fixation::end_ms)
        .def_readonly("centroid_x", &Fixation::centroid_x)
        .def_readonly("centroid_y", &Fixation::centroid_y)
        .def_readonly("sample_count", &Fixation::sample_count)
        .def_property_readonly("duration_ms", &Fixation::duration_ms)
        .def(py::self == py::self);

    m.def("load_trace", &load_trace, py::arg("path"));
    m.def("save_trace", &save_trace, py::arg("path"), py::arg("samples"));
    m.def(
        "interpolate_gaps",
        [](const std::vector<GazeSample>& s, double max_gap_ms) { return interpolate_gaps(s, DisplayBounds{}, max_gap_ms); },
        py::arg("samples"), py::arg("max_gap_ms") = kDefaultMaxGapMs);
    m.def(
        "detect_fixations",
        [](const std::vector<GazeSample>& s, double min_fixation_ms, double dispersion_px) {
            return detect_fixations(s, FixationParams{min_fixation_ms, dispersion_px});
        },
        py::arg("samples"), py::arg("min_fixation_ms") = 100.0, py::arg("dispersion_px") = 35.0);

    py::class_<Document>(m, "Document")
        .def_static("load", &load_document, py::arg("path"))
        .def_static("from_json", [](const std::string& text) { return parse_document(text); }, py::arg("text"))
        .def("to_json", [](const Document& d) { return serialize_document(d); })
        .def_readonly("id", &Document::id)
        .def_readonly("title", &Document::title)
        .def_readonly("sentences", &Document::sentences)
        .def_property_readonly("reference_ids",
                               [](const Document& d) {
                                   std::vector<std::string> ids;
                                   for (const auto& r : d.references) ids.push_back(r.id);
                                   return ids;
                               })
        .def("mean_fixations",
             [](const Document& d, const std::string& ref) {
                 const auto* r = d.find_reference(ref);
                 if (!r) throw py::key_error(ref);
                 return r->mean_fixations;
             })
        .def("trigger_threshold",
             [](const Document& d, const std::string& ref, double fraction) {
                 const auto* r = d.find_reference(ref);
                 if (!r) throw py::key_error(ref);
                 return trigger_threshold(*r, fraction);
             },
             py::arg("reference_id"), py::arg("fraction") = kDefaultTriggerFraction)
        .def("adjust_bar_colors", [](const Document& d, double c) { return adjust_bar_colors(d, c); },
             py::arg("min_contrast") = kDefaultMinContrast)
        .def_property_readonly("bar_colors",
                               [](const Document& d) {
                                   std::vector<std::string> out;
                                   for (const auto& b : d.chart.bars) out.push_back(b.color.hex());
                                   return out;
                               })
        .def(py::self == py::self);

    m.def("load_documents", &load_documents, py::arg("dir"));
    m.def("contrast_ratio", [](const std::string& a, const std::string& b) {
        return contrast_ratio(Rgb::from_hex(a), Rgb::from_hex(b));
    });

    m.def(
        "synthesize_trace",
        [](const Document& doc, double speed, double skip, std::uint64_t seed, double revisit, double noise,
           double dropout, double offset_x, double offset_y) {
            ReaderProfile p;
            p.speed_factor = speed;
            p.skip_probability = skip;
            p.revisit_probability = revisit;
            p.noise_px = noise;
            p.dropout_rate = dropout;
            p.offset_x_px = offset_x;
            p.offset_y_px = offset_y;
            return synthesize_trace(doc, p, seed);
        },
        py::arg("doc"), py::arg("speed") = 1.0, py::arg("skip") = 0.0, py::arg("seed") = 0, py::arg("revisit") = 0.0,
        py::arg("noise") = 0.0, py::arg("dropout") = 0.0, py::arg("offset_x") = 0.0, py::arg("offset_y") = 0.0);

    m.def(
        "replay",
        [](const std::vector<std::pair<Document, std::vector<GazeSample>>>& runs, double fraction,
           const std::string& strategy, const std::string& participant) {
            ReplayReport report;
            report.participant = participant;
            report.fraction = fraction;
            report.strategy = strategy_from_string(strategy);
            for (const auto& [doc, trace] : runs) replay_into(report, trace, doc, pipeline_config(doc, fraction, strategy));
            return serialize_report(report);
        },
        py::arg("runs"), py::arg("fraction") = kDefaultTriggerFraction, py::arg("strategy") = "desaturate",
        py::arg("participant") = "", "Replays (document, trace) pairs; returns report/1 JSON.");

    m.def(
        "screen_participant",
        [](const std::string& report_json, double invalid_threshold, const std::string& heatmap_path) {
            const auto r = screen_participant(parse_report(report_json), ScreeningConfig{invalid_threshold, 0.75},
                                              heatmap_path);
            return py::make_tuple(std::string(to_string(r.verdict)), r.heatmap_path);
        },
        py::arg("report"), py::arg("invalid_threshold") = 0.25, py::arg("heatmap_path") = "");

    m.def(
        "cohort_table",
        [](const std::vector<std::string>& reports, const std::vector<std::string>& exclude, double invalid_threshold) {
            std::vector<ReplayReport> parsed;
            for (const auto& r : reports) parsed.push_back(parse_report(r));
            const auto s = cohort_report(parsed, ScreeningConfig{invalid_threshold, 0.75},
                                         std::set<std::string>(exclude.begin(), exclude.end()));
            py::dict d;
            d["discarded_invalid"] = s.discarded_invalid;
            d["participants"] = s.participants;
            d["mean"] = s.mean;
            d["sd"] = s.sd;
            d["histogram"] = s.histogram;
            d["above"] = s.above;
            d["below"] = s.below;
            d["fraction_above"] = s.fraction_above;
            d["flagged"] = s.flagged;
            d["retained"] = s.retained;
            d["retained_mean"] = s.retained_mean;
            d["retained_sd"] = s.retained_sd;
            d["table"] = format_cohort_table(s);
            return d;
        },
        py::arg("reports"), py::arg("exclude") = std::vector<std::string>{}, py::arg("invalid_threshold") = 0.25);

    py::class_<Session>(m, "Session")
        .def(py::init([](const std::vector<Document>& docs, std::uint64_t seed, double fraction,
                         const std::string& strategy) {
                 auto store = std::make_shared<DocumentStore>();
                 SessionConfig c;
                 c.seed = seed;
                 for (const auto& d : docs) {
                     (*store)[d.id] = d;
                     c.pipeline = pipeline_config(d, fraction, strategy);
                 }
                 return std::make_unique<Session>(c, store);
             }),
             py::arg("docs"), py::arg("seed") = 0, py::arg("fraction") = kDefaultTriggerFraction,
             py::arg("strategy") = "desaturate")
        .def("handle_line", &Session::handle_line, py::arg("line"), "One NDJSON message in, encoded replies out.")
        .def("abort", &Session::abort)
        .def_property_readonly("phase", [](const Session& s) { return std::string(to_string(s.phase())); })
        .def("log_json", [](const Session& s) { return export_log(s.log()); });

    m.def("randomize_tasks", &randomize_tasks, py::arg("doc_ids"), py::arg("seed"));
    m.def("websocket_accept_key", &websocket_accept_key, py::arg("client_key"));

    m.def("bh_adjust", [](const std::vector<double>& p) { return stats::bh_adjust(p).adjusted; }, py::arg("p_values"));
    m.def(
        "tertile_split",
        [](const std::vector<double>& xs) {
            std::vector<std::string> out;
            for (auto t : stats::tertile_split(xs)) out.emplace_back(stats::to_string(t));
            return out;
        },
        py::arg("scores"));
    m.def(
        "median_split",
        [](const std::vector<double>& xs) {
            std::vector<std::string> out;
            for (auto h : stats::median_split(xs)) out.emplace_back(stats::to_string(h));
            return out;
        },
        py::arg("values"));
    m.def(
        "perception_modes",
        [](const std::vector<std::vector<int>>& items) {
            std::vector<std::vector<double>> out;
            for (const auto& s : stats::perception_summary(items)) out.push_back(s.mode);
            return out;
        },
        py::arg("items"));
    m.def(
        "analyze_logs",
        [](const std::vector<std::string>& paths, const std::string& group, const std::vector<std::string>& by) {
            std::vector<SessionLog> logs;
            for (const auto& p : paths) logs.push_back(load_log(p));
            stats::AnalysisInput in;
            in.table = stats::measures_from_logs(logs, group);
            for (const auto& k : by) in.by.push_back(stats::group_key_from_string(k));
            return stats::analysis_report(in);
        },
        py::arg("paths"), py::arg("group") = "msnv", py::arg("by") = std::vector<std::string>{"group"});
}
