#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "msnv/analysis.hpp"
#include "msnv/replay.hpp"
#include "msnv/trace_io.hpp"

using namespace msnv;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<fs::path> files_with(const std::string& dir, const std::string& suffix) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() >= suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct ReplayArgs {
    std::vector<std::string> docs, traces;
    double fraction = kDefaultTriggerFraction;
    std::string strategy = "desaturate";
    std::string participant;
    std::string out;
    bool json = false;
};

struct SynthArgs {
    std::string doc, out;
    ReaderProfile profile;
    std::uint64_t seed = 0;
};

struct ScreenArgs {
    std::string report, heatmap;
    ScreeningConfig config;
};

struct CohortArgs {
    std::string dir;
    std::vector<std::string> exclude;
    ScreeningConfig config;
};

struct AnalyzeArgs {
    std::string logs, table, group = "msnv", out, table_out, tertiles;
    std::vector<std::string> by{"group"};
    std::vector<double> p_values;
};

int run_replay(const ReplayArgs& a) {
    if (a.docs.size() != a.traces.size()) throw CLI::ValidationError("replay", "give one --trace per --doc");
    PipelineConfig config;
    config.engine.fraction = a.fraction;
    config.engine.strategy = strategy_from_string(a.strategy);
    ReplayReport report;
    report.participant = a.participant;
    report.strategy = config.engine.strategy;
    report.fraction = config.engine.fraction;
    for (std::size_t i = 0; i < a.docs.size(); ++i) {
        const auto doc = load_document(a.docs[i]);
        config.display = doc.layout.display;
        replay_into(report, load_trace(a.traces[i]), doc, config);
    }
    const auto text = serialize_report(report);
    if (!a.out.empty()) spill(a.out, text + "\n");
    if (a.json)
        std::cout << text << '\n';
    else
        std::cout << format_report_table(report);
    return 0;
}

int run_synth(const SynthArgs& a) {
    const auto doc = load_document(a.doc);
    const auto trace = synthesize_trace(doc, a.profile, a.seed);
    if (a.out.empty())
        write_trace(std::cout, trace);
    else
        save_trace(a.out, trace);
    return 0;
}

int run_screen(const ScreenArgs& a) {
    const auto report = parse_report(slurp(a.report));
    auto heatmap = a.heatmap;
    if (heatmap.empty()) heatmap = fs::path(a.report).replace_extension(".heatmap.csv").string();
    const auto r = screen_participant(report, a.config, heatmap);
    std::cout << (report.participant.empty() ? fs::path(a.report).stem().string() : report.participant) << ": "
              << to_string(r.verdict) << " (invalid " << format_number(r.invalid_ratio) << ", triggered "
              << format_number(r.trigger_percentage) << ")\n";
    if (r.heatmap_path) std::cout << "heat map: " << *r.heatmap_path << '\n';
    return 0;
}

int run_cohort(const CohortArgs& a) {
    std::vector<ReplayReport> reports;
    for (const auto& p : files_with(a.dir, ".json")) reports.push_back(parse_report(slurp(p.string())));
    if (reports.empty()) throw std::runtime_error("no reports in " + a.dir);
    const std::set<std::string> excluded(a.exclude.begin(), a.exclude.end());
    std::cout << format_cohort_table(cohort_report(reports, a.config, excluded));
    return 0;
}

int run_analyze(const AnalyzeArgs& a) {
    stats::AnalysisInput in;
    if (!a.logs.empty() == !a.table.empty()) throw CLI::ValidationError("analyze", "give exactly one of --logs, --table");
    if (!a.logs.empty()) {
        std::vector<SessionLog> logs;
        for (const auto& p : files_with(a.logs, ".json")) logs.push_back(load_log(p.string()));
        in.table = stats::measures_from_logs(logs, a.group);
        in.perception.assign(kPerceptionItems, {});
        for (const auto& log : logs)
            if (log.perception)
                for (std::size_t i = 0; i < kPerceptionItems; ++i) in.perception[i].push_back((*log.perception)[i]);
        if (in.perception.front().empty()) in.perception.clear();
    } else {
        std::ifstream f(a.table);
        if (!f) throw std::runtime_error("cannot open " + a.table);
        in.table = stats::read_measure_table(f);
    }
    for (const auto& k : a.by) in.by.push_back(stats::group_key_from_string(k));
    in.p_values = a.p_values;
    if (!a.tertiles.empty()) in.tertile_score = a.tertiles;
    if (!a.table_out.empty()) {
        std::ofstream t(a.table_out);
        if (!t) throw std::runtime_error("cannot write " + a.table_out);
        stats::write_measure_table(t, in.table);
    }
    const auto text = stats::analysis_report(in);
    if (a.out.empty())
        std::cout << text << '\n';
    else
        spill(a.out, text + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthesize, replay and screen gaze traces; summarize study logs."};
    app.require_subcommand(1);

    ReplayArgs ra;
    auto* replay_cmd = app.add_subcommand("replay", "Replay traces through fixation detection and the engine");
    replay_cmd->add_option("--doc", ra.docs, "msnv/1 document (repeatable)")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--trace", ra.traces, "gaze/1 trace for the matching --doc")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--fraction", ra.fraction, "Trigger fraction of mean fixations")->check(CLI::Range(0.0, 1.0));
    replay_cmd->add_option("--strategy", ra.strategy, "keep | remove | desaturate");
    replay_cmd->add_option("--participant", ra.participant);
    replay_cmd->add_option("--out", ra.out, "Write the report/1 JSON here");
    replay_cmd->add_flag("--json", ra.json, "Print the report/1 JSON instead of the table");

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize a 120 Hz reader trace");
    synth_cmd->add_option("--doc", sa.doc)->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--speed", sa.profile.speed_factor, "Share of each reference's mean fixations");
    synth_cmd->add_option("--skip", sa.profile.skip_probability, "Per-sentence skip probability");
    synth_cmd->add_option("--revisit", sa.profile.revisit_probability);
    synth_cmd->add_option("--noise", sa.profile.noise_px, "Uniform jitter in px");
    synth_cmd->add_option("--dropout", sa.profile.dropout_rate, "Share of samples lost to dropouts");
    synth_cmd->add_option("--offset-x", sa.profile.offset_x_px);
    synth_cmd->add_option("--offset-y", sa.profile.offset_y_px);
    synth_cmd->add_option("--seed", sa.seed);
    synth_cmd->add_option("--out", sa.out, "gaze/1 output (stdout if omitted)");

    ScreenArgs sc;
    auto* screen_cmd = app.add_subcommand("screen", "Screen one participant's report");
    screen_cmd->add_option("--report", sc.report)->required()->check(CLI::ExistingFile);
    screen_cmd->add_option("--invalid-threshold", sc.config.invalid_threshold)->check(CLI::Range(0.0, 1.0));
    screen_cmd->add_option("--inspection-threshold", sc.config.inspection_threshold)->check(CLI::Range(0.0, 1.0));
    screen_cmd->add_option("--heatmap", sc.heatmap, "Heat-map CSV for flagged participants");

    CohortArgs ca;
    auto* cohort_cmd = app.add_subcommand("cohort", "Summarize trigger percentages over a directory of reports");
    cohort_cmd->add_option("--reports", ca.dir)->required();
    cohort_cmd->add_option("--exclude", ca.exclude, "Participant dropped after heat-map inspection (repeatable)");
    cohort_cmd->add_option("--invalid-threshold", ca.config.invalid_threshold)->check(CLI::Range(0.0, 1.0));
    cohort_cmd->add_option("--inspection-threshold", ca.config.inspection_threshold)->check(CLI::Range(0.0, 1.0));

    AnalyzeArgs aa;
    auto* analyze_cmd = app.add_subcommand("analyze", "Descriptive statistics over logs or a measure table");
    analyze_cmd->add_option("--logs", aa.logs, "Directory of msnvlog/1 files");
    analyze_cmd->add_option("--table", aa.table, "Measure table CSV")->check(CLI::ExistingFile);
    analyze_cmd->add_option("--group", aa.group, "Group label for rows read from logs");
    analyze_cmd->add_option("--by", aa.by, "participant | group | document");
    analyze_cmd->add_option("--pvalues", aa.p_values, "p-values to adjust");
    analyze_cmd->add_option("--tertiles", aa.tertiles, "Score column to split into tertiles");
    analyze_cmd->add_option("--table-out", aa.table_out, "Write the measure table CSV here");
    analyze_cmd->add_option("--out", aa.out, "Write the analysis/1 JSON here");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*replay_cmd) return run_replay(ra);
        if (*synth_cmd) return run_synth(sa);
        if (*screen_cmd) return run_screen(sc);
        if (*cohort_cmd) return run_cohort(ca);
        if (*analyze_cmd) return run_analyze(aa);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "msnv-replay: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
