#include "msnv/session.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "msnv/rng.hpp"

namespace msnv {

using nlohmann::json;

const std::array<std::string_view, kPerceptionItems> kPerceptionStatements = {
    "I found the interventions useful.",
    "I found the interventions useful to understand the document.",
    "I found the interventions useful to focus on the relevant information.",
    "I found the interventions distracting.",
    "I found the interventions confusing.",
    "I found that the timing of the intervention was right.",
    "I found the interventions easy to notice.",
    "I found the intervention well-integrated into the document.",
    "I was satisfied with the intervention.",
    "I would use the interventions in my daily life.",
};


std::vector<std::string> randomize_tasks(std::vector<std::string> doc_ids, std::uint64_t seed) {
    if (doc_ids.empty()) throw std::invalid_argument("no documents to randomize");
    SplitMix64 rng(seed);
    for (std::size_t i = doc_ids.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(doc_ids[i], doc_ids[j]);
    }
    return doc_ids;
}

std::uint64_t participant_seed(std::uint64_t seed, std::string_view participant_id) {
    std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
    for (unsigned char c : participant_id) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return SplitMix64(seed ^ h).next();
}

Measures compute_measures(const TaskRecord& record) {
    if (!record.next_pressed_at_ms) throw MeasureError(record.document_id + ": task never finished");
    Measures m;
    m.time_on_task_ms = *record.next_pressed_at_ms - record.shown_at_ms;
    if (!(m.time_on_task_ms > 0)) throw MeasureError(record.document_id + ": time on task must be positive");
    if (record.correct.empty() || record.correct.size() != record.choices.size())
        throw MeasureError(record.document_id + ": answers missing");
    if (!record.ease || !record.interest) throw MeasureError(record.document_id + ": ratings missing");
    std::size_t right = 0;
    for (bool c : record.correct) right += c ? 1 : 0;
    m.accuracy = static_cast<double>(right) / static_cast<double>(record.correct.size());
    m.ease = *record.ease;
    m.interest = *record.interest;
    return m;
}

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::AwaitHello: return "await-hello";
        case Phase::Loading: return "loading";
        case Phase::Reading: return "reading";
        case Phase::Questions: return "questions";
        case Phase::Perception: return "perception";
        case Phase::Ended: return "ended";
        case Phase::Aborted: return "aborted";
    }
    return "aborted";
}

// Log serialization ---------------------------------------------------------

namespace {

json config_json(const SessionConfig& c) {
    const auto& p = c.pipeline;
    return json{{"participantId", c.participant_id},
                {"documents", c.document_ids},
                {"seed", c.seed},
                {"fraction", p.engine.fraction},
                {"strategy", to_string(p.engine.strategy)},
                {"outlineWidth", p.engine.outline_width_px},
                {"highlightColor", p.engine.highlight_color.hex()},
                {"desaturatedColor", p.engine.desaturated_color.hex()},
                {"minFixationMs", p.fixation.min_fixation_ms},
                {"dispersionPx", p.fixation.dispersion_px},
                {"maxGapMs", p.max_gap_ms},
                {"display", {{"width", p.display.width}, {"height", p.display.height}}}};
}

SessionConfig config_from(const json& j) {
    SessionConfig c;
    c.participant_id = j.at("participantId").get<std::string>();
    c.document_ids = j.at("documents").get<std::vector<std::string>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    auto& p = c.pipeline;
    p.engine.fraction = j.at("fraction").get<double>();
    p.engine.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    p.engine.outline_width_px = j.at("outlineWidth").get<double>();
    p.engine.highlight_color = Rgb::from_hex(j.at("highlightColor").get<std::string>());
    p.engine.desaturated_color = Rgb::from_hex(j.at("desaturatedColor").get<std::string>());
    p.fixation.min_fixation_ms = j.at("minFixationMs").get<double>();
    p.fixation.dispersion_px = j.at("dispersionPx").get<double>();
    p.max_gap_ms = j.at("maxGapMs").get<double>();
    p.display.width = j.at("display").at("width").get<double>();
    p.display.height = j.at("display").at("height").get<double>();
    return c;
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

}  // namespace

std::string export_log(const SessionLog& log) {
    json j;
    j["format"] = kLogFormat;
    j["partial"] = log.partial;
    j["config"] = config_json(log.config);
    j["orderSeed"] = log.order_seed;
    j["order"] = log.order;
    j["tasks"] = json::array();
    for (const auto& t : log.tasks) {
        json triggers = json::array();
        for (const auto& tr : t.triggers)
            triggers.push_back({{"refId", tr.reference_id}, {"tMs", tr.t_ms}, {"ordinal", tr.ordinal},
                                {"threshold", tr.threshold}});
        j["tasks"].push_back({{"docId", t.document_id},
                              {"shownAtMs", t.shown_at_ms},
                              {"nextPressedAtMs", opt(t.next_pressed_at_ms)},
                              {"choices", t.choices},
                              {"correct", t.correct},
                              {"ease", opt(t.ease)},
                              {"interest", opt(t.interest)},
                              {"triggers", triggers},
                              {"gaze",
                               {{"samples", t.gaze.samples},
                                {"invalid", t.gaze.invalid},
                                {"fixations", t.gaze.fixations}}},
                              {"trace", t.trace}});
    }
    j["perception"] = opt(log.perception);
    return j.dump(2);
}

SessionLog parse_log(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != kLogFormat)
            throw std::runtime_error("unsupported log format '" + j.at("format").get<std::string>() + "'");
        SessionLog log;
        log.partial = j.at("partial").get<bool>();
        log.config = config_from(j.at("config"));
        log.order_seed = j.at("orderSeed").get<std::uint64_t>();
        log.order = j.at("order").get<std::vector<std::string>>();
        for (const auto& tj : j.at("tasks")) {
            TaskRecord t;
            t.document_id = tj.at("docId").get<std::string>();
            t.shown_at_ms = tj.at("shownAtMs").get<double>();
            t.next_pressed_at_ms = opt_from<double>(tj.at("nextPressedAtMs"));
            t.choices = tj.at("choices").get<std::vector<int>>();
            t.correct = tj.at("correct").get<std::vector<bool>>();
            t.ease = opt_from<int>(tj.at("ease"));
            t.interest = opt_from<int>(tj.at("interest"));
            for (const auto& tr : tj.at("triggers"))
                t.triggers.push_back({tr.at("refId").get<std::string>(), tr.at("tMs").get<double>(),
                                      tr.at("ordinal").get<int>(), tr.at("threshold").get<int>()});
            t.gaze.samples = tj.at("gaze").at("samples").get<std::size_t>();
            t.gaze.invalid = tj.at("gaze").at("invalid").get<std::size_t>();
            t.gaze.fixations = tj.at("gaze").at("fixations").get<std::size_t>();
            t.trace = tj.at("trace").get<std::string>();
            log.tasks.push_back(std::move(t));
        }
        log.perception = opt_from<std::vector<int>>(j.at("perception"));
        return log;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("bad msnvlog/1 file: ") + e.what());
    }
}

void write_log(const std::string& path, const SessionLog& log) {
    const std::string text = export_log(log);
    std::ofstream out(path);
    if (!out) throw ExportError("cannot open " + path + " for writing");
    out << text << '\n';
    out.flush();
    if (!out) throw ExportError("error writing " + path);
}

SessionLog load_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_log(ss.str());
}

// Session ---------------------------------------------------------------------

wire::Questions questions_for(const Document& doc) {
    wire::Questions q;
    q.doc_id = doc.id;
    q.items.push_back({"stars", "The snippet I read was easy to understand.", {}, kTaskRatingScale});
    q.items.push_back({"stars", "I would be interested in reading the full article.", {}, kTaskRatingScale});
    for (const auto& it : doc.items) q.items.push_back({"choice", it.prompt, it.choices, 0});
    return q;
}

Session::Session(SessionConfig config, std::shared_ptr<const DocumentStore> docs, Clock clock)
    : docs_(std::move(docs)), clock_(std::move(clock)) {
    if (!clock_) {
        const auto start = std::chrono::steady_clock::now();
        clock_ = [start] {
            return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        };
    }
    log_.config = std::move(config);
}

std::vector<wire::Outbound> Session::protocol_error(std::string message) const {
    return {wire::Error{std::move(message) + " (phase " + std::string(to_string(phase_)) + ")", false}};
}

std::optional<std::vector<wire::Outbound>> Session::check_doc(const std::string& doc_id) {
    if (!docs_->count(doc_id)) {
        phase_ = Phase::Aborted;
        log_.partial = true;
        return std::vector<wire::Outbound>{wire::Error{"unknown document '" + doc_id + "'", true}};
    }
    if (doc_id != current_doc_) return protocol_error("message names document '" + doc_id + "', expected '" + current_doc_ + "'");
    return std::nullopt;
}

std::vector<wire::Outbound> Session::handle_message(const wire::Inbound& message) {
    if (phase_ == Phase::Aborted || phase_ == Phase::Ended) return protocol_error("session is over");
    return std::visit(
        [this](const auto& m) -> std::vector<wire::Outbound> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, wire::Hello>) return on_hello(m);
            if constexpr (std::is_same_v<T, wire::Gaze>) return on_gaze(m);
            if constexpr (std::is_same_v<T, wire::DocReady>) return on_doc_ready(m);
            if constexpr (std::is_same_v<T, wire::Next>) return on_next(m);
            if constexpr (std::is_same_v<T, wire::Answers>) return on_answers(m);
            if constexpr (std::is_same_v<T, wire::Ratings>) return on_ratings(m);
        },
        message);
}

std::vector<std::string> Session::handle_line(std::string_view line) {
    std::vector<wire::Outbound> replies;
    try {
        replies = handle_message(wire::decode_inbound(line));
    } catch (const wire::ProtocolError& e) {
        replies = protocol_error(e.what());
    }
    std::vector<std::string> out;
    out.reserve(replies.size());
    for (const auto& r : replies) out.push_back(wire::encode(r));
    return out;
}

std::vector<wire::Outbound> Session::on_hello(const wire::Hello& m) {
    if (phase_ != Phase::AwaitHello) return protocol_error("unexpected HELLO");
    if (m.participant_id.empty()) return protocol_error("HELLO needs a participantId");
    auto& cfg = log_.config;
    if (cfg.participant_id.empty()) cfg.participant_id = m.participant_id;
    if (cfg.document_ids.empty())
        for (const auto& [id, doc] : *docs_) cfg.document_ids.push_back(id);
    for (const auto& id : cfg.document_ids) {
        if (!docs_->count(id)) {
            phase_ = Phase::Aborted;
            log_.partial = true;
            return {wire::Error{"unknown document '" + id + "'", true}};
        }
    }
    if (cfg.document_ids.empty()) {
        phase_ = Phase::Aborted;
        log_.partial = true;
        return {wire::Error{"no documents configured", true}};
    }
    log_.order_seed = participant_seed(cfg.seed, cfg.participant_id);
    log_.order = randomize_tasks(cfg.document_ids, log_.order_seed);
    return show_next();
}

std::vector<wire::Outbound> Session::show_next() {
    current_doc_ = log_.order[next_index_++];
    Document shown = docs_->at(current_doc_);
    shown.items.clear();  // answer keys stay on the server
    phase_ = Phase::Loading;
    return {wire::ShowDoc{std::move(shown)}};
}

std::vector<wire::Outbound> Session::on_doc_ready(const wire::DocReady& m) {
    if (phase_ != Phase::Loading) return protocol_error("unexpected DOC_READY");
    if (auto err = check_doc(m.doc_id)) return *err;
    TaskRecord t;
    t.document_id = current_doc_;
    t.shown_at_ms = clock_();
    if (trace_path_) t.trace = trace_path_(current_doc_);
    log_.tasks.push_back(std::move(t));
    pipeline_ = std::make_unique<GazePipeline>(docs_->at(current_doc_), log_.config.pipeline);
    phase_ = Phase::Reading;
    return {};
}

std::vector<wire::Outbound> Session::on_gaze(const wire::Gaze& m) {
    if (phase_ != Phase::Reading) return protocol_error("GAZE outside of reading");
    GazeSample s;
    s.timestamp_ms = m.t_ms;
    s.x = m.x;
    s.y = m.y;
    s.left_valid = m.lv;
    s.right_valid = m.rv;
    std::vector<InterventionCommand> commands;
    try {
        pipeline_->push(s, commands);
    } catch (const StreamOrderError& e) {
        return protocol_error(e.what());
    }
    if (trace_sink_) trace_sink_(current_doc_, s);
    std::vector<wire::Outbound> out;
    out.reserve(commands.size());
    for (const auto& c : commands) out.push_back(wire::from_command(c));
    return out;
}

std::vector<wire::Outbound> Session::on_next(const wire::Next& m) {
    if (phase_ != Phase::Reading) return protocol_error("unexpected NEXT");
    if (auto err = check_doc(m.doc_id)) return *err;
    auto& t = current_task();
    t.next_pressed_at_ms = clock_();
    std::vector<InterventionCommand> ignored;
    pipeline_->finish(ignored, false);
    t.triggers = pipeline_->triggers();
    t.gaze = {pipeline_->sample_count(), pipeline_->invalid_count(), pipeline_->fixations().size()};
    pipeline_.reset();
    phase_ = Phase::Questions;
    return {questions_for(docs_->at(current_doc_))};
}

std::vector<wire::Outbound> Session::on_answers(const wire::Answers& m) {
    if (phase_ != Phase::Questions) return protocol_error("unexpected ANSWERS");
    if (auto err = check_doc(m.doc_id)) return *err;
    const auto& doc = docs_->at(current_doc_);
    if (m.choices.size() != doc.items.size())
        return protocol_error("expected " + std::to_string(doc.items.size()) + " choices");
    for (std::size_t i = 0; i < m.choices.size(); ++i)
        if (m.choices[i] < 0 || static_cast<std::size_t>(m.choices[i]) >= doc.items[i].choices.size())
            return protocol_error("choice " + std::to_string(i) + " out of range");
    if (m.ratings.size() != 2) return protocol_error("expected 2 ratings (ease, interest)");
    for (int r : m.ratings)
        if (r < 1 || r > kTaskRatingScale) return protocol_error("ratings must lie in 1..5");

    auto& t = current_task();
    t.choices = m.choices;
    t.correct.clear();
    for (std::size_t i = 0; i < m.choices.size(); ++i)
        t.correct.push_back(static_cast<std::size_t>(m.choices[i]) == doc.items[i].answer);
    t.ease = m.ratings[0];
    t.interest = m.ratings[1];

    if (next_index_ < log_.order.size()) return show_next();
    phase_ = Phase::Perception;
    current_doc_.clear();
    return {wire::End{}};
}

std::vector<wire::Outbound> Session::on_ratings(const wire::Ratings& m) {
    if (phase_ != Phase::Perception) return protocol_error("unexpected RATINGS");
    if (m.items.size() != kPerceptionItems) return protocol_error("expected 10 perception ratings");
    for (int r : m.items)
        if (r < 1 || r > kPerceptionScale) return protocol_error("perception ratings must lie in 1..7");
    log_.perception = m.items;
    phase_ = Phase::Ended;
    return {};
}

void Session::abort() {
    if (phase_ == Phase::Ended) return;
    if (pipeline_ && !log_.tasks.empty()) {
        std::vector<InterventionCommand> ignored;
        pipeline_->finish(ignored, false);
        auto& t = current_task();
        t.triggers = pipeline_->triggers();
        t.gaze = {pipeline_->sample_count(), pipeline_->invalid_count(), pipeline_->fixations().size()};
        pipeline_.reset();
    }
    log_.partial = true;
    phase_ = Phase::Aborted;
}

}  // namespace msnv
