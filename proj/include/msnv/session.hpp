#pragma once

// Study sessions: task randomization, the per-connection phase machine,
// task measures and the `msnvlog/1` session log.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msnv/document.hpp"
#include "msnv/pipeline.hpp"
#include "msnv/protocol.hpp"

namespace msnv {

inline constexpr std::string_view kLogFormat = "msnvlog/1";
inline constexpr std::size_t kPerceptionItems = 10;
inline constexpr int kPerceptionScale = 7;
inline constexpr int kTaskRatingScale = 5;

/// Statements of the post-study perception questionnaire, in order.
extern const std::array<std::string_view, kPerceptionItems> kPerceptionStatements;

/// Fisher-Yates over a SplitMix64 stream; identical on every platform.
std::vector<std::string> randomize_tasks(std::vector<std::string> doc_ids, std::uint64_t seed);

/// Per-participant seed derived from the session seed and participant id.
std::uint64_t participant_seed(std::uint64_t seed, std::string_view participant_id);

struct SessionConfig {
    std::string participant_id;
    std::vector<std::string> document_ids;
    std::uint64_t seed = 0;
    PipelineConfig pipeline;
    bool operator==(const SessionConfig&) const = default;
};

struct GazeStats {
    std::size_t samples = 0;
    std::size_t invalid = 0;
    std::size_t fixations = 0;
    bool operator==(const GazeStats&) const = default;
};

struct TaskRecord {
    std::string document_id;
    double shown_at_ms = 0;
    std::optional<double> next_pressed_at_ms;
    std::vector<int> choices;
    std::vector<bool> correct;
    std::optional<int> ease;
    std::optional<int> interest;
    std::vector<TriggerEvent> triggers;
    GazeStats gaze;
    std::string trace;  // path of the task's gaze/1 trace, if recorded
    bool operator==(const TaskRecord&) const = default;
};

struct SessionLog {
    SessionConfig config;
    std::uint64_t order_seed = 0;
    std::vector<std::string> order;
    std::vector<TaskRecord> tasks;
    std::optional<std::vector<int>> perception;
    bool partial = false;
    bool operator==(const SessionLog&) const = default;
};

class MeasureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Measures {
    double time_on_task_ms = 0;
    double accuracy = 0;
    int ease = 0;
    int interest = 0;
};

Measures compute_measures(const TaskRecord& record);

class ExportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string export_log(const SessionLog& log);
SessionLog parse_log(std::string_view text);
void write_log(const std::string& path, const SessionLog& log);
SessionLog load_log(const std::string& path);

enum class Phase { AwaitHello, Loading, Reading, Questions, Perception, Ended, Aborted };
std::string_view to_string(Phase p);

using DocumentStore = std::map<std::string, Document>;
using Clock = std::function<double()>;  // milliseconds
/// Receives every raw gaze sample of a task as it arrives.
using TraceSink = std::function<void(const std::string& doc_id, const GazeSample& sample)>;

/// One participant's session. Not thread-safe: feed messages from a single
/// writer in arrival order.
class Session {
public:
    Session(SessionConfig config, std::shared_ptr<const DocumentStore> docs, Clock clock = {});

    std::vector<wire::Outbound> handle_message(const wire::Inbound& message);
    /// Decodes one line, handles it, and encodes the replies. Malformed
    /// lines get an ERROR reply.
    std::vector<std::string> handle_line(std::string_view line);

    /// Marks an unfinished session partial (e.g. on disconnect).
    void abort();

    Phase phase() const { return phase_; }
    const SessionLog& log() const { return log_; }
    const std::string& current_document() const { return current_doc_; }

    void set_trace_sink(TraceSink sink) { trace_sink_ = std::move(sink); }
    void set_trace_path(std::function<std::string(const std::string& doc_id)> f) { trace_path_ = std::move(f); }

private:
    std::vector<wire::Outbound> on_hello(const wire::Hello& m);
    std::vector<wire::Outbound> on_gaze(const wire::Gaze& m);
    std::vector<wire::Outbound> on_doc_ready(const wire::DocReady& m);
    std::vector<wire::Outbound> on_next(const wire::Next& m);
    std::vector<wire::Outbound> on_answers(const wire::Answers& m);
    std::vector<wire::Outbound> on_ratings(const wire::Ratings& m);

    std::vector<wire::Outbound> show_next();
    std::vector<wire::Outbound> protocol_error(std::string message) const;
    std::optional<std::vector<wire::Outbound>> check_doc(const std::string& doc_id);
    TaskRecord& current_task() { return log_.tasks.back(); }

    std::shared_ptr<const DocumentStore> docs_;
    Clock clock_;
    SessionLog log_;
    Phase phase_ = Phase::AwaitHello;
    std::size_t next_index_ = 0;
    std::string current_doc_;
    std::unique_ptr<GazePipeline> pipeline_;
    TraceSink trace_sink_;
    std::function<std::string(const std::string&)> trace_path_;
};

/// Questions sent after a document: two star ratings then the document's items.
wire::Questions questions_for(const Document& doc);

}  // namespace msnv
