#pragma once

// Descriptive statistics over logged study data: group summaries, tertile
// and median splits, Benjamini-Hochberg adjustment and Likert summaries.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msnv/session.hpp"

namespace msnv::stats {

inline constexpr std::string_view kAnalysisFormat = "analysis/1";

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double mean(std::span<const double> xs);
/// n-1 denominator; absent for fewer than two values.
std::optional<double> sample_sd(std::span<const double> xs);
double median(std::span<const double> xs);

struct MeasureRow {
    std::string participant;
    std::string group;
    std::string document;
    double accuracy = 0;
    double time_on_task_ms = 0;
    double interest = 0;
    double ease = 0;
    /// Optional user-characteristic scores, e.g. "vis_literacy".
    std::map<std::string, double> scores;
    bool operator==(const MeasureRow&) const = default;
};

struct MeasureTable {
    std::vector<MeasureRow> rows;
    void validate() const;
    bool operator==(const MeasureTable&) const = default;
};

/// Header: participant,group,document,accuracy,time_on_task_ms,interest,ease
/// followed by any score columns.
MeasureTable read_measure_table(std::istream& in);
void write_measure_table(std::ostream& out, const MeasureTable& table);

/// One row per completed task of each log.
MeasureTable measures_from_logs(std::span<const SessionLog> logs, const std::string& group);

enum class GroupKey { Participant, Group, Document };
GroupKey group_key_from_string(std::string_view s);

struct MeasureStats {
    double mean = 0;
    std::optional<double> sd;
};

struct GroupSummary {
    std::vector<std::string> key;
    std::size_t n = 0;
    MeasureStats accuracy, time_on_task_ms, interest, ease;
};

/// Groups ordered by key. Throws DomainError on an empty table.
std::vector<GroupSummary> summarize(const MeasureTable& table, std::span<const GroupKey> by);

enum class Tertile { Low, Medium, High };
enum class Half { Low, High };
std::string_view to_string(Tertile t);
std::string_view to_string(Half h);

/// Cut points are the 1/3 and 2/3 empirical quantiles (inverse of the
/// empirical CDF); a value equal to a cut point goes to the lower bin.
std::vector<Tertile> tertile_split(std::span<const double> scores);

/// Values at or below the median go Low.
std::vector<Half> median_split(std::span<const double> values);

struct AdjustedPValues {
    std::vector<double> raw;
    std::vector<double> adjusted;  // same order as raw
};

/// Benjamini-Hochberg step-up adjustment.
AdjustedPValues bh_adjust(std::span<const double> p_values);

struct PerceptionStats {
    std::size_t n = 0;
    double mean = 0;
    /// One value (possibly the midpoint of two adjacent tied modes) or the
    /// full set of tied modal values.
    std::vector<double> mode;
    std::optional<double> sd;
    int min = 0;
    int max = 0;
};

/// items[i] holds every rating given to item i (1-7 scale).
std::vector<PerceptionStats> perception_summary(std::span<const std::vector<int>> items, int scale_max = 7);

struct AnalysisInput {
    MeasureTable table;
    std::vector<GroupKey> by;
    std::vector<double> p_values;
    std::vector<std::vector<int>> perception;
    std::optional<std::string> tertile_score;  // score column to split into tertiles
};

/// The `analysis/1` structured report.
std::string analysis_report(const AnalysisInput& input);

}  // namespace msnv::stats
