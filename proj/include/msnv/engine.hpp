#pragma once

// Gaze-driven highlighting: fixation-count trigger rules per reference,
// the intervention lifecycle under the three removal strategies, and a
// generic feature-predicate rule layer.

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msnv/document.hpp"
#include "msnv/gaze.hpp"

namespace msnv {

enum class Strategy { KeepAll, RemovePrevious, DesaturatePrevious };
enum class InterventionStatus { Untriggered, Active, Desaturated, Removed };
enum class CommandKind { Highlight, Desaturate, Remove };

std::string_view to_string(Strategy s);
/// Accepts "keep", "remove", "desaturate" and the enum spellings.
Strategy strategy_from_string(std::string_view s);
std::string_view to_string(InterventionStatus s);
std::string_view to_string(CommandKind k);

struct OutlineStyle {
    Rgb color;
    double width_px = 0;
    bool operator==(const OutlineStyle&) const = default;
};

struct InterventionCommand {
    CommandKind kind = CommandKind::Highlight;
    std::string reference_id;
    std::vector<std::string> bar_ids;
    OutlineStyle style;
    bool operator==(const InterventionCommand&) const = default;
};

inline constexpr double kDefaultTriggerFraction = 0.40;

struct EngineConfig {
    double fraction = kDefaultTriggerFraction;
    Strategy strategy = Strategy::DesaturatePrevious;
    double outline_width_px = 3;
    Rgb highlight_color{0x00, 0x00, 0x00};
    Rgb desaturated_color{0x80, 0x80, 0x80};
    bool operator==(const EngineConfig&) const = default;
};

/// ceil(fraction * mean_fixations), at least 1.
int trigger_threshold(const Reference& reference, double fraction = kDefaultTriggerFraction);

using StatusMap = std::map<std::string, InterventionStatus>;

/// Lifecycle of every reference's intervention within one document viewing.
class InterventionState {
public:
    InterventionState() = default;
    InterventionState(const Document& doc, const EngineConfig& config);

    /// Commands for a reference that just reached its trigger condition:
    /// the strategy's command for the previously active reference (if any)
    /// followed by HIGHLIGHT. Empty if the reference was already triggered.
    std::vector<InterventionCommand> apply_removal_strategy(const std::string& newly_triggered);

    InterventionStatus status(const std::string& reference_id) const;
    const StatusMap& statuses() const { return status_; }
    const std::vector<std::string>& trigger_order() const { return order_; }
    Strategy strategy() const { return config_.strategy; }

private:
    InterventionCommand command(CommandKind kind, const std::string& ref) const;

    EngineConfig config_;
    StatusMap status_;
    std::map<std::string, std::vector<std::string>> bars_;
    std::vector<std::string> order_;
    std::optional<std::string> active_;
};

struct TriggerRule {
    std::string reference_id;
    int threshold_count = 1;
    bool fired = false;
};

/// The built-in MSNV rule: a reference's intervention fires once its AOI has
/// collected threshold_count fixations, counted cumulatively over the viewing.
class AdaptationEngine {
public:
    AdaptationEngine() = default;
    AdaptationEngine(const Document& doc, const EngineConfig& config);

    void reset_for_document(const Document& doc, const EngineConfig& config);

    std::vector<InterventionCommand> on_fixation(const Fixation& fixation);

    const InterventionState& state() const { return state_; }
    const std::vector<TriggerRule>& rules() const { return rules_; }
    /// Fixations counted so far on a reference's AOI.
    int counter(const std::string& reference_id) const;

private:
    std::vector<AOI> aois_;
    std::vector<TriggerRule> rules_;  // parallel to aois_
    std::vector<int> counters_;
    InterventionState state_;
};

// Generic rules over per-AOI features -------------------------------------

enum class Feature { FixationCount, TotalDurationMs, LongestFixationMs, FixationRateHz, ProportionOfFixations };
enum class Comparator { Ge, Gt, Le, Lt, Eq };
enum class RuleAction { Highlight, Log };

std::string_view to_string(Feature f);
std::string_view to_string(Comparator c);
std::string_view to_string(RuleAction a);

struct Rule {
    std::string aoi;  // reference id
    Feature feature = Feature::FixationCount;
    Comparator comparator = Comparator::Ge;
    double value = 0;
    bool fire_once = true;
    RuleAction action = RuleAction::Highlight;
};

class RuleConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a JSON list of {aoi, feature, comparator, value, fireOnce, action}.
std::vector<Rule> parse_rules(std::string_view text);
std::string serialize_rules(std::span<const Rule> rules);

/// The built-in MSNV trigger rule expressed in the generic layer.
std::vector<Rule> msnv_rules(const Document& doc, double fraction = kDefaultTriggerFraction);

struct FeatureUpdate {
    std::string aoi;
    AOIFeatures features;
};

class RuleEngine {
public:
    /// Throws RuleConfigError when a rule names an AOI the document lacks.
    RuleEngine(const Document& doc, std::vector<Rule> rules, const EngineConfig& config);

    /// Updates the features of the AOI containing the fixation (if any) and
    /// evaluates the rules registered on it.
    std::vector<InterventionCommand> on_fixation(const Fixation& fixation);

    /// Evaluates, in registration order, every rule on update.aoi.
    std::vector<InterventionCommand> evaluate_rules(const FeatureUpdate& update);

    const InterventionState& state() const { return state_; }
    /// Indices of rules that fired, in firing order.
    const std::vector<std::size_t>& fired_log() const { return fired_log_; }

private:
    std::vector<AOI> aois_;
    std::vector<Rule> rules_;
    std::vector<bool> fired_;
    std::map<std::string, AOIFeatures> features_;
    std::size_t total_fixations_ = 0;
    std::vector<std::size_t> fired_log_;
    InterventionState state_;
};

/// What a display shows after applying commands in order, starting blank.
StatusMap replay_commands(std::span<const InterventionCommand> commands);

}  // namespace msnv
