#include "msnv/engine.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace msnv {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::KeepAll: return "keep";
        case Strategy::RemovePrevious: return "remove";
        case Strategy::DesaturatePrevious: return "desaturate";
    }
    return "desaturate";
}

Strategy strategy_from_string(std::string_view s) {
    if (s == "keep" || s == "KEEP_ALL") return Strategy::KeepAll;
    if (s == "remove" || s == "REMOVE_PREVIOUS") return Strategy::RemovePrevious;
    if (s == "desaturate" || s == "DESATURATE_PREVIOUS") return Strategy::DesaturatePrevious;
    throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

std::string_view to_string(InterventionStatus s) {
    switch (s) {
        case InterventionStatus::Untriggered: return "UNTRIGGERED";
        case InterventionStatus::Active: return "ACTIVE";
        case InterventionStatus::Desaturated: return "DESATURATED";
        case InterventionStatus::Removed: return "REMOVED";
    }
    return "UNTRIGGERED";
}

std::string_view to_string(CommandKind k) {
    switch (k) {
        case CommandKind::Highlight: return "HIGHLIGHT";
        case CommandKind::Desaturate: return "DESATURATE";
        case CommandKind::Remove: return "REMOVE";
    }
    return "HIGHLIGHT";
}

int trigger_threshold(const Reference& reference, double fraction) {
    if (!(fraction > 0 && fraction <= 1)) throw std::invalid_argument("trigger fraction must lie in (0, 1]");
    const double raw = fraction * reference.mean_fixations;
    const double nearest = std::round(raw);
    const double product = std::abs(raw - nearest) < 1e-9 ? nearest : raw;
    return std::max(1, static_cast<int>(std::ceil(product)));
}

InterventionState::InterventionState(const Document& doc, const EngineConfig& config) : config_(config) {
    for (const auto& r : doc.references) {
        status_[r.id] = InterventionStatus::Untriggered;
        bars_[r.id] = r.data_point_ids;
    }
}

InterventionCommand InterventionState::command(CommandKind kind, const std::string& ref) const {
    InterventionCommand c;
    c.kind = kind;
    c.reference_id = ref;
    c.bar_ids = bars_.at(ref);
    if (kind == CommandKind::Highlight)
        c.style = {config_.highlight_color, config_.outline_width_px};
    else if (kind == CommandKind::Desaturate)
        c.style = {config_.desaturated_color, config_.outline_width_px};
    return c;
}

std::vector<InterventionCommand> InterventionState::apply_removal_strategy(const std::string& newly_triggered) {
    auto it = status_.find(newly_triggered);
    if (it == status_.end()) throw std::invalid_argument("unknown reference '" + newly_triggered + "'");
    if (it->second != InterventionStatus::Untriggered) return {};

    std::vector<InterventionCommand> out;
    if (active_) {
        if (config_.strategy == Strategy::RemovePrevious) {
            status_[*active_] = InterventionStatus::Removed;
            out.push_back(command(CommandKind::Remove, *active_));
        } else if (config_.strategy == Strategy::DesaturatePrevious) {
            status_[*active_] = InterventionStatus::Desaturated;
            out.push_back(command(CommandKind::Desaturate, *active_));
        }
    }
    it->second = InterventionStatus::Active;
    active_ = newly_triggered;
    order_.push_back(newly_triggered);
    out.push_back(command(CommandKind::Highlight, newly_triggered));
    return out;
}

InterventionStatus InterventionState::status(const std::string& reference_id) const {
    auto it = status_.find(reference_id);
    return it == status_.end() ? InterventionStatus::Untriggered : it->second;
}

AdaptationEngine::AdaptationEngine(const Document& doc, const EngineConfig& config) {
    reset_for_document(doc, config);
}

void AdaptationEngine::reset_for_document(const Document& doc, const EngineConfig& config) {
    aois_ = reference_aois(doc);
    rules_.clear();
    for (const auto& r : doc.references) rules_.push_back({r.id, trigger_threshold(r, config.fraction), false});
    counters_.assign(rules_.size(), 0);
    state_ = InterventionState(doc, config);
}

std::vector<InterventionCommand> AdaptationEngine::on_fixation(const Fixation& fixation) {
    for (std::size_t i = 0; i < aois_.size(); ++i) {
        if (!aoi_hit(fixation, aois_[i])) continue;
        ++counters_[i];
        auto& rule = rules_[i];
        if (!rule.fired && counters_[i] >= rule.threshold_count) {
            rule.fired = true;
            return state_.apply_removal_strategy(rule.reference_id);
        }
        return {};
    }
    return {};
}

int AdaptationEngine::counter(const std::string& reference_id) const {
    for (std::size_t i = 0; i < rules_.size(); ++i)
        if (rules_[i].reference_id == reference_id) return counters_[i];
    return 0;
}

std::string_view to_string(Feature f) {
    switch (f) {
        case Feature::FixationCount: return "fixation_count";
        case Feature::TotalDurationMs: return "total_duration_ms";
        case Feature::LongestFixationMs: return "longest_fixation_ms";
        case Feature::FixationRateHz: return "fixation_rate_hz";
        case Feature::ProportionOfFixations: return "proportion_of_fixations";
    }
    return "fixation_count";
}

std::string_view to_string(Comparator c) {
    switch (c) {
        case Comparator::Ge: return ">=";
        case Comparator::Gt: return ">";
        case Comparator::Le: return "<=";
        case Comparator::Lt: return "<";
        case Comparator::Eq: return "==";
    }
    return ">=";
}

std::string_view to_string(RuleAction a) { return a == RuleAction::Highlight ? "highlight" : "log"; }

namespace {

template <typename E, std::size_t N>
E enum_from(std::string_view s, const E (&values)[N], const char* what) {
    for (E v : values)
        if (to_string(v) == s) return v;
    throw RuleConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr Feature kFeatures[] = {Feature::FixationCount, Feature::TotalDurationMs, Feature::LongestFixationMs,
                                 Feature::FixationRateHz, Feature::ProportionOfFixations};
constexpr Comparator kComparators[] = {Comparator::Ge, Comparator::Gt, Comparator::Le, Comparator::Lt,
                                       Comparator::Eq};
constexpr RuleAction kActions[] = {RuleAction::Highlight, RuleAction::Log};

double feature_value(const AOIFeatures& f, Feature which) {
    switch (which) {
        case Feature::FixationCount: return static_cast<double>(f.fixation_count);
        case Feature::TotalDurationMs: return f.total_duration_ms;
        case Feature::LongestFixationMs: return f.longest_fixation_ms;
        case Feature::FixationRateHz: return f.fixation_rate_hz;
        case Feature::ProportionOfFixations: return f.proportion_of_fixations;
    }
    return 0;
}

bool compare(double lhs, Comparator c, double rhs) {
    switch (c) {
        case Comparator::Ge: return lhs >= rhs;
        case Comparator::Gt: return lhs > rhs;
        case Comparator::Le: return lhs <= rhs;
        case Comparator::Lt: return lhs < rhs;
        case Comparator::Eq: return lhs == rhs;
    }
    return false;
}

}  // namespace

std::vector<Rule> parse_rules(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw RuleConfigError(std::string("malformed rule file: ") + e.what());
    }
    if (!j.is_array()) throw RuleConfigError("rule file must hold a JSON list");
    std::vector<Rule> rules;
    for (const auto& rj : j) {
        try {
            Rule r;
            r.aoi = rj.at("aoi").get<std::string>();
            r.feature = enum_from(rj.at("feature").get<std::string>(), kFeatures, "feature");
            r.comparator = enum_from(rj.at("comparator").get<std::string>(), kComparators, "comparator");
            r.value = rj.at("value").get<double>();
            r.fire_once = rj.value("fireOnce", true);
            r.action = enum_from(rj.value("action", std::string("highlight")), kActions, "action");
            rules.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw RuleConfigError(std::string("bad rule record: ") + e.what());
        }
    }
    return rules;
}

std::string serialize_rules(std::span<const Rule> rules) {
    using nlohmann::json;
    json j = json::array();
    for (const auto& r : rules) {
        j.push_back({{"aoi", r.aoi},
                     {"feature", to_string(r.feature)},
                     {"comparator", to_string(r.comparator)},
                     {"value", r.value},
                     {"fireOnce", r.fire_once},
                     {"action", to_string(r.action)}});
    }
    return j.dump(2);
}

std::vector<Rule> msnv_rules(const Document& doc, double fraction) {
    std::vector<Rule> rules;
    for (const auto& r : doc.references) {
        rules.push_back({r.id, Feature::FixationCount, Comparator::Ge,
                         static_cast<double>(trigger_threshold(r, fraction)), true, RuleAction::Highlight});
    }
    return rules;
}

RuleEngine::RuleEngine(const Document& doc, std::vector<Rule> rules, const EngineConfig& config)
    : aois_(reference_aois(doc)), rules_(std::move(rules)), fired_(rules_.size(), false), state_(doc, config) {
    for (const auto& r : rules_) {
        const bool known = std::any_of(aois_.begin(), aois_.end(), [&](const AOI& a) { return a.id == r.aoi; });
        if (!known) throw RuleConfigError("rule references unknown AOI '" + r.aoi + "'");
    }
    for (const auto& a : aois_) features_[a.id] = {};
}

std::vector<InterventionCommand> RuleEngine::on_fixation(const Fixation& fixation) {
    ++total_fixations_;
    for (auto& [id, f] : features_)
        f.proportion_of_fixations = static_cast<double>(f.fixation_count) / static_cast<double>(total_fixations_);

    for (const auto& a : aois_) {
        if (!aoi_hit(fixation, a)) continue;
        auto& f = features_[a.id];
        ++f.fixation_count;
        f.total_duration_ms += fixation.duration_ms();
        f.longest_fixation_ms = std::max(f.longest_fixation_ms, fixation.duration_ms());
        f.fixation_rate_hz = fixation.end_ms > 0 ? f.fixation_count / (fixation.end_ms / 1000.0) : 0;
        f.proportion_of_fixations = static_cast<double>(f.fixation_count) / static_cast<double>(total_fixations_);
        return evaluate_rules({a.id, f});
    }
    return {};
}

std::vector<InterventionCommand> RuleEngine::evaluate_rules(const FeatureUpdate& update) {
    std::vector<InterventionCommand> out;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& r = rules_[i];
        if (r.aoi != update.aoi) continue;
        if (r.fire_once && fired_[i]) continue;
        if (!compare(feature_value(update.features, r.feature), r.comparator, r.value)) continue;
        fired_[i] = true;
        fired_log_.push_back(i);
        if (r.action == RuleAction::Highlight) {
            auto cmds = state_.apply_removal_strategy(r.aoi);
            out.insert(out.end(), cmds.begin(), cmds.end());
        }
    }
    return out;
}

StatusMap replay_commands(std::span<const InterventionCommand> commands) {
    StatusMap m;
    for (const auto& c : commands) {
        switch (c.kind) {
            case CommandKind::Highlight: m[c.reference_id] = InterventionStatus::Active; break;
            case CommandKind::Desaturate: m[c.reference_id] = InterventionStatus::Desaturated; break;
            case CommandKind::Remove: m[c.reference_id] = InterventionStatus::Removed; break;
        }
    }
    return m;
}

}  // namespace msnv
