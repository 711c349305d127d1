#include "msnv/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "msnv/trace_io.hpp"

namespace msnv::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw DomainError("mean of an empty list");
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

std::optional<double> sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) return std::nullopt;
    const double m = mean(xs);
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double median(std::span<const double> xs) {
    if (xs.empty()) throw DomainError("median of an empty list");
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

void MeasureTable::validate() const {
    for (const auto& r : rows) {
        if (!(r.accuracy >= 0 && r.accuracy <= 1))
            throw DomainError("accuracy of " + r.participant + "/" + r.document + " outside [0, 1]");
        if (!(r.ease >= 1 && r.ease <= kTaskRatingScale) || !(r.interest >= 1 && r.interest <= kTaskRatingScale))
            throw DomainError("rating of " + r.participant + "/" + r.document + " outside 1..5");
    }
}

namespace {

constexpr const char* kFixedColumns[] = {"participant", "group", "document", "accuracy",
                                         "time_on_task_ms", "interest", "ease"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, std::size_t line, const std::string& column) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw DomainError("line " + std::to_string(line) + ": bad number '" + s + "' in column " + column);
    return v;
}

}  // namespace

MeasureTable read_measure_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("measure table has no header");
    const auto header = split_csv(line);
    if (header.size() < std::size(kFixedColumns)) throw DomainError("measure table header is too short");
    for (std::size_t i = 0; i < std::size(kFixedColumns); ++i)
        if (header[i] != kFixedColumns[i])
            throw DomainError("header column " + std::to_string(i + 1) + " must be '" + kFixedColumns[i] + "'");

    MeasureTable t;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != header.size())
            throw DomainError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                              " fields");
        MeasureRow r;
        r.participant = f[0];
        r.group = f[1];
        r.document = f[2];
        r.accuracy = to_double(f[3], line_no, header[3]);
        r.time_on_task_ms = to_double(f[4], line_no, header[4]);
        r.interest = to_double(f[5], line_no, header[5]);
        r.ease = to_double(f[6], line_no, header[6]);
        for (std::size_t i = std::size(kFixedColumns); i < f.size(); ++i)
            if (!f[i].empty()) r.scores[header[i]] = to_double(f[i], line_no, header[i]);
        t.rows.push_back(std::move(r));
    }
    t.validate();
    return t;
}

void write_measure_table(std::ostream& out, const MeasureTable& table) {
    std::vector<std::string> score_cols;
    for (const auto& r : table.rows)
        for (const auto& [k, v] : r.scores)
            if (std::find(score_cols.begin(), score_cols.end(), k) == score_cols.end()) score_cols.push_back(k);
    std::sort(score_cols.begin(), score_cols.end());

    for (std::size_t i = 0; i < std::size(kFixedColumns); ++i) out << (i ? "," : "") << kFixedColumns[i];
    for (const auto& c : score_cols) out << ',' << c;
    out << '\n';
    for (const auto& r : table.rows) {
        out << r.participant << ',' << r.group << ',' << r.document << ',' << format_number(r.accuracy) << ','
            << format_number(r.time_on_task_ms) << ',' << format_number(r.interest) << ','
            << format_number(r.ease);
        for (const auto& c : score_cols) {
            out << ',';
            if (auto it = r.scores.find(c); it != r.scores.end()) out << format_number(it->second);
        }
        out << '\n';
    }
}

MeasureTable measures_from_logs(std::span<const SessionLog> logs, const std::string& group) {
    MeasureTable t;
    for (const auto& log : logs) {
        for (const auto& task : log.tasks) {
            Measures m;
            try {
                m = compute_measures(task);
            } catch (const MeasureError&) {
                continue;  // unfinished task of a partial session
            }
            t.rows.push_back({log.config.participant_id, group, task.document_id, m.accuracy, m.time_on_task_ms,
                              static_cast<double>(m.interest), static_cast<double>(m.ease), {}});
        }
    }
    return t;
}

GroupKey group_key_from_string(std::string_view s) {
    if (s == "participant") return GroupKey::Participant;
    if (s == "group") return GroupKey::Group;
    if (s == "document") return GroupKey::Document;
    throw DomainError("unknown grouping key '" + std::string(s) + "'");
}

std::vector<GroupSummary> summarize(const MeasureTable& table, std::span<const GroupKey> by) {
    if (table.rows.empty()) throw DomainError("cannot summarize an empty table");
    std::map<std::vector<std::string>, std::vector<const MeasureRow*>> groups;
    for (const auto& r : table.rows) {
        std::vector<std::string> key;
        for (auto k : by) {
            switch (k) {
                case GroupKey::Participant: key.push_back(r.participant); break;
                case GroupKey::Group: key.push_back(r.group); break;
                case GroupKey::Document: key.push_back(r.document); break;
            }
        }
        groups[key].push_back(&r);
    }
    std::vector<GroupSummary> out;
    for (const auto& [key, rows] : groups) {
        auto stats = [&](double MeasureRow::*field) {
            std::vector<double> xs;
            xs.reserve(rows.size());
            for (const auto* r : rows) xs.push_back(r->*field);
            return MeasureStats{mean(xs), sample_sd(xs)};
        };
        out.push_back({key, rows.size(), stats(&MeasureRow::accuracy), stats(&MeasureRow::time_on_task_ms),
                       stats(&MeasureRow::interest), stats(&MeasureRow::ease)});
    }
    return out;
}

std::string_view to_string(Tertile t) {
    switch (t) {
        case Tertile::Low: return "low";
        case Tertile::Medium: return "medium";
        case Tertile::High: return "high";
    }
    return "low";
}

std::string_view to_string(Half h) { return h == Half::Low ? "low" : "high"; }

std::vector<Tertile> tertile_split(std::span<const double> scores) {
    if (scores.size() < 3) throw DomainError("tertile split needs at least 3 values");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double low_cut = sorted[(n + 2) / 3 - 1];        // ceil(n/3)-th value
    const double mid_cut = sorted[(2 * n + 2) / 3 - 1];    // ceil(2n/3)-th value
    std::vector<Tertile> out;
    out.reserve(n);
    for (double v : scores) out.push_back(v <= low_cut ? Tertile::Low : v <= mid_cut ? Tertile::Medium : Tertile::High);
    return out;
}

std::vector<Half> median_split(std::span<const double> values) {
    if (values.size() < 2) throw DomainError("median split needs at least 2 values");
    const double m = median(values);
    std::vector<Half> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(v <= m ? Half::Low : Half::High);
    return out;
}

AdjustedPValues bh_adjust(std::span<const double> p_values) {
    for (double p : p_values)
        if (!(p >= 0 && p <= 1)) throw DomainError("p-value " + format_number(p) + " outside [0, 1]");
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    AdjustedPValues out{{p_values.begin(), p_values.end()}, std::vector<double>(m)};
    double running = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
        const std::size_t idx = order[rank - 1];
        const double p = p_values[idx];
        const double scaled = std::max(p, static_cast<double>(m) * p / static_cast<double>(rank));
        running = std::min(running, std::min(1.0, scaled));
        out.adjusted[idx] = running;
    }
    return out;
}

std::vector<PerceptionStats> perception_summary(std::span<const std::vector<int>> items, int scale_max) {
    std::vector<PerceptionStats> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& ratings = items[i];
        if (ratings.empty()) throw DomainError("item " + std::to_string(i + 1) + " has no ratings");
        std::vector<std::size_t> counts(static_cast<std::size_t>(scale_max) + 1, 0);
        std::vector<double> xs;
        for (int r : ratings) {
            if (r < 1 || r > scale_max)
                throw DomainError("rating " + std::to_string(r) + " outside 1.." + std::to_string(scale_max));
            ++counts[static_cast<std::size_t>(r)];
            xs.push_back(r);
        }
        PerceptionStats s;
        s.n = ratings.size();
        s.mean = mean(xs);
        s.sd = sample_sd(xs);
        s.min = *std::min_element(ratings.begin(), ratings.end());
        s.max = *std::max_element(ratings.begin(), ratings.end());
        const auto top = *std::max_element(counts.begin(), counts.end());
        std::vector<int> modal;
        for (int v = 1; v <= scale_max; ++v)
            if (counts[static_cast<std::size_t>(v)] == top) modal.push_back(v);
        if (modal.size() == 2 && modal[1] - modal[0] == 1)
            s.mode = {(modal[0] + modal[1]) / 2.0};
        else
            s.mode.assign(modal.begin(), modal.end());
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

nlohmann::json stats_json(const MeasureStats& s) {
    return {{"mean", s.mean}, {"sd", s.sd ? nlohmann::json(*s.sd) : nlohmann::json(nullptr)}};
}

}  // namespace

std::string analysis_report(const AnalysisInput& input) {
    using nlohmann::json;
    json j;
    j["format"] = kAnalysisFormat;
    j["groups"] = json::array();
    if (!input.table.rows.empty()) {
        for (const auto& g : summarize(input.table, input.by)) {
            j["groups"].push_back({{"key", g.key},
                                   {"n", g.n},
                                   {"accuracy", stats_json(g.accuracy)},
                                   {"timeOnTaskMs", stats_json(g.time_on_task_ms)},
                                   {"interest", stats_json(g.interest)},
                                   {"ease", stats_json(g.ease)}});
        }
    }
    if (!input.p_values.empty()) {
        const auto adj = bh_adjust(input.p_values);
        j["bh"] = {{"raw", adj.raw}, {"adjusted", adj.adjusted}};
    }
    if (!input.perception.empty()) {
        j["perception"] = json::array();
        std::size_t item = 0;
        for (const auto& s : perception_summary(input.perception)) {
            j["perception"].push_back({{"item", ++item},
                                       {"n", s.n},
                                       {"mean", s.mean},
                                       {"mode", s.mode},
                                       {"sd", s.sd ? json(*s.sd) : json(nullptr)},
                                       {"min", s.min},
                                       {"max", s.max}});
        }
    }
    if (input.tertile_score) {
        // One score per participant, taken from their first row.
        std::vector<std::string> who;
        std::vector<double> scores;
        for (const auto& r : input.table.rows) {
            if (std::find(who.begin(), who.end(), r.participant) != who.end()) continue;
            auto it = r.scores.find(*input.tertile_score);
            if (it == r.scores.end()) continue;
            who.push_back(r.participant);
            scores.push_back(it->second);
        }
        const auto bins = tertile_split(scores);
        json tj = json::object();
        for (std::size_t i = 0; i < who.size(); ++i) tj[who[i]] = to_string(bins[i]);
        j["tertiles"] = {{"score", *input.tertile_score}, {"bins", tj}};
    }
    return j.dump(2);
}

}  // namespace msnv::stats
