#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "msnv/analysis.hpp"
#include "oracles.hpp"

using namespace msnv;
using namespace msnv::stats;

namespace {

const std::string kCorpus = std::string(MSNV_FIXTURE_DIR) + "/corpus";

// Lower cut: the smallest value v with at least n/3 of the values <= v.
std::vector<Tertile> tertile_oracle(const std::vector<double>& xs) {
    const auto n = xs.size();
    auto cut = [&](std::size_t num) {
        double best = INFINITY;
        for (double v : xs) {
            std::size_t at_or_below = 0;
            for (double w : xs) at_or_below += w <= v ? 1 : 0;
            if (3 * at_or_below >= num * n) best = std::min(best, v);
        }
        return best;
    };
    const double c1 = cut(1), c2 = cut(2);
    std::vector<Tertile> out;
    for (double v : xs) out.push_back(v <= c1 ? Tertile::Low : v <= c2 ? Tertile::Medium : Tertile::High);
    return out;
}

std::vector<double> mode_oracle(const std::vector<int>& r) {
    std::map<int, int> freq;
    for (int v : r) ++freq[v];
    int top = 0;
    for (auto [v, c] : freq) top = std::max(top, c);
    std::vector<double> tied;
    for (auto [v, c] : freq)
        if (c == top) tied.push_back(v);
    if (tied.size() == 2 && tied[1] - tied[0] == 1) return {(tied[0] + tied[1]) / 2};
    return tied;
}

MeasureRow row(std::string p, std::string g, std::string d, double acc, double t, double i, double e) {
    return {std::move(p), std::move(g), std::move(d), acc, t, i, e, {}};
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("basic statistics") {
    const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(mean(xs) == 5);
    CHECK(*sample_sd(xs) == doctest::Approx(std::sqrt(32.0 / 7.0)));
    CHECK(median(xs) == 4.5);
    CHECK(median(std::vector<double>{3, 1, 2}) == 2);
    CHECK_FALSE(sample_sd(std::vector<double>{1}));
    CHECK_THROWS_AS(mean(std::vector<double>{}), DomainError);
    CHECK_THROWS_AS(median(std::vector<double>{}), DomainError);
}

TEST_CASE("tertile split") {
    std::vector<double> nine{9, 1, 5, 2, 8, 3, 7, 4, 6};
    const auto t = tertile_split(nine);
    for (std::size_t i = 0; i < nine.size(); ++i)
        CHECK(t[i] == (nine[i] <= 3 ? Tertile::Low : nine[i] <= 6 ? Tertile::Medium : Tertile::High));
    const std::vector<double> flat(7, 2.5);
    for (auto b : tertile_split(flat)) CHECK(b == Tertile::Low);
    CHECK_THROWS_AS(tertile_split(std::vector<double>{1, 2}), DomainError);

    SplitMix64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> xs(3 + rng.below(40));
        for (auto& x : xs) x = static_cast<double>(rng.below(8));
        const auto got = tertile_split(xs);
        CHECK(got == tertile_oracle(xs));
        const auto low = std::count(got.begin(), got.end(), Tertile::Low);
        CHECK(3 * static_cast<std::size_t>(low) >= xs.size());
    }
    CHECK(to_string(Tertile::Medium) == "medium");
}

TEST_CASE("median split") {
    const auto h = median_split(std::vector<double>{4, 1, 3, 2});
    CHECK(h == std::vector<Half>{Half::High, Half::Low, Half::High, Half::Low});
    CHECK(median_split(std::vector<double>{1, 2, 3}) == std::vector<Half>{Half::Low, Half::Low, Half::High});
    CHECK_THROWS_AS(median_split(std::vector<double>{1}), DomainError);
}

TEST_CASE("Benjamini-Hochberg") {
    CHECK(bh_adjust(std::vector<double>{0.03}).adjusted == std::vector<double>{0.03});
    const auto a = bh_adjust(std::vector<double>{0.01, 0.04, 0.03, 0.005});
    REQUIRE(a.adjusted.size() == 4);
    CHECK(a.adjusted[0] == doctest::Approx(0.02));
    CHECK(a.adjusted[1] == doctest::Approx(0.04));
    CHECK(a.adjusted[2] == doctest::Approx(0.04));
    CHECK(a.adjusted[3] == doctest::Approx(0.02));
    CHECK(a.raw == std::vector<double>{0.01, 0.04, 0.03, 0.005});
    CHECK(bh_adjust(std::vector<double>{0.9, 0.95}).adjusted == std::vector<double>{0.95, 0.95});
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{0.5, 1.2}), DomainError);
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{NAN}), DomainError);

    SplitMix64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(1 + rng.below(25));
        for (auto& v : p) v = rng.bernoulli(0.2) ? 0.05 : rng.uniform();
        const auto adj = bh_adjust(p).adjusted;
        const auto want = oracle::bh_brute_force(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(adj[i] >= p[i]);
            CHECK(adj[i] <= 1.0);
            CHECK(adj[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
        auto shuffled = p;
        std::vector<std::size_t> idx(p.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
        for (std::size_t i = 0; i < idx.size(); ++i) shuffled[i] = p[idx[i]];
        const auto adj2 = bh_adjust(shuffled).adjusted;
        for (std::size_t i = 0; i < idx.size(); ++i) CHECK(adj2[i] == adj[idx[i]]);
    }
}

TEST_CASE("perception summary") {
    const std::vector<std::vector<int>> items{{5, 5, 5, 5}, {2, 3, 2, 3, 1}, {1, 7, 1, 7, 4}, {6}};
    const auto s = perception_summary(items);
    REQUIRE(s.size() == 4);
    CHECK(s[0].mode == std::vector<double>{5});
    CHECK(*s[0].sd == 0);
    CHECK(s[1].mode == std::vector<double>{2.5});
    CHECK(s[1].min == 1);
    CHECK(s[1].max == 3);
    CHECK(s[2].mode == std::vector<double>{1, 7});
    CHECK(s[2].mean == doctest::Approx(4));
    CHECK(s[3].n == 1);
    CHECK_FALSE(s[3].sd);
    CHECK_THROWS_AS(perception_summary(std::vector<std::vector<int>>{{8}}), DomainError);
    CHECK_THROWS_AS(perception_summary(std::vector<std::vector<int>>{{}}), DomainError);

    SplitMix64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<int> r(1 + rng.below(12));
        for (auto& v : r) v = 1 + static_cast<int>(rng.below(7));
        const std::vector<std::vector<int>> one{r};
        const auto got = perception_summary(one)[0];
        CHECK(got.mode == mode_oracle(r));
        CHECK(got.n == r.size());
        CHECK(got.min == *std::min_element(r.begin(), r.end()));
        CHECK(got.max == *std::max_element(r.begin(), r.end()));
    }
}

TEST_CASE("measure table CSV") {
    MeasureTable t;
    t.rows.push_back(row("P1", "msnv", "doc01", 1.0 / 3.0, 56300, 4, 2));
    t.rows.push_back(row("P2", "control", "doc01", 1, 48000.5, 5, 5));
    t.rows[0].scores["vis_literacy"] = 0.75;
    std::stringstream ss;
    write_measure_table(ss, t);
    CHECK(ss.str().rfind("participant,group,document,accuracy,time_on_task_ms,interest,ease,vis_literacy\n", 0) == 0);
    CHECK(read_measure_table(ss) == t);

    auto fails = [](const std::string& text, const std::string& needle) {
        std::istringstream in(text);
        try {
            read_measure_table(in);
        } catch (const DomainError& e) {
            return std::string(e.what()).find(needle) != std::string::npos;
        }
        return false;
    };
    const std::string head = "participant,group,document,accuracy,time_on_task_ms,interest,ease\n";
    CHECK(fails("", "header"));
    CHECK(fails("participant,group\n", "header"));
    CHECK(fails("participant,team,document,accuracy,time_on_task_ms,interest,ease\n", "column 2"));
    CHECK(fails(head + "P1,g,d,1,100,3,3\nP2,g,d,1,100\n", "line 3"));
    CHECK(fails(head + "P1,g,d,most,100,3,3\n", "line 2"));
    CHECK(fails(head + "P1,g,d,1.5,100,3,3\n", "accuracy"));
    CHECK(fails(head + "P1,g,d,1,100,3,9\n", "rating"));
}

TEST_CASE("group summaries") {
    MeasureTable t;
    t.rows.push_back(row("C1", "control", "doc01", 0.7, 50000, 3, 4));
    t.rows.push_back(row("C2", "control", "doc01", 0.738, 62600, 4, 4));
    t.rows.push_back(row("C3", "control", "doc02", 0.719, 56300, 2, 3));
    t.rows.push_back(row("M1", "msnv", "doc01", 1, 40000, 5, 5));
    const std::vector<GroupKey> by{GroupKey::Group};
    const auto g = summarize(t, by);
    REQUIRE(g.size() == 2);
    CHECK(g[0].key == std::vector<std::string>{"control"});
    CHECK(g[0].n == 3);
    CHECK(g[0].accuracy.mean == doctest::Approx(0.719));
    CHECK(g[0].time_on_task_ms.mean == doctest::Approx(56300));
    CHECK(*g[0].time_on_task_ms.sd == doctest::Approx(6300));
    CHECK(g[1].n == 1);
    CHECK_FALSE(g[1].ease.sd);

    const std::vector<GroupKey> two{GroupKey::Group, GroupKey::Document};
    const auto g2 = summarize(t, two);
    REQUIRE(g2.size() == 3);
    CHECK(g2[1].key == std::vector<std::string>{"control", "doc02"});
    CHECK(group_key_from_string("document") == GroupKey::Document);
    CHECK_THROWS_AS(group_key_from_string("age"), DomainError);
    CHECK_THROWS_AS(summarize(MeasureTable{}, by), DomainError);
}

TEST_CASE("measures from session logs") {
    const auto docs = load_documents(kCorpus);
    const std::vector<SessionLog> logs{oracle::run_scripted_session(docs, 2),
                                       oracle::run_scripted_session(docs, 3, 4)};
    const auto t = measures_from_logs(logs, "msnv");
    CHECK(t.rows.size() == 14 + 4);
    for (const auto& r : t.rows) {
        CHECK(r.group == "msnv");
        CHECK(r.time_on_task_ms > 0);
    }
    const auto& first = logs[0].tasks[0];
    const auto m = compute_measures(first);
    CHECK(t.rows[0].participant == "P2");
    CHECK(t.rows[0].document == first.document_id);
    CHECK(t.rows[0].accuracy == m.accuracy);
    CHECK(t.rows[0].time_on_task_ms == m.time_on_task_ms);
}

TEST_CASE("analysis report") {
    MeasureTable t;
    t.rows.push_back(row("A", "msnv", "doc01", 1, 100, 3, 3));
    t.rows.push_back(row("A", "msnv", "doc02", 0, 200, 3, 3));
    t.rows.push_back(row("B", "control", "doc01", 1, 300, 4, 4));
    t.rows.push_back(row("C", "control", "doc01", 1, 300, 4, 4));
    t.rows[0].scores["lit"] = 1;
    t.rows[1].scores["lit"] = 50;
    t.rows[2].scores["lit"] = 2;
    t.rows[3].scores["lit"] = 3;
    AnalysisInput in{t, {GroupKey::Group}, {0.01, 0.04}, {{1, 2}, {7}}, "lit"};
    const auto j = nlohmann::json::parse(analysis_report(in));
    CHECK(j["format"] == "analysis/1");
    REQUIRE(j["groups"].size() == 2);
    CHECK(j["groups"][0]["key"][0] == "control");
    CHECK(j["groups"][1]["timeOnTaskMs"]["mean"] == 150.0);
    CHECK(j["bh"]["adjusted"][0] == doctest::Approx(0.02));
    CHECK(j["perception"][1]["sd"].is_null());
    CHECK(j["perception"][0]["mode"][0] == 1.5);
    CHECK(j["tertiles"]["bins"]["A"] == "low");
    CHECK(j["tertiles"]["bins"]["B"] == "medium");
    CHECK(j["tertiles"]["bins"]["C"] == "high");
    CHECK(nlohmann::json::parse(analysis_report(AnalysisInput{}))["groups"].empty());
}

}  // TEST_SUITE
