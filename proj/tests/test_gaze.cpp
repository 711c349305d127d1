#include <doctest.h>

#include <cmath>

#include "msnv/gaze.hpp"
#include "oracles.hpp"

using namespace msnv;

namespace {

GazeSample at(double t, double x, double y, bool valid = true) {
    GazeSample s;
    s.timestamp_ms = t;
    s.x = x;
    s.y = y;
    s.left_valid = s.right_valid = valid;
    return s;
}

std::vector<GazeSample> still(double t0, std::size_t n, double x, double y) {
    std::vector<GazeSample> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(at(t0 + static_cast<double>(k) * kSamplePeriodMs, x, y));
    return out;
}

std::vector<Fixation> stream_all(const std::vector<GazeSample>& trace) {
    FixationStream st;
    std::vector<Fixation> out;
    for (const auto& s : trace)
        if (auto f = st.ingest(s)) out.push_back(*f);
    if (auto f = st.finish()) out.push_back(*f);
    return out;
}

}  // namespace

TEST_SUITE("gaze") {

TEST_CASE("sample usability") {
    DisplayBounds b;
    CHECK_FALSE(validate_sample(at(0, 640, 512, false), b));
    CHECK_FALSE(validate_sample(at(0, -5, 512), b));
    auto one = at(0, 640, 512, false);
    one.right_valid = true;
    CHECK(validate_sample(one, b));
    CHECK(validate_sample(at(0, 0, 0), b));
    CHECK_FALSE(validate_sample(at(0, 1280, 10), b));
    CHECK_FALSE(validate_sample(at(0, 10, 1024), b));
}

TEST_CASE("combine eyes") {
    auto both = combine_eyes(5, {100, 200, true}, {110, 220, true});
    CHECK(both.x == 105);
    CHECK(both.y == 210);
    CHECK((both.left_valid && both.right_valid));
    auto right = combine_eyes(5, {0, 0, false}, {300, 400, true});
    CHECK(right.x == 300);
    CHECK(right.y == 400);
    CHECK_FALSE(right.left_valid);
    CHECK(right.right_valid);
    auto none = combine_eyes(5, {0, 0, false}, {0, 0, false});
    CHECK_FALSE(validate_sample(none, DisplayBounds{}));
}

TEST_CASE("gap interpolation") {
    SUBCASE("no unusable samples is the identity") {
        const auto trace = still(0, 30, 50, 60);
        CHECK(interpolate_gaps(trace, DisplayBounds{}) == trace);
    }
    SUBCASE("short gap lies on the segment between its flanks") {
        // 100,100 at t=0; five lost samples; 200,200 at t=50.
        std::vector<GazeSample> tr{at(0, 100, 100)};
        for (int k = 1; k <= 5; ++k) tr.push_back(at(k * 10.0, 0, 0, false));
        tr.push_back(at(60, 200, 200));
        const auto out = interpolate_gaps(tr, DisplayBounds{});
        REQUIRE(out.size() == tr.size());
        for (int k = 1; k <= 5; ++k) {
            const double f = k * 10.0 / 60.0;
            CHECK(out[k].x == doctest::Approx(100 + 100 * f).epsilon(1e-12));
            CHECK(out[k].y == doctest::Approx(100 + 100 * f).epsilon(1e-12));
            CHECK((out[k].left_valid && out[k].right_valid));
        }
    }
    SUBCASE("gap longer than the bound is left alone") {
        std::vector<GazeSample> tr{at(0, 100, 100)};
        for (int k = 1; k <= 24; ++k) tr.push_back(at(k * kSamplePeriodMs, 0, 0, false));
        tr.push_back(at(25 * kSamplePeriodMs, 200, 200));
        CHECK(interpolate_gaps(tr, DisplayBounds{}, 75) == tr);
    }
    SUBCASE("flank distance exactly at the bound is bridged") {
        std::vector<GazeSample> tr{at(0, 10, 10), at(25, 0, 0, false), at(50, 0, 0, false), at(75, 40, 10)};
        const auto out = interpolate_gaps(tr, DisplayBounds{}, 75);
        CHECK(out[1].x == doctest::Approx(20));
        CHECK(out[2].x == doctest::Approx(30));
    }
    SUBCASE("leading and trailing gaps stay") {
        std::vector<GazeSample> tr{at(0, 0, 0, false), at(8, 10, 10), at(16, 0, 0, false)};
        CHECK(interpolate_gaps(tr, DisplayBounds{}) == tr);
    }
}

TEST_CASE("streaming gap filler matches the batch form") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto trace = oracle::random_trace(seed, 5000);
        GapFiller g;
        std::vector<GazeSample> out;
        for (const auto& s : trace) g.push(s, out);
        g.finish(out);
        CHECK(out == interpolate_gaps(trace, DisplayBounds{}));
    }
}

TEST_CASE("fixation detection basics") {
    SUBCASE("one point for 150ms") {
        const auto tr = still(0, 19, 300, 400);  // 18 periods = 150ms
        const auto f = detect_fixations(tr);
        REQUIRE(f.size() == 1);
        CHECK(f[0].duration_ms() == doctest::Approx(150));
        CHECK(f[0].centroid_x == 300);
        CHECK(f[0].centroid_y == 400);
    }
    SUBCASE("90ms then a jump gives nothing from the first run") {
        auto tr = still(0, 11, 300, 400);
        auto rest = still(11 * kSamplePeriodMs, 5, 600, 400);
        tr.insert(tr.end(), rest.begin(), rest.end());
        CHECK(detect_fixations(tr).empty());
    }
    SUBCASE("12 samples span 91.7ms, 13 reach 100ms") {
        CHECK(detect_fixations(still(0, 12, 10, 10)).empty());
        CHECK(detect_fixations(still(0, 13, 10, 10)).size() == 1);
    }
    SUBCASE("dispersion exactly at the threshold is one fixation") {
        auto tr = still(0, 13, 100, 100);
        tr[6].x = 120;
        tr[7].y = 115;  // 20 + 15 = 35
        CHECK(detect_fixations(tr).size() == 1);
        tr[7].y = 115.001;
        CHECK(detect_fixations(tr).empty());
    }
    SUBCASE("single sample") {
        CHECK(detect_fixations(still(0, 1, 1, 1)).empty());
        FixationStream st;
        CHECK_FALSE(st.ingest(at(0, 1, 1)));
        CHECK_FALSE(st.finish());
    }
    SUBCASE("an unusable sample splits a window") {
        auto tr = still(0, 30, 100, 100);
        tr[15].left_valid = tr[15].right_valid = false;
        const auto f = detect_fixations(tr);
        REQUIRE(f.size() == 2);
        CHECK(f[0].sample_count == 15);
        CHECK(f[1].sample_count == 14);
    }
}

TEST_CASE("batch, stream and brute force agree") {
    for (std::uint64_t seed = 1000; seed < 1040; ++seed) {
        const auto tr = oracle::random_trace(seed, 4000);
        const auto expect = oracle::brute_force_idt(tr, 100, 35, DisplayBounds{});
        CHECK(detect_fixations(tr) == expect);
        CHECK(stream_all(tr) == expect);
    }
}

TEST_CASE("custom fixation parameters") {
    FixationParams p{200, 10};
    const auto tr = oracle::random_trace(77, 4000);
    CHECK(detect_fixations(tr, p) == oracle::brute_force_idt(tr, 200, 10, DisplayBounds{}));
}

TEST_CASE("stream rejects out-of-order samples without changing state") {
    FixationStream st;
    const auto tr = still(0, 20, 50, 50);
    for (std::size_t k = 0; k < 10; ++k) st.ingest(tr[k]);
    CHECK_THROWS_AS(st.ingest(at(1, 50, 50)), StreamOrderError);
    CHECK(*st.last_timestamp() == tr[9].timestamp_ms);
    for (std::size_t k = 10; k < 20; ++k) st.ingest(tr[k]);
    const auto f = st.finish();
    REQUIRE(f);
    CHECK(f->sample_count == 20);
    st.reset();
    CHECK_FALSE(st.last_timestamp());
}

TEST_CASE("saccades") {
    std::vector<Fixation> one{{0, 100, 0, 0, 13}};
    CHECK(derive_saccades(one).empty());
    std::vector<Fixation> two{{0, 100, 0, 0, 13}, {150, 300, 3, 4, 19}};
    const auto s = derive_saccades(two);
    REQUIRE(s.size() == 1);
    CHECK(s[0].amplitude_px == 5);
    CHECK(s[0].duration_ms == 50);
    const auto fx = detect_fixations(oracle::random_trace(5, 10000));
    CHECK(derive_saccades(fx).size() == fx.size() - 1);
}

TEST_CASE("aoi hits use inclusive min and exclusive max edges") {
    AOI a{"r1", "r1", {{10, 10, 100, 20}, {10, 40, 50, 20}}};
    auto fix = [](double x, double y) { return Fixation{0, 100, x, y, 13}; };
    CHECK(aoi_hit(fix(10, 10), a));
    CHECK_FALSE(aoi_hit(fix(110, 30), a));
    CHECK(aoi_hit(fix(20, 45), a));
    CHECK_FALSE(aoi_hit(fix(70, 45), a));
}

TEST_CASE("aoi features") {
    AOI a{"r1", "r1", {{0, 0, 100, 100}}};
    SUBCASE("no hits") {
        std::vector<Fixation> fx{{0, 100, 500, 500, 13}};
        const auto f = aoi_features(fx, a, 1000);
        CHECK(f.fixation_count == 0);
        CHECK(f.total_duration_ms == 0);
        CHECK(f.longest_fixation_ms == 0);
        CHECK(f.proportion_of_fixations == 0);
    }
    SUBCASE("all hit") {
        std::vector<Fixation> fx{{0, 100, 5, 5, 13}, {200, 450, 50, 50, 31}};
        const auto f = aoi_features(fx, a, 1000);
        CHECK(f.fixation_count == 2);
        CHECK(f.total_duration_ms == 350);
        CHECK(f.longest_fixation_ms == 250);
        CHECK(f.proportion_of_fixations == 1);
        CHECK(f.fixation_rate_hz == doctest::Approx(2.0));
    }
    SUBCASE("tally oracle on random traces") {
        AOI b{"r2", "r2", {{200, 200, 400, 300}, {700, 100, 200, 200}}};
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto fx = detect_fixations(oracle::random_trace(seed, 10000));
            std::size_t n = 0;
            double total = 0, longest = 0;
            for (const auto& f : fx) {
                bool in = false;
                for (const auto& r : b.rects)
                    in = in || (f.centroid_x >= r.x && f.centroid_x < r.x + r.w && f.centroid_y >= r.y &&
                                f.centroid_y < r.y + r.h);
                if (!in) continue;
                ++n;
                total += f.end_ms - f.start_ms;
                longest = std::max(longest, f.end_ms - f.start_ms);
            }
            const auto got = aoi_features(fx, b, 10000);
            CHECK(got.fixation_count == n);
            CHECK(got.total_duration_ms == doctest::Approx(total));
            CHECK(got.longest_fixation_ms == longest);
            CHECK(got.proportion_of_fixations ==
                  doctest::Approx(fx.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(fx.size())));
        }
    }
}

TEST_CASE("heat map") {
    DisplayBounds b;
    const auto empty = heatmap({}, 32, b);
    CHECK(empty.cols == 40);
    CHECK(empty.rows == 32);
    CHECK(empty.total() == 0);

    std::vector<Fixation> one{{0, 200, 100, 70, 25}};
    const auto h = heatmap(one, 32, b);
    std::size_t nonzero = 0;
    for (double c : h.cells) nonzero += c != 0;
    CHECK(nonzero == 1);
    CHECK(h.at(3, 2) == 200);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto fx = detect_fixations(oracle::random_trace(seed, 10000));
        double total = 0;
        for (const auto& f : fx)
            if (b.contains(f.centroid_x, f.centroid_y)) total += f.duration_ms();
        CHECK(heatmap(fx, 32, b).total() == doctest::Approx(total));
    }
    CHECK_THROWS_AS(heatmap(one, 0, b), std::invalid_argument);
}

}  // TEST_SUITE
