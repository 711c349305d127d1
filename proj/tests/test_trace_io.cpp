#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "msnv/trace_io.hpp"
#include "oracles.hpp"

using namespace msnv;

TEST_SUITE("trace_io") {

TEST_CASE("numbers print in shortest round-trip form") {
    CHECK(format_number(0) == "0");
    CHECK(format_number(8.5) == "8.5");
    CHECK(format_number(1000.0 / 120.0) == "8.333333333333334");
    CHECK(format_number(-1) == "-1");
    CHECK(format_number(600) == "600");
}

TEST_CASE("sample lines") {
    GazeSample s;
    s.timestamp_ms = 16.5;
    s.x = 640;
    s.y = 512.25;
    s.left_valid = true;
    s.right_valid = false;
    s.left_pupil_mm = 3.5;
    CHECK(format_sample(s) == "16.5,640,512.25,1,0,3.5,,");
    CHECK(parse_sample("16.5,640,512.25,1,0,3.5,,") == s);
}

TEST_CASE("round trip of random traces") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto tr = oracle::random_trace(seed, 3000, true);
        std::stringstream ss;
        write_trace(ss, tr);
        CHECK(read_trace(ss) == tr);
    }
}

TEST_CASE("file round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "msnv_trace_test.gaze").string();
    const auto tr = oracle::random_trace(3, 1000, true);
    save_trace(path, tr);
    CHECK(load_trace(path) == tr);
    std::filesystem::remove(path);
    CHECK_THROWS(load_trace(path));
}

TEST_CASE("malformed traces report the line") {
    auto fails_at = [](const std::string& text, std::size_t line) {
        std::istringstream in(text);
        try {
            read_trace(in);
        } catch (const TraceFormatError& e) {
            return e.line() == line;
        }
        return false;
    };
    CHECK(fails_at("", 1));
    CHECK(fails_at("gaze/2\n", 1));
    CHECK(fails_at("gaze/1\n0,1,2,1,1,,,\n8,1,2,1\n", 3));
    CHECK(fails_at("gaze/1\n0,1,2,2,1,,,\n", 2));
    CHECK(fails_at("gaze/1\n0,x,2,1,1,,,\n", 2));
    CHECK(fails_at("gaze/1\n10,1,2,1,1,,,\n5,1,2,1,1,,,\n", 3));
    std::istringstream ok("gaze/1\n0,1,2,1,1,,,\n");
    CHECK(read_trace(ok).size() == 1);
}

}  // TEST_SUITE
