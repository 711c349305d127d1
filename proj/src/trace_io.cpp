#include "msnv/trace_io.hpp"

#include <array>
#include <charconv>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>

namespace msnv {

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string format_sample(const GazeSample& s) {
    std::string line;
    line.reserve(48);
    line += format_number(s.timestamp_ms);
    line += ',';
    line += format_number(s.x);
    line += ',';
    line += format_number(s.y);
    line += s.left_valid ? ",1" : ",0";
    line += s.right_valid ? ",1" : ",0";
    for (const auto* opt : {&s.left_pupil_mm, &s.right_pupil_mm, &s.eye_distance_mm}) {
        line += ',';
        if (*opt) line += format_number(**opt);
    }
    return line;
}

namespace {

double parse_double(std::string_view field, std::size_t line_no, const char* name) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw TraceFormatError(line_no, std::string("bad ") + name + " '" + std::string(field) + "'");
    }
    return v;
}

bool parse_flag(std::string_view field, std::size_t line_no, const char* name) {
    if (field == "1") return true;
    if (field == "0") return false;
    throw TraceFormatError(line_no, std::string("bad ") + name + " flag '" + std::string(field) + "'");
}

}  // namespace

GazeSample parse_sample(std::string_view line, std::size_t line_no) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::array<std::string_view, 8> f;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (count == f.size()) throw TraceFormatError(line_no, "too many fields");
        f[count++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (count != f.size()) {
        throw TraceFormatError(line_no, "expected 8 fields, got " + std::to_string(count));
    }
    GazeSample s;
    s.timestamp_ms = parse_double(f[0], line_no, "t_ms");
    s.x = parse_double(f[1], line_no, "x");
    s.y = parse_double(f[2], line_no, "y");
    s.left_valid = parse_flag(f[3], line_no, "lv");
    s.right_valid = parse_flag(f[4], line_no, "rv");
    if (!f[5].empty()) s.left_pupil_mm = parse_double(f[5], line_no, "lp_mm");
    if (!f[6].empty()) s.right_pupil_mm = parse_double(f[6], line_no, "rp_mm");
    if (!f[7].empty()) s.eye_distance_mm = parse_double(f[7], line_no, "dist_mm");
    return s;
}

void write_trace(std::ostream& os, const std::vector<GazeSample>& samples) {
    os << kTraceFormat << '\n';
    for (const auto& s : samples) os << format_sample(s) << '\n';
}

std::vector<GazeSample> read_trace(std::istream& is) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(is, line)) throw TraceFormatError(1, "missing gaze/1 header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceFormat) throw TraceFormatError(1, "expected header 'gaze/1', got '" + line + "'");

    std::vector<GazeSample> out;
    double last = -std::numeric_limits<double>::infinity();
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto s = parse_sample(line, line_no);
        if (s.timestamp_ms < last) throw TraceFormatError(line_no, "timestamp goes backwards");
        last = s.timestamp_ms;
        out.push_back(s);
    }
    return out;
}

std::vector<GazeSample> load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace " + path);
    return read_trace(in);
}

void save_trace(const std::string& path, const std::vector<GazeSample>& samples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace " + path);
    write_trace(out, samples);
    if (!out) throw std::runtime_error("error writing trace " + path);
}

}  // namespace msnv
