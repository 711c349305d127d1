#pragma once

// `gaze/1` trace files: a version line followed by one record per line,
//   t_ms,x,y,lv,rv,lp_mm,rp_mm,dist_mm
// with lv/rv as 0/1 and the three optional columns left empty when absent.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msnv/gaze.hpp"

namespace msnv {

inline constexpr std::string_view kTraceFormat = "gaze/1";

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Shortest representation that parses back to the same double.
std::string format_number(double v);

std::string format_sample(const GazeSample& s);
GazeSample parse_sample(std::string_view line, std::size_t line_no = 0);

void write_trace(std::ostream& os, const std::vector<GazeSample>& samples);
std::vector<GazeSample> read_trace(std::istream& is);

std::vector<GazeSample> load_trace(const std::string& path);
void save_trace(const std::string& path, const std::vector<GazeSample>& samples);

}  // namespace msnv
