#pragma once

// CSV form of a fractional-interval trace:
//   cycle,basepoint,mu,ted_error,loop_out
// one row per strobe, reals printed with 17 significant digits.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "skewsync/error.hpp"
#include "skewsync/timing_loop.hpp"

namespace skewsync {

inline constexpr const char* kTraceCsvHeader = "cycle,basepoint,mu,ted_error,loop_out";

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const FractionalIntervalTrace& trace) {
  os << kTraceCsvHeader << '\n';
  for (const auto& e : trace.entries) {
    os << e.cycle << ',' << e.basepoint << ',' << detail::format_real(e.mu) << ','
       << detail::format_real(e.ted_error) << ',' << detail::format_real(e.loop_out) << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const FractionalIntervalTrace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open trace file for writing: " + path);
  write_trace_csv(os, trace);
  if (!os) throw Error("failed writing trace file: " + path);
}

inline FractionalIntervalTrace read_trace_csv(std::istream& is, int loop_samples_per_symbol,
                                              const std::string& name = "<stream>") {
  FractionalIntervalTrace trace;
  trace.loop_samples_per_symbol = loop_samples_per_symbol;
  std::string line;
  if (!std::getline(is, line) || line != kTraceCsvHeader)
    throw Error(name + ": missing trace header '" + kTraceCsvHeader + "'");
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    TraceEntry e;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    row >> e.cycle >> c1 >> e.basepoint >> c2 >> e.mu >> c3 >> e.ted_error >> c4 >> e.loop_out;
    if (!row || c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw Error(name + ":" + std::to_string(line_no) + ": malformed trace row");
    trace.entries.push_back(e);
  }
  return trace;
}

inline FractionalIntervalTrace read_trace_csv(const std::string& path, int loop_samples_per_symbol) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open trace file: " + path);
  return read_trace_csv(is, loop_samples_per_symbol, path);
}

}  // namespace skewsync
