#pragma once

// Carving labeled sub-traces out of a classified trace.
//
// extract_micro pulls the longest segment with the wanted label (earliest on
// ties), padded by one window on each side so boundary behavior survives,
// and rebases timestamps to the first selected record. build_component keeps
// the whole trace but stamps the classifier's segment labels into the
// metadata.

#include <cstdint>
#include <optional>
#include <string>

#include "dcnb/analysis.hpp"
#include "dcnb/error.hpp"
#include "dcnb/trace.hpp"

namespace dcnb {

inline Trace extract_micro(const Trace& trace, const ClassificationReport& report,
                           PatternLabel wanted,
                           std::optional<uint64_t> max_duration_us = std::nullopt) {
  const ClassifiedSegment* pick = nullptr;
  for (const auto& s : report.segments) {
    if (s.label != wanted) continue;
    if (!pick || s.end_us - s.start_us > pick->end_us - pick->start_us) pick = &s;
  }
  if (!pick) {
    std::string have;
    for (const auto& s : report.segments) {
      if (!have.empty()) have += ", ";
      have += to_string(s.label);
    }
    throw DataError(std::string("extract_micro: no '") + to_string(wanted) +
                    "' segment in report (have: " + (have.empty() ? "none" : have) + ")");
  }
  const uint64_t w = report.window_us;
  const uint64_t lo = pick->start_us >= w ? pick->start_us - w : 0;
  const uint64_t hi = pick->end_us + w;

  Trace out;
  out.meta = trace.meta;
  out.meta.pattern_labels.clear();
  uint64_t base = 0;
  bool first = true;
  for (const auto& r : trace.records) {
    if (r.timestamp_us < lo || r.timestamp_us >= hi) continue;
    PacketRecord copy = r;
    if (first) {
      base = r.timestamp_us;
      first = false;
    }
    copy.timestamp_us -= base;
    if (max_duration_us && copy.timestamp_us > *max_duration_us) break;
    out.records.push_back(copy);
  }
  out.meta.pattern_labels = {{0, out.last_timestamp_us(), wanted}};
  out.meta.dominant_pattern = to_string(wanted);
  return out;
}

// Stamps classification results into the trace metadata; records untouched.
inline Trace build_component(const Trace& trace, const ClassificationReport& report) {
  if (report.segments.empty() && !trace.records.empty())
    throw ConfigError("build_component: empty report for a nonempty trace");
  Trace out = trace;
  out.meta.pattern_labels.clear();
  const uint64_t last = trace.last_timestamp_us();
  for (const auto& s : report.segments) {
    if (s.start_us > last) break;
    out.meta.pattern_labels.push_back({s.start_us, std::min(s.end_us, last), s.label});
  }
  out.meta.dominant_pattern = to_string(report.dominant);
  return out;
}

}  // namespace dcnb
