#pragma once

// Trace characterization: fixed-window aggregation, flow CDF, traffic matrix,
// size histogram, and time-pattern classification.
//
// The classifier works on a windowed series (bits per window by default).
// Segmentation compares the mean of the 8 windows before a boundary with the
// mean of the 8 windows after it; a boundary is a change point when the
// after-mean differs from the before-mean by more than 50% and stays shifted
// while the after-block slides 8 more positions. A lone spike leaves the
// sliding block within 8 steps, so it never splits a segment; a sustained
// level change keeps the shift and does.
//
// Each segment is then labeled with the first matching rule:
//   burst     some window exceeds 5x the segment median (or drops below
//             0.2x), with a neighboring window within 2x of the median
//   increase  least-squares slope is positive, the fitted rise is at least
//             twice the fitted start level, and R^2 >= 0.8
//   stable    coefficient of variation <= 0.25
// A segment matching nothing gets the nearest rule's label with confidence
// capped at 0.49.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcnb/error.hpp"
#include "dcnb/trace.hpp"

namespace dcnb {

struct WindowSeries {
  uint64_t window_us = kDefaultWindowUs;
  std::vector<uint64_t> bits;     // 8 * frame bytes per window
  std::vector<uint64_t> packets;  // records per window

  std::size_t size() const { return bits.size(); }
};

// Aggregates the trace into consecutive fixed windows; window k covers
// [k*window_us, (k+1)*window_us). Empty interior windows are kept so the
// series is contiguous through the window containing the last record.
inline WindowSeries window_series(const Trace& trace,
                                  uint64_t window_us = kDefaultWindowUs) {
  if (window_us == 0) throw ConfigError("window_series: window_us must be positive");
  WindowSeries s;
  s.window_us = window_us;
  if (trace.records.empty()) return s;
  const std::size_t windows =
      static_cast<std::size_t>(trace.last_timestamp_us() / window_us) + 1;
  s.bits.assign(windows, 0);
  s.packets.assign(windows, 0);
  for (const auto& r : trace.records) {
    const std::size_t w = static_cast<std::size_t>(r.timestamp_us / window_us);
    s.bits[w] += 8ull * r.frame_bytes;
    s.packets[w] += 1;
  }
  return s;
}

struct CdfPoint {
  double time_fraction = 0;    // timestamp / last timestamp
  double volume_fraction = 0;  // cumulative frame bytes / total

  bool operator==(const CdfPoint&) const = default;
};

// Cumulative traffic volume over normalized time, one point per record,
// always ending at (1, 1). A single-record trace collapses to [(1, 1)].
inline std::vector<CdfPoint> flow_cdf(const Trace& trace) {
  std::vector<CdfPoint> out;
  if (trace.records.empty()) return out;
  const double total = static_cast<double>(trace.total_frame_bytes());
  const uint64_t last = trace.last_timestamp_us();
  uint64_t seen = 0;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    seen += r.frame_bytes;
    const double t = last == 0
                         ? 1.0
                         : static_cast<double>(r.timestamp_us) / static_cast<double>(last);
    out.push_back({t, static_cast<double>(seen) / total});
  }
  out.back().volume_fraction = 1.0;  // exact endpoint regardless of rounding
  return out;
}

struct TrafficMatrix {
  uint32_t n = 0;
  std::vector<uint64_t> cells;  // row src, column dst, frame bytes

  uint64_t& at(uint32_t src, uint32_t dst) { return cells[std::size_t(src) * n + dst]; }
  uint64_t at(uint32_t src, uint32_t dst) const { return cells[std::size_t(src) * n + dst]; }

  uint64_t total() const {
    uint64_t sum = 0;
    for (uint64_t c : cells) sum += c;
    return sum;
  }

  uint32_t nonzero_cells() const {
    uint32_t count = 0;
    for (uint64_t c : cells) count += c != 0;
    return count;
  }
};

// Byte volume between every node pair in the metadata node table.
inline TrafficMatrix traffic_matrix(const Trace& trace) {
  TrafficMatrix m;
  m.n = static_cast<uint32_t>(trace.meta.nodes.size());
  m.cells.assign(std::size_t(m.n) * m.n, 0);
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (r.src_node >= m.n || r.dst_node >= m.n)
      throw DataError("traffic_matrix: record " + std::to_string(i) +
                      " references a node outside the node table");
    if (r.src_node == r.dst_node)
      throw DataError("traffic_matrix: record " + std::to_string(i) +
                      " has src == dst");
    m.at(r.src_node, r.dst_node) += r.frame_bytes;
  }
  return m;
}

inline const std::vector<uint32_t> kDefaultSizeBins = {64, 128, 256, 512, 1024, 1518};

// Probability mass per size bin; bin i covers [edges[i], edges[i+1]), the
// last bin is closed on the right, and out-of-range sizes are clamped into
// the end bins so the masses always sum to 1.
inline std::vector<double> packet_size_histogram(
    const Trace& trace, const std::vector<uint32_t>& bin_edges = kDefaultSizeBins) {
  if (bin_edges.size() < 2)
    throw ConfigError("packet_size_histogram: need at least two bin edges");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (bin_edges[i] <= bin_edges[i - 1])
      throw ConfigError("packet_size_histogram: bin edges must strictly increase");
  if (trace.records.empty()) return {};
  std::vector<uint64_t> counts(bin_edges.size() - 1, 0);
  for (const auto& r : trace.records) {
    std::size_t bin = counts.size() - 1;
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
      if (r.frame_bytes < bin_edges[i] || i == bin_edges.size() - 1) {
        bin = i - 1;
        break;
      }
    }
    ++counts[bin];
  }
  std::vector<double> mass(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    mass[i] = static_cast<double>(counts[i]) / static_cast<double>(trace.records.size());
  return mass;
}

struct ClassifiedSegment {
  std::size_t first_window = 0;
  std::size_t end_window = 0;  // exclusive
  uint64_t start_us = 0;
  uint64_t end_us = 0;
  PatternLabel label = PatternLabel::Stable;
  double confidence = 0;
};

struct ClassificationReport {
  uint64_t window_us = kDefaultWindowUs;
  std::vector<ClassifiedSegment> segments;
  PatternLabel dominant = PatternLabel::Stable;
};

struct ClassifyOptions {
  bool use_packets = false;  // classify on packets/window instead of bits
};

namespace detail {

struct SegmentStats {
  double median = 0;
  double mean = 0;
  double cv = 0;          // population std / mean
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double spike_ratio = 0;  // worst spike magnitude relative to the median
  bool burst_ok = false;
  bool increase_ok = false;
  bool stable_ok = false;
};

inline SegmentStats segment_stats(const std::vector<double>& v, std::size_t lo,
                                  std::size_t hi) {
  SegmentStats st;
  const std::size_t n = hi - lo;
  std::vector<double> sorted(v.begin() + lo, v.begin() + hi);
  std::sort(sorted.begin(), sorted.end());
  st.median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;

  double sum = 0, sumsq = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    sum += v[i];
    sumsq += v[i] * v[i];
  }
  st.mean = sum / n;
  const double var = std::max(0.0, sumsq / n - st.mean * st.mean);
  st.cv = st.mean > 0 ? std::sqrt(var) / st.mean : 0.0;
  st.stable_ok = st.cv <= 0.25;

  // spikes, comparison written multiplicatively so a zero median still works
  double worst = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const bool up = v[i] > 5.0 * st.median && v[i] > 0;
    const bool down = st.median > 0 && v[i] < 0.2 * st.median;
    if (!up && !down) continue;
    bool neighbor_ok = false;
    if (i > lo && 2.0 * st.median >= v[i - 1] && 2.0 * v[i - 1] >= st.median)
      neighbor_ok = true;
    if (i + 1 < hi && 2.0 * st.median >= v[i + 1] && 2.0 * v[i + 1] >= st.median)
      neighbor_ok = true;
    double ratio;
    if (up)
      ratio = st.median > 0 ? v[i] / st.median : 10.0;
    else
      ratio = v[i] > 0 ? st.median / v[i] : 10.0;
    worst = std::max(worst, ratio);
    if (neighbor_ok) st.burst_ok = true;
  }
  st.spike_ratio = worst;

  // least-squares line over window index
  const double xbar = (n - 1) / 2.0;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double dx = static_cast<double>(i - lo) - xbar;
    const double dy = v[i] - st.mean;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  st.slope = sxx > 0 ? sxy / sxx : 0.0;
  st.intercept = st.mean - st.slope * xbar;
  st.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  const double rise = st.slope * static_cast<double>(n - 1);
  const double start_level = std::max(st.intercept, 0.0);
  st.increase_ok = st.slope > 0 && st.r2 >= 0.8 && rise >= 2.0 * start_level;
  return st;
}

inline bool mean_shifted(double after, double before) {
  if (before <= 0) return after > 0;
  return std::abs(after - before) > 0.5 * before;
}

// Change points via before/after block means, see the file comment.
inline std::vector<std::size_t> change_points(const std::vector<double>& v) {
  constexpr std::size_t kBlock = 8;
  constexpr std::size_t kPersist = 8;  // after-block slides this many steps
  std::vector<std::size_t> out;
  const std::size_t n = v.size();
  if (n < 2 * kBlock + kPersist) return out;
  std::vector<double> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
  auto block_mean = [&](std::size_t lo) {
    return (prefix[lo + kBlock] - prefix[lo]) / kBlock;
  };
  std::size_t seg_start = 0;
  for (std::size_t t = kBlock; t + kBlock + kPersist <= n; ++t) {
    if (t < seg_start + kBlock) continue;
    const double before = block_mean(t - kBlock);
    bool shifted = true;
    for (std::size_t j = 0; j <= kPersist; ++j) {
      if (!mean_shifted(block_mean(t + j), before)) {
        shifted = false;
        break;
      }
    }
    if (shifted) {
      out.push_back(t);
      seg_start = t;
    }
  }
  return out;
}

}  // namespace detail

// Labels every segment of the windowed series and picks the dominant pattern
// by total covered duration (earlier label wins ties). Needs at least four
// windows.
inline ClassificationReport classify_pattern(const WindowSeries& series,
                                             ClassifyOptions options = {}) {
  if (series.size() < 4)
    throw InsufficientDataError("classify_pattern: need at least 4 windows, have " +
                                std::to_string(series.size()));
  const auto& src = options.use_packets ? series.packets : series.bits;
  std::vector<double> v(src.begin(), src.end());

  std::vector<std::size_t> cuts = detail::change_points(v);
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  std::size_t lo = 0;
  for (std::size_t cut : cuts) {
    bounds.emplace_back(lo, cut);
    lo = cut;
  }
  bounds.emplace_back(lo, v.size());

  ClassificationReport report;
  report.window_us = series.window_us;
  for (auto [a, b] : bounds) {
    detail::SegmentStats st = detail::segment_stats(v, a, b);
    ClassifiedSegment seg;
    seg.first_window = a;
    seg.end_window = b;
    seg.start_us = a * series.window_us;
    seg.end_us = b * series.window_us;
    const double burst_conf = std::min(1.0, st.spike_ratio / 10.0);
    const double increase_conf = std::clamp(st.r2, 0.0, 1.0);
    const double stable_conf = std::clamp(1.0 - st.cv / 0.25, 0.0, 1.0);
    if (st.burst_ok) {
      seg.label = PatternLabel::Burst;
      seg.confidence = burst_conf;
    } else if (st.increase_ok) {
      seg.label = PatternLabel::Increase;
      seg.confidence = increase_conf;
    } else if (st.stable_ok) {
      seg.label = PatternLabel::Stable;
      seg.confidence = stable_conf;
    } else {
      // nothing matched; take the rule whose threshold is closest
      const double rise = st.slope * static_cast<double>(b - a - 1);
      const double start_level = std::max(st.intercept, 0.0);
      const double burst_score = st.spike_ratio / 5.0;
      double increase_score = 0;
      if (st.slope > 0) {
        increase_score = std::min(st.r2 / 0.8,
                                  start_level > 0 ? rise / (2.0 * start_level) : 1.0);
      }
      const double stable_score = st.cv > 0 ? 0.25 / st.cv : 1.0;
      double conf;
      if (burst_score >= increase_score && burst_score >= stable_score) {
        seg.label = PatternLabel::Burst;
        conf = burst_conf;
      } else if (increase_score >= stable_score) {
        seg.label = PatternLabel::Increase;
        conf = increase_conf;
      } else {
        seg.label = PatternLabel::Stable;
        conf = stable_conf;
      }
      seg.confidence = std::min(conf, 0.49);
    }
    report.segments.push_back(seg);
  }

  uint64_t duration[3] = {0, 0, 0};
  for (const auto& s : report.segments)
    duration[static_cast<std::size_t>(s.label)] += s.end_us - s.start_us;
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (duration[i] > duration[best]) best = i;
  report.dominant = static_cast<PatternLabel>(best);
  return report;
}

inline nlohmann::json report_to_json(const ClassificationReport& report) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : report.segments)
    segs.push_back({{"start_us", s.start_us},
                    {"end_us", s.end_us},
                    {"label", to_string(s.label)},
                    {"confidence", s.confidence}});
  return nlohmann::json{{"window_us", report.window_us},
                        {"dominant", to_string(report.dominant)},
                        {"segments", segs}};
}

inline void write_windows_csv(const WindowSeries& s, std::ostream& out) {
  out << "window,start_us,bits,packets\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out << i << ',' << i * s.window_us << ',' << s.bits[i] << ',' << s.packets[i]
        << '\n';
}

inline void write_cdf_csv(const std::vector<CdfPoint>& points, std::ostream& out) {
  out << "time_fraction,volume_fraction\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f\n", p.time_fraction,
                  p.volume_fraction);
    out << buf;
  }
}

inline void write_matrix_csv(const TrafficMatrix& m, std::ostream& out) {
  for (uint32_t i = 0; i < m.n; ++i) {
    for (uint32_t j = 0; j < m.n; ++j) {
      if (j) out << ',';
      out << m.at(i, j);
    }
    out << '\n';
  }
}

inline void write_histogram_csv(const std::vector<uint32_t>& edges,
                                const std::vector<double>& mass,
                                std::ostream& out) {
  out << "bin_lo,bin_hi,mass\n";
  char buf[64];
  for (std::size_t i = 0; i < mass.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9f\n", mass[i]);
    out << edges[i] << ',' << edges[i + 1] << ',' << buf;
  }
}

inline ClassificationReport report_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& why) -> ConfigError {
    return ConfigError("classification report json: " + why);
  };
  if (!j.is_object() || !j.contains("window_us") || !j.contains("segments"))
    throw fail("missing fields");
  ClassificationReport report;
  report.window_us = j["window_us"].get<uint64_t>();
  auto dom = pattern_from_string(j.value("dominant", ""));
  if (!dom) throw fail("unknown dominant label");
  report.dominant = *dom;
  for (const auto& s : j["segments"]) {
    ClassifiedSegment seg;
    seg.start_us = s.at("start_us").get<uint64_t>();
    seg.end_us = s.at("end_us").get<uint64_t>();
    auto label = pattern_from_string(s.at("label").get<std::string>());
    if (!label) throw fail("unknown segment label");
    seg.label = *label;
    seg.confidence = s.at("confidence").get<double>();
    seg.first_window = seg.start_us / report.window_us;
    seg.end_window = seg.end_us / report.window_us;
    report.segments.push_back(seg);
  }
  return report;
}

}  // namespace dcnb
