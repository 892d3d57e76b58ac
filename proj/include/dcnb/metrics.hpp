#pragma once

// Performance metrics over replay outcomes and the cross-device comparison.
//
// Latency metrics use delivered packets only:
//   af  mean packet latency (microseconds)
//   wf  99th percentile latency, nearest-rank on the sorted list
//   lj  population standard deviation of latency
// Loss metrics use all packets:
//   cc  dropped / total over the whole run
//   ba  population standard deviation of per-window loss rates over
//       consecutive send-time windows (50 ms by default); windows in which
//       nothing was sent are skipped
//
// compare_report averages each metric per device over the traces mapped to
// that metric, then min-max normalizes across devices so 0 is the best
// device and 1 the worst; a degenerate (all-equal) column normalizes to 0.
// Latencies are one-way, send to delivery.
//
// Sums are carried in integers (picoseconds) so results do not depend on
// outcome order.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcnb/error.hpp"
#include "dcnb/sim.hpp"

namespace dcnb {

struct LatencyMetrics {
  double af_us = 0;
  double wf_us = 0;
  double lj_us = 0;
};

inline LatencyMetrics latency_metrics(const std::vector<PacketOutcome>& outcomes) {
  std::vector<int64_t> lat;
  lat.reserve(outcomes.size());
  for (const auto& o : outcomes)
    if (o.delivered()) lat.push_back(o.deliver_ps - o.send_ps);
  if (lat.empty())
    throw InsufficientDataError("latency_metrics: no delivered packets");
  std::sort(lat.begin(), lat.end());
  __int128 sum = 0, sumsq = 0;
  for (int64_t v : lat) {
    sum += v;
    sumsq += static_cast<__int128>(v) * v;
  }
  const double n = static_cast<double>(lat.size());
  const double mean_ps = static_cast<double>(sum) / n;
  const double var_ps2 =
      std::max(0.0, static_cast<double>(sumsq) / n - mean_ps * mean_ps);
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(lat.size())));
  LatencyMetrics m;
  m.af_us = mean_ps / kPsPerUs;
  m.wf_us = static_cast<double>(lat[rank == 0 ? 0 : rank - 1]) / kPsPerUs;
  m.lj_us = std::sqrt(var_ps2) / kPsPerUs;
  return m;
}

struct LossMetrics {
  double cc = 0;
  double ba = 0;
};

inline LossMetrics loss_metrics(const std::vector<PacketOutcome>& outcomes,
                                uint64_t window_us = kDefaultWindowUs) {
  if (window_us == 0) throw ConfigError("loss_metrics: window_us must be positive");
  if (outcomes.empty())
    throw InsufficientDataError("loss_metrics: no outcomes");
  uint64_t dropped = 0;
  std::map<uint64_t, std::pair<uint64_t, uint64_t>> windows;  // sent, dropped
  for (const auto& o : outcomes) {
    const uint64_t w =
        static_cast<uint64_t>(o.send_ps / kPsPerUs) / window_us;
    auto& cell = windows[w];
    ++cell.first;
    if (o.dropped()) {
      ++dropped;
      ++cell.second;
    }
  }
  LossMetrics m;
  m.cc = static_cast<double>(dropped) / static_cast<double>(outcomes.size());
  double sum = 0, sumsq = 0;
  for (const auto& [w, cell] : windows) {
    const double rate = static_cast<double>(cell.second) / static_cast<double>(cell.first);
    sum += rate;
    sumsq += rate * rate;
  }
  const double n = static_cast<double>(windows.size());
  const double mean = sum / n;
  m.ba = std::sqrt(std::max(0.0, sumsq / n - mean * mean));
  return m;
}

inline const std::vector<std::string> kMetricNames = {"af", "wf", "lj", "cc", "ba"};

struct MetricReport {
  double af_us = 0, wf_us = 0, lj_us = 0, cc = 0, ba = 0;

  double by_name(const std::string& name) const {
    if (name == "af") return af_us;
    if (name == "wf") return wf_us;
    if (name == "lj") return lj_us;
    if (name == "cc") return cc;
    if (name == "ba") return ba;
    throw ConfigError("unknown metric '" + name + "'");
  }
};

inline MetricReport metric_report(const std::vector<PacketOutcome>& outcomes,
                                  uint64_t window_us = kDefaultWindowUs) {
  const LatencyMetrics lat = latency_metrics(outcomes);
  const LossMetrics loss = loss_metrics(outcomes, window_us);
  return {lat.af_us, lat.wf_us, lat.lj_us, loss.cc, loss.ba};
}

// Which traces feed which metric: latency metrics are read off the traces
// exercising their target regime, loss metrics off theirs.
using MetricMapping = std::map<std::string, std::vector<std::string>>;

struct CompareReport {
  std::vector<std::string> devices;
  MetricMapping mapping;
  // device -> metric -> value
  std::map<std::string, std::map<std::string, double>> raw;
  std::map<std::string, std::map<std::string, double>> normalized;
};

// results key: (device, trace). Missing combinations are an error so a
// lopsided comparison cannot pass silently.
inline CompareReport compare_report(
    const std::vector<std::string>& devices,
    const std::map<std::pair<std::string, std::string>, MetricReport>& results,
    const MetricMapping& mapping) {
  if (devices.empty()) throw ConfigError("compare_report: no devices");
  for (const auto& name : kMetricNames)
    if (!mapping.count(name) || mapping.at(name).empty())
      throw ConfigError("compare_report: mapping missing metric '" + name + "'");
  std::string gaps;
  for (const auto& dev : devices)
    for (const auto& [metric, traces] : mapping)
      for (const auto& trace : traces)
        if (!results.count({dev, trace}))
          gaps += (gaps.empty() ? "" : ", ") + dev + "/" + trace;
  if (!gaps.empty())
    throw DataError("compare_report: missing results for " + gaps);

  CompareReport report;
  report.devices = devices;
  report.mapping = mapping;
  for (const auto& dev : devices) {
    for (const auto& name : kMetricNames) {
      double sum = 0;
      const auto& traces = mapping.at(name);
      for (const auto& trace : traces)
        sum += results.at({dev, trace}).by_name(name);
      report.raw[dev][name] = sum / static_cast<double>(traces.size());
    }
  }
  for (const auto& name : kMetricNames) {
    double lo = report.raw.at(devices[0]).at(name);
    double hi = lo;
    for (const auto& dev : devices) {
      lo = std::min(lo, report.raw.at(dev).at(name));
      hi = std::max(hi, report.raw.at(dev).at(name));
    }
    for (const auto& dev : devices) {
      const double v = report.raw.at(dev).at(name);
      report.normalized[dev][name] = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
  }
  return report;
}

inline nlohmann::json compare_report_to_json(const CompareReport& report) {
  nlohmann::json raw, normalized;
  for (const auto& [dev, metrics] : report.raw) raw[dev] = metrics;
  for (const auto& [dev, metrics] : report.normalized) normalized[dev] = metrics;
  return nlohmann::json{{"devices", report.devices},
                        {"mapping", report.mapping},
                        {"raw", raw},
                        {"normalized", normalized},
                        {"latency_basis", "one-way send to delivery"}};
}

}  // namespace dcnb
