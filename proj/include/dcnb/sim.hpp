#pragma once

// Trace replay through a switched fabric, plus load amplification.
//
// Switch model (output-queued, drop-tail):
//   - a packet admitted to a switch passes a serial forwarding engine that
//     accepts one packet per 1/forwarding_rate_pps; a packet admitted at t
//     reaches its egress queue at t + latency_us
//   - each egress port has buffer_bytes of queue (the packet being sent
//     still occupies its bytes); a packet that does not fit is dropped
//   - transmission rate is latched when a packet starts transmitting:
//     min(port_rate, link bandwidth, exchange_capacity / active ports),
//     where active counts ports transmitting at that instant
//   - every link adds link_delay_us of propagation, including the final
//     hop into the destination host; hosts source packets at their trace
//     timestamps without serialization delay
//
// All internal time is integer picoseconds so replays are bit-exact across
// platforms; serialization times round up. Event ties resolve in scheduling
// order, which is itself deterministic.
//
// amplify() scales load by cloning the trace k-1 times: clone c shifts node
// ids by c * node_count (fresh identities, same attachment points via id
// modulo node_count) and jitters each timestamp by a seeded draw from
// [0, tick_us) so clones do not collide on the same instants.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcnb/detail/rng.hpp"
#include "dcnb/error.hpp"
#include "dcnb/topology.hpp"
#include "dcnb/trace.hpp"

namespace dcnb {

inline constexpr uint32_t kNoSwitch = 0xffffffffu;
inline constexpr int64_t kPsPerUs = 1'000'000;

struct SwitchModel {
  std::string name = "custom";
  uint64_t port_rate_bps = 10'000'000'000ull;
  uint64_t exchange_capacity_bps = 480'000'000'000ull;
  uint64_t forwarding_rate_pps = 1'000'000'000ull;
  uint32_t buffer_bytes = 512 * 1024;  // per egress port
  uint32_t latency_us = 2;
};

// Device presets from vendor datasheets: backplane capacity and forwarding
// rate; common 10 Gbps ports, 512 KB per-port buffering, 2 us latency.
inline SwitchModel preset_switch(std::string_view name) {
  SwitchModel m;
  m.name = std::string(name);
  if (name == "s7706") {
    m.exchange_capacity_bps = 76'800'000'000'000ull;
    m.forwarding_rate_pps = 8'640'000'000ull;
  } else if (name == "s5710") {
    m.exchange_capacity_bps = 416'000'000'000ull;
    m.forwarding_rate_pps = 192'000'000ull;
  } else if (name == "s5120") {
    m.exchange_capacity_bps = 240'000'000'000ull;
    m.forwarding_rate_pps = 72'000'000ull;
  } else if (name == "s5324tp") {
    m.exchange_capacity_bps = 48'000'000'000ull;
    m.forwarding_rate_pps = 36'000'000ull;
  } else if (name == "srw2024") {
    m.exchange_capacity_bps = 48'000'000'000ull;
    m.forwarding_rate_pps = 36'000'000ull;
  } else {
    throw ConfigError("unknown switch preset '" + std::string(name) + "'");
  }
  return m;
}

inline const std::vector<std::string>& preset_switch_names() {
  static const std::vector<std::string> names = {"s7706", "s5710", "s5120",
                                                 "s5324tp", "srw2024"};
  return names;
}

struct SimConfig {
  std::map<SwitchTier, SwitchModel> models;
  uint32_t link_delay_us = 1;
  uint32_t amplification = 1;
  uint32_t amplify_tick_us = 10;
  uint64_t seed = 0;
  RoutingMode routing = RoutingMode::Ecmp;

  void set_all_tiers(const SwitchModel& m) {
    models[SwitchTier::Tor] = m;
    models[SwitchTier::Agg] = m;
    models[SwitchTier::Core] = m;
  }
};

struct PacketOutcome {
  uint64_t index = 0;
  int64_t send_ps = 0;
  int64_t deliver_ps = -1;           // -1 while undelivered
  uint32_t drop_switch = kNoSwitch;  // node id of the dropping switch

  bool delivered() const { return deliver_ps >= 0; }
  bool dropped() const { return drop_switch != kNoSwitch; }
  double send_us() const { return static_cast<double>(send_ps) / kPsPerUs; }
  double deliver_us() const { return static_cast<double>(deliver_ps) / kPsPerUs; }
  double latency_us() const {
    return static_cast<double>(deliver_ps - send_ps) / kPsPerUs;
  }

  bool operator==(const PacketOutcome&) const = default;
};

inline Trace amplify(const Trace& trace, uint32_t factor, uint64_t seed = 0,
                     uint32_t tick_us = 10) {
  if (factor == 0) throw ConfigError("amplify: factor must be >= 1");
  if (tick_us == 0) throw ConfigError("amplify: tick_us must be positive");
  Trace out = trace;
  if (out.meta.nodes.empty()) {
    uint32_t max_id = 0;
    for (const auto& r : trace.records)
      max_id = std::max({max_id, r.src_node, r.dst_node});
    if (!trace.records.empty())
      for (uint32_t i = 0; i <= max_id; ++i)
        out.meta.nodes.push_back("n" + std::to_string(i));
  }
  if (factor == 1) return out;
  const uint32_t n = static_cast<uint32_t>(out.meta.nodes.size());
  for (const auto& r : trace.records)
    if (r.src_node >= n || r.dst_node >= n)
      throw ConfigError("amplify: node table does not cover trace endpoints");
  for (uint32_t c = 1; c < factor; ++c) {
    detail::SplitMix64 rng(detail::hash_combine(seed, c));
    for (const auto& base : trace.records) {
      PacketRecord r = base;
      r.src_node += c * n;
      r.dst_node += c * n;
      r.timestamp_us += rng.next_below(tick_us);
      out.records.push_back(r);
    }
    for (uint32_t i = 0; i < n; ++i)
      out.meta.nodes.push_back(out.meta.nodes[i] + "#" + std::to_string(c));
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const PacketRecord& a, const PacketRecord& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  return out;
}

namespace detail {

struct SimPacket {
  const Route* route = nullptr;
  uint32_t frame_bytes = 0;
  uint32_t hop = 0;
};

struct SimPort {
  std::deque<uint32_t> queue;  // packet ids, front is transmitting when busy
  uint64_t queued_bytes = 0;
  bool busy = false;
};

struct SimSwitch {
  const SwitchModel* model = nullptr;
  int64_t engine_free_ps = 0;
  int64_t engine_gap_ps = 0;
  int64_t latency_ps = 0;
  uint32_t active_ports = 0;
  std::vector<SimPort> ports;
  std::vector<uint64_t> port_link_bps;
};

enum class EvKind : uint8_t { Admit, Enqueue, TxDone };

struct SimEvent {
  int64_t t = 0;
  uint64_t seq = 0;
  EvKind kind = EvKind::Admit;
  uint32_t packet = 0;
  uint32_t sw = 0;    // node id
  uint32_t port = 0;  // egress port at sw

  bool operator>(const SimEvent& o) const {
    return std::tie(t, seq) > std::tie(o.t, o.seq);
  }
};

inline int64_t serialization_ps(uint32_t frame_bytes, uint64_t rate_bps) {
  const uint64_t bits = 8ull * frame_bytes;
  return static_cast<int64_t>((bits * 1'000'000'000'000ull + rate_bps - 1) / rate_bps);
}

}  // namespace detail

// Replays the trace (amplified per cfg) over the topology; returns one
// outcome per replayed record, aligned with amplify(trace, ...) order.
inline std::vector<PacketOutcome> simulate(const Trace& trace,
                                           const TopologySpec& topo,
                                           const SimConfig& cfg) {
  const Trace amplified = amplify(trace, std::max(cfg.amplification, 1u),
                                  cfg.seed, cfg.amplify_tick_us);
  const uint32_t clones = std::max(cfg.amplification, 1u);
  const uint32_t n_total = static_cast<uint32_t>(amplified.meta.nodes.size());
  const uint32_t n_base = clones > 0 && n_total > 0 ? n_total / clones : 0;
  if (n_base > topo.host_count())
    throw ConfigError("simulate: trace has " + std::to_string(n_base) +
                      " endpoints but the topology has only " +
                      std::to_string(topo.host_count()) + " hosts");
  for (uint32_t id = topo.host_count(); id < topo.node_count(); ++id) {
    if (!cfg.models.count(topo.tier_of(id)))
      throw ConfigError(std::string("simulate: no switch model for tier '") +
                        to_string(topo.tier_of(id)) + "'");
  }

  // per-switch state, indexed by node id minus host_count
  std::vector<detail::SimSwitch> switches(topo.switch_count());
  for (uint32_t s = 0; s < switches.size(); ++s) {
    const uint32_t id = topo.host_count() + s;
    detail::SimSwitch& sw = switches[s];
    sw.model = &cfg.models.at(topo.tier_of(id));
    sw.engine_gap_ps = static_cast<int64_t>(
        (1'000'000'000'000ull + sw.model->forwarding_rate_pps - 1) /
        sw.model->forwarding_rate_pps);
    sw.latency_ps = static_cast<int64_t>(sw.model->latency_us) * kPsPerUs;
    const auto& ports = topo.ports_of(id);
    sw.ports.resize(ports.size());
    sw.port_link_bps.resize(ports.size());
    for (const auto& p : ports) sw.port_link_bps[p.port] = p.bandwidth_bps;
  }

  Router router(topo);
  std::unordered_map<uint64_t, Route> route_cache;
  std::vector<detail::SimPacket> packets(amplified.records.size());
  std::vector<PacketOutcome> outcomes(amplified.records.size());

  using Queue = std::priority_queue<detail::SimEvent, std::vector<detail::SimEvent>,
                                    std::greater<detail::SimEvent>>;
  Queue events;
  uint64_t seq = 0;
  const int64_t link_delay_ps = static_cast<int64_t>(cfg.link_delay_us) * kPsPerUs;

  for (std::size_t i = 0; i < amplified.records.size(); ++i) {
    const PacketRecord& r = amplified.records[i];
    const uint32_t src = n_base ? r.src_node % n_base : r.src_node;
    const uint32_t dst = n_base ? r.dst_node % n_base : r.dst_node;
    const uint64_t flow_key =
        (static_cast<uint64_t>(r.src_node) << 32) | r.dst_node;
    outcomes[i].index = i;
    outcomes[i].send_ps = static_cast<int64_t>(r.timestamp_us) * kPsPerUs;
    auto it = route_cache.find(flow_key);
    if (it == route_cache.end())
      it = route_cache.emplace(flow_key,
                               router.route(src, dst, flow_key, cfg.routing)).first;
    packets[i].route = &it->second;
    packets[i].frame_bytes = r.frame_bytes;
    if (it->second.empty()) {
      outcomes[i].deliver_ps = outcomes[i].send_ps;  // src == dst
      continue;
    }
    events.push({outcomes[i].send_ps + link_delay_ps, seq++, detail::EvKind::Admit,
                 static_cast<uint32_t>(i), it->second.front().switch_id,
                 it->second.front().egress_port});
  }

  auto start_tx = [&](uint32_t sw_id, uint32_t port_idx, int64_t now,
                      bool newly_busy) {
    detail::SimSwitch& sw = switches[sw_id - topo.host_count()];
    detail::SimPort& port = sw.ports[port_idx];
    if (newly_busy) {
      port.busy = true;
      ++sw.active_ports;
    }
    const uint32_t pkt_id = port.queue.front();
    uint64_t rate = std::min(sw.model->port_rate_bps, sw.port_link_bps[port_idx]);
    rate = std::min(rate, sw.model->exchange_capacity_bps / sw.active_ports);
    const int64_t done =
        now + detail::serialization_ps(packets[pkt_id].frame_bytes, rate);
    events.push({done, seq++, detail::EvKind::TxDone, pkt_id, sw_id, port_idx});
  };

  while (!events.empty()) {
    const detail::SimEvent ev = events.top();
    events.pop();
    detail::SimSwitch& sw = switches[ev.sw - topo.host_count()];
    detail::SimPacket& pkt = packets[ev.packet];

    switch (ev.kind) {
      case detail::EvKind::Admit: {
        const int64_t start = std::max(ev.t, sw.engine_free_ps);
        sw.engine_free_ps = start + sw.engine_gap_ps;
        events.push({start + sw.latency_ps, seq++, detail::EvKind::Enqueue,
                     ev.packet, ev.sw, ev.port});
        break;
      }
      case detail::EvKind::Enqueue: {
        detail::SimPort& port = sw.ports[ev.port];
        if (port.queued_bytes + pkt.frame_bytes > sw.model->buffer_bytes) {
          outcomes[ev.packet].drop_switch = ev.sw;
          break;
        }
        port.queued_bytes += pkt.frame_bytes;
        port.queue.push_back(ev.packet);
        if (!port.busy) start_tx(ev.sw, ev.port, ev.t, true);
        break;
      }
      case detail::EvKind::TxDone: {
        detail::SimPort& port = sw.ports[ev.port];
        port.queue.pop_front();
        port.queued_bytes -= pkt.frame_bytes;
        ++pkt.hop;
        if (pkt.hop < pkt.route->size()) {
          const RouteHop& next = (*pkt.route)[pkt.hop];
          events.push({ev.t + link_delay_ps, seq++, detail::EvKind::Admit,
                       ev.packet, next.switch_id, next.egress_port});
        } else {
          outcomes[ev.packet].deliver_ps = ev.t + link_delay_ps;
        }
        if (!port.queue.empty())
          start_tx(ev.sw, ev.port, ev.t, false);
        else {
          port.busy = false;
          --sw.active_ports;
        }
        break;
      }
    }
  }
  return outcomes;
}

namespace detail {

inline std::string format_us(int64_t ps) {
  const int64_t whole = ps / kPsPerUs;
  const int64_t frac = ps % kPsPerUs;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%lld.%06lld", static_cast<long long>(whole),
                static_cast<long long>(frac));
  return buf;
}

inline int64_t parse_us_to_ps(const std::string& text, std::size_t line_no) {
  const auto dot = text.find('.');
  auto fail = [&]() -> ParseError {
    return ParseError("bad microsecond value '" + text + "'", line_no);
  };
  try {
    const int64_t whole = std::stoll(text.substr(0, dot));
    int64_t frac = 0;
    if (dot != std::string::npos) {
      std::string digits = text.substr(dot + 1);
      if (digits.empty() || digits.size() > 6) throw fail();
      digits.append(6 - digits.size(), '0');
      frac = std::stoll(digits);
    }
    return whole * kPsPerUs + frac;
  } catch (const std::invalid_argument&) {
    throw fail();
  } catch (const std::out_of_range&) {
    throw fail();
  }
}

}  // namespace detail

// CSV: index,send_us,deliver_us,drop_switch with exactly one of the last two
// fields filled per row. Microseconds carry six decimals and round-trip the
// picosecond values exactly.
inline void write_outcomes_csv(const std::vector<PacketOutcome>& outcomes,
                               std::ostream& out) {
  out << "index,send_us,deliver_us,drop_switch\n";
  for (const auto& o : outcomes) {
    out << o.index << ',' << detail::format_us(o.send_ps) << ',';
    if (o.delivered()) out << detail::format_us(o.deliver_ps);
    out << ',';
    if (o.dropped()) out << o.drop_switch;
    out << '\n';
  }
}

inline std::vector<PacketOutcome> read_outcomes_csv(std::istream& in) {
  std::vector<PacketOutcome> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "index,send_us,deliver_us,drop_switch")
        throw ParseError("bad outcomes CSV header", 0);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 4)
      throw ParseError("expected 4 CSV fields", line_no);
    PacketOutcome o;
    try {
      o.index = std::stoull(fields[0]);
      if (!fields[3].empty())
        o.drop_switch = static_cast<uint32_t>(std::stoul(fields[3]));
    } catch (const std::exception&) {
      throw ParseError("bad integer field in outcomes CSV", line_no);
    }
    o.send_ps = detail::parse_us_to_ps(fields[1], line_no);
    if (!fields[2].empty()) o.deliver_ps = detail::parse_us_to_ps(fields[2], line_no);
    if (o.delivered() == o.dropped())
      throw ParseError("row must be either delivered or dropped", line_no);
    out.push_back(o);
  }
  return out;
}

}  // namespace dcnb
