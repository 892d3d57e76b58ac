#pragma once

// Canonical packet trace model and its on-disk container.
//
// A trace is a time-ordered list of fixed-size packet records plus a JSON
// metadata block. Binary layout, all integers little-endian:
//
//   offset 0   magic "DCNBTRC1" (8 bytes)
//   offset 8   u32 record count
//   offset 12  count * 40-byte records:
//                u64 timestamp_us
//                u32 frame_bytes, payload_bytes, src_node, dst_node,
//                    ingress_port, egress_port
//                8 reserved bytes, written as zero, ignored on read
//   then       u32 metadata length, UTF-8 JSON metadata
//
// Node ids index the metadata node table. Ports use kNoPort when unknown
// (single-point captures, synthetic traffic).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcnb/detail/binary_io.hpp"
#include "dcnb/error.hpp"
#include "dcnb/version.hpp"

namespace dcnb {

inline constexpr uint32_t kNoPort = 0xffffffffu;
inline constexpr uint32_t kMinFrameBytes = 64;
inline constexpr uint32_t kMaxFrameBytes = 9216;
inline constexpr uint64_t kDefaultWindowUs = 50'000;

enum class PatternLabel : uint8_t { Stable, Burst, Increase };

inline const char* to_string(PatternLabel label) {
  switch (label) {
    case PatternLabel::Stable: return "stable";
    case PatternLabel::Burst: return "burst";
    case PatternLabel::Increase: return "increase";
  }
  return "?";
}

inline std::optional<PatternLabel> pattern_from_string(std::string_view s) {
  if (s == "stable") return PatternLabel::Stable;
  if (s == "burst") return PatternLabel::Burst;
  if (s == "increase") return PatternLabel::Increase;
  return std::nullopt;
}

struct PacketRecord {
  uint64_t timestamp_us = 0;
  uint32_t frame_bytes = 0;
  uint32_t payload_bytes = 0;
  uint32_t src_node = 0;
  uint32_t dst_node = 0;
  uint32_t ingress_port = kNoPort;
  uint32_t egress_port = kNoPort;

  bool operator==(const PacketRecord&) const = default;
};

struct PatternSegment {
  uint64_t start_us = 0;
  uint64_t end_us = 0;  // exclusive
  PatternLabel label = PatternLabel::Stable;

  bool operator==(const PatternSegment&) const = default;
};

struct TraceMeta {
  std::string topology_kind;      // "three-tier" | "fat-tree" | "spine-leaf" | ""
  std::string switch_kind;        // capture point tier, "" when not applicable
  std::string application_label;  // free-form workload tag
  std::string dominant_pattern;   // "" until classified
  std::vector<std::string> nodes;               // node id -> endpoint name
  std::vector<PatternSegment> pattern_labels;   // labeled time ranges

  bool operator==(const TraceMeta&) const = default;
};

struct Trace {
  std::vector<PacketRecord> records;
  TraceMeta meta;

  bool operator==(const Trace&) const = default;

  uint64_t last_timestamp_us() const {
    return records.empty() ? 0 : records.back().timestamp_us;
  }

  uint64_t total_frame_bytes() const {
    uint64_t sum = 0;
    for (const auto& r : records) sum += r.frame_bytes;
    return sum;
  }
};

// Interns endpoint names to dense node ids in first-seen order.
// canonicalize() re-sorts by name so id assignment does not depend on
// packet arrival order; the returned vector maps old id -> new id.
class NodeRegistry {
 public:
  uint32_t intern(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(names_.size());
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
  }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  std::vector<uint32_t> canonicalize() {
    std::vector<uint32_t> order(names_.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
      return names_[a] < names_[b];
    });
    std::vector<uint32_t> remap(names_.size());
    std::vector<std::string> sorted(names_.size());
    for (uint32_t newid = 0; newid < order.size(); ++newid) {
      remap[order[newid]] = newid;
      sorted[newid] = std::move(names_[order[newid]]);
    }
    names_ = std::move(sorted);
    index_.clear();
    for (uint32_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], i);
    return remap;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, uint32_t> index_;
};

struct Violation {
  std::size_t record_index;  // segment index for pattern-label rules
  std::string rule;
};

// Checks the trace contract without throwing; returns one entry per breach.
// Rules: payload <= frame, frame within [kMinFrameBytes, kMaxFrameBytes],
// timestamps non-decreasing, pattern segments ordered, non-overlapping and
// within [0, last timestamp].
inline std::vector<Violation> validate_trace(const Trace& trace) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (r.payload_bytes > r.frame_bytes)
      out.push_back({i, "payload_bytes exceeds frame_bytes"});
    if (r.frame_bytes < kMinFrameBytes || r.frame_bytes > kMaxFrameBytes)
      out.push_back({i, "frame_bytes outside [64, 9216]"});
    if (i > 0 && r.timestamp_us < trace.records[i - 1].timestamp_us)
      out.push_back({i, "timestamp decreases"});
  }
  const uint64_t last_ts = trace.last_timestamp_us();
  const auto& segs = trace.meta.pattern_labels;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].start_us > segs[i].end_us)
      out.push_back({i, "pattern segment start after end"});
    if (segs[i].end_us > last_ts && !(segs[i].start_us == 0 && segs[i].end_us == 0))
      out.push_back({i, "pattern segment beyond last timestamp"});
    if (i > 0 && segs[i].start_us < segs[i - 1].end_us)
      out.push_back({i, "pattern segments overlap"});
  }
  return out;
}

// Per-capture port assignment used by fuse_captures to fill in ports the
// capture point could not observe.
struct CapturePorts {
  uint32_t ingress_port = kNoPort;
  uint32_t egress_port = kNoPort;
};

// Merges per-point captures of the same traffic into one trace. Ports left
// unset in a record are taken from that capture's CapturePorts entry. The
// merged stream is sorted by (timestamp, src, dst, frame) and records agreeing
// on that whole key are treated as the same packet seen at multiple points:
// only the copy from the earliest-listed capture is kept. Metadata comes from
// captures[0]; pattern labels are dropped (they no longer line up).
inline Trace fuse_captures(const std::vector<Trace>& captures,
                           const std::vector<CapturePorts>& ports) {
  if (captures.size() != ports.size())
    throw ConfigError("fuse_captures: " + std::to_string(captures.size()) +
                      " captures but " + std::to_string(ports.size()) +
                      " port map entries");
  struct Tagged {
    PacketRecord rec;
    std::size_t capture;
    std::size_t index;
  };
  std::vector<Tagged> all;
  std::size_t total = 0;
  for (const auto& c : captures) total += c.records.size();
  all.reserve(total);
  for (std::size_t c = 0; c < captures.size(); ++c) {
    for (std::size_t i = 0; i < captures[c].records.size(); ++i) {
      PacketRecord r = captures[c].records[i];
      if (r.ingress_port == kNoPort) r.ingress_port = ports[c].ingress_port;
      if (r.egress_port == kNoPort) r.egress_port = ports[c].egress_port;
      all.push_back({r, c, i});
    }
  }
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    auto ka = std::tie(a.rec.timestamp_us, a.rec.src_node, a.rec.dst_node,
                       a.rec.frame_bytes, a.capture, a.index);
    auto kb = std::tie(b.rec.timestamp_us, b.rec.src_node, b.rec.dst_node,
                       b.rec.frame_bytes, b.capture, b.index);
    return ka < kb;
  });
  Trace out;
  if (!captures.empty()) {
    out.meta = captures[0].meta;
    out.meta.pattern_labels.clear();
  }
  out.records.reserve(all.size());
  for (const auto& t : all) {
    if (!out.records.empty()) {
      const auto& p = out.records.back();
      if (p.timestamp_us == t.rec.timestamp_us && p.src_node == t.rec.src_node &&
          p.dst_node == t.rec.dst_node && p.frame_bytes == t.rec.frame_bytes)
        continue;
    }
    out.records.push_back(t.rec);
  }
  return out;
}

namespace detail {

inline nlohmann::json meta_to_json(const TraceMeta& meta) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& s : meta.pattern_labels)
    labels.push_back({s.start_us, s.end_us, to_string(s.label)});
  return nlohmann::json{{"topology_kind", meta.topology_kind},
                        {"switch_kind", meta.switch_kind},
                        {"application_label", meta.application_label},
                        {"dominant_pattern", meta.dominant_pattern},
                        {"nodes", meta.nodes},
                        {"pattern_labels", labels}};
}

inline TraceMeta meta_from_json(const nlohmann::json& j, std::size_t offset) {
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("bad trace metadata: " + why, offset);
  };
  if (!j.is_object()) throw fail("not an object");
  TraceMeta meta;
  for (const char* key : {"topology_kind", "switch_kind", "application_label",
                          "dominant_pattern"}) {
    if (!j.contains(key) || !j[key].is_string())
      throw fail(std::string("missing string field '") + key + "'");
  }
  meta.topology_kind = j["topology_kind"].get<std::string>();
  meta.switch_kind = j["switch_kind"].get<std::string>();
  meta.application_label = j["application_label"].get<std::string>();
  meta.dominant_pattern = j["dominant_pattern"].get<std::string>();
  if (!j.contains("nodes") || !j["nodes"].is_array())
    throw fail("missing array field 'nodes'");
  for (const auto& n : j["nodes"]) {
    if (!n.is_string()) throw fail("node table entry is not a string");
    meta.nodes.push_back(n.get<std::string>());
  }
  if (!j.contains("pattern_labels") || !j["pattern_labels"].is_array())
    throw fail("missing array field 'pattern_labels'");
  for (const auto& s : j["pattern_labels"]) {
    if (!s.is_array() || s.size() != 3 || !s[0].is_number_unsigned() ||
        !s[1].is_number_unsigned() || !s[2].is_string())
      throw fail("pattern label entry is not [start_us, end_us, label]");
    auto label = pattern_from_string(s[2].get<std::string>());
    if (!label) throw fail("unknown pattern label '" + s[2].get<std::string>() + "'");
    meta.pattern_labels.push_back(
        {s[0].get<uint64_t>(), s[1].get<uint64_t>(), *label});
  }
  return meta;
}

}  // namespace detail

inline std::string serialize_trace(const Trace& trace) {
  detail::ByteWriter w;
  w.bytes(kTraceFormat);
  w.u32le(static_cast<uint32_t>(trace.records.size()));
  for (const auto& r : trace.records) {
    w.u64le(r.timestamp_us);
    w.u32le(r.frame_bytes);
    w.u32le(r.payload_bytes);
    w.u32le(r.src_node);
    w.u32le(r.dst_node);
    w.u32le(r.ingress_port);
    w.u32le(r.egress_port);
    w.u32le(0);
    w.u32le(0);
  }
  std::string meta = detail::meta_to_json(trace.meta).dump();
  w.u32le(static_cast<uint32_t>(meta.size()));
  w.bytes(meta);
  return w.take();
}

inline Trace deserialize_trace(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 8 || r.bytes(8) != kTraceFormat)
    throw ParseError("bad magic, expected DCNBTRC1", 0);
  const uint32_t count = r.u32le();
  Trace trace;
  trace.records.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    PacketRecord rec;
    rec.timestamp_us = r.u64le();
    rec.frame_bytes = r.u32le();
    rec.payload_bytes = r.u32le();
    rec.src_node = r.u32le();
    rec.dst_node = r.u32le();
    rec.ingress_port = r.u32le();
    rec.egress_port = r.u32le();
    r.skip(8);
    trace.records.push_back(rec);
  }
  const uint32_t meta_len = r.u32le();
  const std::size_t meta_off = r.pos();
  std::string_view meta_bytes = r.bytes(meta_len);
  nlohmann::json j = nlohmann::json::parse(meta_bytes, nullptr, false);
  if (j.is_discarded())
    throw ParseError("metadata is not valid JSON", meta_off);
  trace.meta = detail::meta_from_json(j, meta_off);
  if (!r.at_end())
    throw ParseError("trailing bytes after metadata", r.pos());
  return trace;
}

inline void save_trace(const Trace& trace, const std::filesystem::path& path) {
  std::string bytes = serialize_trace(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

inline Trace load_trace(const std::filesystem::path& path) {
  return deserialize_trace(read_file_bytes(path));
}

// One row per record; kNoPort renders as an empty field.
inline void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "timestamp_us,frame_bytes,payload_bytes,src_node,dst_node,"
         "ingress_port,egress_port\n";
  for (const auto& r : trace.records) {
    out << r.timestamp_us << ',' << r.frame_bytes << ',' << r.payload_bytes
        << ',' << r.src_node << ',' << r.dst_node << ',';
    if (r.ingress_port != kNoPort) out << r.ingress_port;
    out << ',';
    if (r.egress_port != kNoPort) out << r.egress_port;
    out << '\n';
  }
}

}  // namespace dcnb
