#pragma once

// Classic pcap reader and TCP/IPv4 record extraction.
//
// Handles the original tcpdump container only: microsecond magic 0xa1b2c3d4
// in either byte order. pcapng (0x0a0d0d0a) and anything else is rejected as
// unsupported. Frames are expected to be Ethernet II; one 802.1Q tag is
// unwrapped, deeper encapsulation is counted and skipped.
//
// frame_bytes is the on-wire length (orig_len) clamped up to the 64-byte
// Ethernet minimum: captures usually omit the FCS, so minimum-size frames
// arrive as 60 bytes. payload_bytes is the TCP payload computed from the
// IPv4 total length and both header lengths. Endpoints are interned as
// "a.b.c.d:port" names; timestamps stay absolute (epoch microseconds) so
// multiple captures can be aligned before rebasing.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcnb/detail/binary_io.hpp"
#include "dcnb/error.hpp"
#include "dcnb/trace.hpp"

namespace dcnb {

struct PcapPacket {
  uint64_t ts_us = 0;        // epoch microseconds
  uint32_t captured_len = 0; // bytes present in `frame`
  uint32_t original_len = 0; // on-wire bytes
  std::string_view frame;    // view into the input buffer
};

inline constexpr uint32_t kPcapMagic = 0xa1b2c3d4u;
inline constexpr uint32_t kPcapMagicSwapped = 0xd4c3b2a1u;
inline constexpr uint32_t kPcapNgMagic = 0x0a0d0d0au;
inline constexpr uint32_t kLinkTypeEthernet = 1;

// Streaming reader over an in-memory pcap file.
class PcapReader {
 public:
  explicit PcapReader(std::string_view bytes) : reader_(bytes) {
    if (bytes.size() < 4) throw ParseError("truncated pcap header", 0);
    uint32_t magic = reader_.u32le();
    if (magic == kPcapMagic) {
      swapped_ = false;
    } else if (magic == kPcapMagicSwapped) {
      swapped_ = true;
    } else if (magic == kPcapNgMagic) {
      throw UnsupportedFormatError("pcapng input is not supported, convert to classic pcap");
    } else {
      throw UnsupportedFormatError("not a pcap file (unknown magic)");
    }
    u16();               // version major
    u16();               // version minor
    u32();               // thiszone
    u32();               // sigfigs
    snaplen_ = u32();
    link_type_ = u32();
  }

  bool swapped() const { return swapped_; }
  uint32_t snaplen() const { return snaplen_; }
  uint32_t link_type() const { return link_type_; }

  std::optional<PcapPacket> next() {
    if (reader_.at_end()) return std::nullopt;
    PcapPacket p;
    uint32_t ts_sec = u32();
    uint32_t ts_usec = u32();
    p.ts_us = static_cast<uint64_t>(ts_sec) * 1000000ull + ts_usec;
    p.captured_len = u32();
    p.original_len = u32();
    p.frame = reader_.bytes(p.captured_len);
    return p;
  }

 private:
  uint16_t u16() {
    uint16_t v = reader_.u16le();
    return swapped_ ? static_cast<uint16_t>((v >> 8) | (v << 8)) : v;
  }
  uint32_t u32() {
    uint32_t v = reader_.u32le();
    if (!swapped_) return v;
    return ((v >> 24) & 0xffu) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) |
           (v << 24);
  }

  detail::ByteReader reader_;
  bool swapped_ = false;
  uint32_t snaplen_ = 0;
  uint32_t link_type_ = 0;
};

inline std::vector<PcapPacket> parse_pcap(std::string_view bytes) {
  PcapReader reader(bytes);
  std::vector<PcapPacket> out;
  while (auto p = reader.next()) out.push_back(*p);
  return out;
}

// Per-reason counters for frames that yield no record. The conservation
// invariant is parsed == extracted + sum of these.
struct SkipCounters {
  uint64_t non_ip = 0;
  uint64_t non_tcp = 0;
  uint64_t deep_encap = 0;
  uint64_t malformed = 0;
  uint64_t truncated = 0;

  uint64_t total() const {
    return non_ip + non_tcp + deep_encap + malformed + truncated;
  }
};

namespace detail {

inline uint16_t be16(std::string_view b, std::size_t off) {
  return static_cast<uint16_t>(
      (static_cast<uint8_t>(b[off]) << 8) | static_cast<uint8_t>(b[off + 1]));
}

inline std::string ipv4_endpoint(std::string_view b, std::size_t off, uint16_t port) {
  std::string s;
  for (int i = 0; i < 4; ++i) {
    if (i) s.push_back('.');
    s += std::to_string(static_cast<uint8_t>(b[off + i]));
  }
  s.push_back(':');
  s += std::to_string(port);
  return s;
}

}  // namespace detail

// Pulls a four-tuple record out of one captured frame. Returns nullopt and
// bumps the matching counter when the frame is not an extractable TCP/IPv4
// packet. Ports are left unset; the fusion step fills them in.
inline std::optional<PacketRecord> extract_record(const PcapPacket& pkt,
                                                  NodeRegistry& registry,
                                                  SkipCounters& skips) {
  constexpr uint16_t kEtherIpv4 = 0x0800;
  constexpr uint16_t kEtherVlan = 0x8100;
  constexpr uint16_t kEtherQinQ = 0x88a8;
  const std::string_view f = pkt.frame;

  if (f.size() < 14) {
    ++skips.truncated;
    return std::nullopt;
  }
  std::size_t off = 12;
  uint16_t ether_type = detail::be16(f, off);
  off += 2;
  if (ether_type == kEtherVlan) {
    if (f.size() < off + 4) {
      ++skips.truncated;
      return std::nullopt;
    }
    off += 2;  // tag control
    ether_type = detail::be16(f, off);
    off += 2;
    if (ether_type == kEtherVlan || ether_type == kEtherQinQ) {
      ++skips.deep_encap;
      return std::nullopt;
    }
  } else if (ether_type == kEtherQinQ) {
    ++skips.deep_encap;
    return std::nullopt;
  }
  if (ether_type != kEtherIpv4) {
    ++skips.non_ip;
    return std::nullopt;
  }

  if (f.size() < off + 20) {
    ++skips.truncated;
    return std::nullopt;
  }
  const uint8_t ver_ihl = static_cast<uint8_t>(f[off]);
  if ((ver_ihl >> 4) != 4) {
    ++skips.non_ip;
    return std::nullopt;
  }
  const uint32_t ihl = (ver_ihl & 0xf) * 4u;
  if (ihl < 20) {
    ++skips.malformed;
    return std::nullopt;
  }
  const uint16_t total_len = detail::be16(f, off + 2);
  const uint8_t proto = static_cast<uint8_t>(f[off + 9]);
  if (proto != 6) {
    ++skips.non_tcp;
    return std::nullopt;
  }
  if (f.size() < off + ihl + 20) {
    ++skips.truncated;
    return std::nullopt;
  }

  const std::size_t tcp = off + ihl;
  const uint16_t src_port = detail::be16(f, tcp);
  const uint16_t dst_port = detail::be16(f, tcp + 2);
  const uint32_t doff = (static_cast<uint8_t>(f[tcp + 12]) >> 4) * 4u;
  if (doff < 20) {
    ++skips.malformed;
    return std::nullopt;
  }
  if (total_len < ihl + doff) {
    ++skips.malformed;
    return std::nullopt;
  }

  PacketRecord rec;
  rec.timestamp_us = pkt.ts_us;
  rec.frame_bytes = std::max(pkt.original_len, kMinFrameBytes);
  if (rec.frame_bytes > kMaxFrameBytes) {
    ++skips.malformed;
    return std::nullopt;
  }
  rec.payload_bytes = total_len - ihl - doff;
  if (rec.payload_bytes > rec.frame_bytes) {
    ++skips.malformed;
    return std::nullopt;
  }
  rec.src_node = registry.intern(detail::ipv4_endpoint(f, off + 12, src_port));
  rec.dst_node = registry.intern(detail::ipv4_endpoint(f, off + 16, dst_port));
  return rec;
}

struct IngestResult {
  Trace trace;        // record stream in capture order, absolute timestamps
  SkipCounters skips;
  uint64_t parsed = 0;
  uint64_t extracted = 0;
};

// Parses one pcap buffer into a record stream against a shared registry.
inline IngestResult ingest_pcap_bytes(std::string_view bytes, NodeRegistry& registry) {
  IngestResult out;
  PcapReader reader(bytes);
  while (auto pkt = reader.next()) {
    ++out.parsed;
    if (auto rec = extract_record(*pkt, registry, out.skips)) {
      out.trace.records.push_back(*rec);
      ++out.extracted;
    }
  }
  return out;
}

struct MultiIngestResult {
  Trace trace;
  SkipCounters skips;
  uint64_t parsed = 0;
  uint64_t extracted = 0;
};

// Full ingest across capture files: extract everything against one registry,
// canonicalize node ids, rebase timestamps to the earliest packet seen in any
// capture, then fuse with the per-capture port assignments.
inline MultiIngestResult ingest_captures(const std::vector<std::string>& pcap_buffers,
                                         const std::vector<CapturePorts>& ports) {
  if (pcap_buffers.size() != ports.size())
    throw ConfigError("ingest: " + std::to_string(pcap_buffers.size()) +
                      " captures but " + std::to_string(ports.size()) +
                      " port map entries");
  NodeRegistry registry;
  MultiIngestResult out;
  std::vector<Trace> captures;
  captures.reserve(pcap_buffers.size());
  for (const auto& buf : pcap_buffers) {
    IngestResult one = ingest_pcap_bytes(buf, registry);
    out.parsed += one.parsed;
    out.extracted += one.extracted;
    out.skips.non_ip += one.skips.non_ip;
    out.skips.non_tcp += one.skips.non_tcp;
    out.skips.deep_encap += one.skips.deep_encap;
    out.skips.malformed += one.skips.malformed;
    out.skips.truncated += one.skips.truncated;
    captures.push_back(std::move(one.trace));
  }
  std::vector<uint32_t> remap = registry.canonicalize();
  uint64_t t0 = UINT64_MAX;
  for (const auto& c : captures)
    for (const auto& r : c.records) t0 = std::min(t0, r.timestamp_us);
  if (t0 == UINT64_MAX) t0 = 0;
  for (auto& c : captures) {
    for (auto& r : c.records) {
      r.timestamp_us -= t0;
      r.src_node = remap[r.src_node];
      r.dst_node = remap[r.dst_node];
    }
    c.meta.nodes = registry.names();
  }
  out.trace = fuse_captures(captures, ports);
  if (captures.empty()) out.trace.meta.nodes = registry.names();
  return out;
}

}  // namespace dcnb
