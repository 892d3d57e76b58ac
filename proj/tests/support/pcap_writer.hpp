#pragma once

// Byte-level pcap assembly for tests, written independently of the library
// reader so encoding bugs cannot cancel out. Integers are emitted field by
// field; the file-level endianness is explicit.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace testsupport {

inline void put_u16(std::string& b, uint16_t v, bool big_endian) {
  if (big_endian) {
    b.push_back(static_cast<char>(v >> 8));
    b.push_back(static_cast<char>(v));
  } else {
    b.push_back(static_cast<char>(v));
    b.push_back(static_cast<char>(v >> 8));
  }
}

inline void put_u32(std::string& b, uint32_t v, bool big_endian) {
  if (big_endian) {
    b.push_back(static_cast<char>(v >> 24));
    b.push_back(static_cast<char>(v >> 16));
    b.push_back(static_cast<char>(v >> 8));
    b.push_back(static_cast<char>(v));
  } else {
    b.push_back(static_cast<char>(v));
    b.push_back(static_cast<char>(v >> 8));
    b.push_back(static_cast<char>(v >> 16));
    b.push_back(static_cast<char>(v >> 24));
  }
}

// Network byte order regardless of file endianness.
inline void put_net16(std::string& b, uint16_t v) { put_u16(b, v, true); }
inline void put_net32(std::string& b, uint32_t v) { put_u32(b, v, true); }

struct Ipv4Addr {
  uint8_t o[4];
};

inline Ipv4Addr ip(uint8_t a, uint8_t b, uint8_t c, uint8_t d) {
  return {{a, b, c, d}};
}

struct TcpFrameSpec {
  Ipv4Addr src_ip = ip(10, 0, 0, 1);
  Ipv4Addr dst_ip = ip(10, 0, 0, 2);
  uint16_t src_port = 1000;
  uint16_t dst_port = 2000;
  uint32_t payload_len = 0;
  uint32_t ip_options_words = 0;   // extra IHL words beyond 5
  uint32_t tcp_options_words = 0;  // extra data-offset words beyond 5
  bool vlan = false;
  uint16_t vlan_id = 42;
};

// Ethernet II + IPv4 + TCP frame; returns the assembled link-layer bytes.
inline std::string build_tcp_frame(const TcpFrameSpec& s) {
  std::string f;
  for (int i = 0; i < 6; ++i) f.push_back(static_cast<char>(0x02 + i));  // dst mac
  for (int i = 0; i < 6; ++i) f.push_back(static_cast<char>(0x12 + i));  // src mac
  if (s.vlan) {
    put_net16(f, 0x8100);
    put_net16(f, s.vlan_id);
  }
  put_net16(f, 0x0800);
  const uint32_t ihl_words = 5 + s.ip_options_words;
  const uint32_t doff_words = 5 + s.tcp_options_words;
  const uint16_t total_len =
      static_cast<uint16_t>(ihl_words * 4 + doff_words * 4 + s.payload_len);
  f.push_back(static_cast<char>(0x40 | ihl_words));  // version 4 + IHL
  f.push_back(0);                                    // dscp
  put_net16(f, total_len);
  put_net16(f, 0x1234);  // identification
  put_net16(f, 0x4000);  // don't fragment
  f.push_back(64);       // ttl
  f.push_back(6);        // protocol TCP
  put_net16(f, 0);       // checksum, unchecked
  for (int i = 0; i < 4; ++i) f.push_back(static_cast<char>(s.src_ip.o[i]));
  for (int i = 0; i < 4; ++i) f.push_back(static_cast<char>(s.dst_ip.o[i]));
  for (uint32_t i = 0; i < s.ip_options_words; ++i) put_net32(f, 0x01010101);
  put_net16(f, s.src_port);
  put_net16(f, s.dst_port);
  put_net32(f, 7);  // seq
  put_net32(f, 9);  // ack
  f.push_back(static_cast<char>(doff_words << 4));
  f.push_back(0x10);     // ack flag
  put_net16(f, 65535);   // window
  put_net16(f, 0);       // checksum
  put_net16(f, 0);       // urgent
  for (uint32_t i = 0; i < s.tcp_options_words; ++i) put_net32(f, 0x01010100);
  for (uint32_t i = 0; i < s.payload_len; ++i)
    f.push_back(static_cast<char>('a' + i % 26));
  return f;
}

inline std::string build_udp_frame(uint32_t payload_len) {
  std::string f;
  for (int i = 0; i < 12; ++i) f.push_back(static_cast<char>(i));
  put_net16(f, 0x0800);
  const uint16_t total_len = static_cast<uint16_t>(20 + 8 + payload_len);
  f.push_back(0x45);
  f.push_back(0);
  put_net16(f, total_len);
  put_net16(f, 0);
  put_net16(f, 0);
  f.push_back(64);
  f.push_back(17);  // UDP
  put_net16(f, 0);
  put_net32(f, 0x0a000001);
  put_net32(f, 0x0a000002);
  put_net16(f, 53);
  put_net16(f, 53);
  put_net16(f, static_cast<uint16_t>(8 + payload_len));
  put_net16(f, 0);
  for (uint32_t i = 0; i < payload_len; ++i) f.push_back('u');
  return f;
}

inline std::string build_arp_frame() {
  std::string f;
  for (int i = 0; i < 12; ++i) f.push_back(static_cast<char>(0x20 + i));
  put_net16(f, 0x0806);
  put_net16(f, 1);       // ethernet
  put_net16(f, 0x0800);  // ipv4
  f.push_back(6);
  f.push_back(4);
  put_net16(f, 1);  // request
  for (int i = 0; i < 20; ++i) f.push_back(static_cast<char>(i));
  return f;
}

// Double-tagged frame the extractor must count as deep encapsulation.
inline std::string build_qinq_frame() {
  std::string f;
  for (int i = 0; i < 12; ++i) f.push_back(static_cast<char>(0x30 + i));
  put_net16(f, 0x8100);
  put_net16(f, 100);
  put_net16(f, 0x8100);
  put_net16(f, 200);
  put_net16(f, 0x0800);
  for (int i = 0; i < 40; ++i) f.push_back(0);
  return f;
}

class PcapBuilder {
 public:
  explicit PcapBuilder(bool big_endian = false, uint32_t snaplen = 65535)
      : big_endian_(big_endian), snaplen_(snaplen) {
    put_u32(bytes_, 0xa1b2c3d4u, big_endian_);
    put_u16(bytes_, 2, big_endian_);
    put_u16(bytes_, 4, big_endian_);
    put_u32(bytes_, 0, big_endian_);
    put_u32(bytes_, 0, big_endian_);
    put_u32(bytes_, snaplen_, big_endian_);
    put_u32(bytes_, 1, big_endian_);  // ethernet
  }

  void add_frame(uint64_t ts_us, const std::string& frame) {
    add_frame_with_orig(ts_us, frame, static_cast<uint32_t>(frame.size()));
  }

  void add_frame_with_orig(uint64_t ts_us, const std::string& frame,
                           uint32_t orig_len) {
    const uint32_t captured =
        std::min<uint32_t>(static_cast<uint32_t>(frame.size()), snaplen_);
    put_u32(bytes_, static_cast<uint32_t>(ts_us / 1000000), big_endian_);
    put_u32(bytes_, static_cast<uint32_t>(ts_us % 1000000), big_endian_);
    put_u32(bytes_, captured, big_endian_);
    put_u32(bytes_, orig_len, big_endian_);
    bytes_.append(frame.substr(0, captured));
  }

  const std::string& bytes() const { return bytes_; }

 private:
  bool big_endian_;
  uint32_t snaplen_;
  std::string bytes_;
};

}  // namespace testsupport
