#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "dcnb/error.hpp"

namespace dcnb::detail {

// Little-endian cursor over an in-memory buffer. Throws ParseError with the
// current offset when a read would run past the end.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : data_(bytes) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  uint8_t u8() {
    need(1, "u8");
    return static_cast<uint8_t>(data_[pos_++]);
  }

  uint16_t u16le() { return static_cast<uint16_t>(read_le(2)); }
  uint32_t u32le() { return static_cast<uint32_t>(read_le(4)); }
  uint64_t u64le() { return read_le(8); }

  std::string_view bytes(std::size_t n) {
    need(n, "bytes");
    std::string_view out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void skip(std::size_t n) {
    need(n, "skip");
    pos_ += n;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (n > data_.size() - pos_)
      throw ParseError(std::string("truncated input reading ") + what, pos_);
  }

  uint64_t read_le(std::size_t n) {
    need(n, "integer");
    uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
      v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

// Little-endian append-only buffer.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16le(uint16_t v) { write_le(v, 2); }
  void u32le(uint32_t v) { write_le(v, 4); }
  void u64le(uint64_t v) { write_le(v, 8); }
  void bytes(std::string_view b) { buf_.append(b); }

  const std::string& str() const { return buf_; }
  std::string take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  void write_le(uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::string buf_;
};

}  // namespace dcnb::detail
