#pragma once

// Shared fixtures: deterministic random traces and scratch directories.

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcnb/detail/rng.hpp"
#include "dcnb/trace.hpp"

namespace testsupport {

// Valid trace with `count` records over `nodes` endpoints: non-decreasing
// timestamps, frames in [64, 9216], payload <= frame.
inline dcnb::Trace random_trace(std::size_t count, uint32_t nodes, uint64_t seed,
                                uint64_t max_step_us = 50) {
  dcnb::detail::SplitMix64 rng(seed);
  dcnb::Trace t;
  for (uint32_t i = 0; i < nodes; ++i)
    t.meta.nodes.push_back("h" + std::to_string(i));
  uint64_t ts = 0;
  for (std::size_t i = 0; i < count; ++i) {
    dcnb::PacketRecord r;
    ts += rng.next_below(max_step_us + 1);
    r.timestamp_us = ts;
    r.frame_bytes = 64 + static_cast<uint32_t>(rng.next_below(9216 - 64 + 1));
    r.payload_bytes = static_cast<uint32_t>(rng.next_below(r.frame_bytes + 1));
    r.src_node = static_cast<uint32_t>(rng.next_below(nodes));
    do {
      r.dst_node = static_cast<uint32_t>(rng.next_below(nodes));
    } while (r.dst_node == r.src_node);
    t.records.push_back(r);
  }
  return t;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("dcnb_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() { std::filesystem::remove_all(path_); }

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
