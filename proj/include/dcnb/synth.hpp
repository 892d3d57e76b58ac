#pragma once

// Synthetic traffic generation.
//
// Time advances in fixed ticks; each node flips an arrival coin per tick and
// on success emits one packet whose destination follows the chosen matrix
// model:
//   uniform      every other node equally likely
//   permutation  fixed derangement, node i always sends to sigma(i)
//   hotspot      probability `hotspot_fraction` to node 0, else uniform
//   all-to-one   every node sends to node 0
//   one-to-all   node 0 sends round-robin to the others
//
// Sizes come from a size model: a fixed value, a uniform choice over a list,
// or range-groups, which splits [min, max] into equal groups, picks a group
// by a symmetric binomial (a discrete bell curve), and emits the group
// midpoint. Requested sizes below the 64-byte Ethernet minimum are padded:
// frame_bytes becomes 64 and payload_bytes keeps the requested size.
//
// Every node draws from its own splitmix64 stream seeded by (seed, node), so
// output is byte-identical across platforms and insensitive to evaluation
// order.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dcnb/detail/rng.hpp"
#include "dcnb/error.hpp"
#include "dcnb/trace.hpp"

namespace dcnb {

enum class SynthModel : uint8_t { Uniform, Permutation, Hotspot, AllToOne, OneToAll };

inline const char* to_string(SynthModel m) {
  switch (m) {
    case SynthModel::Uniform: return "uniform";
    case SynthModel::Permutation: return "permutation";
    case SynthModel::Hotspot: return "hotspot";
    case SynthModel::AllToOne: return "all-to-one";
    case SynthModel::OneToAll: return "one-to-all";
  }
  return "?";
}

inline std::optional<SynthModel> synth_model_from_string(std::string_view s) {
  if (s == "uniform") return SynthModel::Uniform;
  if (s == "permutation") return SynthModel::Permutation;
  if (s == "hotspot") return SynthModel::Hotspot;
  if (s == "all-to-one") return SynthModel::AllToOne;
  if (s == "one-to-all") return SynthModel::OneToAll;
  return std::nullopt;
}

struct SizeModel {
  enum class Kind : uint8_t { Fixed, Choice, RangeGroups };

  Kind kind = Kind::Fixed;
  uint32_t fixed_bytes = 512;
  std::vector<uint32_t> choices;
  uint32_t range_min = 0, range_max = 0, groups = 0;

  static SizeModel Fixed(uint32_t bytes) {
    SizeModel m;
    m.kind = Kind::Fixed;
    m.fixed_bytes = bytes;
    return m;
  }
  static SizeModel Choice(std::vector<uint32_t> values) {
    SizeModel m;
    m.kind = Kind::Choice;
    m.choices = std::move(values);
    return m;
  }
  static SizeModel RangeGroups(uint32_t min, uint32_t max, uint32_t groups) {
    SizeModel m;
    m.kind = Kind::RangeGroups;
    m.range_min = min;
    m.range_max = max;
    m.groups = groups;
    return m;
  }
};

// Named size models taken from measurement studies: "dai2012" is an even mix
// of 32 and 512 byte messages, "bitar2014" a bell curve over ten size groups
// spanning 64..1504 bytes.
inline std::optional<SizeModel> named_size_model(std::string_view name) {
  if (name == "dai2012") return SizeModel::Choice({32, 512});
  if (name == "bitar2014") return SizeModel::RangeGroups(64, 1504, 10);
  return std::nullopt;
}

struct SynthSpec {
  SynthModel model = SynthModel::Uniform;
  uint32_t nodes = 2;
  uint64_t duration_us = 0;
  uint32_t tick_us = 10;
  double arrival_probability = 1.0;  // per node per tick
  SizeModel size = SizeModel::Fixed(512);
  double hotspot_fraction = 0.5;     // hotspot model only
  uint64_t seed = 0;
};

namespace detail {

inline void check_size_model(const SizeModel& m) {
  auto check = [](uint32_t s) {
    if (s == 0 || s > kMaxFrameBytes)
      throw ConfigError("size model: size " + std::to_string(s) +
                        " outside [1, " + std::to_string(kMaxFrameBytes) + "]");
  };
  switch (m.kind) {
    case SizeModel::Kind::Fixed:
      check(m.fixed_bytes);
      break;
    case SizeModel::Kind::Choice:
      if (m.choices.empty()) throw ConfigError("size model: empty choice list");
      for (uint32_t s : m.choices) check(s);
      break;
    case SizeModel::Kind::RangeGroups:
      if (m.groups == 0 || m.range_min >= m.range_max)
        throw ConfigError("size model: range groups need min < max and groups > 0");
      check(m.range_min);
      check(m.range_max);
      break;
  }
}

inline uint32_t draw_size(const SizeModel& m, SplitMix64& rng) {
  switch (m.kind) {
    case SizeModel::Kind::Fixed:
      return m.fixed_bytes;
    case SizeModel::Kind::Choice:
      return m.choices[rng.next_below(m.choices.size())];
    case SizeModel::Kind::RangeGroups: {
      const uint32_t g = rng.binomial(m.groups - 1);
      const double width =
          static_cast<double>(m.range_max - m.range_min) / m.groups;
      return m.range_min +
             static_cast<uint32_t>((static_cast<double>(g) + 0.5) * width);
    }
  }
  return m.fixed_bytes;
}

// Fixed-point-free permutation: shuffle, then rotate any fixed points away.
inline std::vector<uint32_t> derangement(uint32_t n, SplitMix64& rng) {
  std::vector<uint32_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0u);
  for (uint32_t i = n - 1; i > 0; --i)
    std::swap(sigma[i], sigma[rng.next_below(i + 1)]);
  std::vector<uint32_t> fixed;
  for (uint32_t i = 0; i < n; ++i)
    if (sigma[i] == i) fixed.push_back(i);
  for (std::size_t i = 0; i + 1 < fixed.size(); i += 2)
    std::swap(sigma[fixed[i]], sigma[fixed[i + 1]]);
  if (fixed.size() % 2 == 1) {
    const uint32_t f = fixed.back();
    const uint32_t other = f == 0 ? 1 : 0;
    std::swap(sigma[f], sigma[other]);
  }
  return sigma;
}

}  // namespace detail

inline Trace generate(const SynthSpec& spec) {
  if (spec.nodes < 2) throw ConfigError("generate: need at least 2 nodes");
  if (spec.tick_us == 0) throw ConfigError("generate: tick_us must be positive");
  if (!(spec.arrival_probability > 0.0) || spec.arrival_probability > 1.0)
    throw ConfigError("generate: arrival probability must be in (0, 1]");
  if (spec.model == SynthModel::Hotspot &&
      (!(spec.hotspot_fraction > 0.0) || !(spec.hotspot_fraction < 1.0)))
    throw ConfigError("generate: hotspot fraction must be in (0, 1)");
  detail::check_size_model(spec.size);

  const uint64_t ticks = spec.duration_us / spec.tick_us;
  const uint32_t n = spec.nodes;

  std::vector<uint32_t> sigma;
  if (spec.model == SynthModel::Permutation) {
    detail::SplitMix64 perm_rng(detail::hash_combine(spec.seed, 0x7065726dull));
    sigma = detail::derangement(n, perm_rng);
  }

  Trace out;
  out.meta.application_label = to_string(spec.model);
  out.meta.nodes.reserve(n);
  for (uint32_t i = 0; i < n; ++i) out.meta.nodes.push_back("h" + std::to_string(i));

  for (uint32_t src = 0; src < n; ++src) {
    if (spec.model == SynthModel::AllToOne && src == 0) continue;
    if (spec.model == SynthModel::OneToAll && src != 0) continue;
    detail::SplitMix64 rng(detail::hash_combine(spec.seed, src));
    uint32_t round_robin = 0;
    for (uint64_t t = 0; t < ticks; ++t) {
      if (!rng.bernoulli(spec.arrival_probability)) continue;
      uint32_t dst = 0;
      switch (spec.model) {
        case SynthModel::Uniform: {
          const uint32_t r = static_cast<uint32_t>(rng.next_below(n - 1));
          dst = r >= src ? r + 1 : r;
          break;
        }
        case SynthModel::Permutation:
          dst = sigma[src];
          break;
        case SynthModel::Hotspot: {
          if (src != 0 && rng.bernoulli(spec.hotspot_fraction)) {
            dst = 0;
          } else {
            const uint32_t r = static_cast<uint32_t>(rng.next_below(n - 1));
            dst = r >= src ? r + 1 : r;
          }
          break;
        }
        case SynthModel::AllToOne:
          dst = 0;
          break;
        case SynthModel::OneToAll:
          dst = 1 + (round_robin++ % (n - 1));
          break;
      }
      const uint32_t size = detail::draw_size(spec.size, rng);
      PacketRecord rec;
      rec.timestamp_us = t * spec.tick_us;
      if (size < kMinFrameBytes) {
        rec.frame_bytes = kMinFrameBytes;
        rec.payload_bytes = size;
      } else {
        // 54 bytes of Ethernet + IPv4 + TCP headers
        rec.frame_bytes = size;
        rec.payload_bytes = size > 54 ? size - 54 : 0;
      }
      rec.src_node = src;
      rec.dst_node = dst;
      out.records.push_back(rec);
    }
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const PacketRecord& a, const PacketRecord& b) {
              return std::tie(a.timestamp_us, a.src_node) <
                     std::tie(b.timestamp_us, b.src_node);
            });
  return out;
}

}  // namespace dcnb
