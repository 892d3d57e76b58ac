#include "dcnb/sim.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace dcnb;

namespace {

PacketRecord rec(uint64_t ts, uint32_t src, uint32_t dst, uint32_t frame) {
  PacketRecord r;
  r.timestamp_us = ts;
  r.frame_bytes = frame;
  r.payload_bytes = frame > 54 ? frame - 54 : 0;
  r.src_node = src;
  r.dst_node = dst;
  return r;
}

Trace make_trace(std::vector<PacketRecord> records, uint32_t nodes) {
  Trace t;
  t.records = std::move(records);
  for (uint32_t i = 0; i < nodes; ++i) t.meta.nodes.push_back("h" + std::to_string(i));
  return t;
}

// High-throughput model: only per-hop latency, serialization, and link delay
// remain, so closed forms stay exact (engine gap is 1 ps).
SwitchModel fast_model() {
  SwitchModel m;
  m.forwarding_rate_pps = 1'000'000'000'000ull;
  m.exchange_capacity_bps = 1'000'000'000'000'000ull;
  return m;
}

SimConfig fast_config() {
  SimConfig cfg;
  cfg.set_all_tiers(fast_model());
  return cfg;
}

TEST(Simulate, SinglePacketClosedForm) {
  // three switches: 3 x (2us latency + 1.2us to serialize 1500B at 10G),
  // four links of 1us each -> 13.6us end to end
  TopologySpec topo = build_spine_leaf(1, 2, 1);
  Trace t = make_trace({rec(0, 0, 1, 1500)}, 2);
  SimConfig cfg;
  cfg.set_all_tiers(preset_switch("s7706"));
  auto out = simulate(t, topo, cfg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].delivered());
  EXPECT_EQ(out[0].send_ps, 0);
  EXPECT_EQ(out[0].deliver_ps, 13'600'000);
}

TEST(Simulate, SendTimeOffsetsDelivery) {
  TopologySpec topo = build_spine_leaf(1, 2, 1);
  Trace t = make_trace({rec(250, 0, 1, 1500)}, 2);
  SimConfig cfg;
  cfg.set_all_tiers(preset_switch("s7706"));
  auto out = simulate(t, topo, cfg);
  EXPECT_EQ(out[0].send_ps, 250 * kPsPerUs);
  EXPECT_EQ(out[0].deliver_ps, 250 * kPsPerUs + 13'600'000);
}

TEST(Simulate, BackToBackPacketsSpaceBySerialization) {
  // the second packet queues behind the first at every hop and ends exactly
  // one 1500B serialization later; queueing absorbs the engine stagger
  TopologySpec topo = build_spine_leaf(1, 2, 1);
  Trace t = make_trace({rec(0, 0, 1, 1500), rec(0, 0, 1, 1500)}, 2);
  auto out = simulate(t, topo, fast_config());
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].deliver_ps, 13'600'000);
  EXPECT_EQ(out[1].deliver_ps, 14'800'000);
}

TEST(Simulate, FairShareLatchesRateAtTransmitStart) {
  // five flows exit five spine ports at once; with 48 Gbps of exchange
  // capacity the fifth transmission starts when 5 ports are active and is
  // latched at 9.6 Gbps (1.25us for 1500B), the first four keep 10 Gbps.
  // The switch engine staggers enqueues by 1 ps per packet.
  TopologySpec topo = build_spine_leaf(1, 10, 1);
  std::vector<PacketRecord> records;
  for (uint32_t i = 0; i < 5; ++i) records.push_back(rec(0, i, i + 5, 1500));
  Trace t = make_trace(records, 10);
  SimConfig cfg = fast_config();
  SwitchModel spine = fast_model();
  spine.exchange_capacity_bps = 48'000'000'000ull;
  cfg.models[SwitchTier::Core] = spine;
  auto out = simulate(t, topo, cfg);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out[i].deliver_ps, 13'600'000 + i) << i;
  EXPECT_EQ(out[4].deliver_ps, 13'650'000 + 4);
}

TEST(Simulate, TransmittingPacketOccupiesBuffer) {
  TopologySpec topo = build_spine_leaf(1, 2, 1);
  Trace t = make_trace({rec(0, 0, 1, 2500), rec(0, 0, 1, 2500)}, 2);
  SimConfig cfg = fast_config();
  for (auto& [tier, m] : cfg.models) m.buffer_bytes = 3000;
  auto out = simulate(t, topo, cfg);
  EXPECT_TRUE(out[0].delivered());
  EXPECT_TRUE(out[1].dropped());
  EXPECT_EQ(out[1].drop_switch, 2u);  // the source-side leaf
  EXPECT_EQ(out[1].deliver_ps, -1);
}

TEST(Simulate, BufferBoundaryIsInclusive) {
  TopologySpec topo = build_spine_leaf(1, 2, 1);
  Trace t = make_trace(
      {rec(0, 0, 1, 2500), rec(0, 0, 1, 2500), rec(0, 0, 1, 2500)}, 2);
  SimConfig cfg = fast_config();
  for (auto& [tier, m] : cfg.models) m.buffer_bytes = 5000;  // exactly two
  auto out = simulate(t, topo, cfg);
  EXPECT_TRUE(out[0].delivered());
  EXPECT_TRUE(out[1].delivered());
  EXPECT_TRUE(out[2].dropped());
}

TEST(Simulate, OverloadDropsNearHalfAtTheContendedPort) {
  // two line-rate senders share one receiver: the flows merge at the spine's
  // port toward the receiving leaf, so that is where ~50% is lost once the
  // 16 KB buffer fills; downstream never sees overload
  TopologySpec topo = build_spine_leaf(1, 3, 1);
  std::vector<PacketRecord> records;
  for (uint64_t i = 0; i < 500; ++i) {
    records.push_back(rec(2 * i, 0, 2, 2500));  // 2500B at 10G = 2us
    records.push_back(rec(2 * i, 1, 2, 2500));
  }
  Trace t = make_trace(records, 3);
  SimConfig cfg = fast_config();
  for (auto& [tier, m] : cfg.models) m.buffer_bytes = 16 * 1024;
  auto out = simulate(t, topo, cfg);
  uint64_t delivered = 0, dropped = 0;
  for (const auto& o : out) {
    EXPECT_NE(o.delivered(), o.dropped());
    delivered += o.delivered();
    dropped += o.dropped();
    if (o.dropped()) {
      EXPECT_EQ(o.drop_switch, 6u);  // the spine
    }
    if (o.delivered()) {
      EXPECT_GT(o.deliver_ps, o.send_ps);
    }
  }
  EXPECT_EQ(delivered + dropped, 1000u);
  EXPECT_GT(dropped, 450u);
  EXPECT_LT(dropped, 520u);
  // deliveries through the shared port leave in queue order
  int64_t prev = -1;
  for (const auto& o : out)
    if (o.delivered()) {
      EXPECT_GT(o.deliver_ps, prev);
      prev = o.deliver_ps;
    }
}

TEST(Simulate, DeterministicReplay) {
  TopologySpec topo = build_fat_tree(4);
  std::vector<PacketRecord> records;
  for (uint64_t i = 0; i < 300; ++i)
    records.push_back(rec(3 * i, i % 16, (i * 7 + 1) % 16, 64 + (i % 1400)));
  for (auto& r : records)
    if (r.src_node == r.dst_node) r.dst_node = (r.dst_node + 1) % 16;
  Trace t = make_trace(records, 16);
  SimConfig cfg;
  cfg.set_all_tiers(preset_switch("s5710"));
  cfg.amplification = 3;
  cfg.seed = 99;
  auto a = simulate(t, topo, cfg);
  auto b = simulate(t, topo, cfg);
  EXPECT_EQ(a, b);
  cfg.routing = RoutingMode::FirstShortest;
  auto c = simulate(t, topo, cfg);
  EXPECT_EQ(c.size(), a.size());
}

TEST(Simulate, SelfTrafficDeliversInstantly) {
  TopologySpec topo = build_spine_leaf(1, 2, 1);
  Trace t = make_trace({rec(10, 0, 0, 500)}, 2);
  auto out = simulate(t, topo, fast_config());
  EXPECT_TRUE(out[0].delivered());
  EXPECT_EQ(out[0].deliver_ps, out[0].send_ps);
}

TEST(Simulate, Validation) {
  TopologySpec topo = build_spine_leaf(1, 2, 1);
  Trace big = make_trace({rec(0, 0, 3, 64)}, 4);
  EXPECT_THROW(simulate(big, topo, fast_config()), ConfigError);
  Trace t = make_trace({rec(0, 0, 1, 64)}, 2);
  SimConfig missing;
  missing.models[SwitchTier::Tor] = fast_model();  // no Core model
  EXPECT_THROW(simulate(t, topo, missing), ConfigError);
}

TEST(Presets, KnownDevicesOnly) {
  EXPECT_EQ(preset_switch_names().size(), 5u);
  for (const auto& name : preset_switch_names()) {
    SwitchModel m = preset_switch(name);
    EXPECT_EQ(m.name, name);
    EXPECT_EQ(m.port_rate_bps, 10'000'000'000ull);
    EXPECT_EQ(m.buffer_bytes, 512u * 1024);
    EXPECT_EQ(m.latency_us, 2u);
  }
  EXPECT_THROW(preset_switch("x9000"), ConfigError);
  EXPECT_GT(preset_switch("s7706").exchange_capacity_bps,
            preset_switch("s5324tp").exchange_capacity_bps);
}

TEST(Amplify, FactorOneIsIdentityWithNodeTable) {
  Trace t;
  t.records = {rec(5, 0, 1, 100)};
  Trace out = amplify(t, 1);
  ASSERT_EQ(out.records.size(), 1u);
  EXPECT_EQ(out.records[0], t.records[0]);
  ASSERT_EQ(out.meta.nodes.size(), 2u);  // synthesized n0, n1
  EXPECT_EQ(out.meta.nodes[0], "n0");
}

TEST(Amplify, ClonesShiftIdsAndJitterWithinTick) {
  Trace t = make_trace({rec(100, 0, 1, 200), rec(200, 1, 0, 300)}, 2);
  Trace out = amplify(t, 3, 7, 10);
  ASSERT_EQ(out.records.size(), 6u);
  ASSERT_EQ(out.meta.nodes.size(), 6u);
  EXPECT_EQ(out.meta.nodes[2], "h0#1");
  EXPECT_EQ(out.meta.nodes[5], "h1#2");
  uint64_t prev = 0;
  std::set<std::pair<uint32_t, uint32_t>> pairs;
  for (const auto& r : out.records) {
    EXPECT_GE(r.timestamp_us, prev);
    prev = r.timestamp_us;
    pairs.insert({r.src_node, r.dst_node});
  }
  EXPECT_EQ(pairs.size(), 6u);  // 2 originals + 2 per clone, all distinct ids
  for (const auto& r : out.records) {
    const uint64_t base = r.src_node % 2 == 0 ? 100 : 200;  // clone of which record
    EXPECT_GE(r.timestamp_us, base);
    EXPECT_LT(r.timestamp_us, base + 10);
  }
}

TEST(Amplify, SeedControlsJitter) {
  Trace t = make_trace({rec(100, 0, 1, 200)}, 2);
  EXPECT_EQ(serialize_trace(amplify(t, 4, 5)), serialize_trace(amplify(t, 4, 5)));
  EXPECT_NE(serialize_trace(amplify(t, 4, 5)), serialize_trace(amplify(t, 4, 6)));
}

TEST(Amplify, Validation) {
  Trace t = make_trace({rec(0, 0, 5, 64)}, 2);  // dst outside node table
  EXPECT_THROW(amplify(t, 2), ConfigError);
  Trace ok = make_trace({rec(0, 0, 1, 64)}, 2);
  EXPECT_THROW(amplify(ok, 0), ConfigError);
  EXPECT_THROW(amplify(ok, 2, 0, 0), ConfigError);
}

TEST(Amplify, SimulateRoutesClonesThroughBaseHosts) {
  TopologySpec topo = build_spine_leaf(2, 2, 1);
  Trace t = make_trace({rec(0, 0, 1, 1500)}, 2);
  SimConfig cfg = fast_config();
  cfg.amplification = 4;
  cfg.seed = 3;
  auto out = simulate(t, topo, cfg);
  ASSERT_EQ(out.size(), 4u);
  for (const auto& o : out) EXPECT_TRUE(o.delivered());
}

TEST(OutcomesCsv, ExactTextAndRoundTrip) {
  PacketOutcome a;
  a.index = 0;
  a.send_ps = 0;
  a.deliver_ps = 13'600'000;
  PacketOutcome b;
  b.index = 1;
  b.send_ps = 2'500'000;
  b.drop_switch = 5;
  std::ostringstream out;
  write_outcomes_csv({a, b}, out);
  EXPECT_EQ(out.str(),
            "index,send_us,deliver_us,drop_switch\n"
            "0,0.000000,13.600000,\n"
            "1,2.500000,,5\n");
  std::istringstream in(out.str());
  auto back = read_outcomes_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
}

TEST(OutcomesCsv, RejectsMalformedRows) {
  auto parse = [](const std::string& body) {
    std::istringstream in("index,send_us,deliver_us,drop_switch\n" + body);
    return read_outcomes_csv(in);
  };
  EXPECT_THROW(parse("0,0.000000,1.000000,5\n"), ParseError);  // both outcomes
  EXPECT_THROW(parse("0,0.000000,,\n"), ParseError);           // neither
  EXPECT_THROW(parse("0,abc,1.000000,\n"), ParseError);
  EXPECT_THROW(parse("x,0.000000,1.000000,\n"), ParseError);
  EXPECT_THROW(parse("0,0.000000\n"), ParseError);
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(read_outcomes_csv(bad_header), ParseError);
}

TEST(OutcomesCsv, SubMicrosecondPrecisionSurvives) {
  PacketOutcome o;
  o.index = 7;
  o.send_ps = 1;  // one picosecond
  o.deliver_ps = 13'650'004;
  std::stringstream io;
  write_outcomes_csv({o}, io);
  auto back = read_outcomes_csv(io);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].send_ps, 1);
  EXPECT_EQ(back[0].deliver_ps, 13'650'004);
}

}  // namespace
