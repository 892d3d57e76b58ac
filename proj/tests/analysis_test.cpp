#include "dcnb/analysis.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "support/helpers.hpp"

using namespace dcnb;

namespace {

PacketRecord rec(uint64_t ts, uint32_t frame, uint32_t src = 0, uint32_t dst = 1) {
  PacketRecord r;
  r.timestamp_us = ts;
  r.frame_bytes = frame;
  r.payload_bytes = 0;
  r.src_node = src;
  r.dst_node = dst;
  return r;
}

Trace make_trace(std::vector<PacketRecord> records, uint32_t nodes = 2) {
  Trace t;
  t.records = std::move(records);
  for (uint32_t i = 0; i < nodes; ++i) t.meta.nodes.push_back("h" + std::to_string(i));
  return t;
}

WindowSeries series_of(std::vector<uint64_t> bits) {
  WindowSeries s;
  s.packets.assign(bits.size(), 1);
  s.bits = std::move(bits);
  return s;
}

TEST(Windows, ConservesBitsAndPackets) {
  Trace t = testsupport::random_trace(500, 5, 7);
  WindowSeries s = window_series(t, 1000);
  uint64_t bits = 0, packets = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    bits += s.bits[i];
    packets += s.packets[i];
  }
  EXPECT_EQ(bits, 8 * t.total_frame_bytes());
  EXPECT_EQ(packets, t.records.size());
}

TEST(Windows, BoundaryGoesToNextWindow) {
  Trace t = make_trace({rec(0, 100), rec(49999, 100), rec(50000, 100)});
  WindowSeries s = window_series(t, 50000);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.bits[0], 1600u);
  EXPECT_EQ(s.packets[0], 2u);
  EXPECT_EQ(s.bits[1], 800u);
  EXPECT_EQ(s.packets[1], 1u);
}

TEST(Windows, InteriorGapsAreKept) {
  Trace t = make_trace({rec(0, 64), rec(250000, 64)});
  WindowSeries s = window_series(t);
  ASSERT_EQ(s.size(), 6u);
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_EQ(s.bits[i], 0u);
    EXPECT_EQ(s.packets[i], 0u);
  }
}

TEST(Windows, Validation) {
  EXPECT_THROW(window_series(make_trace({rec(0, 64)}), 0), ConfigError);
  EXPECT_EQ(window_series(make_trace({})).size(), 0u);
}

TEST(Cdf, HandComputedPoints) {
  Trace t = make_trace({rec(0, 100), rec(50, 300), rec(100, 600)});
  auto cdf = flow_cdf(t);
  ASSERT_EQ(cdf.size(), 3u);
  EXPECT_DOUBLE_EQ(cdf[0].time_fraction, 0.0);
  EXPECT_DOUBLE_EQ(cdf[0].volume_fraction, 0.1);
  EXPECT_DOUBLE_EQ(cdf[1].time_fraction, 0.5);
  EXPECT_DOUBLE_EQ(cdf[1].volume_fraction, 0.4);
  EXPECT_DOUBLE_EQ(cdf[2].time_fraction, 1.0);
  EXPECT_DOUBLE_EQ(cdf[2].volume_fraction, 1.0);
}

TEST(Cdf, MonotoneAndEndsAtUnity) {
  Trace t = testsupport::random_trace(400, 4, 11);
  auto cdf = flow_cdf(t);
  ASSERT_FALSE(cdf.empty());
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    EXPECT_GE(cdf[i].time_fraction, cdf[i - 1].time_fraction);
    EXPECT_GE(cdf[i].volume_fraction, cdf[i - 1].volume_fraction);
  }
  EXPECT_DOUBLE_EQ(cdf.back().time_fraction, 1.0);
  EXPECT_DOUBLE_EQ(cdf.back().volume_fraction, 1.0);
}

TEST(Cdf, SingleRecordCollapses) {
  auto cdf = flow_cdf(make_trace({rec(0, 64)}));
  ASSERT_EQ(cdf.size(), 1u);
  EXPECT_DOUBLE_EQ(cdf[0].time_fraction, 1.0);
  EXPECT_DOUBLE_EQ(cdf[0].volume_fraction, 1.0);
}

TEST(Matrix, AccumulatesFrameBytesPerPair) {
  Trace t = make_trace(
      {rec(0, 100, 0, 1), rec(1, 200, 0, 1), rec(2, 50, 1, 2), rec(3, 64, 2, 0)}, 3);
  TrafficMatrix m = traffic_matrix(t);
  EXPECT_EQ(m.n, 3u);
  EXPECT_EQ(m.at(0, 1), 300u);
  EXPECT_EQ(m.at(1, 2), 50u);
  EXPECT_EQ(m.at(2, 0), 64u);
  EXPECT_EQ(m.total(), 414u);
  EXPECT_EQ(m.nonzero_cells(), 3u);
}

TEST(Matrix, RejectsBadRecords) {
  EXPECT_THROW(traffic_matrix(make_trace({rec(0, 64, 0, 5)}, 2)), DataError);
  EXPECT_THROW(traffic_matrix(make_trace({rec(0, 64, 1, 1)}, 2)), DataError);
}

TEST(Histogram, DefaultBinsWithClamping) {
  Trace t = make_trace({rec(0, 64), rec(1, 127), rec(2, 128), rec(3, 1517),
                        rec(4, 1518), rec(5, 9216)});
  auto mass = packet_size_histogram(t);
  ASSERT_EQ(mass.size(), 5u);
  EXPECT_DOUBLE_EQ(mass[0], 2.0 / 6);
  EXPECT_DOUBLE_EQ(mass[1], 1.0 / 6);
  EXPECT_DOUBLE_EQ(mass[2], 0.0);
  EXPECT_DOUBLE_EQ(mass[3], 0.0);
  EXPECT_DOUBLE_EQ(mass[4], 3.0 / 6);
  double sum = 0;
  for (double v : mass) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Histogram, Validation) {
  Trace t = make_trace({rec(0, 64)});
  EXPECT_THROW(packet_size_histogram(t, {100}), ConfigError);
  EXPECT_THROW(packet_size_histogram(t, {100, 100}), ConfigError);
  EXPECT_TRUE(packet_size_histogram(make_trace({})).empty());
}

TEST(Classify, NeedsFourWindows) {
  EXPECT_THROW(classify_pattern(series_of({1, 2, 3})), InsufficientDataError);
  EXPECT_NO_THROW(classify_pattern(series_of({1, 2, 3, 4})));
}

TEST(Classify, ConstantSeriesIsFullyStable) {
  auto report = classify_pattern(series_of(std::vector<uint64_t>(20, 8000)));
  ASSERT_EQ(report.segments.size(), 1u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Stable);
  EXPECT_DOUBLE_EQ(report.segments[0].confidence, 1.0);
  EXPECT_EQ(report.dominant, PatternLabel::Stable);
  EXPECT_EQ(report.segments[0].start_us, 0u);
  EXPECT_EQ(report.segments[0].end_us, 20 * report.window_us);
}

TEST(Classify, TenfoldSpikeIsBurst) {
  std::vector<uint64_t> v(20, 100);
  v[10] = 1000;
  auto report = classify_pattern(series_of(v));
  ASSERT_EQ(report.segments.size(), 1u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Burst);
  EXPECT_DOUBLE_EQ(report.segments[0].confidence, 1.0);
  EXPECT_EQ(report.dominant, PatternLabel::Burst);
}

TEST(Classify, TenfoldDipIsBurst) {
  std::vector<uint64_t> v(20, 1000);
  v[10] = 100;
  auto report = classify_pattern(series_of(v));
  ASSERT_EQ(report.segments.size(), 1u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Burst);
  EXPECT_DOUBLE_EQ(report.segments[0].confidence, 1.0);
}

TEST(Classify, SpikeOutOfIdleIsBurst) {
  std::vector<uint64_t> v(20, 0);
  v[5] = 500;
  auto report = classify_pattern(series_of(v));
  ASSERT_EQ(report.segments.size(), 1u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Burst);
}

TEST(Classify, LinearRampIsIncrease) {
  std::vector<uint64_t> v;
  for (uint64_t i = 0; i < 20; ++i) v.push_back(100 * i);
  auto report = classify_pattern(series_of(v));
  ASSERT_EQ(report.segments.size(), 1u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Increase);
  EXPECT_NEAR(report.segments[0].confidence, 1.0, 1e-9);
  EXPECT_EQ(report.dominant, PatternLabel::Increase);
}

TEST(Classify, VariationBoundaryStillStable) {
  // alternating 75/125: CV is exactly the 0.25 threshold
  std::vector<uint64_t> v;
  for (int i = 0; i < 20; ++i) v.push_back(i % 2 ? 125 : 75);
  auto report = classify_pattern(series_of(v));
  ASSERT_EQ(report.segments.size(), 1u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Stable);
  EXPECT_NEAR(report.segments[0].confidence, 0.0, 1e-9);
}

TEST(Classify, ResidualSegmentCapsConfidence) {
  // one step up: too ragged for stable, R^2 below the increase bar, no spike.
  std::vector<uint64_t> v(10, 100);
  v.resize(20, 300);
  auto report = classify_pattern(series_of(v));
  ASSERT_EQ(report.segments.size(), 1u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Increase);
  EXPECT_DOUBLE_EQ(report.segments[0].confidence, 0.49);
}

TEST(Classify, SustainedShiftSplitsSegments) {
  // 16 quiet windows then 24 at four times the level; the detector cuts when
  // the 8-window after-block crosses the 50% threshold (t=10) and once more
  // when the straddling before-block settles (t=18)
  std::vector<uint64_t> v(16, 100);
  v.resize(40, 400);
  auto report = classify_pattern(series_of(v));
  ASSERT_EQ(report.segments.size(), 3u);
  EXPECT_EQ(report.segments[0].first_window, 0u);
  EXPECT_EQ(report.segments[0].end_window, 10u);
  EXPECT_EQ(report.segments[1].end_window, 18u);
  EXPECT_EQ(report.segments[2].end_window, 40u);
  EXPECT_EQ(report.segments[0].label, PatternLabel::Stable);
  EXPECT_EQ(report.segments[2].label, PatternLabel::Stable);
  EXPECT_EQ(report.dominant, PatternLabel::Stable);
  // segments tile the series
  for (std::size_t i = 1; i < report.segments.size(); ++i)
    EXPECT_EQ(report.segments[i].first_window, report.segments[i - 1].end_window);
}

TEST(Classify, PacketsModeUsesPacketSeries) {
  WindowSeries s;
  s.bits.assign(20, 100);
  s.bits[10] = 1000;               // bursty in bits
  s.packets.assign(20, 50);        // flat in packets
  EXPECT_EQ(classify_pattern(s).dominant, PatternLabel::Burst);
  EXPECT_EQ(classify_pattern(s, {.use_packets = true}).dominant,
            PatternLabel::Stable);
}

TEST(Classify, ReportJsonRoundTrip) {
  std::vector<uint64_t> v(16, 100);
  v.resize(40, 400);
  WindowSeries s = series_of(v);
  s.window_us = 1000;
  ClassificationReport report = classify_pattern(s);
  ClassificationReport back = report_from_json(report_to_json(report));
  EXPECT_EQ(back.window_us, report.window_us);
  EXPECT_EQ(back.dominant, report.dominant);
  ASSERT_EQ(back.segments.size(), report.segments.size());
  for (std::size_t i = 0; i < report.segments.size(); ++i) {
    EXPECT_EQ(back.segments[i].start_us, report.segments[i].start_us);
    EXPECT_EQ(back.segments[i].end_us, report.segments[i].end_us);
    EXPECT_EQ(back.segments[i].label, report.segments[i].label);
    EXPECT_EQ(back.segments[i].first_window, report.segments[i].first_window);
    EXPECT_EQ(back.segments[i].end_window, report.segments[i].end_window);
    EXPECT_DOUBLE_EQ(back.segments[i].confidence, report.segments[i].confidence);
  }
}

TEST(Classify, ReportJsonValidation) {
  EXPECT_THROW(report_from_json(nlohmann::json::object()), ConfigError);
  EXPECT_THROW(report_from_json({{"window_us", 10},
                                 {"dominant", "sideways"},
                                 {"segments", nlohmann::json::array()}}),
               ConfigError);
}

TEST(Csv, WindowsExactText) {
  Trace t = make_trace({rec(0, 100), rec(50000, 200)});
  std::ostringstream out;
  write_windows_csv(window_series(t), out);
  EXPECT_EQ(out.str(),
            "window,start_us,bits,packets\n"
            "0,0,800,1\n"
            "1,50000,1600,1\n");
}

TEST(Csv, CdfExactText) {
  Trace t = make_trace({rec(0, 100), rec(100, 300)});
  std::ostringstream out;
  write_cdf_csv(flow_cdf(t), out);
  EXPECT_EQ(out.str(),
            "time_fraction,volume_fraction\n"
            "0.000000000,0.250000000\n"
            "1.000000000,1.000000000\n");
}

TEST(Csv, MatrixExactText) {
  Trace t = make_trace({rec(0, 100, 0, 1), rec(1, 50, 1, 0)}, 2);
  std::ostringstream out;
  write_matrix_csv(traffic_matrix(t), out);
  EXPECT_EQ(out.str(), "0,100\n50,0\n");
}

TEST(Csv, HistogramExactText) {
  Trace t = make_trace({rec(0, 64), rec(1, 300)});
  std::ostringstream out;
  write_histogram_csv({64, 256, 512}, packet_size_histogram(t, {64, 256, 512}), out);
  EXPECT_EQ(out.str(),
            "bin_lo,bin_hi,mass\n"
            "64,256,0.500000000\n"
            "256,512,0.500000000\n");
}

}  // namespace
