// Command line front end. Every subcommand is a thin wrapper over the
// library; `run` executes a JSON config through the pipeline runner so a
// sequence of subcommands and a config-driven run produce identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcnb/dcnb.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInsufficient = 4;

dcnb::Trace load_trace_arg(const std::string& path) {
  return dcnb::load_trace(path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw dcnb::DataError("cannot open for writing: " + path);
  out << text;
}

struct IngestOptions {
  std::vector<std::string> pcaps;
  std::vector<std::string> ports;  // "ingress:egress" or "-" per capture
  std::string out;
};

int cmd_ingest(const IngestOptions& opt) {
  std::vector<std::string> buffers;
  for (const auto& f : opt.pcaps) buffers.push_back(dcnb::read_file_bytes(f));
  std::vector<dcnb::CapturePorts> ports(buffers.size());
  if (!opt.ports.empty()) {
    if (opt.ports.size() != buffers.size())
      throw dcnb::ConfigError("--ports needs one entry per pcap");
    for (std::size_t i = 0; i < opt.ports.size(); ++i) {
      const std::string& spec = opt.ports[i];
      if (spec == "-") continue;
      const auto colon = spec.find(':');
      if (colon == std::string::npos)
        throw dcnb::ConfigError("bad port pair '" + spec + "', want ingress:egress");
      ports[i].ingress_port = static_cast<uint32_t>(std::stoul(spec.substr(0, colon)));
      ports[i].egress_port = static_cast<uint32_t>(std::stoul(spec.substr(colon + 1)));
    }
  }
  dcnb::MultiIngestResult result = dcnb::ingest_captures(buffers, ports);
  dcnb::save_trace(result.trace, opt.out);
  std::cout << "[ingest] " << result.parsed << " frames parsed, "
            << result.extracted << " records extracted, skipped non_ip="
            << result.skips.non_ip << " non_tcp=" << result.skips.non_tcp
            << " deep_encap=" << result.skips.deep_encap
            << " malformed=" << result.skips.malformed
            << " truncated=" << result.skips.truncated << " -> "
            << result.trace.records.size() << " fused records in " << opt.out
            << "\n";
  return kExitOk;
}

struct TopoOptions {
  std::string kind;
  uint32_t cores = 0, aggs = 0, tors = 0, hosts_per_tor = 0;
  uint32_t k = 0;
  uint32_t spines = 0, leaves = 0, hosts_per_leaf = 0;
  uint64_t bandwidth_bps = dcnb::kDefaultBandwidthBps;
  std::string out;
};

int cmd_topo(const TopoOptions& opt) {
  auto kind = dcnb::topology_kind_from_string(opt.kind);
  if (!kind) throw dcnb::ConfigError("unknown topology kind '" + opt.kind + "'");
  dcnb::TopologyParams params;
  params.kind = *kind;
  params.cores = opt.cores;
  params.aggs = opt.aggs;
  params.tors = opt.tors;
  params.hosts_per_tor = opt.hosts_per_tor;
  params.k = opt.k;
  params.spines = opt.spines;
  params.leaves = opt.leaves;
  params.hosts_per_leaf = opt.hosts_per_leaf;
  params.default_bandwidth_bps = opt.bandwidth_bps;
  dcnb::TopologySpec topo = dcnb::build_topology(params);
  dcnb::save_topology(topo, opt.out);
  std::cout << "[topo] " << dcnb::to_string(topo.params.kind) << ": "
            << topo.host_count() << " hosts, " << topo.switch_count()
            << " switches, " << topo.link_count() << " links -> " << opt.out
            << "\n";
  return kExitOk;
}

struct AnalyzeOptions {
  std::string trace;
  uint64_t window_us = dcnb::kDefaultWindowUs;
  std::string out_dir = "analysis";
};

int cmd_analyze(const AnalyzeOptions& opt) {
  const dcnb::Trace trace = load_trace_arg(opt.trace);
  const dcnb::WindowSeries series = dcnb::window_series(trace, opt.window_us);
  auto emit = [&](const std::string& file, auto&& writer) {
    std::ostringstream os;
    writer(os);
    write_text_file(opt.out_dir + "/" + file, os.str());
  };
  emit("windows.csv", [&](std::ostream& os) { dcnb::write_windows_csv(series, os); });
  emit("cdf.csv",
       [&](std::ostream& os) { dcnb::write_cdf_csv(dcnb::flow_cdf(trace), os); });
  emit("matrix.csv", [&](std::ostream& os) {
    dcnb::write_matrix_csv(dcnb::traffic_matrix(trace), os);
  });
  emit("histogram.csv", [&](std::ostream& os) {
    dcnb::write_histogram_csv(dcnb::kDefaultSizeBins,
                              dcnb::packet_size_histogram(trace), os);
  });
  std::cout << "[analyze] " << trace.records.size() << " records over "
            << series.size() << " windows -> " << opt.out_dir << "/\n";
  return kExitOk;
}

struct ClassifyOptcli {
  std::string trace;
  uint64_t window_us = dcnb::kDefaultWindowUs;
  bool use_packets = false;
  std::string out;
};

int cmd_classify(const ClassifyOptcli& opt) {
  const dcnb::Trace trace = load_trace_arg(opt.trace);
  dcnb::ClassifyOptions options;
  options.use_packets = opt.use_packets;
  const dcnb::ClassificationReport report =
      dcnb::classify_pattern(dcnb::window_series(trace, opt.window_us), options);
  write_text_file(opt.out, dcnb::report_to_json(report).dump(2) + "\n");
  std::cout << "[classify] " << report.segments.size() << " segments, dominant "
            << dcnb::to_string(report.dominant) << " -> " << opt.out << "\n";
  return kExitOk;
}

struct SynthOptions {
  std::string model = "uniform";
  uint32_t nodes = 2;
  uint64_t duration_us = 0;
  uint32_t tick_us = 10;
  double p = 1.0;
  std::string size = "fixed:512";
  double hotspot = 0.5;
  uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthOptions& opt) {
  dcnb::SynthSpec spec;
  auto model = dcnb::synth_model_from_string(opt.model);
  if (!model) throw dcnb::ConfigError("unknown synth model '" + opt.model + "'");
  spec.model = *model;
  spec.nodes = opt.nodes;
  spec.duration_us = opt.duration_us;
  spec.tick_us = opt.tick_us;
  spec.arrival_probability = opt.p;
  spec.size = dcnb::detail::parse_size_model(opt.size);
  spec.hotspot_fraction = opt.hotspot;
  spec.seed = opt.seed;
  const dcnb::Trace trace = dcnb::generate(spec);
  dcnb::save_trace(trace, opt.out);
  std::cout << "[synth] " << dcnb::to_string(spec.model) << ": "
            << trace.records.size() << " records, " << spec.nodes
            << " nodes, seed " << spec.seed << " -> " << opt.out << "\n";
  return kExitOk;
}

struct ExtractOptions {
  std::string trace;
  std::string report;
  std::string pattern;
  uint64_t window_us = dcnb::kDefaultWindowUs;
  std::optional<uint64_t> max_duration_us;
  bool component = false;
  std::string out;
};

int cmd_extract(const ExtractOptions& opt) {
  const dcnb::Trace trace = load_trace_arg(opt.trace);
  dcnb::ClassificationReport report;
  if (!opt.report.empty()) {
    nlohmann::json j =
        nlohmann::json::parse(dcnb::read_file_bytes(opt.report), nullptr, false);
    if (j.is_discarded())
      throw dcnb::ConfigError("report is not valid JSON: " + opt.report);
    report = dcnb::report_from_json(j);
  } else {
    report = dcnb::classify_pattern(dcnb::window_series(trace, opt.window_us));
  }
  dcnb::Trace result;
  if (opt.component) {
    result = dcnb::build_component(trace, report);
  } else {
    auto wanted = dcnb::pattern_from_string(opt.pattern);
    if (!wanted) throw dcnb::ConfigError("unknown pattern '" + opt.pattern + "'");
    result = dcnb::extract_micro(trace, report, *wanted, opt.max_duration_us);
  }
  dcnb::save_trace(result, opt.out);
  std::cout << "[extract] " << result.records.size() << " records ("
            << (opt.component ? "component" : opt.pattern) << ") -> " << opt.out
            << "\n";
  return kExitOk;
}

struct SimulateOptions {
  std::string trace;
  std::string topo;
  std::string switch_name;
  std::string tor_switch, agg_switch, core_switch;
  uint32_t link_delay_us = 1;
  uint32_t amplify = 1;
  uint64_t seed = 0;
  std::string routing = "ecmp";
  std::string out;
};

int cmd_simulate(const SimulateOptions& opt) {
  const dcnb::Trace trace = load_trace_arg(opt.trace);
  const dcnb::TopologySpec topo = dcnb::load_topology(opt.topo);
  dcnb::SimConfig cfg;
  if (!opt.switch_name.empty()) cfg.set_all_tiers(dcnb::preset_switch(opt.switch_name));
  if (!opt.tor_switch.empty())
    cfg.models[dcnb::SwitchTier::Tor] = dcnb::preset_switch(opt.tor_switch);
  if (!opt.agg_switch.empty())
    cfg.models[dcnb::SwitchTier::Agg] = dcnb::preset_switch(opt.agg_switch);
  if (!opt.core_switch.empty())
    cfg.models[dcnb::SwitchTier::Core] = dcnb::preset_switch(opt.core_switch);
  if (cfg.models.empty())
    throw dcnb::ConfigError("need --switch or per-tier switch options");
  cfg.link_delay_us = opt.link_delay_us;
  cfg.amplification = opt.amplify;
  cfg.seed = opt.seed;
  if (opt.routing == "first")
    cfg.routing = dcnb::RoutingMode::FirstShortest;
  else if (opt.routing != "ecmp")
    throw dcnb::ConfigError("routing must be 'ecmp' or 'first'");
  const std::vector<dcnb::PacketOutcome> outcomes =
      dcnb::simulate(trace, topo, cfg);
  std::ostringstream os;
  dcnb::write_outcomes_csv(outcomes, os);
  write_text_file(opt.out, os.str());
  uint64_t delivered = 0;
  for (const auto& o : outcomes) delivered += o.delivered();
  std::cout << "[simulate] " << outcomes.size() << " packets, " << delivered
            << " delivered, " << outcomes.size() - delivered << " dropped -> "
            << opt.out << "\n";
  return kExitOk;
}

struct ReportOptions {
  std::string results;
  std::vector<std::string> devices;
  std::string mapping;
  uint64_t window_us = dcnb::kDefaultWindowUs;
  std::string out;
};

int cmd_report(const ReportOptions& opt) {
  nlohmann::json mj =
      nlohmann::json::parse(dcnb::read_file_bytes(opt.mapping), nullptr, false);
  if (mj.is_discarded())
    throw dcnb::ConfigError("mapping is not valid JSON: " + opt.mapping);
  dcnb::MetricMapping mapping;
  for (const auto& [metric, traces] : mj.items())
    for (const auto& t : traces) mapping[metric].push_back(t.get<std::string>());

  std::map<std::pair<std::string, std::string>, dcnb::MetricReport> table;
  for (const auto& dev : opt.devices) {
    for (const auto& [metric, traces] : mapping) {
      for (const auto& trace : traces) {
        auto key = std::make_pair(dev, trace);
        if (table.count(key)) continue;
        const std::filesystem::path file =
            std::filesystem::path(opt.results) / (dev + "__" + trace + ".outcomes.csv");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file);
        table[key] = dcnb::metric_report(dcnb::read_outcomes_csv(in), opt.window_us);
      }
    }
  }
  const dcnb::CompareReport report =
      dcnb::compare_report(opt.devices, table, mapping);
  write_text_file(opt.out, dcnb::compare_report_to_json(report).dump(2) + "\n");
  std::cout << "[report] " << opt.devices.size() << " devices -> " << opt.out
            << "\n";
  return kExitOk;
}

struct RunOptions {
  std::string config;
  std::string dir;
};

int cmd_run(const RunOptions& opt) {
  const dcnb::RunManifest manifest = dcnb::run_pipeline_file(opt.config, opt.dir);
  std::cout << "[run] " << manifest.stages.size() << " stages -> " << opt.dir
            << "/manifest.json\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven data-center network benchmarking toolkit"};
  app.require_subcommand(1);

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "pcap captures to a fused trace");
  c_ingest->add_option("pcaps", ingest.pcaps, "classic pcap files")->required();
  c_ingest->add_option("--ports", ingest.ports,
                       "per-capture ingress:egress pair, or '-'");
  c_ingest->add_option("--out", ingest.out, "output trace file")->required();

  TopoOptions topo;
  auto* c_topo = app.add_subcommand("topo", "build a fabric description");
  c_topo->add_option("--kind", topo.kind, "three-tier | fat-tree | spine-leaf")
      ->required();
  c_topo->add_option("--cores", topo.cores);
  c_topo->add_option("--aggs", topo.aggs);
  c_topo->add_option("--tors", topo.tors);
  c_topo->add_option("--hosts-per-tor", topo.hosts_per_tor);
  c_topo->add_option("--k", topo.k);
  c_topo->add_option("--spines", topo.spines);
  c_topo->add_option("--leaves", topo.leaves);
  c_topo->add_option("--hosts-per-leaf", topo.hosts_per_leaf);
  c_topo->add_option("--bandwidth-bps", topo.bandwidth_bps);
  c_topo->add_option("--out", topo.out)->required();

  AnalyzeOptions analyze;
  auto* c_analyze = app.add_subcommand("analyze", "windows, CDF, matrix, histogram");
  c_analyze->add_option("--trace", analyze.trace)->required();
  c_analyze->add_option("--window-us", analyze.window_us);
  c_analyze->add_option("--out-dir", analyze.out_dir);

  ClassifyOptcli classify;
  auto* c_classify = app.add_subcommand("classify", "label traffic time patterns");
  c_classify->add_option("--trace", classify.trace)->required();
  c_classify->add_option("--window-us", classify.window_us);
  c_classify->add_flag("--packets", classify.use_packets,
                       "classify packets/window instead of bits/window");
  c_classify->add_option("--out", classify.out)->required();

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "generate synthetic traffic");
  c_synth->add_option("--model", synth.model,
                      "uniform | permutation | hotspot | all-to-one | one-to-all");
  c_synth->add_option("--nodes", synth.nodes);
  c_synth->add_option("--duration-us", synth.duration_us);
  c_synth->add_option("--tick-us", synth.tick_us);
  c_synth->add_option("--p", synth.p, "arrival probability per node per tick");
  c_synth->add_option("--size", synth.size,
                      "fixed:N | choice:a,b | groups:lo:hi:n | dai2012 | bitar2014");
  c_synth->add_option("--hotspot", synth.hotspot, "hotspot fraction");
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--out", synth.out)->required();

  ExtractOptions extract;
  auto* c_extract = app.add_subcommand("extract", "carve labeled sub-traces");
  c_extract->add_option("--trace", extract.trace)->required();
  c_extract->add_option("--report", extract.report, "classification report JSON");
  c_extract->add_option("--pattern", extract.pattern, "stable | burst | increase");
  c_extract->add_option("--window-us", extract.window_us);
  uint64_t max_duration = 0;
  auto* cap_opt = c_extract->add_option("--max-duration-us", max_duration);
  c_extract->add_flag("--component", extract.component,
                      "keep all records, stamp labels into metadata");
  c_extract->add_option("--out", extract.out)->required();

  SimulateOptions simulate;
  auto* c_sim = app.add_subcommand("simulate", "replay a trace over a fabric");
  c_sim->add_option("--trace", simulate.trace)->required();
  c_sim->add_option("--topo", simulate.topo)->required();
  c_sim->add_option("--switch", simulate.switch_name, "preset for every tier");
  c_sim->add_option("--tor-switch", simulate.tor_switch);
  c_sim->add_option("--agg-switch", simulate.agg_switch);
  c_sim->add_option("--core-switch", simulate.core_switch);
  c_sim->add_option("--link-delay-us", simulate.link_delay_us);
  c_sim->add_option("--amplify", simulate.amplify);
  c_sim->add_option("--seed", simulate.seed);
  c_sim->add_option("--routing", simulate.routing, "ecmp | first");
  c_sim->add_option("--out", simulate.out)->required();

  ReportOptions report;
  auto* c_report = app.add_subcommand("report", "cross-device metric comparison");
  c_report->add_option("--results", report.results)->required();
  c_report->add_option("--devices", report.devices)->required()->delimiter(',');
  c_report->add_option("--mapping", report.mapping, "metric -> traces JSON")
      ->required();
  c_report->add_option("--window-us", report.window_us);
  c_report->add_option("--out", report.out)->required();

  RunOptions run;
  auto* c_run = app.add_subcommand("run", "execute a pipeline config");
  c_run->add_option("--config", run.config)->required();
  c_run->add_option("--dir", run.dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_topo) return cmd_topo(topo);
    if (*c_analyze) return cmd_analyze(analyze);
    if (*c_classify) return cmd_classify(classify);
    if (*c_synth) return cmd_synth(synth);
    if (*c_extract) {
      if (cap_opt->count() > 0) extract.max_duration_us = max_duration;
      return cmd_extract(extract);
    }
    if (*c_sim) return cmd_simulate(simulate);
    if (*c_report) return cmd_report(report);
    if (*c_run) return cmd_run(run);
  } catch (const dcnb::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dcnb::InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficient;
  } catch (const dcnb::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
