#pragma once

// Config-driven runs: a JSON config lists stages that execute in order
// inside a run directory, and a manifest records parameters, seeds, and a
// sha256 per artifact. Nothing time- or host-dependent goes into outputs,
// so rerunning a config reproduces every artifact byte for byte.
//
// Config shape:
//   {"stages": [
//     {"stage": "synth", "model": "uniform", "nodes": 8, "duration_us": 500000,
//      "p": 0.5, "size": "fixed:512", "seed": 42, "out": "t.dcn"},
//     {"stage": "topo", "kind": "spine-leaf", "spines": 2, "leaves": 2,
//      "hosts_per_leaf": 4, "out": "fabric.json"},
//     {"stage": "classify", "trace": "t.dcn", "out": "report.json"},
//     {"stage": "extract", "trace": "t.dcn", "pattern": "stable", "out": "micro.dcn"},
//     {"stage": "simulate", "trace": "micro.dcn", "topo": "fabric.json",
//      "switch": "s7706", "seed": 7, "out": "results/s7706__micro.outcomes.csv"},
//     {"stage": "report", "results": "results", "devices": ["s7706"],
//      "mapping": {"af": ["micro"], ...}, "out": "compare.json"},
//     {"stage": "analyze", "trace": "t.dcn", "out_dir": "analysis"},
//     {"stage": "ingest", "pcaps": ["a.pcap"], "out": "t.dcn"}
//   ]}
//
// Output paths are always placed under the run directory. Input paths are
// looked up under the run directory first, then as given, so stages can
// consume earlier outputs or external files. Size model strings: "fixed:N",
// "choice:a,b,...", "groups:min:max:count", or a named model.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcnb/analysis.hpp"
#include "dcnb/detail/sha256.hpp"
#include "dcnb/error.hpp"
#include "dcnb/extract.hpp"
#include "dcnb/metrics.hpp"
#include "dcnb/pcap.hpp"
#include "dcnb/sim.hpp"
#include "dcnb/synth.hpp"
#include "dcnb/topology.hpp"
#include "dcnb/trace.hpp"
#include "dcnb/version.hpp"

namespace dcnb {

struct ArtifactInfo {
  std::string path;  // relative to the run directory
  uint64_t bytes = 0;
  std::string sha256;
};

struct StageRecord {
  std::string stage;
  nlohmann::json params;
  std::vector<ArtifactInfo> outputs;
};

struct RunManifest {
  std::string config_sha256;
  std::vector<StageRecord> stages;
  std::map<std::string, uint64_t> seeds;  // stage name -> last seed used

  nlohmann::json to_json() const {
    nlohmann::json stage_list = nlohmann::json::array();
    for (const auto& s : stages) {
      nlohmann::json outs = nlohmann::json::array();
      for (const auto& o : s.outputs)
        outs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"sha256", o.sha256}});
      stage_list.push_back(
          {{"stage", s.stage}, {"params", s.params}, {"outputs", outs}});
    }
    return nlohmann::json{{"config_sha256", config_sha256},
                          {"versions",
                           {{"tool", kToolVersion}, {"trace_format", kTraceFormat}}},
                          {"seeds", seeds},
                          {"stages", stage_list}};
  }
};

namespace detail {

inline SizeModel parse_size_model(const std::string& text) {
  if (auto named = named_size_model(text)) return *named;
  if (text.rfind("fixed:", 0) == 0)
    return SizeModel::Fixed(static_cast<uint32_t>(std::stoul(text.substr(6))));
  if (text.rfind("choice:", 0) == 0) {
    std::vector<uint32_t> values;
    std::stringstream ss(text.substr(7));
    std::string item;
    while (std::getline(ss, item, ','))
      values.push_back(static_cast<uint32_t>(std::stoul(item)));
    return SizeModel::Choice(std::move(values));
  }
  if (text.rfind("groups:", 0) == 0) {
    std::stringstream ss(text.substr(7));
    std::string lo, hi, count;
    if (std::getline(ss, lo, ':') && std::getline(ss, hi, ':') &&
        std::getline(ss, count, ':'))
      return SizeModel::RangeGroups(static_cast<uint32_t>(std::stoul(lo)),
                                    static_cast<uint32_t>(std::stoul(hi)),
                                    static_cast<uint32_t>(std::stoul(count)));
  }
  throw ConfigError("unknown size model '" + text + "'");
}

class PipelineRunner {
 public:
  PipelineRunner(const nlohmann::json& config, std::filesystem::path run_dir)
      : config_(config), run_dir_(std::move(run_dir)) {}

  RunManifest run() {
    if (!config_.is_object() || !config_.contains("stages") ||
        !config_["stages"].is_array())
      throw ConfigError("pipeline config: missing 'stages' array");
    std::filesystem::create_directories(run_dir_);
    manifest_.config_sha256 = sha256_hex(config_.dump());
    std::size_t index = 0;
    for (const auto& stage : config_["stages"]) {
      const std::string name = stage.value("stage", "");
      try {
        run_stage(name, stage);
      } catch (const ConfigError& e) {
        throw ConfigError(stage_context(name, index) + e.what());
      } catch (const ParseError& e) {
        throw DataError(stage_context(name, index) + e.what());
      } catch (const DataError& e) {
        throw DataError(stage_context(name, index) + e.what());
      } catch (const InsufficientDataError& e) {
        throw InsufficientDataError(stage_context(name, index) + e.what());
      }
      ++index;
    }
    write_text(run_dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
    return manifest_;
  }

 private:
  static std::string stage_context(const std::string& name, std::size_t index) {
    return "stage " + std::to_string(index) + " (" + name + "): ";
  }

  std::filesystem::path out_path(const std::string& rel) const {
    std::filesystem::path p(rel);
    if (p.is_absolute())
      throw ConfigError("output path must be relative to the run dir: " + rel);
    return run_dir_ / p;
  }

  std::filesystem::path in_path(const std::string& rel) const {
    std::filesystem::path under_run = run_dir_ / rel;
    if (std::filesystem::exists(under_run)) return under_run;
    return std::filesystem::path(rel);
  }

  static void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << text;
  }

  void record_output(StageRecord& rec, const std::string& rel,
                     const std::filesystem::path& path) {
    std::string bytes = read_file_bytes(path);
    rec.outputs.push_back({rel, bytes.size(), sha256_hex(bytes)});
  }

  void run_stage(const std::string& name, const nlohmann::json& p) {
    StageRecord rec;
    rec.stage = name;
    rec.params = p;
    if (name == "synth")
      stage_synth(p, rec);
    else if (name == "topo")
      stage_topo(p, rec);
    else if (name == "ingest")
      stage_ingest(p, rec);
    else if (name == "analyze")
      stage_analyze(p, rec);
    else if (name == "classify")
      stage_classify(p, rec);
    else if (name == "extract")
      stage_extract(p, rec);
    else if (name == "simulate")
      stage_simulate(p, rec);
    else if (name == "report")
      stage_report(p, rec);
    else
      throw ConfigError("unknown stage '" + name + "'");
    manifest_.stages.push_back(std::move(rec));
  }

  static std::string need_string(const nlohmann::json& p, const char* key) {
    if (!p.contains(key) || !p[key].is_string())
      throw ConfigError(std::string("missing string parameter '") + key + "'");
    return p[key].get<std::string>();
  }

  void save_and_record(const Trace& trace, const nlohmann::json& p, StageRecord& rec) {
    const std::string out = need_string(p, "out");
    const auto path = out_path(out);
    std::filesystem::create_directories(path.parent_path());
    save_trace(trace, path);
    record_output(rec, out, path);
  }

  void stage_synth(const nlohmann::json& p, StageRecord& rec) {
    SynthSpec spec;
    auto model = synth_model_from_string(p.value("model", "uniform"));
    if (!model) throw ConfigError("unknown synth model '" + p.value("model", "") + "'");
    spec.model = *model;
    spec.nodes = p.value("nodes", 2u);
    spec.duration_us = p.value("duration_us", uint64_t{0});
    spec.tick_us = p.value("tick_us", 10u);
    spec.arrival_probability = p.value("p", 1.0);
    spec.hotspot_fraction = p.value("hotspot", 0.5);
    spec.seed = p.value("seed", uint64_t{0});
    if (p.contains("size")) spec.size = parse_size_model(need_string(p, "size"));
    manifest_.seeds["synth"] = spec.seed;
    save_and_record(generate(spec), p, rec);
  }

  void stage_topo(const nlohmann::json& p, StageRecord& rec) {
    const std::string kind_name = need_string(p, "kind");
    auto kind = topology_kind_from_string(kind_name);
    if (!kind) throw ConfigError("unknown topology kind '" + kind_name + "'");
    TopologyParams params;
    params.kind = *kind;
    params.default_bandwidth_bps =
        p.value("bandwidth_bps", kDefaultBandwidthBps);
    params.cores = p.value("cores", 0u);
    params.aggs = p.value("aggs", 0u);
    params.tors = p.value("tors", 0u);
    params.hosts_per_tor = p.value("hosts_per_tor", 0u);
    params.k = p.value("k", 0u);
    params.spines = p.value("spines", 0u);
    params.leaves = p.value("leaves", 0u);
    params.hosts_per_leaf = p.value("hosts_per_leaf", 0u);
    TopologySpec topo = build_topology(params);
    const std::string out = need_string(p, "out");
    const auto path = out_path(out);
    std::filesystem::create_directories(path.parent_path());
    save_topology(topo, path);
    record_output(rec, out, path);
  }

  void stage_ingest(const nlohmann::json& p, StageRecord& rec) {
    if (!p.contains("pcaps") || !p["pcaps"].is_array() || p["pcaps"].empty())
      throw ConfigError("ingest: 'pcaps' must be a non-empty array");
    std::vector<std::string> buffers;
    for (const auto& f : p["pcaps"])
      buffers.push_back(read_file_bytes(in_path(f.get<std::string>())));
    std::vector<CapturePorts> ports(buffers.size());
    if (p.contains("ports")) {
      const auto& arr = p["ports"];
      if (!arr.is_array() || arr.size() != buffers.size())
        throw ConfigError("ingest: 'ports' must list one entry per pcap");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (arr[i].is_null()) continue;
        ports[i].ingress_port = arr[i].value("ingress", kNoPort);
        ports[i].egress_port = arr[i].value("egress", kNoPort);
      }
    }
    MultiIngestResult result = ingest_captures(buffers, ports);
    save_and_record(result.trace, p, rec);
  }

  void stage_analyze(const nlohmann::json& p, StageRecord& rec) {
    const Trace trace = load_trace(in_path(need_string(p, "trace")));
    const uint64_t window_us = p.value("window_us", kDefaultWindowUs);
    const std::string dir = p.value("out_dir", std::string("analysis"));
    const WindowSeries series = window_series(trace, window_us);
    auto emit = [&](const std::string& file, auto&& writer) {
      const std::string rel = dir + "/" + file;
      const auto path = out_path(rel);
      std::filesystem::create_directories(path.parent_path());
      std::ostringstream os;
      writer(os);
      write_text(path, os.str());
      record_output(rec, rel, path);
    };
    emit("windows.csv", [&](std::ostream& os) { write_windows_csv(series, os); });
    emit("cdf.csv", [&](std::ostream& os) { write_cdf_csv(flow_cdf(trace), os); });
    emit("matrix.csv",
         [&](std::ostream& os) { write_matrix_csv(traffic_matrix(trace), os); });
    emit("histogram.csv", [&](std::ostream& os) {
      write_histogram_csv(kDefaultSizeBins, packet_size_histogram(trace), os);
    });
  }

  void stage_classify(const nlohmann::json& p, StageRecord& rec) {
    const Trace trace = load_trace(in_path(need_string(p, "trace")));
    const uint64_t window_us = p.value("window_us", kDefaultWindowUs);
    ClassifyOptions options;
    options.use_packets = p.value("use_packets", false);
    const ClassificationReport report =
        classify_pattern(window_series(trace, window_us), options);
    const std::string out = need_string(p, "out");
    const auto path = out_path(out);
    write_text(path, report_to_json(report).dump(2) + "\n");
    record_output(rec, out, path);
  }

  void stage_extract(const nlohmann::json& p, StageRecord& rec) {
    const Trace trace = load_trace(in_path(need_string(p, "trace")));
    ClassificationReport report;
    if (p.contains("report")) {
      nlohmann::json j = nlohmann::json::parse(
          read_file_bytes(in_path(need_string(p, "report"))), nullptr, false);
      if (j.is_discarded()) throw ConfigError("extract: report is not valid JSON");
      report = report_from_json(j);
    } else {
      const uint64_t window_us = p.value("window_us", kDefaultWindowUs);
      report = classify_pattern(window_series(trace, window_us));
    }
    if (p.value("component", false)) {
      save_and_record(build_component(trace, report), p, rec);
      return;
    }
    auto wanted = pattern_from_string(need_string(p, "pattern"));
    if (!wanted)
      throw ConfigError("extract: unknown pattern '" + need_string(p, "pattern") + "'");
    std::optional<uint64_t> cap;
    if (p.contains("max_duration_us")) cap = p["max_duration_us"].get<uint64_t>();
    save_and_record(extract_micro(trace, report, *wanted, cap), p, rec);
  }

  void stage_simulate(const nlohmann::json& p, StageRecord& rec) {
    const Trace trace = load_trace(in_path(need_string(p, "trace")));
    const TopologySpec topo = load_topology(in_path(need_string(p, "topo")));
    SimConfig cfg;
    if (p.contains("switch")) {
      cfg.set_all_tiers(preset_switch(need_string(p, "switch")));
    } else if (p.contains("switches")) {
      const auto& sw = p["switches"];
      auto assign = [&](const char* key, SwitchTier tier) {
        if (sw.contains(key))
          cfg.models[tier] = preset_switch(sw[key].get<std::string>());
      };
      assign("tor", SwitchTier::Tor);
      assign("agg", SwitchTier::Agg);
      assign("core", SwitchTier::Core);
    } else {
      throw ConfigError("simulate: need 'switch' or 'switches'");
    }
    cfg.link_delay_us = p.value("link_delay_us", 1u);
    cfg.amplification = p.value("amplify", 1u);
    cfg.seed = p.value("seed", uint64_t{0});
    if (p.value("routing", "ecmp") == "first")
      cfg.routing = RoutingMode::FirstShortest;
    manifest_.seeds["simulate"] = cfg.seed;
    const std::vector<PacketOutcome> outcomes = simulate(trace, topo, cfg);
    const std::string out = need_string(p, "out");
    const auto path = out_path(out);
    std::filesystem::create_directories(path.parent_path());
    std::ostringstream os;
    write_outcomes_csv(outcomes, os);
    write_text(path, os.str());
    record_output(rec, out, path);
  }

  void stage_report(const nlohmann::json& p, StageRecord& rec) {
    const std::string results = need_string(p, "results");
    if (!p.contains("devices") || !p["devices"].is_array())
      throw ConfigError("report: 'devices' must be an array");
    std::vector<std::string> devices;
    for (const auto& d : p["devices"]) devices.push_back(d.get<std::string>());
    if (!p.contains("mapping") || !p["mapping"].is_object())
      throw ConfigError("report: 'mapping' must map metrics to trace lists");
    MetricMapping mapping;
    for (const auto& [metric, traces] : p["mapping"].items())
      for (const auto& t : traces) mapping[metric].push_back(t.get<std::string>());
    const uint64_t window_us = p.value("window_us", kDefaultWindowUs);

    std::map<std::pair<std::string, std::string>, MetricReport> table;
    for (const auto& dev : devices) {
      for (const auto& [metric, traces] : mapping) {
        for (const auto& trace : traces) {
          auto key = std::make_pair(dev, trace);
          if (table.count(key)) continue;
          const auto file =
              in_path(results + "/" + dev + "__" + trace + ".outcomes.csv");
          if (!std::filesystem::exists(file)) continue;  // compare reports the gap
          std::ifstream in(file);
          table[key] = metric_report(read_outcomes_csv(in), window_us);
        }
      }
    }
    const CompareReport report = compare_report(devices, table, mapping);
    const std::string out = need_string(p, "out");
    const auto path = out_path(out);
    write_text(path, compare_report_to_json(report).dump(2) + "\n");
    record_output(rec, out, path);
  }

  nlohmann::json config_;
  std::filesystem::path run_dir_;
  RunManifest manifest_;
};

}  // namespace detail

inline RunManifest run_pipeline(const nlohmann::json& config,
                                const std::filesystem::path& run_dir) {
  return detail::PipelineRunner(config, run_dir).run();
}

inline RunManifest run_pipeline_file(const std::filesystem::path& config_path,
                                     const std::filesystem::path& run_dir) {
  nlohmann::json config = nlohmann::json::parse(read_file_bytes(config_path),
                                                nullptr, false);
  if (config.is_discarded())
    throw ConfigError("pipeline config is not valid JSON: " + config_path.string());
  return run_pipeline(config, run_dir);
}

}  // namespace dcnb
