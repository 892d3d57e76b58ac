#pragma once

// Data-center fabric descriptions and deterministic multipath routing.
//
// Three shapes are supported:
//   three-tier  core / aggregation / top-of-rack with full meshes between
//               adjacent tiers, hosts_per_tor hosts under each ToR
//   fat-tree    k-ary: k pods of k/2 edge and k/2 aggregation switches,
//               (k/2)^2 cores, k^3/4 hosts
//   spine-leaf  every leaf wired to every spine, hosts under leaves
//
// Node ids are dense: hosts occupy [0, host_count) so trace endpoints map
// onto hosts directly; switches follow. Each node numbers its ports 0..deg-1
// in link insertion order, which the builders keep fixed, so port numbers are
// reproducible for a given shape.
//
// route() picks one shortest path by hashing the caller's flow key over the
// number of shortest paths (classic ECMP) and unranking that index into a
// concrete path, walking neighbors in ascending id order. The selection is a
// pure function of (topology, src, dst, flow_key).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcnb/detail/rng.hpp"
#include "dcnb/error.hpp"
#include "dcnb/trace.hpp"

namespace dcnb {

inline constexpr uint64_t kDefaultBandwidthBps = 10'000'000'000ull;

enum class TopologyKind : uint8_t { ThreeTier, FatTree, SpineLeaf };

inline const char* to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::ThreeTier: return "three-tier";
    case TopologyKind::FatTree: return "fat-tree";
    case TopologyKind::SpineLeaf: return "spine-leaf";
  }
  return "?";
}

inline std::optional<TopologyKind> topology_kind_from_string(std::string_view s) {
  if (s == "three-tier") return TopologyKind::ThreeTier;
  if (s == "fat-tree") return TopologyKind::FatTree;
  if (s == "spine-leaf") return TopologyKind::SpineLeaf;
  return std::nullopt;
}

// Leaf switches report as Tor and spines as Core so device models can be
// assigned by tier across all three shapes.
enum class SwitchTier : uint8_t { Tor, Agg, Core };

inline const char* to_string(SwitchTier t) {
  switch (t) {
    case SwitchTier::Tor: return "tor";
    case SwitchTier::Agg: return "agg";
    case SwitchTier::Core: return "core";
  }
  return "?";
}

struct Link {
  uint32_t a = 0;
  uint32_t b = 0;
  uint64_t bandwidth_bps = kDefaultBandwidthBps;

  bool operator==(const Link&) const = default;
};

// Build parameters; only the fields for `kind` are meaningful.
struct TopologyParams {
  TopologyKind kind = TopologyKind::SpineLeaf;
  // three-tier
  uint32_t cores = 0, aggs = 0, tors = 0, hosts_per_tor = 0;
  // fat-tree
  uint32_t k = 0;
  // spine-leaf
  uint32_t spines = 0, leaves = 0, hosts_per_leaf = 0;
  uint64_t default_bandwidth_bps = kDefaultBandwidthBps;

  bool operator==(const TopologyParams&) const = default;
};

struct PortRef {
  uint32_t neighbor = 0;
  uint32_t port = 0;  // this node's local port index
  uint64_t bandwidth_bps = kDefaultBandwidthBps;
};

class TopologySpec {
 public:
  TopologyParams params;

  uint32_t host_count() const { return host_count_; }
  uint32_t switch_count() const { return static_cast<uint32_t>(tiers_.size()); }
  uint32_t node_count() const { return host_count_ + switch_count(); }
  std::size_t link_count() const { return links_.size(); }
  const std::vector<Link>& links() const { return links_; }

  bool is_host(uint32_t id) const { return id < host_count_; }

  SwitchTier tier_of(uint32_t id) const {
    if (id < host_count_ || id >= node_count())
      throw ConfigError("tier_of: node " + std::to_string(id) + " is not a switch");
    return tiers_[id - host_count_];
  }

  const std::vector<PortRef>& ports_of(uint32_t id) const {
    if (id >= node_count())
      throw ConfigError("ports_of: unknown node " + std::to_string(id));
    return adjacency_[id];
  }

  uint32_t port_towards(uint32_t id, uint32_t neighbor) const {
    for (const auto& p : ports_of(id))
      if (p.neighbor == neighbor) return p.port;
    throw ConfigError("no link between " + std::to_string(id) + " and " +
                      std::to_string(neighbor));
  }

  // Builders call these; order of add_link calls fixes port numbering.
  void init(uint32_t hosts, const std::vector<SwitchTier>& tiers) {
    host_count_ = hosts;
    tiers_ = tiers;
    adjacency_.assign(node_count(), {});
  }

  void add_link(uint32_t a, uint32_t b, uint64_t bandwidth_bps) {
    if (a >= node_count() || b >= node_count() || a == b)
      throw ConfigError("bad link " + std::to_string(a) + "-" + std::to_string(b));
    links_.push_back({a, b, bandwidth_bps});
    adjacency_[a].push_back({b, static_cast<uint32_t>(adjacency_[a].size()), bandwidth_bps});
    adjacency_[b].push_back({a, static_cast<uint32_t>(adjacency_[b].size()), bandwidth_bps});
  }

  // Replaces the bandwidth of the link between a and b (either order).
  void set_link_bandwidth(uint32_t a, uint32_t b, uint64_t bandwidth_bps) {
    bool found = false;
    for (auto& l : links_) {
      if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) {
        l.bandwidth_bps = bandwidth_bps;
        found = true;
      }
    }
    if (!found)
      throw ConfigError("link override names absent link " + std::to_string(a) +
                        "-" + std::to_string(b));
    for (auto& p : adjacency_[a])
      if (p.neighbor == b) p.bandwidth_bps = bandwidth_bps;
    for (auto& p : adjacency_[b])
      if (p.neighbor == a) p.bandwidth_bps = bandwidth_bps;
  }

 private:
  uint32_t host_count_ = 0;
  std::vector<SwitchTier> tiers_;             // per switch, id - host_count
  std::vector<Link> links_;
  std::vector<std::vector<PortRef>> adjacency_;
};

inline TopologySpec build_three_tier(uint32_t cores, uint32_t aggs, uint32_t tors,
                                     uint32_t hosts_per_tor,
                                     uint64_t bandwidth_bps = kDefaultBandwidthBps) {
  if (cores == 0 || aggs == 0 || tors == 0 || hosts_per_tor == 0)
    throw ConfigError("three-tier: all tier counts must be positive");
  TopologySpec t;
  t.params.kind = TopologyKind::ThreeTier;
  t.params.cores = cores;
  t.params.aggs = aggs;
  t.params.tors = tors;
  t.params.hosts_per_tor = hosts_per_tor;
  t.params.default_bandwidth_bps = bandwidth_bps;

  const uint32_t hosts = tors * hosts_per_tor;
  std::vector<SwitchTier> tiers;
  for (uint32_t i = 0; i < tors; ++i) tiers.push_back(SwitchTier::Tor);
  for (uint32_t i = 0; i < aggs; ++i) tiers.push_back(SwitchTier::Agg);
  for (uint32_t i = 0; i < cores; ++i) tiers.push_back(SwitchTier::Core);
  t.init(hosts, tiers);

  const uint32_t tor0 = hosts, agg0 = hosts + tors, core0 = hosts + tors + aggs;
  for (uint32_t r = 0; r < tors; ++r)
    for (uint32_t h = 0; h < hosts_per_tor; ++h)
      t.add_link(r * hosts_per_tor + h, tor0 + r, bandwidth_bps);
  for (uint32_t r = 0; r < tors; ++r)
    for (uint32_t a = 0; a < aggs; ++a) t.add_link(tor0 + r, agg0 + a, bandwidth_bps);
  for (uint32_t a = 0; a < aggs; ++a)
    for (uint32_t c = 0; c < cores; ++c) t.add_link(agg0 + a, core0 + c, bandwidth_bps);
  return t;
}

inline TopologySpec build_fat_tree(uint32_t k,
                                   uint64_t bandwidth_bps = kDefaultBandwidthBps) {
  if (k < 2 || k % 2 != 0) throw ConfigError("fat-tree: k must be even and >= 2");
  TopologySpec t;
  t.params.kind = TopologyKind::FatTree;
  t.params.k = k;
  t.params.default_bandwidth_bps = bandwidth_bps;

  const uint32_t half = k / 2;
  const uint32_t hosts = k * half * half;       // k^3/4
  const uint32_t edges = k * half;              // k^2/2
  const uint32_t aggs = k * half;
  const uint32_t cores = half * half;           // k^2/4
  std::vector<SwitchTier> tiers;
  for (uint32_t i = 0; i < edges; ++i) tiers.push_back(SwitchTier::Tor);
  for (uint32_t i = 0; i < aggs; ++i) tiers.push_back(SwitchTier::Agg);
  for (uint32_t i = 0; i < cores; ++i) tiers.push_back(SwitchTier::Core);
  t.init(hosts, tiers);

  const uint32_t edge0 = hosts, agg0 = hosts + edges, core0 = hosts + edges + aggs;
  auto edge_id = [&](uint32_t pod, uint32_t e) { return edge0 + pod * half + e; };
  auto agg_id = [&](uint32_t pod, uint32_t a) { return agg0 + pod * half + a; };

  for (uint32_t pod = 0; pod < k; ++pod)
    for (uint32_t e = 0; e < half; ++e)
      for (uint32_t s = 0; s < half; ++s)
        t.add_link((pod * half + e) * half + s, edge_id(pod, e), bandwidth_bps);
  for (uint32_t pod = 0; pod < k; ++pod)
    for (uint32_t e = 0; e < half; ++e)
      for (uint32_t a = 0; a < half; ++a)
        t.add_link(edge_id(pod, e), agg_id(pod, a), bandwidth_bps);
  // aggregation switch a of every pod reaches cores [a*half, (a+1)*half)
  for (uint32_t pod = 0; pod < k; ++pod)
    for (uint32_t a = 0; a < half; ++a)
      for (uint32_t j = 0; j < half; ++j)
        t.add_link(agg_id(pod, a), core0 + a * half + j, bandwidth_bps);
  return t;
}

inline TopologySpec build_spine_leaf(uint32_t spines, uint32_t leaves,
                                     uint32_t hosts_per_leaf,
                                     uint64_t bandwidth_bps = kDefaultBandwidthBps) {
  if (spines == 0 || leaves == 0 || hosts_per_leaf == 0)
    throw ConfigError("spine-leaf: all counts must be positive");
  TopologySpec t;
  t.params.kind = TopologyKind::SpineLeaf;
  t.params.spines = spines;
  t.params.leaves = leaves;
  t.params.hosts_per_leaf = hosts_per_leaf;
  t.params.default_bandwidth_bps = bandwidth_bps;

  const uint32_t hosts = leaves * hosts_per_leaf;
  std::vector<SwitchTier> tiers;
  for (uint32_t i = 0; i < leaves; ++i) tiers.push_back(SwitchTier::Tor);
  for (uint32_t i = 0; i < spines; ++i) tiers.push_back(SwitchTier::Core);
  t.init(hosts, tiers);

  const uint32_t leaf0 = hosts, spine0 = hosts + leaves;
  for (uint32_t l = 0; l < leaves; ++l)
    for (uint32_t h = 0; h < hosts_per_leaf; ++h)
      t.add_link(l * hosts_per_leaf + h, leaf0 + l, bandwidth_bps);
  for (uint32_t l = 0; l < leaves; ++l)
    for (uint32_t s = 0; s < spines; ++s)
      t.add_link(leaf0 + l, spine0 + s, bandwidth_bps);
  return t;
}

inline TopologySpec build_topology(const TopologyParams& p) {
  switch (p.kind) {
    case TopologyKind::ThreeTier:
      return build_three_tier(p.cores, p.aggs, p.tors, p.hosts_per_tor,
                              p.default_bandwidth_bps);
    case TopologyKind::FatTree:
      return build_fat_tree(p.k, p.default_bandwidth_bps);
    case TopologyKind::SpineLeaf:
      return build_spine_leaf(p.spines, p.leaves, p.hosts_per_leaf,
                              p.default_bandwidth_bps);
  }
  throw ConfigError("unknown topology kind");
}

struct RouteHop {
  uint32_t switch_id = 0;
  uint32_t ingress_port = 0;
  uint32_t egress_port = 0;

  bool operator==(const RouteHop&) const = default;
};

using Route = std::vector<RouteHop>;

enum class RoutingMode : uint8_t { Ecmp, FirstShortest };

inline uint64_t ecmp_hash(uint64_t flow_key) { return detail::mix64(flow_key); }

// Shortest-path router with per-destination BFS tables, memoized because the
// simulator asks for many routes toward few destinations. Thread-safe.
class Router {
 public:
  explicit Router(const TopologySpec& topo) : topo_(topo) {}

  Route route(uint32_t src, uint32_t dst, uint64_t flow_key,
              RoutingMode mode = RoutingMode::Ecmp) const {
    if (src >= topo_.node_count() || !topo_.is_host(src))
      throw ConfigError("route: src " + std::to_string(src) + " is not a host");
    if (dst >= topo_.node_count() || !topo_.is_host(dst))
      throw ConfigError("route: dst " + std::to_string(dst) + " is not a host");
    if (src == dst) return {};

    const BfsTable& table = tables(dst);
    if (table.dist[src] == kUnreachable)
      throw ConfigError("route: no path from " + std::to_string(src) + " to " +
                        std::to_string(dst));
    uint64_t index = mode == RoutingMode::Ecmp
                         ? ecmp_hash(flow_key) % table.paths[src]
                         : 0;
    // Unrank path `index` into the node sequence src..dst, taking same-cost
    // next hops in ascending node id order.
    std::vector<uint32_t> nodes{src};
    uint32_t node = src;
    while (node != dst) {
      uint32_t next = kUnreachable;
      for (uint32_t nb : sorted_neighbors(node)) {
        if (table.dist[nb] + 1 != table.dist[node]) continue;
        const uint64_t c = table.paths[nb];
        if (index < c) {
          next = nb;
          break;
        }
        index -= c;
      }
      if (next == kUnreachable) throw Error("route: internal walk failure");
      nodes.push_back(next);
      node = next;
    }
    Route hops;
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i)
      hops.push_back({nodes[i], topo_.port_towards(nodes[i], nodes[i - 1]),
                      topo_.port_towards(nodes[i], nodes[i + 1])});
    return hops;
  }

  // Number of equal-cost shortest paths between two distinct hosts.
  uint64_t path_count(uint32_t src, uint32_t dst) const {
    const BfsTable& table = tables(dst);
    return table.dist[src] == kUnreachable ? 0 : table.paths[src];
  }

  uint32_t distance(uint32_t src, uint32_t dst) const {
    const BfsTable& table = tables(dst);
    return table.dist[src];
  }

 private:
  static constexpr uint32_t kUnreachable = 0xffffffffu;

  struct BfsTable {
    std::vector<uint32_t> dist;
    std::vector<uint64_t> paths;  // shortest paths from node toward the root
  };

  const std::vector<uint32_t>& sorted_neighbors(uint32_t node) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = neighbors_.find(node);
    if (it != neighbors_.end()) return it->second;
    std::vector<uint32_t> nb;
    for (const auto& p : topo_.ports_of(node)) nb.push_back(p.neighbor);
    std::sort(nb.begin(), nb.end());
    return neighbors_.emplace(node, std::move(nb)).first->second;
  }

  const BfsTable& tables(uint32_t dst) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = tables_.find(dst);
    if (it != tables_.end()) return it->second;

    BfsTable t;
    t.dist.assign(topo_.node_count(), kUnreachable);
    t.paths.assign(topo_.node_count(), 0);
    t.dist[dst] = 0;
    t.paths[dst] = 1;
    std::queue<uint32_t> q;
    q.push(dst);
    while (!q.empty()) {
      uint32_t v = q.front();
      q.pop();
      for (const auto& p : topo_.ports_of(v)) {
        uint32_t u = p.neighbor;
        if (t.dist[u] == kUnreachable) {
          t.dist[u] = t.dist[v] + 1;
          q.push(u);
        }
        if (t.dist[u] == t.dist[v] + 1) {
          uint64_t sum = t.paths[u] + t.paths[v];
          t.paths[u] = sum < t.paths[u] ? UINT64_MAX : sum;  // saturate
        }
      }
    }
    return tables_.emplace(dst, std::move(t)).first->second;
  }

  const TopologySpec& topo_;
  mutable std::mutex mutex_;
  mutable std::map<uint32_t, BfsTable> tables_;
  mutable std::map<uint32_t, std::vector<uint32_t>> neighbors_;
};

inline Route route(const TopologySpec& topo, uint32_t src, uint32_t dst,
                   uint64_t flow_key, RoutingMode mode = RoutingMode::Ecmp) {
  return Router(topo).route(src, dst, flow_key, mode);
}

// JSON form stores build parameters plus bandwidth overrides; the graph is
// regenerated on load so files stay small and ids stay canonical.
inline nlohmann::json topology_to_json(const TopologySpec& topo) {
  nlohmann::json params;
  const TopologyParams& p = topo.params;
  switch (p.kind) {
    case TopologyKind::ThreeTier:
      params = {{"cores", p.cores},
                {"aggs", p.aggs},
                {"tors", p.tors},
                {"hosts_per_tor", p.hosts_per_tor}};
      break;
    case TopologyKind::FatTree:
      params = {{"k", p.k}};
      break;
    case TopologyKind::SpineLeaf:
      params = {{"spines", p.spines},
                {"leaves", p.leaves},
                {"hosts_per_leaf", p.hosts_per_leaf}};
      break;
  }
  nlohmann::json overrides = nlohmann::json::array();
  for (const auto& l : topo.links())
    if (l.bandwidth_bps != p.default_bandwidth_bps)
      overrides.push_back(
          {{"a", l.a}, {"b", l.b}, {"bandwidth_bps", l.bandwidth_bps}});
  return nlohmann::json{{"kind", to_string(p.kind)},
                        {"parameters", params},
                        {"default_bandwidth_bps", p.default_bandwidth_bps},
                        {"link_overrides", overrides}};
}

inline TopologySpec topology_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("topology json: missing 'kind'");
  auto kind = topology_kind_from_string(j["kind"].get<std::string>());
  if (!kind)
    throw ConfigError("topology json: unknown kind '" +
                      j["kind"].get<std::string>() + "'");
  if (!j.contains("parameters") || !j["parameters"].is_object())
    throw ConfigError("topology json: missing 'parameters'");
  const nlohmann::json& params = j["parameters"];
  auto need = [&](const char* key) -> uint32_t {
    if (!params.contains(key) || !params[key].is_number_unsigned())
      throw ConfigError(std::string("topology json: missing parameter '") + key + "'");
    return params[key].get<uint32_t>();
  };
  TopologyParams p;
  p.kind = *kind;
  if (j.contains("default_bandwidth_bps"))
    p.default_bandwidth_bps = j["default_bandwidth_bps"].get<uint64_t>();
  switch (p.kind) {
    case TopologyKind::ThreeTier:
      p.cores = need("cores");
      p.aggs = need("aggs");
      p.tors = need("tors");
      p.hosts_per_tor = need("hosts_per_tor");
      break;
    case TopologyKind::FatTree:
      p.k = need("k");
      break;
    case TopologyKind::SpineLeaf:
      p.spines = need("spines");
      p.leaves = need("leaves");
      p.hosts_per_leaf = need("hosts_per_leaf");
      break;
  }
  TopologySpec topo = build_topology(p);
  if (j.contains("link_overrides")) {
    for (const auto& o : j["link_overrides"])
      topo.set_link_bandwidth(o.at("a").get<uint32_t>(), o.at("b").get<uint32_t>(),
                              o.at("bandwidth_bps").get<uint64_t>());
  }
  return topo;
}

inline void save_topology(const TopologySpec& topo, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << topology_to_json(topo).dump(2) << '\n';
}

inline TopologySpec load_topology(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file_bytes(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("topology file is not valid JSON: " + path.string());
  return topology_from_json(j);
}

}  // namespace dcnb
