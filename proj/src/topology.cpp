#include "fauno/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "fauno/errors.hpp"

namespace fauno {

using json = nlohmann::json;

Topology::Topology(std::vector<TopologyNode> nodes,
                   std::vector<std::pair<NodeId, NodeId>> links,
                   LinkDefaults link_defaults, NodeId global_manager)
    : nodes_(std::move(nodes)),
      link_defaults_(link_defaults),
      global_manager_(global_manager) {
  std::sort(nodes_.begin(), nodes_.end(),
            [](const TopologyNode& a, const TopologyNode& b) { return a.id < b.id; });
  adjacency_.assign(nodes_.size(), {});
  std::set<std::pair<NodeId, NodeId>> seen;
  for (auto [a, b] : links) {
    if (a > b) std::swap(a, b);
    if (a == b) throw ConfigError("topology: self-link on node " + std::to_string(a));
    if (!seen.insert({a, b}).second) continue;
    adjacency_.at(static_cast<std::size_t>(a)).push_back(b);
    adjacency_.at(static_cast<std::size_t>(b)).push_back(a);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
  validate();
}

void Topology::validate() const {
  if (nodes_.empty()) throw ConfigError("topology: no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id != static_cast<NodeId>(i)) {
      throw ConfigError("topology: node ids must be contiguous from 0");
    }
    const auto& p = nodes_[i].profile;
    if (p.cores <= 0 || p.freq <= 0.0 || p.queue_cap <= 0) {
      throw ConfigError("topology: non-positive capability on node " +
                        std::to_string(nodes_[i].id));
    }
  }
  if (global_manager_ < 0 || global_manager_ >= node_count()) {
    throw ConfigError("topology: global_manager not a node");
  }
  // Reachability from the manager; every participant must have a path to it.
  std::vector<bool> seen(nodes_.size(), false);
  std::queue<NodeId> frontier;
  frontier.push(global_manager_);
  seen[static_cast<std::size_t>(global_manager_)] = true;
  int reached = 0;
  while (!frontier.empty()) {
    NodeId cur = frontier.front();
    frontier.pop();
    ++reached;
    for (NodeId nb : adjacency_[static_cast<std::size_t>(cur)]) {
      if (!seen[static_cast<std::size_t>(nb)]) {
        seen[static_cast<std::size_t>(nb)] = true;
        frontier.push(nb);
      }
    }
  }
  if (reached != node_count()) throw ConfigError("topology: graph not connected");
}

const TopologyNode& Topology::node(NodeId id) const {
  if (id < 0 || id >= node_count()) {
    throw InvalidArgumentError("topology: unknown node " + std::to_string(id));
  }
  return nodes_[static_cast<std::size_t>(id)];
}

const std::vector<NodeId>& Topology::neighbors(NodeId id) const {
  if (id < 0 || id >= node_count()) {
    throw InvalidArgumentError("neighbors: unknown node " + std::to_string(id));
  }
  return adjacency_[static_cast<std::size_t>(id)];
}

bool Topology::adjacent(NodeId a, NodeId b) const {
  const auto& adj = neighbors(a);
  return std::binary_search(adj.begin(), adj.end(), b);
}

Link Topology::link_between(NodeId src, NodeId dst) const {
  if (!adjacent(src, dst)) {
    throw RoutingError("link_between: " + std::to_string(src) + " and " +
                       std::to_string(dst) + " are not neighbors");
  }
  Link l;
  l.src = src;
  l.dst = dst;
  l.bandwidth_hz = link_defaults_.bandwidth_hz;
  l.gain_db = link_defaults_.gain_db;
  l.noise_dbm = link_defaults_.noise_dbm;
  l.tx_power_dbm = node(src).profile.tx_power_dbm;
  return l;
}

std::vector<NodeId> Topology::route_path(NodeId src, NodeId dst) const {
  node(src);
  node(dst);
  if (src == dst) return {src};
  // BFS distances toward dst, then walk greedily picking the smallest id
  // that still decreases the distance: yields the lexicographically
  // smallest shortest path.
  std::vector<int> dist(nodes_.size(), -1);
  std::queue<NodeId> frontier;
  dist[static_cast<std::size_t>(dst)] = 0;
  frontier.push(dst);
  while (!frontier.empty()) {
    NodeId cur = frontier.front();
    frontier.pop();
    for (NodeId nb : adjacency_[static_cast<std::size_t>(cur)]) {
      if (dist[static_cast<std::size_t>(nb)] < 0) {
        dist[static_cast<std::size_t>(nb)] = dist[static_cast<std::size_t>(cur)] + 1;
        frontier.push(nb);
      }
    }
  }
  if (dist[static_cast<std::size_t>(src)] < 0) {
    throw RoutingError("route_path: no path from " + std::to_string(src) +
                       " to " + std::to_string(dst));
  }
  std::vector<NodeId> path{src};
  NodeId cur = src;
  while (cur != dst) {
    const int d = dist[static_cast<std::size_t>(cur)];
    NodeId next = -1;
    for (NodeId nb : adjacency_[static_cast<std::size_t>(cur)]) {
      if (dist[static_cast<std::size_t>(nb)] == d - 1) {
        next = nb;
        break;  // adjacency is sorted, first hit is the smallest id
      }
    }
    path.push_back(next);
    cur = next;
  }
  return path;
}

int Topology::hop_distance(NodeId src, NodeId dst) const {
  return static_cast<int>(route_path(src, dst).size()) - 1;
}

int Topology::max_agent_degree() const {
  int deg = 0;
  for (const auto& n : nodes_) {
    if (!n.profile.hosts_agent) continue;
    deg = std::max(deg, static_cast<int>(neighbors(n.id).size()));
  }
  return deg;
}

std::vector<NodeId> Topology::agent_nodes() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.profile.hosts_agent) out.push_back(n.id);
  }
  return out;
}

std::vector<NodeId> Topology::client_nodes() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.profile.receives_client_tasks) out.push_back(n.id);
  }
  return out;
}

std::string Topology::to_json() const {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : nodes_) {
    doc["nodes"].push_back({{"id", n.id},
                            {"profile",
                             {{"name", n.profile.name},
                              {"cores", n.profile.cores},
                              {"freq", n.profile.freq},
                              {"queue_cap", n.profile.queue_cap},
                              {"tx_power_dbm", n.profile.tx_power_dbm},
                              {"receives_client_tasks", n.profile.receives_client_tasks},
                              {"hosts_agent", n.profile.hosts_agent}}},
                            {"x", n.x},
                            {"y", n.y}});
  }
  doc["links"] = json::array();
  for (const auto& n : nodes_) {
    for (NodeId nb : neighbors(n.id)) {
      if (nb <= n.id) continue;
      doc["links"].push_back({{"src", n.id},
                              {"dst", nb},
                              {"bandwidth_hz", link_defaults_.bandwidth_hz},
                              {"gain_db", link_defaults_.gain_db},
                              {"noise_dbm", link_defaults_.noise_dbm}});
    }
  }
  doc["global_manager"] = global_manager_;
  return doc.dump(2);
}

Topology Topology::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("topology json: ") + e.what());
  }
  std::vector<TopologyNode> nodes;
  for (const auto& jn : doc.at("nodes")) {
    TopologyNode n;
    n.id = jn.at("id").get<NodeId>();
    const auto& jp = jn.at("profile");
    n.profile.name = jp.at("name").get<std::string>();
    n.profile.cores = jp.at("cores").get<int>();
    n.profile.freq = jp.at("freq").get<double>();
    n.profile.queue_cap = jp.at("queue_cap").get<int>();
    n.profile.tx_power_dbm = jp.at("tx_power_dbm").get<double>();
    n.profile.receives_client_tasks = jp.at("receives_client_tasks").get<bool>();
    n.profile.hosts_agent = jp.at("hosts_agent").get<bool>();
    n.x = jn.value("x", 0.0);
    n.y = jn.value("y", 0.0);
    nodes.push_back(n);
  }
  std::vector<std::pair<NodeId, NodeId>> links;
  LinkDefaults defaults;
  bool first_link = true;
  for (const auto& jl : doc.at("links")) {
    links.emplace_back(jl.at("src").get<NodeId>(), jl.at("dst").get<NodeId>());
    if (first_link) {
      defaults.bandwidth_hz = jl.value("bandwidth_hz", defaults.bandwidth_hz);
      defaults.gain_db = jl.value("gain_db", defaults.gain_db);
      defaults.noise_dbm = jl.value("noise_dbm", defaults.noise_dbm);
      first_link = false;
    }
  }
  return Topology(std::move(nodes), std::move(links), defaults,
                  doc.at("global_manager").get<NodeId>());
}

DeviceProfile DeviceCatalog::sbc(const std::string& variant) const {
  DeviceProfile p;
  p.cores = 1;
  p.queue_cap = default_queue_cap;
  p.tx_power_dbm = default_tx_power_dbm;
  p.receives_client_tasks = true;
  p.hosts_agent = true;
  if (variant == "rpi4") {
    p.name = "sbc_rpi4";
    p.freq = translate_millis(7200.0);
  } else if (variant == "rpi5") {
    p.name = "sbc_rpi5";
    p.freq = translate_millis(9600.0);
  } else if (variant == "rpi6") {
    p.name = "sbc_rpi6";
    p.freq = translate_millis(9600.0);
  } else {
    throw ConfigError("unknown SBC variant: " + variant);
  }
  return p;
}

DeviceProfile DeviceCatalog::nuc() const {
  DeviceProfile p;
  p.name = "nuc";
  p.cores = 1;
  p.freq = translate_millis(14800.0);
  p.queue_cap = default_queue_cap;
  p.tx_power_dbm = default_tx_power_dbm;
  p.receives_client_tasks = false;
  p.hosts_agent = true;
  return p;
}

DeviceProfile DeviceCatalog::cloudlet() const {
  DeviceProfile p;
  p.name = "cloudlet";
  p.cores = 1;
  p.freq = translate_millis(290400.0);
  p.queue_cap = default_queue_cap;
  p.tx_power_dbm = default_tx_power_dbm;
  p.receives_client_tasks = false;
  p.hosts_agent = true;
  return p;
}

Topology build_cluster_topology(int n_clusters, const DeviceCatalog& catalog,
                                const LinkDefaults& link_defaults) {
  if (n_clusters < 1 || n_clusters > 8) {
    throw ConfigError("build_cluster_topology: n_clusters must be in 1..8");
  }
  constexpr int kSbcPerCluster = 8;
  std::vector<TopologyNode> nodes;
  std::vector<std::pair<NodeId, NodeId>> links;
  NodeId next_id = 0;

  // SBC leaves first, then NUC hubs, cloudlet last.
  std::vector<std::vector<NodeId>> cluster_sbcs(static_cast<std::size_t>(n_clusters));
  for (int c = 0; c < n_clusters; ++c) {
    for (int s = 0; s < kSbcPerCluster; ++s) {
      TopologyNode n;
      n.id = next_id++;
      n.profile = catalog.sbc("rpi4");
      const double angle = 2.0 * 3.14159265358979323846 *
                           (c * kSbcPerCluster + s) /
                           (n_clusters * kSbcPerCluster);
      n.x = 50.0 + 40.0 * std::cos(angle);
      n.y = 50.0 + 40.0 * std::sin(angle);
      cluster_sbcs[static_cast<std::size_t>(c)].push_back(n.id);
      nodes.push_back(n);
    }
  }
  std::vector<NodeId> hubs;
  for (int c = 0; c < n_clusters; ++c) {
    TopologyNode n;
    n.id = next_id++;
    n.profile = catalog.nuc();
    const double angle = 2.0 * 3.14159265358979323846 * c / n_clusters;
    n.x = 50.0 + 20.0 * std::cos(angle);
    n.y = 50.0 + 20.0 * std::sin(angle);
    hubs.push_back(n.id);
    nodes.push_back(n);
  }
  TopologyNode server;
  server.id = next_id++;
  server.profile = catalog.cloudlet();
  server.x = 50.0;
  server.y = 50.0;
  nodes.push_back(server);

  for (int c = 0; c < n_clusters; ++c) {
    for (NodeId sbc : cluster_sbcs[static_cast<std::size_t>(c)]) {
      links.emplace_back(sbc, hubs[static_cast<std::size_t>(c)]);
    }
    links.emplace_back(hubs[static_cast<std::size_t>(c)], server.id);
  }
  return Topology(std::move(nodes), std::move(links), link_defaults, server.id);
}

Topology build_random_topology(int n_nodes, double area_w, double area_h,
                               double comm_radius, const DeviceCatalog& catalog,
                               const LinkDefaults& link_defaults, Rng& rng,
                               int max_attempts) {
  if (n_nodes < 2) throw ConfigError("build_random_topology: need at least 2 nodes");
  const int n_nucs = std::min(5, std::max(1, n_nodes / 2));
  const int n_sbcs = n_nodes - n_nucs;

  // SBC variants in equal proportion, placement shuffled.
  const auto variants = catalog.sbc_variants();
  std::vector<std::string> picks;
  for (int i = 0; i < n_sbcs; ++i) {
    picks.push_back(variants[static_cast<std::size_t>(i) % variants.size()]);
  }
  rng.shuffle(picks);

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<TopologyNode> nodes;
    for (int i = 0; i < n_nodes; ++i) {
      TopologyNode n;
      n.id = i;
      n.profile = i < n_sbcs ? catalog.sbc(picks[static_cast<std::size_t>(i)])
                             : catalog.nuc();
      n.x = rng.uniform(0.0, area_w);
      n.y = rng.uniform(0.0, area_h);
      nodes.push_back(n);
    }
    std::vector<std::pair<NodeId, NodeId>> links;
    for (int a = 0; a < n_nodes; ++a) {
      for (int b = a + 1; b < n_nodes; ++b) {
        const double dx = nodes[static_cast<std::size_t>(a)].x -
                          nodes[static_cast<std::size_t>(b)].x;
        const double dy = nodes[static_cast<std::size_t>(a)].y -
                          nodes[static_cast<std::size_t>(b)].y;
        if (std::sqrt(dx * dx + dy * dy) <= comm_radius) links.emplace_back(a, b);
      }
    }
    // Manager on the highest-capacity node; NUCs sit at the tail of the id
    // range so this picks the first NUC.
    NodeId manager = 0;
    double best = -1.0;
    for (const auto& n : nodes) {
      const double cap = n.profile.cores * n.profile.freq;
      if (cap > best) {
        best = cap;
        manager = n.id;
      }
    }
    try {
      return Topology(std::move(nodes), std::move(links), link_defaults, manager);
    } catch (const ConfigError&) {
      // disconnected sample, try again
    }
  }
  throw ConfigError("build_random_topology: no connected layout after " +
                    std::to_string(max_attempts) + " attempts (radius " +
                    std::to_string(comm_radius) + " too small for " +
                    std::to_string(n_nodes) + " nodes?)");
}

}  // namespace fauno
