#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fauno/rng.hpp"
#include "fauno/types.hpp"

namespace fauno {

struct LinkDefaults {
  double bandwidth_hz = 4.0e6;
  double gain_db = 0.0;
  double noise_dbm = 20.0;
};

struct TopologyNode {
  NodeId id = -1;
  DeviceProfile profile;
  double x = 0.0;
  double y = 0.0;
};

// Validated, immutable network graph. Links are stored undirected;
// link_between() resolves the directional view with the sender's power.
class Topology {
 public:
  Topology(std::vector<TopologyNode> nodes,
           std::vector<std::pair<NodeId, NodeId>> links,
           LinkDefaults link_defaults, NodeId global_manager);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const TopologyNode& node(NodeId id) const;
  const std::vector<TopologyNode>& nodes() const { return nodes_; }
  NodeId global_manager() const { return global_manager_; }
  const LinkDefaults& link_defaults() const { return link_defaults_; }

  // Link-adjacent nodes in ascending id order; the ordering defines the
  // agents' offload action indexing, so it must never change.
  const std::vector<NodeId>& neighbors(NodeId id) const;
  bool adjacent(NodeId a, NodeId b) const;
  Link link_between(NodeId src, NodeId dst) const;

  // Shortest hop-count path from src to dst inclusive. Ties resolve to the
  // lexicographically smallest node-id sequence. src == dst gives {src}.
  std::vector<NodeId> route_path(NodeId src, NodeId dst) const;
  int hop_distance(NodeId src, NodeId dst) const;

  int max_agent_degree() const;
  std::vector<NodeId> agent_nodes() const;
  std::vector<NodeId> client_nodes() const;

  std::string to_json() const;
  static Topology from_json(const std::string& text);

 private:
  void validate() const;

  std::vector<TopologyNode> nodes_;
  std::vector<std::vector<NodeId>> adjacency_;
  LinkDefaults link_defaults_;
  NodeId global_manager_;
};

// Built-in device profiles mirroring the experimental hardware classes.
// CPU capability is given in "millis"; translate_millis() turns it into
// instructions/tick with a single configurable constant (capability ratios
// are what matters, the absolute scale is a free parameter).
struct DeviceCatalog {
  double millis_to_instructions_per_tick = 1.0e3;
  int default_queue_cap = 10;
  double default_tx_power_dbm = 40.0;

  DeviceProfile sbc(const std::string& variant) const;  // rpi4 | rpi5 | rpi6
  DeviceProfile nuc() const;
  DeviceProfile cloudlet() const;
  std::vector<std::string> sbc_variants() const { return {"rpi4", "rpi5", "rpi6"}; }

  double translate_millis(double millis) const {
    return millis * millis_to_instructions_per_tick;
  }
};

// Hierarchical stars: each cluster is 8 SBC leaves around a NUC hub, all
// hubs share one cloudlet. SBCs are the only task ingress points.
Topology build_cluster_topology(int n_clusters, const DeviceCatalog& catalog,
                                const LinkDefaults& link_defaults);

// Uniform node placement over an area with links inside comm_radius.
// Five NUCs (fewer on tiny graphs), SBC variants drawn in equal proportion.
// Resamples positions until the graph is connected.
Topology build_random_topology(int n_nodes, double area_w, double area_h,
                               double comm_radius, const DeviceCatalog& catalog,
                               const LinkDefaults& link_defaults, Rng& rng,
                               int max_attempts = 200);

}  // namespace fauno
