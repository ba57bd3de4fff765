#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace lem {

struct GridEdge {
    std::string parent;
    std::string child;
    double capacity_kw = 0.0;
};

/// Radial feeder: a tree of edges rooted at the substation bus.
///
/// The constructor rejects anything that is not a connected tree with
/// positive capacities. Edges keep their input order; nodes are listed in
/// breadth-first order from the root.
class GridTopology {
public:
    explicit GridTopology(std::vector<GridEdge> edges, double grid_capacity_kw = 1800.0);

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<GridEdge>& edges() const { return edges_; }
    const std::string& root() const { return nodes_.front(); }
    double grid_capacity_kw() const { return grid_capacity_kw_; }

    bool contains(const std::string& node) const { return index_.contains(node); }
    /// Throws std::invalid_argument for unknown nodes.
    std::size_t node_index(const std::string& node) const;
    /// Index into edges() of the edge feeding `node`; root has none.
    std::size_t upstream_edge(std::size_t node_index) const { return upstream_edge_[node_index]; }
    std::size_t parent_index(std::size_t node_index) const { return parent_[node_index]; }

private:
    std::vector<GridEdge> edges_;
    std::vector<std::string> nodes_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::vector<std::size_t> parent_;         // by node index; root maps to itself
    std::vector<std::size_t> upstream_edge_;  // by node index
    double grid_capacity_kw_;
};

struct FlowResult {
    std::vector<double> edge_flow;  // aligned with GridTopology::edges(); + toward the root
    double congestion_mean = 0.0;
    double max_edge_utilization = 0.0;
};

/// Flow on (parent, child) is the net injection summed over the subtree
/// rooted at child. Lossless radial aggregation, no impedances.
FlowResult edge_flows(const GridTopology& topology,
                      const std::map<std::string, double, std::less<>>& net_injection_kw);

/// Mean of |F_e| / C_e over all edges, clamped to [0, 1].
double congestion(const FlowResult& flows, const GridTopology& topology);

struct EnergyPosition {
    double generation = 0.0;
    double demand = 0.0;
    double bought = 0.0;
    double sold = 0.0;
};

/// Signed net energy position: sum of G - D + bought - sold. Positive is surplus.
double grid_balance(std::span<const EnergyPosition> positions);

}  // namespace lem
