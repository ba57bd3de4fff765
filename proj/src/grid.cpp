#include "lem/grid.hpp"

#include "lem/exact_sum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace lem {

namespace {
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
}

GridTopology::GridTopology(std::vector<GridEdge> edges, double grid_capacity_kw)
    : edges_(std::move(edges)), grid_capacity_kw_(grid_capacity_kw) {
    if (edges_.empty()) throw std::invalid_argument("topology has no edges");
    if (!(grid_capacity_kw_ > 0.0)) throw std::invalid_argument("grid capacity must be positive");

    std::set<std::string> parents;
    std::set<std::string> children;
    std::map<std::string, std::vector<std::size_t>> out_edges;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto& edge = edges_[e];
        if (!(edge.capacity_kw > 0.0))
            throw std::invalid_argument("edge " + edge.parent + "-" + edge.child +
                                        " needs positive capacity");
        if (edge.parent == edge.child)
            throw std::invalid_argument("self-loop at node " + edge.parent);
        if (!children.insert(edge.child).second)
            throw std::invalid_argument("node " + edge.child + " has more than one parent");
        parents.insert(edge.parent);
        out_edges[edge.parent].push_back(e);
    }
    std::vector<std::string> roots;
    for (const auto& p : parents)
        if (!children.contains(p)) roots.push_back(p);
    if (roots.size() != 1)
        throw std::invalid_argument("topology must have exactly one root, found " +
                                    std::to_string(roots.size()));

    nodes_.push_back(roots.front());
    parent_.push_back(0);
    upstream_edge_.push_back(kNone);
    index_.emplace(roots.front(), 0);
    for (std::size_t head = 0; head < nodes_.size(); ++head) {
        const auto it = out_edges.find(nodes_[head]);
        if (it == out_edges.end()) continue;
        for (const std::size_t e : it->second) {
            const auto& child = edges_[e].child;
            if (index_.contains(child)) throw std::invalid_argument("cycle through " + child);
            index_.emplace(child, nodes_.size());
            nodes_.push_back(child);
            parent_.push_back(head);
            upstream_edge_.push_back(e);
        }
    }
    if (nodes_.size() != edges_.size() + 1)
        throw std::invalid_argument("topology is not connected");
}

std::size_t GridTopology::node_index(const std::string& node) const {
    const auto it = index_.find(node);
    if (it == index_.end()) throw std::invalid_argument("unknown grid node '" + node + "'");
    return it->second;
}

FlowResult edge_flows(const GridTopology& topology,
                      const std::map<std::string, double, std::less<>>& net_injection_kw) {
    std::vector<ExactSum> per_edge(topology.edges().size());
    for (const auto& [node, kw] : net_injection_kw) {
        // Every edge on the path to the root carries this injection.
        for (std::size_t k = topology.node_index(node); k != 0; k = topology.parent_index(k))
            per_edge[topology.upstream_edge(k)].add(kw);
    }

    FlowResult result;
    result.edge_flow.reserve(per_edge.size());
    for (const auto& acc : per_edge) result.edge_flow.push_back(acc.value());
    for (std::size_t e = 0; e < result.edge_flow.size(); ++e)
        result.max_edge_utilization =
            std::max(result.max_edge_utilization,
                     std::abs(result.edge_flow[e]) / topology.edges()[e].capacity_kw);
    result.congestion_mean = congestion(result, topology);
    return result;
}

double congestion(const FlowResult& flows, const GridTopology& topology) {
    const auto& edges = topology.edges();
    if (edges.empty() || flows.edge_flow.size() != edges.size()) return 0.0;
    double sum = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e)
        sum += std::abs(flows.edge_flow[e]) / edges[e].capacity_kw;
    return std::clamp(sum / static_cast<double>(edges.size()), 0.0, 1.0);
}

double grid_balance(std::span<const EnergyPosition> positions) {
    ExactSum balance;
    for (const auto& p : positions) {
        balance.add(p.generation);
        balance.add(-p.demand);
        balance.add(p.bought);
        balance.add(-p.sold);
    }
    return balance.value();
}

}  // namespace lem
