#include "gridstate/topology.hpp"

#include <algorithm>
#include <queue>

#include "gridstate/errors.hpp"

namespace gridstate {

const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::SubstationRoot: return "substation-root";
        case NodeKind::JunctionBox: return "junction-box";
        case NodeKind::CustomerConnection: return "customer-connection";
    }
    return "unknown";
}

NodeKind node_kind_from_string(const std::string& s) {
    if (s == "substation-root") return NodeKind::SubstationRoot;
    if (s == "junction-box") return NodeKind::JunctionBox;
    if (s == "customer-connection") return NodeKind::CustomerConnection;
    throw InputError("unknown node kind '" + s + "'");
}

GridTopology::GridTopology(std::vector<Node> nodes, std::vector<Edge> edges,
                           double nominal_voltage)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), nominal_voltage_(nominal_voltage) {
    if (nodes_.empty()) throw InputError("grid has no nodes");
    if (!(nominal_voltage_ > 0.0)) throw InputError("nominal voltage must be positive");

    std::size_t root_count = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& node = nodes_[i];
        if (node.id.empty()) throw InputError("empty node id");
        if (!node_by_id_.emplace(node.id, i).second) {
            throw InputError("duplicate node id '" + node.id + "'");
        }
        if (node.kind == NodeKind::SubstationRoot) {
            ++root_count;
            root_index_ = i;
        }
    }
    if (root_count != 1) {
        throw InputError("grid must have exactly one substation-root node, found " +
                         std::to_string(root_count));
    }

    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const Edge& edge = edges_[i];
        if (edge.id.empty()) throw InputError("empty edge id");
        if (!edge_by_id_.emplace(edge.id, i).second) {
            throw InputError("duplicate edge id '" + edge.id + "'");
        }
        if (!node_by_id_.count(edge.from)) {
            throw InputError("edge '" + edge.id + "' references unknown node '" + edge.from + "'");
        }
        if (!node_by_id_.count(edge.to)) {
            throw InputError("edge '" + edge.id + "' references unknown node '" + edge.to + "'");
        }
        if (edge.from == edge.to) {
            throw InputError("edge '" + edge.id + "' is a self-loop");
        }
        if (edge.impedance.real() < 0.0) {
            throw InputError("edge '" + edge.id + "' has negative resistance");
        }
        if (std::abs(edge.impedance) == 0.0) {
            throw InputError("edge '" + edge.id + "' has zero impedance");
        }
        incidence_[edge.from].push_back(i);
        incidence_[edge.to].push_back(i);
    }

    // Connectivity via BFS from the root.
    std::vector<bool> seen(nodes_.size(), false);
    std::queue<std::size_t> frontier;
    frontier.push(root_index_);
    seen[root_index_] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        std::size_t at = frontier.front();
        frontier.pop();
        auto it = incidence_.find(nodes_[at].id);
        if (it == incidence_.end()) continue;
        for (std::size_t edge_index : it->second) {
            const Edge& edge = edges_[edge_index];
            const std::string& other = edge.from == nodes_[at].id ? edge.to : edge.from;
            std::size_t other_index = node_by_id_.at(other);
            if (!seen[other_index]) {
                seen[other_index] = true;
                ++reached;
                frontier.push(other_index);
            }
        }
    }
    if (reached != nodes_.size()) {
        throw InputError("grid graph is not connected (" + std::to_string(reached) + " of " +
                         std::to_string(nodes_.size()) + " nodes reachable from root)");
    }
}

const Node* GridTopology::find_node(const std::string& id) const {
    auto it = node_by_id_.find(id);
    return it == node_by_id_.end() ? nullptr : &nodes_[it->second];
}

const Edge* GridTopology::find_edge(const std::string& id) const {
    auto it = edge_by_id_.find(id);
    return it == edge_by_id_.end() ? nullptr : &edges_[it->second];
}

const std::vector<std::size_t>& GridTopology::incident_edges(const std::string& node_id) const {
    static const std::vector<std::size_t> empty;
    auto it = incidence_.find(node_id);
    return it == incidence_.end() ? empty : it->second;
}

const Edge* GridTopology::feed_edge(const std::string& node_id) const {
    const Edge* found = nullptr;
    for (std::size_t edge_index : incident_edges(node_id)) {
        const Edge& edge = edges_[edge_index];
        if (edge.to == node_id) {
            if (found != nullptr) return nullptr;  // ambiguous
            found = &edge;
        }
    }
    return found;
}

StateOrdering StateOrdering::build(const GridTopology& topology) {
    StateOrdering ordering;
    ordering.num_nodes_ = topology.nodes().size();

    std::vector<std::string> node_ids;
    node_ids.reserve(topology.nodes().size());
    for (const Node& node : topology.nodes()) {
        if (node.kind != NodeKind::SubstationRoot) node_ids.push_back(node.id);
    }
    std::sort(node_ids.begin(), node_ids.end());
    node_ids.insert(node_ids.begin(), topology.root().id);

    std::vector<std::string> edge_ids;
    edge_ids.reserve(topology.edges().size());
    for (const Edge& edge : topology.edges()) edge_ids.push_back(edge.id);
    std::sort(edge_ids.begin(), edge_ids.end());

    ordering.labels_.reserve(node_ids.size() + edge_ids.size());
    for (const std::string& id : node_ids) {
        ordering.node_positions_.emplace(id, ordering.labels_.size());
        ordering.labels_.push_back(id);
    }
    for (const std::string& id : edge_ids) {
        ordering.edge_positions_.emplace(id, ordering.labels_.size());
        ordering.labels_.push_back(id);
    }
    return ordering;
}

std::size_t StateOrdering::node_position(const std::string& id) const {
    auto it = node_positions_.find(id);
    if (it == node_positions_.end()) throw InputError("unknown node id '" + id + "'");
    return it->second;
}

std::size_t StateOrdering::edge_position(const std::string& id) const {
    auto it = edge_positions_.find(id);
    if (it == edge_positions_.end()) throw InputError("unknown edge id '" + id + "'");
    return it->second;
}

StateOrdering build_ordering(const GridTopology& topology) {
    return StateOrdering::build(topology);
}

}  // namespace gridstate
