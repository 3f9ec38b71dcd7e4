#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace gridstate {

using Complex = std::complex<double>;

enum class NodeKind { SubstationRoot, JunctionBox, CustomerConnection };

const char* to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& s);

struct Node {
    std::string id;
    NodeKind kind = NodeKind::CustomerConnection;
};

struct Edge {
    std::string id;
    std::string from;
    std::string to;
    Complex impedance;  // ohms
};

/// Connected grid graph with exactly one substation root. Immutable after
/// construction; construction validates ids, connectivity and impedances.
class GridTopology {
  public:
    GridTopology(std::vector<Node> nodes, std::vector<Edge> edges, double nominal_voltage);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    double nominal_voltage() const { return nominal_voltage_; }
    const Node& root() const { return nodes_[root_index_]; }

    const Node* find_node(const std::string& id) const;
    const Edge* find_edge(const std::string& id) const;

    /// Edges incident to a node, as indexes into edges().
    const std::vector<std::size_t>& incident_edges(const std::string& node_id) const;

    /// The unique edge whose head (`to`) is the given node, or nullptr.
    /// For tree grids oriented root-to-leaf this is the node's feed line.
    const Edge* feed_edge(const std::string& node_id) const;

  private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    double nominal_voltage_;
    std::size_t root_index_ = 0;
    std::unordered_map<std::string, std::size_t> node_by_id_;
    std::unordered_map<std::string, std::size_t> edge_by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> incidence_;
};

/// Fixed mapping from node/edge ids to state positions: the substation root
/// voltage first, remaining node voltages sorted by id, then edge currents
/// sorted by id. Positions are 0-based.
class StateOrdering {
  public:
    static StateOrdering build(const GridTopology& topology);

    std::size_t size() const { return labels_.size(); }  // N = n + m
    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return labels_.size() - num_nodes_; }

    std::size_t node_position(const std::string& id) const;
    std::size_t edge_position(const std::string& id) const;

    bool is_voltage(std::size_t position) const { return position < num_nodes_; }
    const std::string& label(std::size_t position) const { return labels_[position]; }

  private:
    std::size_t num_nodes_ = 0;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::size_t> node_positions_;
    std::unordered_map<std::string, std::size_t> edge_positions_;
};

/// All N phasors of the grid in the ordering's layout: node voltages (volts)
/// followed by edge currents (amperes).
struct StateVector {
    std::vector<Complex> values;
    StateOrdering ordering;

    Complex at_node(const std::string& id) const { return values[ordering.node_position(id)]; }
    Complex at_edge(const std::string& id) const { return values[ordering.edge_position(id)]; }
};

StateOrdering build_ordering(const GridTopology& topology);

}  // namespace gridstate
