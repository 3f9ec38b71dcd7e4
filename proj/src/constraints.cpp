#include "gridstate/constraints.hpp"

#include <unordered_set>

#include "gridstate/errors.hpp"

namespace gridstate {

ConstraintSystem build_constraints(const GridTopology& topology, const StateOrdering& ordering) {
    const std::size_t n_states = ordering.size();
    std::vector<Eigen::Triplet<Complex>> triplets;
    std::vector<ConstraintRow> rows;

    // Kirchhoff rows: sum of currents into a junction box equals the sum of
    // currents out of it. Edge orientation follows the edge's from -> to.
    for (const Node& node : topology.nodes()) {
        if (node.kind != NodeKind::JunctionBox) continue;
        const std::size_t row = rows.size();
        for (std::size_t edge_index : topology.incident_edges(node.id)) {
            const Edge& edge = topology.edges()[edge_index];
            const double sign = edge.to == node.id ? 1.0 : -1.0;
            triplets.emplace_back(static_cast<int>(row),
                                  static_cast<int>(ordering.edge_position(edge.id)),
                                  Complex(sign, 0.0));
        }
        rows.push_back({ConstraintRow::Kind::Kirchhoff, node.id});
    }

    // Drop rows: V_from - V_to - z_e I_e = 0.
    for (const Edge& edge : topology.edges()) {
        const std::size_t row = rows.size();
        triplets.emplace_back(static_cast<int>(row),
                              static_cast<int>(ordering.node_position(edge.from)),
                              Complex(1.0, 0.0));
        triplets.emplace_back(static_cast<int>(row),
                              static_cast<int>(ordering.node_position(edge.to)),
                              Complex(-1.0, 0.0));
        triplets.emplace_back(static_cast<int>(row),
                              static_cast<int>(ordering.edge_position(edge.id)),
                              -edge.impedance);
        rows.push_back({ConstraintRow::Kind::Drop, edge.id});
    }

    ConstraintSystem system;
    system.C.resize(static_cast<int>(rows.size()), static_cast<int>(n_states));
    system.C.setFromTriplets(triplets.begin(), triplets.end());
    system.c = ComplexVector::Zero(static_cast<int>(rows.size()));
    system.rows = std::move(rows);
    return system;
}

SelectionMatrix build_selection(const StateOrdering& ordering,
                                std::span<const std::string> measured_nodes,
                                std::span<const std::string> measured_edges) {
    if (measured_nodes.empty() && measured_edges.empty()) {
        throw InputError("no measurements: selection must reference at least one phasor");
    }

    SelectionMatrix selection;
    std::unordered_set<std::size_t> used;
    auto add = [&](std::size_t position, const std::string& id) {
        if (!used.insert(position).second) {
            throw InputError("duplicate measurement of state position for '" + id + "'");
        }
        selection.positions.push_back(position);
        selection.meter_ids.push_back(id);
    };

    for (const std::string& id : measured_nodes) add(ordering.node_position(id), id);
    selection.num_voltage_rows = selection.positions.size();
    for (const std::string& id : measured_edges) add(ordering.edge_position(id), id);

    const auto rows = static_cast<int>(selection.positions.size());
    selection.D.resize(rows, static_cast<int>(ordering.size()));
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(selection.positions.size());
    for (int k = 0; k < rows; ++k) {
        triplets.emplace_back(k, static_cast<int>(selection.positions[k]), 1.0);
    }
    selection.D.setFromTriplets(triplets.begin(), triplets.end());
    return selection;
}

}  // namespace gridstate
