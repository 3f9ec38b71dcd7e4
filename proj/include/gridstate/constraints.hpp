#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCore>
#include <span>
#include <string>
#include <vector>

#include "gridstate/topology.hpp"

namespace gridstate {

using SparseComplexMatrix = Eigen::SparseMatrix<Complex>;
using ComplexVector = Eigen::VectorXcd;

struct ConstraintRow {
    enum class Kind { Kirchhoff, Drop };
    Kind kind;
    std::string ref_id;  // node id for Kirchhoff rows, edge id for drop rows
};

/// Linear grid equations C x = c. Kirchhoff rows have a zero entry in every
/// voltage column; drop rows couple two voltages and one current.
struct ConstraintSystem {
    SparseComplexMatrix C;  // Q x N
    ComplexVector c;        // Q (all zeros for grid-derived systems)
    std::vector<ConstraintRow> rows;
};

/// Builds the grid equations: one Kirchhoff current-balance row per
/// junction box (zero-injection node) and one voltage-drop row per edge,
/// V_from - V_to - z_e I_e = 0, with currents oriented from `from` to `to`.
/// Customer connections and the root carry unknown injections and get no
/// Kirchhoff row.
ConstraintSystem build_constraints(const GridTopology& topology, const StateOrdering& ordering);

/// Binary measurement-selection matrix: D x extracts the measured phasors.
struct SelectionMatrix {
    Eigen::SparseMatrix<double> D;       // K x N, one 1 per row
    std::vector<std::size_t> positions;  // state position per row
    std::vector<std::string> meter_ids;  // node/edge id per row
    std::size_t num_voltage_rows = 0;    // rows [0, num_voltage_rows) are voltages

    std::size_t rows() const { return positions.size(); }
};

/// Rows are laid out as the given nodes (in order) followed by the given
/// edges (in order). Duplicate measurements of one state position and empty
/// measurement sets are rejected.
SelectionMatrix build_selection(const StateOrdering& ordering,
                                std::span<const std::string> measured_nodes,
                                std::span<const std::string> measured_edges);

}  // namespace gridstate
