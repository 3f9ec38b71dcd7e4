#include "gridstate/loadflow.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "gridstate/errors.hpp"

namespace gridstate {

namespace {

double default_tolerance(const LoadScenario& scenario) {
    double total = 0.0;
    for (const auto& [id, power] : scenario.loads) total += std::abs(power);
    return 1e-10 * std::max(1.0, total);
}

}  // namespace

LoadFlowResult solve_loadflow(const GridTopology& topology, const StateOrdering& ordering,
                              const LoadScenario& scenario, const LoadFlowOptions& options) {
    if (!(std::abs(scenario.slack_voltage) > 0.0)) {
        throw InputError("slack voltage magnitude must be positive");
    }
    for (const auto& [id, power] : scenario.loads) {
        const Node* node = topology.find_node(id);
        if (node == nullptr) throw InputError("load references unknown node '" + id + "'");
        if (node->kind != NodeKind::CustomerConnection) {
            throw InputError("load at '" + id + "': loads are only supported at customer connections");
        }
        (void)power;
    }

    const auto n = static_cast<int>(topology.nodes().size());
    const int root = 0;  // ordering places the root voltage first

    // Bus admittance matrix in the ordering's node numbering.
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (const Edge& edge : topology.edges()) {
        const auto a = static_cast<int>(ordering.node_position(edge.from));
        const auto b = static_cast<int>(ordering.node_position(edge.to));
        const Complex y = 1.0 / edge.impedance;
        Y(a, a) += y;
        Y(b, b) += y;
        Y(a, b) -= y;
        Y(b, a) -= y;
    }

    // Injected power per node: loads consume, so injection is -S_load.
    Eigen::VectorXcd injection = Eigen::VectorXcd::Zero(n);
    for (const auto& [id, power] : scenario.loads) {
        injection(static_cast<int>(ordering.node_position(id))) -= power;
    }

    const double tol = options.tolerance_va > 0.0 ? options.tolerance_va
                                                  : default_tolerance(scenario);

    Eigen::VectorXcd V = Eigen::VectorXcd::Constant(n, scenario.slack_voltage);
    const int unknowns = n - 1;
    auto var_of_node = [&](int k) { return k < root ? k : k - 1; };  // root excluded

    // Mismatch F_k = S_k - V_k conj((YV)_k) for every non-slack node.
    auto mismatch = [&](const Eigen::VectorXcd& volt, Eigen::VectorXcd& bus_current) {
        bus_current = Y * volt;
        Eigen::VectorXcd f(unknowns);
        for (int k = 0; k < n; ++k) {
            if (k == root) continue;
            f(var_of_node(k)) = injection(k) - volt(k) * std::conj(bus_current(k));
        }
        return f;
    };

    int iterations = 0;
    double max_mismatch = 0.0;
    Eigen::VectorXcd bus_current;
    for (;; ++iterations) {
        Eigen::VectorXcd f = mismatch(V, bus_current);
        max_mismatch = unknowns == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
        if (max_mismatch <= tol) break;
        if (iterations >= options.max_iterations) {
            throw NumericalError("load flow did not converge after " +
                                 std::to_string(options.max_iterations) +
                                 " iterations (mismatch " + std::to_string(max_mismatch) + " VA)");
        }

        // Real Jacobian of [Re F; Im F] in the unknowns [Re V; Im V].
        Eigen::MatrixXd J(2 * unknowns, 2 * unknowns);
        for (int k = 0; k < n; ++k) {
            if (k == root) continue;
            const int rk = var_of_node(k);
            for (int m = 0; m < n; ++m) {
                if (m == root) continue;
                const int cm = var_of_node(m);
                // Wirtinger derivatives of F_k.
                const Complex dF_dV = k == m ? -std::conj(bus_current(k)) : Complex(0.0, 0.0);
                const Complex dF_dVconj = -V(k) * std::conj(Y(k, m));
                const Complex d_re = dF_dV + dF_dVconj;
                const Complex d_im = Complex(0.0, 1.0) * (dF_dV - dF_dVconj);
                J(rk, cm) = d_re.real();
                J(rk + unknowns, cm) = d_re.imag();
                J(rk, cm + unknowns) = d_im.real();
                J(rk + unknowns, cm + unknowns) = d_im.imag();
            }
        }

        Eigen::VectorXd rhs(2 * unknowns);
        for (int k = 0; k < unknowns; ++k) {
            rhs(k) = -f(k).real();
            rhs(k + unknowns) = -f(k).imag();
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        if (lu.rcond() < 1e-14) {
            throw NumericalError("load flow Jacobian is singular");
        }
        Eigen::VectorXd step = lu.solve(rhs);
        for (int k = 0; k < n; ++k) {
            if (k == root) continue;
            const int vk = var_of_node(k);
            V(k) += Complex(step(vk), step(vk + unknowns));
        }
    }

    StateVector state;
    state.ordering = ordering;
    state.values.resize(ordering.size());
    for (const Node& node : topology.nodes()) {
        state.values[ordering.node_position(node.id)] = V(static_cast<int>(ordering.node_position(node.id)));
    }
    for (const Edge& edge : topology.edges()) {
        const Complex v_from = V(static_cast<int>(ordering.node_position(edge.from)));
        const Complex v_to = V(static_cast<int>(ordering.node_position(edge.to)));
        state.values[ordering.edge_position(edge.id)] = (v_from - v_to) / edge.impedance;
    }

    return {std::move(state), iterations, max_mismatch};
}

double empirical_theta_sigma(const std::vector<StateVector>& states) {
    if (states.empty()) {
        throw InputError("empirical_theta_sigma requires at least one state");
    }
    std::vector<double> angles;
    for (const StateVector& state : states) {
        for (std::size_t k = 0; k < state.ordering.num_nodes(); ++k) {
            angles.push_back(std::arg(state.values[k]));
        }
    }
    if (angles.size() < 2) {
        throw InputError("empirical_theta_sigma requires at least two angle samples");
    }
    double mean = 0.0;
    for (double a : angles) mean += a;
    mean /= static_cast<double>(angles.size());
    double ss = 0.0;
    for (double a : angles) ss += (a - mean) * (a - mean);
    return std::sqrt(ss / static_cast<double>(angles.size() - 1));
}

}  // namespace gridstate
