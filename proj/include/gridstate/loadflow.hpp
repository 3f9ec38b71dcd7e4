#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridstate/topology.hpp"

namespace gridstate {

/// Operating point: substation voltage plus per-customer complex power
/// demand (P + jQ, watts/vars, consumed).
struct LoadScenario {
    Complex slack_voltage;
    std::map<std::string, Complex> loads;  // node id -> P + jQ
};

struct LoadFlowOptions {
    /// Absolute power-mismatch tolerance in VA. Non-positive selects the
    /// default 1e-10 relative to the total apparent load (at least 1 VA base).
    double tolerance_va = -1.0;
    int max_iterations = 50;
};

struct LoadFlowResult {
    StateVector state;
    int iterations = 0;
    double max_mismatch_va = 0.0;
};

/// Newton-Raphson power flow in rectangular coordinates, flat start. The
/// root is the slack bus; every other node balances its complex power
/// (zero for junction boxes). Edge currents are recovered from the voltage
/// drops afterwards.
LoadFlowResult solve_loadflow(const GridTopology& topology, const StateOrdering& ordering,
                              const LoadScenario& scenario, const LoadFlowOptions& options = {});

/// Sample standard deviation of the voltage phase angles pooled over all
/// nodes (including the root) and all supplied states.
double empirical_theta_sigma(const std::vector<StateVector>& states);

}  // namespace gridstate
