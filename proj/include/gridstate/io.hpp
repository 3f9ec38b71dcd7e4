#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gridstate/assessment.hpp"
#include "gridstate/estimator.hpp"
#include "gridstate/loadflow.hpp"
#include "gridstate/metering.hpp"
#include "gridstate/topology.hpp"

namespace gridstate::io {

/// Grid topology file: {nominal_voltage, nodes:[{id,kind}], edges:[{id,from,to,r,x}]}.
GridTopology load_topology(const std::filesystem::path& path);

/// Load scenario file: {slack_voltage:{re,im}, loads:[{node,p,q}]}.
LoadScenario load_load_scenario(const std::filesystem::path& path);

/// 15-minute interval CSV (node_id, timestamp, p_w, q_var), one LoadScenario
/// per timestamp in first-appearance order. The slack voltage is supplied by
/// the caller (it is not part of the CSV).
std::vector<std::pair<std::string, LoadScenario>> load_load_series_csv(
    const std::filesystem::path& path, Complex slack_voltage);

NoiseSpec load_noise_spec(const std::filesystem::path& path);

struct MeasurementScenario {
    std::vector<std::string> measured_nodes;
    std::vector<std::string> measured_edges;
};

/// Scenario file: {measured_nodes:[...], measured_edges:[...]} or
/// {"preset":"ccb"} for all customer connections and their feed lines.
MeasurementScenario load_measurement_scenario(const std::filesystem::path& path,
                                              const GridTopology& topology);

void write_state_json(const std::filesystem::path& path, const LoadFlowResult& result);
void write_state_csv(const std::filesystem::path& path, const StateVector& state);

/// Reads a state written by write_state_json, validated against the ordering.
StateVector read_state_json(const std::filesystem::path& path, const StateOrdering& ordering);

void write_sigma_theta_json(const std::filesystem::path& path, double sigma_theta,
                            std::size_t scenario_count);

struct EstimateExportOptions {
    double alpha = 0.05;  // significance level of the exported ellipses
    std::string model;
    std::uint64_t seed = 0;
};

void write_estimates_json(const std::filesystem::path& path, const StateOrdering& ordering,
                          const EstimateResult& result, const EstimateExportOptions& options);
void write_estimates_csv(const std::filesystem::path& path, const StateOrdering& ordering,
                         const EstimateResult& result, const EstimateExportOptions& options);

void write_hit_rate_csv(const std::filesystem::path& path, const HitRateReport& report);
void write_hit_rate_json(const std::filesystem::path& path, const HitRateReport& report,
                         const CampaignConfig& config);

void write_sweep_csv(const std::filesystem::path& path, const ConfidenceRangeReport& report);

/// Audit CSV of raw EM readings (meter_id, kind, u, i, phi).
void write_em_measurements_csv(const std::filesystem::path& path, const RawMeasurements& raw);
RawMeasurements read_em_measurements_csv(const std::filesystem::path& path);

/// Audit CSV of prepared (complex) measurements (meter_id, kind, re, im).
void write_prepared_measurements_csv(const std::filesystem::path& path,
                                     const SelectionMatrix& selection, const ComplexVector& z);

}  // namespace gridstate::io
