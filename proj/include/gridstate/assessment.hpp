#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridstate/estimator.hpp"
#include "gridstate/metering.hpp"

namespace gridstate {

enum class MeterModel { Pmu, Em };

const char* to_string(MeterModel model);
MeterModel meter_model_from_string(const std::string& s);

struct CampaignConfig {
    MeterModel model = MeterModel::Em;
    NoiseSpec noise;
    double mult_sigma_u = 1.0;
    double mult_sigma_i = 1.0;
    double mult_sigma_phi = 1.0;
    std::size_t repetitions = 5000;
    double alpha = 0.95;  // confidence level of the ellipses under test
    std::uint64_t seed = 0;
    bool include_root_in_averages = true;
    int workers = 0;  // <= 0 selects the hardware thread count
};

struct LocationRate {
    std::string id;
    bool is_current = false;
    double hit_rate = 0.0;
    double dev_hr = 0.0;
};

struct HitRateReport {
    std::vector<LocationRate> locations;  // one per state position
    double avg_voltage_hr = 0.0;
    double avg_current_hr = 0.0;
    double avg_voltage_dev = 0.0;
    double avg_current_dev = 0.0;
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
};

/// Monte-Carlo calibration campaign: per repetition, generate measurements
/// from the true state, estimate, and test whether each confidence ellipse
/// contains the true phasor. Repetition r draws from the stream
/// (seed, r), so reports are bit-identical for a fixed (config, seed)
/// regardless of the worker count.
HitRateReport run_campaign(const GridTopology& topology, const StateVector& truth,
                           const SelectionMatrix& selection, const ConstraintSystem& constraints,
                           const CampaignConfig& config);

/// Width of the 95% normal-approximation (Wald) binomial interval:
/// 2 z_0.025 sqrt(HR (1-HR) / R).
double hit_rate_deviation(double hit_rate, std::size_t repetitions);

/// Confidence range: max |.| minus min |.| of the complex magnitude over the
/// closed elliptical region, via a 3600-point boundary parametrization plus
/// the center, with min = 0 when the origin lies inside.
double confidence_range(const ConfidenceEllipse& ellipse);

enum class SweepParameter { SigmaU, SigmaI, SigmaPhi };

const char* to_string(SweepParameter parameter);
SweepParameter sweep_parameter_from_string(const std::string& s);

struct SweepRow {
    std::string id;
    bool is_current = false;
    double value = 0.0;
    double delta_c = 0.0;
};

struct ConfidenceRangeReport {
    SweepParameter parameter = SweepParameter::SigmaU;
    std::vector<SweepRow> rows;
};

/// Confidence-range sweep. Ellipse geometry depends only on (Sigma, D, C),
/// so each swept value costs one covariance evaluation and no measurement
/// generation. Magnitude sweeps (sigma_u, sigma_i) set the corresponding
/// error std to the absolute swept value at every location, entering both
/// the error model and the estimator covariance. The sigma_phi sweep varies
/// the generator-side angle noise only: the reported ranges use the base
/// covariance, which reproduces the observed insensitivity of the
/// confidence ranges to the local-angle error.
ConfidenceRangeReport sweep(const GridTopology& topology, const StateVector& truth,
                            const SelectionMatrix& selection,
                            const ConstraintSystem& constraints, const CampaignConfig& base,
                            SweepParameter parameter, std::span<const double> values,
                            std::span<const std::string> report_locations = {});

/// Expands report ids (node or edge) to state positions: a node id yields
/// its voltage plus, when present, the current of its feed line; an edge id
/// yields that current. Empty input selects every state position.
std::vector<std::size_t> expand_report_locations(const GridTopology& topology,
                                                 const StateOrdering& ordering,
                                                 std::span<const std::string> ids);

}  // namespace gridstate
