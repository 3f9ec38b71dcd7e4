#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridstate/constraints.hpp"
#include "gridstate/stats.hpp"
#include "gridstate/topology.hpp"

namespace gridstate {

/// Converts a relative error bound into a Gaussian standard deviation:
/// sigma such that Pr(X in (mu(1-rho), mu(1+rho))) = beta for X ~ N(mu, sigma^2),
/// i.e. sigma = mu * rho / r0 with r0 the normal quantile at (1+beta)/2.
double rho_to_sigma(double rho, double beta, double mu);

/// Measurement-error model parameters. Voltage magnitude errors are relative
/// to the nominal voltage, current magnitude errors to the true magnitude at
/// each location; absolute overrides replace the conversion when set (used
/// for fixed-sigma studies).
struct NoiseSpec {
    double rho_u = 0.01;
    double rho_i = 0.03;
    double sigma_phi = 0.01;    // rad, local-angle error
    double sigma_theta = 0.003; // rad, voltage-angle pseudo-measurement std
    double beta = 0.99;
    std::optional<double> sigma_u_abs;  // volts
    std::optional<double> sigma_i_abs;  // amperes, same at all locations

    double voltage_sigma(double nominal_voltage) const;
    double current_sigma(double true_magnitude) const;
    void validate() const;
};

/// One electrical-meter sample: magnitude of a voltage or current and, for
/// currents, the measured local angle between current and voltage.
struct MeterReading {
    std::string meter_id;
    bool is_current = false;
    double magnitude = 0.0;
    double phi = 0.0;  // currents only
};

struct RawMeasurements {
    std::vector<MeterReading> readings;  // selection row order
};

/// Complex measurement vector with its diagonal covariance (sigma1) and
/// pseudo-covariance (sigma2), ready for the estimator.
struct PreparedMeasurements {
    enum class Source { Pmu, Em };
    ComplexVector z;
    Eigen::VectorXd sigma1;
    ComplexVector sigma2;
    Source source = Source::Em;
};

struct MomentTriple {
    Complex mu;
    double var = 0.0;
    Complex pvar;
};

/// Moments of Z = (a + eps_mag) e^{j(nu + sum eps_angle)} with independent
/// zero-mean Gaussian errors: eps_mag with std sigma_mag and one angle error
/// per entry of sigma_angles. Uses the Gaussian characteristic function
/// c(t) = exp(-t^2 sigma^2 / 2), multiplied over the angle errors.
MomentTriple em_moments(double magnitude, double angle, double sigma_mag,
                        std::span<const double> sigma_angles);

/// Per selection row: the quantities of the true state that the meter models
/// need (true magnitude, true absolute angle, and for currents the local
/// angle relative to the paired voltage node).
struct MeterTruth {
    std::string meter_id;
    bool is_current = false;
    double magnitude = 0.0;
    double angle = 0.0;  // absolute phase of the true phasor
    double phi = 0.0;    // currents: angle minus paired voltage angle
    bool phi_defined = false;
};

/// Resolves each measured current row to a co-located voltage node used as
/// its local-angle reference: an endpoint of the edge that also carries a
/// voltage measurement. Rows without such a pairing keep phi undefined;
/// generate_em rejects them (the EM model cannot reference the angle).
std::vector<MeterTruth> resolve_meter_truth(const GridTopology& topology,
                                            const StateVector& truth,
                                            const SelectionMatrix& selection);

/// Per-row magnitude-error standard deviations (voltage rows first), after
/// applying the spec's relative-to-absolute conversion and any multipliers.
struct ResolvedSigmas {
    Eigen::VectorXd sigma_mag;  // per selection row
    double sigma_phi = 0.0;
    double sigma_theta = 0.0;
};

ResolvedSigmas resolve_sigmas(const std::vector<MeterTruth>& meters, const NoiseSpec& spec,
                              double nominal_voltage, double mult_sigma_u = 1.0,
                              double mult_sigma_i = 1.0, double mult_sigma_phi = 1.0);

/// PMU model: adds circular complex Gaussian noise with the per-row total
/// variance sigma_mag^2 to the true phasors. Data preparation is the
/// identity, so the result is already a PreparedMeasurements with sigma2 = 0.
PreparedMeasurements generate_pmu(const std::vector<MeterTruth>& meters,
                                  const ResolvedSigmas& sigmas, RngStream& rng);

/// Electrical-meter model: Gaussian noise on magnitudes and on the local
/// angle phi. No absolute voltage angle is produced.
RawMeasurements generate_em(const std::vector<MeterTruth>& meters, const ResolvedSigmas& sigmas,
                            RngStream& rng);

/// Data preparation for EM measurements: voltage entries become u e^{j0}
/// (zero-angle pseudo-measurement), current entries i e^{j phi}.
ComplexVector prepare_em(const RawMeasurements& raw);

/// Diagonal covariance and pseudo-covariance of the prepared EM vector from
/// the moment formulas: voltage rows carry the theta pseudo-measurement
/// error, current rows both theta and phi.
std::pair<Eigen::VectorXd, ComplexVector> assemble_em_covariances(
    const std::vector<MeterTruth>& meters, const ResolvedSigmas& sigmas);

/// PMU covariance: sigma1 = sigma_mag^2 per row, sigma2 = 0.
std::pair<Eigen::VectorXd, ComplexVector> assemble_pmu_covariances(
    const std::vector<MeterTruth>& meters, const ResolvedSigmas& sigmas);

}  // namespace gridstate
