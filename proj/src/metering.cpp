#include "gridstate/metering.hpp"

#include <cmath>
#include <unordered_set>

#include "gridstate/errors.hpp"

namespace gridstate {

double rho_to_sigma(double rho, double beta, double mu) {
    if (!(beta > 0.0 && beta < 1.0)) throw InputError("rho_to_sigma: beta must lie in (0,1)");
    if (rho < 0.0) throw InputError("rho_to_sigma: rho must be nonnegative");
    if (!(mu > 0.0)) throw InputError("rho_to_sigma: mu must be positive");
    const double r0 = normal_quantile(0.5 * (1.0 + beta));
    return mu * rho / r0;
}

double NoiseSpec::voltage_sigma(double nominal_voltage) const {
    if (sigma_u_abs) return *sigma_u_abs;
    return rho_to_sigma(rho_u, beta, nominal_voltage);
}

double NoiseSpec::current_sigma(double true_magnitude) const {
    if (sigma_i_abs) return *sigma_i_abs;
    return rho_to_sigma(rho_i, beta, true_magnitude);
}

void NoiseSpec::validate() const {
    if (rho_u < 0.0 || rho_i < 0.0 || sigma_phi < 0.0 || sigma_theta < 0.0) {
        throw InputError("noise spec: error parameters must be nonnegative");
    }
    if (!(beta > 0.0 && beta < 1.0)) throw InputError("noise spec: beta must lie in (0,1)");
    if (sigma_u_abs && *sigma_u_abs < 0.0) throw InputError("noise spec: sigma_u_abs negative");
    if (sigma_i_abs && *sigma_i_abs < 0.0) throw InputError("noise spec: sigma_i_abs negative");
}

MomentTriple em_moments(double magnitude, double angle, double sigma_mag,
                        std::span<const double> sigma_angles) {
    if (sigma_mag < 0.0) throw InputError("em_moments: sigma_mag must be nonnegative");
    // Gaussian characteristic function products at t = 1 and t = 2.
    double c1 = 1.0;
    double c2 = 1.0;
    for (double s : sigma_angles) {
        if (s < 0.0) throw InputError("em_moments: angle sigma must be nonnegative");
        c1 *= std::exp(-0.5 * s * s);
        c2 *= std::exp(-2.0 * s * s);
    }
    const Complex rotation = std::polar(1.0, angle);
    const double mag_sq = magnitude * magnitude;
    const double var_mag = sigma_mag * sigma_mag;

    MomentTriple result;
    result.mu = magnitude * rotation * c1;
    result.var = (1.0 - c1 * c1) * mag_sq + var_mag;
    result.pvar = rotation * rotation * ((mag_sq + var_mag) * c2 - mag_sq * c1 * c1);
    return result;
}

std::vector<MeterTruth> resolve_meter_truth(const GridTopology& topology,
                                            const StateVector& truth,
                                            const SelectionMatrix& selection) {
    std::unordered_set<std::string> measured_nodes(
        selection.meter_ids.begin(), selection.meter_ids.begin() + selection.num_voltage_rows);

    std::vector<MeterTruth> meters;
    meters.reserve(selection.rows());
    for (std::size_t k = 0; k < selection.rows(); ++k) {
        MeterTruth meter;
        meter.meter_id = selection.meter_ids[k];
        meter.is_current = k >= selection.num_voltage_rows;
        const Complex value = truth.values[selection.positions[k]];
        meter.magnitude = std::abs(value);
        meter.angle = std::arg(value);
        if (meter.is_current) {
            const Edge* edge = topology.find_edge(meter.meter_id);
            if (edge == nullptr) throw InputError("unknown edge '" + meter.meter_id + "'");
            std::string pair_node;
            if (measured_nodes.count(edge->to)) {
                pair_node = edge->to;
            } else if (measured_nodes.count(edge->from)) {
                pair_node = edge->from;
            }
            if (!pair_node.empty()) {
                const Complex v = truth.values[truth.ordering.node_position(pair_node)];
                meter.phi = meter.angle - std::arg(v);
                meter.phi_defined = true;
            }
        }
        meters.push_back(meter);
    }
    return meters;
}

ResolvedSigmas resolve_sigmas(const std::vector<MeterTruth>& meters, const NoiseSpec& spec,
                              double nominal_voltage, double mult_sigma_u, double mult_sigma_i,
                              double mult_sigma_phi) {
    spec.validate();
    if (mult_sigma_u <= 0.0 || mult_sigma_i <= 0.0 || mult_sigma_phi <= 0.0) {
        throw InputError("sigma multipliers must be positive");
    }
    ResolvedSigmas out;
    out.sigma_mag.resize(static_cast<Eigen::Index>(meters.size()));
    for (std::size_t k = 0; k < meters.size(); ++k) {
        out.sigma_mag(static_cast<Eigen::Index>(k)) =
            meters[k].is_current ? mult_sigma_i * spec.current_sigma(meters[k].magnitude)
                                 : mult_sigma_u * spec.voltage_sigma(nominal_voltage);
    }
    out.sigma_phi = mult_sigma_phi * spec.sigma_phi;
    out.sigma_theta = spec.sigma_theta;
    return out;
}

PreparedMeasurements generate_pmu(const std::vector<MeterTruth>& meters,
                                  const ResolvedSigmas& sigmas, RngStream& rng) {
    if (static_cast<std::size_t>(sigmas.sigma_mag.size()) != meters.size()) {
        throw InputError("generate_pmu: sigma vector does not match meter count");
    }
    PreparedMeasurements prepared;
    prepared.source = PreparedMeasurements::Source::Pmu;
    const auto count = static_cast<Eigen::Index>(meters.size());
    prepared.z.resize(count);
    prepared.sigma1.resize(count);
    prepared.sigma2 = ComplexVector::Zero(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        const MeterTruth& meter = meters[static_cast<std::size_t>(k)];
        const double sigma = sigmas.sigma_mag(k);
        const Complex truth = std::polar(meter.magnitude, meter.angle);
        prepared.z(k) = truth + rng.circular_complex_normal(sigma * sigma);
        prepared.sigma1(k) = sigma * sigma;
    }
    return prepared;
}

RawMeasurements generate_em(const std::vector<MeterTruth>& meters, const ResolvedSigmas& sigmas,
                            RngStream& rng) {
    if (static_cast<std::size_t>(sigmas.sigma_mag.size()) != meters.size()) {
        throw InputError("generate_em: sigma vector does not match meter count");
    }
    RawMeasurements raw;
    raw.readings.reserve(meters.size());
    for (std::size_t k = 0; k < meters.size(); ++k) {
        const MeterTruth& meter = meters[k];
        MeterReading reading;
        reading.meter_id = meter.meter_id;
        reading.is_current = meter.is_current;
        // Drawn magnitudes are kept as-is: with realistic sigma << magnitude a
        // negative draw is a < 1e-90 probability event.
        reading.magnitude =
            meter.magnitude + rng.normal(0.0, sigmas.sigma_mag(static_cast<Eigen::Index>(k)));
        if (meter.is_current) {
            if (!meter.phi_defined) {
                throw InputError("current measurement at '" + meter.meter_id +
                                 "' has no co-located measured voltage as angle reference");
            }
            reading.phi = meter.phi + rng.normal(0.0, sigmas.sigma_phi);
        }
        raw.readings.push_back(reading);
    }
    return raw;
}

ComplexVector prepare_em(const RawMeasurements& raw) {
    ComplexVector z(static_cast<Eigen::Index>(raw.readings.size()));
    for (std::size_t k = 0; k < raw.readings.size(); ++k) {
        const MeterReading& reading = raw.readings[k];
        // Voltage angle pseudo-measurement: theta + eps_theta = 0.
        const double angle = reading.is_current ? reading.phi : 0.0;
        z(static_cast<Eigen::Index>(k)) = std::polar(reading.magnitude, angle);
    }
    return z;
}

std::pair<Eigen::VectorXd, ComplexVector> assemble_em_covariances(
    const std::vector<MeterTruth>& meters, const ResolvedSigmas& sigmas) {
    const auto count = static_cast<Eigen::Index>(meters.size());
    if (sigmas.sigma_mag.size() != count) {
        throw InputError("assemble_em_covariances: sigma vector does not match meter count");
    }
    Eigen::VectorXd sigma1(count);
    ComplexVector sigma2(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        const MeterTruth& meter = meters[static_cast<std::size_t>(k)];
        MomentTriple moments;
        if (meter.is_current) {
            const double angle_sigmas[] = {sigmas.sigma_theta, sigmas.sigma_phi};
            moments = em_moments(meter.magnitude, meter.angle, sigmas.sigma_mag(k), angle_sigmas);
        } else {
            const double angle_sigmas[] = {sigmas.sigma_theta};
            moments = em_moments(meter.magnitude, meter.angle, sigmas.sigma_mag(k), angle_sigmas);
        }
        sigma1(k) = moments.var;
        sigma2(k) = moments.pvar;
    }
    return {std::move(sigma1), std::move(sigma2)};
}

std::pair<Eigen::VectorXd, ComplexVector> assemble_pmu_covariances(
    const std::vector<MeterTruth>& meters, const ResolvedSigmas& sigmas) {
    const auto count = static_cast<Eigen::Index>(meters.size());
    if (sigmas.sigma_mag.size() != count) {
        throw InputError("assemble_pmu_covariances: sigma vector does not match meter count");
    }
    Eigen::VectorXd sigma1 = sigmas.sigma_mag.array().square();
    return {std::move(sigma1), ComplexVector::Zero(count)};
}

}  // namespace gridstate
