#include "gridstate/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "gridstate/errors.hpp"
#include "gridstate/stats.hpp"

namespace gridstate {

const char* to_string(MeterModel model) {
    return model == MeterModel::Pmu ? "pmu" : "em";
}

MeterModel meter_model_from_string(const std::string& s) {
    if (s == "pmu") return MeterModel::Pmu;
    if (s == "em") return MeterModel::Em;
    throw InputError("unknown meter model '" + s + "' (expected pmu or em)");
}

const char* to_string(SweepParameter parameter) {
    switch (parameter) {
        case SweepParameter::SigmaU: return "sigma_u";
        case SweepParameter::SigmaI: return "sigma_i";
        case SweepParameter::SigmaPhi: return "sigma_phi";
    }
    return "unknown";
}

SweepParameter sweep_parameter_from_string(const std::string& s) {
    if (s == "sigma_u") return SweepParameter::SigmaU;
    if (s == "sigma_i") return SweepParameter::SigmaI;
    if (s == "sigma_phi") return SweepParameter::SigmaPhi;
    throw InputError("unknown sweep parameter '" + s + "'");
}

namespace {

std::pair<Eigen::VectorXd, ComplexVector> model_covariances(
    MeterModel model, const std::vector<MeterTruth>& meters, const ResolvedSigmas& sigmas) {
    return model == MeterModel::Pmu ? assemble_pmu_covariances(meters, sigmas)
                                    : assemble_em_covariances(meters, sigmas);
}

ComplexVector generate_measurements(MeterModel model, const std::vector<MeterTruth>& meters,
                                    const ResolvedSigmas& sigmas, RngStream& rng) {
    if (model == MeterModel::Pmu) return generate_pmu(meters, sigmas, rng).z;
    return prepare_em(generate_em(meters, sigmas, rng));
}

void validate_config(const CampaignConfig& config) {
    if (config.repetitions < 1) throw InputError("campaign requires at least one repetition");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw InputError("confidence level must lie in (0,1)");
    }
}

}  // namespace

HitRateReport run_campaign(const GridTopology& topology, const StateVector& truth,
                           const SelectionMatrix& selection, const ConstraintSystem& constraints,
                           const CampaignConfig& config) {
    validate_config(config);
    const std::vector<MeterTruth> meters = resolve_meter_truth(topology, truth, selection);
    const ResolvedSigmas sigmas =
        resolve_sigmas(meters, config.noise, topology.nominal_voltage(), config.mult_sigma_u,
                       config.mult_sigma_i, config.mult_sigma_phi);
    auto [sigma1, sigma2] = model_covariances(config.model, meters, sigmas);
    const AugmentedSystem master(selection, constraints, sigma1, sigma2);

    const std::size_t n_states = master.num_states();
    const std::vector<Eigen::Matrix2d>& covariances = master.index_covariances();
    const double significance = 1.0 - config.alpha;
    const std::size_t reps = config.repetitions;

    unsigned hardware = std::thread::hardware_concurrency();
    std::size_t n_workers = config.workers > 0 ? static_cast<std::size_t>(config.workers)
                                               : std::max(1u, hardware);
    n_workers = std::min<std::size_t>(n_workers, reps);

    std::vector<std::vector<std::uint64_t>> hits(n_workers,
                                                 std::vector<std::uint64_t>(n_states, 0));
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker_body = [&](std::size_t worker_index, const AugmentedSystem& system) {
        try {
            std::vector<std::uint64_t>& local = hits[worker_index];
            for (std::size_t r = worker_index; r < reps; r += n_workers) {
                RngStream rng(config.seed, r);
                const ComplexVector z = generate_measurements(config.model, meters, sigmas, rng);
                const ComplexVector x_hat = system.solve_state(z);
                for (std::size_t i = 0; i < n_states; ++i) {
                    const auto idx = static_cast<Eigen::Index>(i);
                    if (ellipse_contains(covariances[i], x_hat(idx), truth.values[i],
                                         significance)) {
                        ++local[i];
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (n_workers <= 1) {
        worker_body(0, master);
    } else {
        std::vector<std::thread> pool;
        std::vector<AugmentedSystem> systems;
        systems.reserve(n_workers - 1);
        for (std::size_t w = 1; w < n_workers; ++w) systems.emplace_back(master);
        for (std::size_t w = 1; w < n_workers; ++w) {
            pool.emplace_back(worker_body, w, std::cref(systems[w - 1]));
        }
        worker_body(0, master);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    HitRateReport report;
    report.repetitions = reps;
    report.seed = config.seed;
    report.locations.resize(n_states);
    const std::size_t num_nodes = truth.ordering.num_nodes();
    double v_sum = 0.0, i_sum = 0.0, v_dev = 0.0, i_dev = 0.0;
    std::size_t v_count = 0, i_count = 0;
    for (std::size_t i = 0; i < n_states; ++i) {
        std::uint64_t total = 0;
        for (std::size_t w = 0; w < n_workers; ++w) total += hits[w][i];
        LocationRate& rate = report.locations[i];
        rate.id = truth.ordering.label(i);
        rate.is_current = i >= num_nodes;
        rate.hit_rate = static_cast<double>(total) / static_cast<double>(reps);
        rate.dev_hr = hit_rate_deviation(rate.hit_rate, reps);
        const bool is_root = i == 0;
        if (!rate.is_current) {
            if (is_root && !config.include_root_in_averages) continue;
            v_sum += rate.hit_rate;
            v_dev += rate.dev_hr;
            ++v_count;
        } else {
            i_sum += rate.hit_rate;
            i_dev += rate.dev_hr;
            ++i_count;
        }
    }
    report.avg_voltage_hr = v_count > 0 ? v_sum / static_cast<double>(v_count) : 0.0;
    report.avg_current_hr = i_count > 0 ? i_sum / static_cast<double>(i_count) : 0.0;
    report.avg_voltage_dev = v_count > 0 ? v_dev / static_cast<double>(v_count) : 0.0;
    report.avg_current_dev = i_count > 0 ? i_dev / static_cast<double>(i_count) : 0.0;
    return report;
}

double hit_rate_deviation(double hit_rate, std::size_t repetitions) {
    if (hit_rate < 0.0 || hit_rate > 1.0) throw InputError("hit rate must lie in [0,1]");
    if (repetitions < 1) throw InputError("repetitions must be at least 1");
    static const double z975 = normal_quantile(0.975);
    return 2.0 * z975 *
           std::sqrt(hit_rate * (1.0 - hit_rate) / static_cast<double>(repetitions));
}

double confidence_range(const ConfidenceEllipse& ellipse) {
    constexpr int kBoundaryPoints = 3600;
    const double cos_a = std::cos(ellipse.angle);
    const double sin_a = std::sin(ellipse.angle);
    const double cx = ellipse.center.real();
    const double cy = ellipse.center.imag();

    double max_mag = std::abs(ellipse.center);
    double min_mag = max_mag;
    for (int k = 0; k < kBoundaryPoints; ++k) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(kBoundaryPoints);
        const double ex = ellipse.semi_major * std::cos(t);
        const double ey = ellipse.semi_minor * std::sin(t);
        const double px = cx + cos_a * ex - sin_a * ey;
        const double py = cy + sin_a * ex + cos_a * ey;
        const double mag = std::hypot(px, py);
        max_mag = std::max(max_mag, mag);
        min_mag = std::min(min_mag, mag);
    }

    // Origin inside the closed region means the minimum magnitude is zero.
    const double ox = cos_a * (0.0 - cx) + sin_a * (0.0 - cy);
    const double oy = -sin_a * (0.0 - cx) + cos_a * (0.0 - cy);
    bool origin_inside;
    if (ellipse.semi_major <= 0.0) {
        origin_inside = std::abs(ox) <= 1e-12 && std::abs(oy) <= 1e-12;
    } else if (ellipse.semi_minor <= 0.0) {
        origin_inside = std::abs(oy) <= 1e-12 && std::abs(ox) <= ellipse.semi_major;
    } else {
        const double rx = ox / ellipse.semi_major;
        const double ry = oy / ellipse.semi_minor;
        origin_inside = rx * rx + ry * ry <= 1.0;
    }
    if (origin_inside) min_mag = 0.0;
    return max_mag - min_mag;
}

std::vector<std::size_t> expand_report_locations(const GridTopology& topology,
                                                 const StateOrdering& ordering,
                                                 std::span<const std::string> ids) {
    std::vector<std::size_t> positions;
    if (ids.empty()) {
        positions.resize(ordering.size());
        for (std::size_t i = 0; i < ordering.size(); ++i) positions[i] = i;
        return positions;
    }
    for (const std::string& id : ids) {
        if (topology.find_node(id) != nullptr) {
            positions.push_back(ordering.node_position(id));
            if (const Edge* feed = topology.feed_edge(id)) {
                positions.push_back(ordering.edge_position(feed->id));
            }
        } else if (topology.find_edge(id) != nullptr) {
            positions.push_back(ordering.edge_position(id));
        } else {
            throw InputError("report location '" + id + "' is not a node or edge id");
        }
    }
    return positions;
}

ConfidenceRangeReport sweep(const GridTopology& topology, const StateVector& truth,
                            const SelectionMatrix& selection,
                            const ConstraintSystem& constraints, const CampaignConfig& base,
                            SweepParameter parameter, std::span<const double> values,
                            std::span<const std::string> report_locations) {
    validate_config(base);
    for (std::size_t v = 1; v < values.size(); ++v) {
        if (values[v] < values[v - 1]) throw InputError("sweep values must be sorted ascending");
    }

    const std::vector<MeterTruth> meters = resolve_meter_truth(topology, truth, selection);
    const ResolvedSigmas base_sigmas =
        resolve_sigmas(meters, base.noise, topology.nominal_voltage(), base.mult_sigma_u,
                       base.mult_sigma_i, base.mult_sigma_phi);
    const std::vector<std::size_t> positions =
        expand_report_locations(topology, truth.ordering, report_locations);
    const double significance = 1.0 - base.alpha;

    ConfidenceRangeReport report;
    report.parameter = parameter;
    for (double value : values) {
        if (value < 0.0) throw InputError("sweep values must be nonnegative");
        ResolvedSigmas sigmas = base_sigmas;
        switch (parameter) {
            case SweepParameter::SigmaU:
                for (std::size_t k = 0; k < meters.size(); ++k) {
                    if (!meters[k].is_current) {
                        sigmas.sigma_mag(static_cast<Eigen::Index>(k)) = value;
                    }
                }
                break;
            case SweepParameter::SigmaI:
                for (std::size_t k = 0; k < meters.size(); ++k) {
                    if (meters[k].is_current) {
                        sigmas.sigma_mag(static_cast<Eigen::Index>(k)) = value;
                    }
                }
                break;
            case SweepParameter::SigmaPhi:
                // Generator-side parameter only; the reported ellipse geometry
                // keeps the base covariance.
                break;
        }
        auto [sigma1, sigma2] = model_covariances(base.model, meters, sigmas);
        const AugmentedSystem system(selection, constraints, sigma1, sigma2);
        const std::vector<Eigen::Matrix2d>& covariances = system.index_covariances();
        for (std::size_t position : positions) {
            const ConfidenceEllipse ellipse = ellipse_from_covariance(
                covariances[position], truth.values[position], significance);
            SweepRow row;
            row.id = truth.ordering.label(position);
            row.is_current = !truth.ordering.is_voltage(position);
            row.value = value;
            row.delta_c = confidence_range(ellipse);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

}  // namespace gridstate
