#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridstate/assessment.hpp"
#include "gridstate/errors.hpp"
#include "gridstate/io.hpp"
#include "gridstate/loadflow.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gridstate;

constexpr const char* kReportIds[] = {"Subst", "SM-70", "SM-109", "SM-134",
                                      "JB-42", "JB-44",  "JB-106"};

struct CommonArgs {
    std::string grid_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 0;
};

std::uint64_t resolve_seed(const CommonArgs& args) {
    if (args.seed_given) return args.seed;
    if (const char* env = std::getenv("GRIDSTATE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw InputError("GRIDSTATE_SEED is not an unsigned integer");
        }
    }
    return 0;
}

fs::path ensure_out_dir(const CommonArgs& args) {
    fs::path dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--grid", args.grid_path, "Grid topology JSON")->required();
    cmd->add_option("--out", args.out_dir, "Output directory (default: .)");
    cmd->add_option("--seed", args.seed, "Random seed (fallback: env GRIDSTATE_SEED, then 0)")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--workers", args.workers, "Worker threads (default: available cores)");
}

struct EstimationArgs {
    std::string state_path;
    std::string scenario_path;
    std::string noise_path;
    std::string model = "em";
    double alpha = 0.95;  // confidence level
    double mult_sigma_u = 1.0;
    double mult_sigma_i = 1.0;
    double mult_sigma_phi = 1.0;
};

void add_estimation(CLI::App* cmd, EstimationArgs& args) {
    cmd->add_option("--state", args.state_path, "True-state JSON from the loadflow command")
        ->required();
    cmd->add_option("--scenario", args.scenario_path, "Measurement scenario JSON")->required();
    cmd->add_option("--noise", args.noise_path, "Noise spec JSON")->required();
    cmd->add_option("--model", args.model, "Meter model: pmu | em (default em)");
    cmd->add_option("--alpha", args.alpha, "Confidence level of ellipses (default 0.95)");
    cmd->add_option("--mult-sigma-u", args.mult_sigma_u, "Multiplier on sigma_u");
    cmd->add_option("--mult-sigma-i", args.mult_sigma_i, "Multiplier on sigma_i");
    cmd->add_option("--mult-sigma-phi", args.mult_sigma_phi, "Multiplier on sigma_phi");
}

struct LoadedScenario {
    GridTopology topology;
    StateOrdering ordering;
    ConstraintSystem constraints;
    SelectionMatrix selection;
    StateVector truth;
};

LoadedScenario load_estimation_inputs(const CommonArgs& common, const EstimationArgs& args) {
    GridTopology topology = io::load_topology(common.grid_path);
    StateOrdering ordering = build_ordering(topology);
    ConstraintSystem constraints = build_constraints(topology, ordering);
    io::MeasurementScenario scenario =
        io::load_measurement_scenario(args.scenario_path, topology);
    SelectionMatrix selection =
        build_selection(ordering, scenario.measured_nodes, scenario.measured_edges);
    StateVector truth = io::read_state_json(args.state_path, ordering);
    return {std::move(topology), std::move(ordering), std::move(constraints),
            std::move(selection), std::move(truth)};
}

CampaignConfig make_campaign_config(const CommonArgs& common, const EstimationArgs& args,
                                    std::size_t repetitions, bool include_root) {
    CampaignConfig config;
    config.model = meter_model_from_string(args.model);
    config.noise = io::load_noise_spec(args.noise_path);
    config.mult_sigma_u = args.mult_sigma_u;
    config.mult_sigma_i = args.mult_sigma_i;
    config.mult_sigma_phi = args.mult_sigma_phi;
    config.repetitions = repetitions;
    config.alpha = args.alpha;
    config.seed = resolve_seed(common);
    config.include_root_in_averages = include_root;
    config.workers = common.workers;
    return config;
}

void print_state_listing(std::ostream& out, const GridTopology& topology,
                         const StateVector& state, bool report_nodes_only) {
    std::vector<std::string> ids;
    if (report_nodes_only) {
        for (const char* id : kReportIds) {
            if (topology.find_node(id) != nullptr) ids.emplace_back(id);
        }
    } else {
        for (const Node& node : topology.nodes()) ids.push_back(node.id);
    }
    out << "entity,voltage_re,voltage_im,current_re,current_im\n";
    for (const std::string& id : ids) {
        const Complex v = state.at_node(id);
        out << id << ',' << v.real() << ',' << v.imag();
        if (const Edge* feed = topology.feed_edge(id)) {
            const Complex c = state.at_edge(feed->id);
            out << ',' << c.real() << ',' << c.imag();
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

int cmd_loadflow(const CommonArgs& common, const std::string& loads_path,
                 const std::string& loads_csv_path, double tol, int max_iter,
                 bool report_nodes) {
    GridTopology topology = io::load_topology(common.grid_path);
    StateOrdering ordering = build_ordering(topology);
    const fs::path out_dir = ensure_out_dir(common);

    LoadFlowOptions options;
    options.tolerance_va = tol;
    options.max_iterations = max_iter;

    std::optional<LoadScenario> base;
    if (!loads_path.empty()) base = io::load_load_scenario(loads_path);

    std::vector<std::pair<std::string, LoadScenario>> series;
    if (!loads_csv_path.empty()) {
        const Complex slack =
            base ? base->slack_voltage : Complex(topology.nominal_voltage(), 0.0);
        series = io::load_load_series_csv(loads_csv_path, slack);
    }
    if (!base && series.empty()) {
        throw InputError("loadflow needs --loads and/or --loads-csv");
    }

    const LoadScenario& primary = base ? *base : series.front().second;
    LoadFlowResult result = solve_loadflow(topology, ordering, primary, options);
    io::write_state_json(out_dir / "state.json", result);
    io::write_state_csv(out_dir / "state.csv", result.state);
    std::cerr << "loadflow: converged in " << result.iterations << " iterations, max mismatch "
              << result.max_mismatch_va << " VA\n";

    if (!series.empty()) {
        std::vector<StateVector> states;
        states.reserve(series.size() + (base ? 1 : 0));
        if (base) states.push_back(result.state);
        for (const auto& [timestamp, scenario] : series) {
            states.push_back(solve_loadflow(topology, ordering, scenario, options).state);
        }
        if (states.size() > 1) {
            const double sigma_theta = empirical_theta_sigma(states);
            io::write_sigma_theta_json(out_dir / "sigma_theta.json", sigma_theta,
                                       states.size());
            std::cerr << "loadflow: sigma_theta = " << sigma_theta << " rad over "
                      << states.size() << " scenarios\n";
        }
    }

    print_state_listing(std::cout, topology, result.state, report_nodes);
    return 0;
}

int cmd_estimate(const CommonArgs& common, const EstimationArgs& args,
                 const std::string& field_csv) {
    LoadedScenario inputs = load_estimation_inputs(common, args);
    const fs::path out_dir = ensure_out_dir(common);
    const std::uint64_t seed = resolve_seed(common);
    const double significance = 1.0 - args.alpha;
    if (!(significance > 0.0 && significance < 1.0)) {
        throw InputError("--alpha must lie in (0,1)");
    }
    const NoiseSpec noise = io::load_noise_spec(args.noise_path);
    const MeterModel model = meter_model_from_string(args.model);

    std::vector<MeterTruth> meters =
        resolve_meter_truth(inputs.topology, inputs.truth, inputs.selection);
    ComplexVector z;
    Eigen::VectorXd sigma1;
    ComplexVector sigma2;

    if (!field_csv.empty()) {
        // Field mode (experimental): covariances from the measured magnitudes
        // instead of the true state.
        if (model != MeterModel::Em) {
            throw InputError("--field-measurements requires --model em");
        }
        RawMeasurements raw = io::read_em_measurements_csv(field_csv);
        if (raw.readings.size() != inputs.selection.rows()) {
            throw InputError("field measurement rows do not match the scenario");
        }
        std::vector<MeterTruth> field_meters(meters);
        for (std::size_t k = 0; k < raw.readings.size(); ++k) {
            const MeterReading& reading = raw.readings[k];
            if (reading.meter_id != inputs.selection.meter_ids[k] ||
                reading.is_current != (k >= inputs.selection.num_voltage_rows)) {
                throw InputError("field measurement row " + std::to_string(k + 1) +
                                 " does not match the scenario ordering");
            }
            field_meters[k].magnitude = reading.magnitude;
            field_meters[k].angle = reading.is_current ? reading.phi : 0.0;
        }
        const ResolvedSigmas sigmas =
            resolve_sigmas(field_meters, noise, inputs.topology.nominal_voltage(),
                           args.mult_sigma_u, args.mult_sigma_i, args.mult_sigma_phi);
        std::tie(sigma1, sigma2) = assemble_em_covariances(field_meters, sigmas);
        z = prepare_em(raw);
        std::cerr << "estimate: field mode (experimental), covariances from measured"
                     " magnitudes\n";
    } else {
        const ResolvedSigmas sigmas =
            resolve_sigmas(meters, noise, inputs.topology.nominal_voltage(), args.mult_sigma_u,
                           args.mult_sigma_i, args.mult_sigma_phi);
        RngStream rng(seed, 0);
        if (model == MeterModel::Pmu) {
            PreparedMeasurements prepared = generate_pmu(meters, sigmas, rng);
            z = std::move(prepared.z);
            sigma1 = std::move(prepared.sigma1);
            sigma2 = std::move(prepared.sigma2);
        } else {
            RawMeasurements raw = generate_em(meters, sigmas, rng);
            io::write_em_measurements_csv(out_dir / "measurements.csv", raw);
            z = prepare_em(raw);
            std::tie(sigma1, sigma2) = assemble_em_covariances(meters, sigmas);
        }
        io::write_prepared_measurements_csv(out_dir / "prepared.csv", inputs.selection, z);
    }

    AugmentedSystem system(inputs.selection, inputs.constraints, sigma1, sigma2);
    EstimateResult result = system.estimate(z);

    io::EstimateExportOptions options;
    options.alpha = significance;
    options.model = args.model;
    options.seed = seed;
    io::write_estimates_json(out_dir / "estimates.json", inputs.ordering, result, options);
    io::write_estimates_csv(out_dir / "estimates.csv", inputs.ordering, result, options);
    std::cerr << "estimate: rcond " << result.rcond << ", stationarity residual "
              << result.stationarity_residual << ", constraint residual "
              << result.constraint_residual << '\n';
    std::cout << "estimates written to " << (out_dir / "estimates.json").string() << '\n';
    return 0;
}

int cmd_assess(const CommonArgs& common, const EstimationArgs& args, std::size_t reps,
               bool exclude_root) {
    if (reps == 0) throw InputError("--reps must be at least 1");
    LoadedScenario inputs = load_estimation_inputs(common, args);
    const fs::path out_dir = ensure_out_dir(common);
    CampaignConfig config = make_campaign_config(common, args, reps, !exclude_root);

    HitRateReport report = run_campaign(inputs.topology, inputs.truth, inputs.selection,
                                        inputs.constraints, config);
    io::write_hit_rate_csv(out_dir / "hitrate.csv", report);
    io::write_hit_rate_json(out_dir / "hitrate.json", report, config);
    std::cout << "model=" << args.model << " reps=" << report.repetitions
              << " seed=" << report.seed << '\n'
              << "avg_voltage_hr=" << 100.0 * report.avg_voltage_hr << "%"
              << " avg_voltage_dev_hr=" << 100.0 * report.avg_voltage_dev << "%\n"
              << "avg_current_hr=" << 100.0 * report.avg_current_hr << "%"
              << " avg_current_dev_hr=" << 100.0 * report.avg_current_dev << "%\n";
    return 0;
}

int cmd_sweep(const CommonArgs& common, const EstimationArgs& args, const std::string& param,
              double from, double to, std::size_t steps, bool report_nodes) {
    if (steps < 1) throw InputError("--steps must be at least 1");
    if (to < from) throw InputError("--to must be >= --from");
    LoadedScenario inputs = load_estimation_inputs(common, args);
    const fs::path out_dir = ensure_out_dir(common);
    CampaignConfig config = make_campaign_config(common, args, 1, true);

    std::vector<double> values;
    values.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        values.push_back(steps == 1 ? from
                                    : from + (to - from) * static_cast<double>(k) /
                                                 static_cast<double>(steps - 1));
    }
    std::vector<std::string> report_ids;
    if (report_nodes) {
        for (const char* id : kReportIds) {
            if (inputs.topology.find_node(id) != nullptr) report_ids.emplace_back(id);
        }
    }

    ConfidenceRangeReport report =
        sweep(inputs.topology, inputs.truth, inputs.selection, inputs.constraints, config,
              sweep_parameter_from_string(param), values, report_ids);
    io::write_sweep_csv(out_dir / "sweep.csv", report);
    std::cout << "sweep rows written: " << report.rows.size() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distribution-grid state estimation with confidence regions"};
    app.require_subcommand(1);

    CommonArgs common;
    EstimationArgs estimation;

    // loadflow
    auto* lf = app.add_subcommand("loadflow", "Solve the reference grid power flow");
    std::string loads_path, loads_csv_path;
    double lf_tol = -1.0;
    int lf_max_iter = 50;
    bool lf_report_nodes = false;
    add_common(lf, common);
    lf->add_option("--loads", loads_path, "Load scenario JSON");
    lf->add_option("--loads-csv", loads_csv_path, "15-minute interval CSV");
    lf->add_option("--tol", lf_tol, "Power mismatch tolerance in VA");
    lf->add_option("--max-iter", lf_max_iter, "Maximum Newton-Raphson iterations");
    lf->add_flag("--report-nodes", lf_report_nodes, "Restrict the listing to the example ids");

    // estimate
    auto* est = app.add_subcommand("estimate", "Generate measurements and estimate the state");
    std::string field_csv;
    add_common(est, common);
    add_estimation(est, estimation);
    est->add_option("--field-measurements", field_csv,
                    "EM measurement CSV (field mode, experimental)");

    // assess
    auto* assess = app.add_subcommand("assess", "Monte-Carlo hit-rate campaign");
    std::size_t reps = 5000;
    bool exclude_root = false;
    add_common(assess, common);
    add_estimation(assess, estimation);
    assess->add_option("--reps", reps, "Monte-Carlo repetitions (default 5000)");
    assess->add_flag("--exclude-root", exclude_root, "Exclude the root from HR averages");

    // sweep
    auto* sw = app.add_subcommand("sweep", "Confidence-range sweep over a noise parameter");
    std::string sweep_param = "sigma_u";
    double sweep_from = 1.0, sweep_to = 4.0;
    std::size_t sweep_steps = 7;
    bool sweep_report_nodes = false;
    add_common(sw, common);
    add_estimation(sw, estimation);
    sw->add_option("--sweep", sweep_param, "Swept parameter: sigma_u | sigma_i | sigma_phi");
    sw->add_option("--from", sweep_from, "First swept value");
    sw->add_option("--to", sweep_to, "Last swept value");
    sw->add_option("--steps", sweep_steps, "Number of swept values");
    sw->add_flag("--report-nodes", sweep_report_nodes,
                 "Restrict the report to the example ids");

    try {
        app.parse(argc, argv);
        if (lf->parsed()) {
            return cmd_loadflow(common, loads_path, loads_csv_path, lf_tol, lf_max_iter,
                                lf_report_nodes);
        }
        if (est->parsed()) return cmd_estimate(common, estimation, field_csv);
        if (assess->parsed()) return cmd_assess(common, estimation, reps, exclude_root);
        if (sw->parsed()) {
            return cmd_sweep(common, estimation, sweep_param, sweep_from, sweep_to, sweep_steps,
                             sweep_report_nodes);
        }
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const gridstate::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const gridstate::NonIdentifiableError& e) {
        std::cerr << "error: " << e.what() << " (rcond estimate " << e.rcond << ")\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
