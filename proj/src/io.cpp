#include "gridstate/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gridstate/errors.hpp"

namespace gridstate::io {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream stream(path, std::ios::binary);
    if (!stream) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return buffer.str();
}

// nlohmann reports a byte offset; convert it to line/column for diagnostics.
json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& error) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t offset = std::min(error.byte, text.size());
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw InputError(path.string() + ": parse error at line " + std::to_string(line) +
                         ", column " + std::to_string(column) + ": " + error.what());
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream stream(path, std::ios::binary);
    if (!stream) throw InputError("cannot write '" + path.string() + "'");
    stream.precision(17);
    return stream;
}

double require_number(const json& object, const char* key, const std::string& context) {
    if (!object.contains(key) || !object[key].is_number()) {
        throw InputError(context + ": missing numeric field '" + key + "'");
    }
    return object[key].get<double>();
}

std::string require_string(const json& object, const char* key, const std::string& context) {
    if (!object.contains(key) || !object[key].is_string()) {
        throw InputError(context + ": missing string field '" + key + "'");
    }
    return object[key].get<std::string>();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        // Trim surrounding whitespace.
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

GridTopology load_topology(const std::filesystem::path& path) {
    const json root = parse_json_file(path);
    const std::string context = path.string();
    const double nominal = require_number(root, "nominal_voltage", context);
    if (!root.contains("nodes") || !root["nodes"].is_array()) {
        throw InputError(context + ": missing 'nodes' array");
    }
    if (!root.contains("edges") || !root["edges"].is_array()) {
        throw InputError(context + ": missing 'edges' array");
    }
    std::vector<Node> nodes;
    for (const json& item : root["nodes"]) {
        Node node;
        node.id = require_string(item, "id", context);
        node.kind = node_kind_from_string(require_string(item, "kind", context));
        nodes.push_back(std::move(node));
    }
    std::vector<Edge> edges;
    for (const json& item : root["edges"]) {
        Edge edge;
        edge.id = require_string(item, "id", context);
        edge.from = require_string(item, "from", context);
        edge.to = require_string(item, "to", context);
        edge.impedance = Complex(require_number(item, "r", context),
                                 require_number(item, "x", context));
        edges.push_back(std::move(edge));
    }
    return GridTopology(std::move(nodes), std::move(edges), nominal);
}

LoadScenario load_load_scenario(const std::filesystem::path& path) {
    const json root = parse_json_file(path);
    const std::string context = path.string();
    if (!root.contains("slack_voltage")) {
        throw InputError(context + ": missing 'slack_voltage'");
    }
    LoadScenario scenario;
    scenario.slack_voltage = Complex(require_number(root["slack_voltage"], "re", context),
                                     require_number(root["slack_voltage"], "im", context));
    if (root.contains("loads")) {
        for (const json& item : root["loads"]) {
            const std::string node = require_string(item, "node", context);
            const double p = require_number(item, "p", context);
            const double q = require_number(item, "q", context);
            if (!scenario.loads.emplace(node, Complex(p, q)).second) {
                throw InputError(context + ": duplicate load entry for node '" + node + "'");
            }
        }
    }
    return scenario;
}

std::vector<std::pair<std::string, LoadScenario>> load_load_series_csv(
    const std::filesystem::path& path, Complex slack_voltage) {
    std::ifstream stream(path);
    if (!stream) throw InputError("cannot open '" + path.string() + "'");

    std::vector<std::pair<std::string, LoadScenario>> scenarios;
    std::map<std::string, std::size_t> index_of;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(stream, line)) {
        ++line_number;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (line_number == 1 && !fields.empty() && fields[0] == "node_id") continue;  // header
        if (fields.size() != 4) {
            throw InputError(path.string() + ":" + std::to_string(line_number) +
                             ": expected 4 columns (node_id, timestamp, p_w, q_var)");
        }
        double p = 0.0, q = 0.0;
        try {
            p = std::stod(fields[2]);
            q = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw InputError(path.string() + ":" + std::to_string(line_number) +
                             ": p_w/q_var are not numbers");
        }
        auto [it, inserted] = index_of.emplace(fields[1], scenarios.size());
        if (inserted) {
            LoadScenario scenario;
            scenario.slack_voltage = slack_voltage;
            scenarios.emplace_back(fields[1], std::move(scenario));
        }
        LoadScenario& scenario = scenarios[it->second].second;
        scenario.loads[fields[0]] += Complex(p, q);
    }
    if (scenarios.empty()) {
        throw InputError(path.string() + ": no load rows found");
    }
    return scenarios;
}

NoiseSpec load_noise_spec(const std::filesystem::path& path) {
    const json root = parse_json_file(path);
    const std::string context = path.string();
    NoiseSpec spec;
    spec.rho_u = require_number(root, "rho_u", context);
    spec.rho_i = require_number(root, "rho_i", context);
    spec.sigma_phi = require_number(root, "sigma_phi", context);
    spec.sigma_theta = require_number(root, "sigma_theta", context);
    if (root.contains("beta")) spec.beta = root["beta"].get<double>();
    if (root.contains("sigma_u_abs")) spec.sigma_u_abs = root["sigma_u_abs"].get<double>();
    if (root.contains("sigma_i_abs")) spec.sigma_i_abs = root["sigma_i_abs"].get<double>();
    spec.validate();
    return spec;
}

MeasurementScenario load_measurement_scenario(const std::filesystem::path& path,
                                              const GridTopology& topology) {
    const json root = parse_json_file(path);
    MeasurementScenario scenario;
    if (root.contains("preset")) {
        const std::string preset = root["preset"].get<std::string>();
        if (preset != "ccb") {
            throw InputError(path.string() + ": unknown preset '" + preset + "'");
        }
        for (const Node& node : topology.nodes()) {
            if (node.kind == NodeKind::CustomerConnection) {
                scenario.measured_nodes.push_back(node.id);
            }
        }
        std::sort(scenario.measured_nodes.begin(), scenario.measured_nodes.end());
        for (const std::string& id : scenario.measured_nodes) {
            const Edge* feed = topology.feed_edge(id);
            if (feed == nullptr) {
                throw InputError(path.string() + ": preset ccb: node '" + id +
                                 "' has no unique feed line");
            }
            scenario.measured_edges.push_back(feed->id);
        }
        return scenario;
    }
    if (root.contains("measured_nodes")) {
        for (const json& id : root["measured_nodes"]) {
            scenario.measured_nodes.push_back(id.get<std::string>());
        }
    }
    if (root.contains("measured_edges")) {
        for (const json& id : root["measured_edges"]) {
            scenario.measured_edges.push_back(id.get<std::string>());
        }
    }
    return scenario;
}

void write_state_json(const std::filesystem::path& path, const LoadFlowResult& result) {
    json states = json::array();
    const StateOrdering& ordering = result.state.ordering;
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        states.push_back({{"id", ordering.label(i)},
                          {"kind", ordering.is_voltage(i) ? "voltage" : "current"},
                          {"re", result.state.values[i].real()},
                          {"im", result.state.values[i].imag()}});
    }
    json root = {{"iterations", result.iterations},
                 {"max_mismatch_va", result.max_mismatch_va},
                 {"states", std::move(states)}};
    open_output(path) << root.dump(2) << '\n';
}

void write_state_csv(const std::filesystem::path& path, const StateVector& state) {
    std::ofstream out = open_output(path);
    out << "id,kind,re,im\n";
    for (std::size_t i = 0; i < state.ordering.size(); ++i) {
        out << state.ordering.label(i) << ','
            << (state.ordering.is_voltage(i) ? "voltage" : "current") << ','
            << state.values[i].real() << ',' << state.values[i].imag() << '\n';
    }
}

StateVector read_state_json(const std::filesystem::path& path, const StateOrdering& ordering) {
    const json root = parse_json_file(path);
    if (!root.contains("states") || !root["states"].is_array()) {
        throw InputError(path.string() + ": missing 'states' array");
    }
    StateVector state;
    state.ordering = ordering;
    state.values.assign(ordering.size(), Complex(0.0, 0.0));
    std::vector<bool> seen(ordering.size(), false);
    for (const json& item : root["states"]) {
        const std::string id = require_string(item, "id", path.string());
        const std::string kind = require_string(item, "kind", path.string());
        const std::size_t position = kind == "voltage" ? ordering.node_position(id)
                                                       : ordering.edge_position(id);
        state.values[position] = Complex(require_number(item, "re", path.string()),
                                         require_number(item, "im", path.string()));
        seen[position] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            throw InputError(path.string() + ": state file is missing phasor '" +
                             ordering.label(i) + "'");
        }
    }
    return state;
}

void write_sigma_theta_json(const std::filesystem::path& path, double sigma_theta,
                            std::size_t scenario_count) {
    json root = {{"sigma_theta", sigma_theta}, {"scenario_count", scenario_count}};
    open_output(path) << root.dump(2) << '\n';
}

namespace {

json ellipse_to_json(const ConfidenceEllipse& ellipse) {
    return {{"angle", ellipse.angle}, {"a", ellipse.semi_major}, {"b", ellipse.semi_minor}};
}

}  // namespace

void write_estimates_json(const std::filesystem::path& path, const StateOrdering& ordering,
                          const EstimateResult& result, const EstimateExportOptions& options) {
    json estimates = json::array();
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        const Eigen::Matrix2d& cov = result.covariances[i];
        const ConfidenceEllipse ellipse = confidence_ellipse(result, i, options.alpha);
        estimates.push_back({{"id", ordering.label(i)},
                             {"kind", ordering.is_voltage(i) ? "voltage" : "current"},
                             {"re", result.x_hat(static_cast<Eigen::Index>(i)).real()},
                             {"im", result.x_hat(static_cast<Eigen::Index>(i)).imag()},
                             {"cov", {{cov(0, 0), cov(0, 1)}, {cov(1, 0), cov(1, 1)}}},
                             {"ellipse", ellipse_to_json(ellipse)}});
    }
    json root = {{"alpha", options.alpha},
                 {"model", options.model},
                 {"seed", options.seed},
                 {"stationarity_residual", result.stationarity_residual},
                 {"constraint_residual", result.constraint_residual},
                 {"estimates", std::move(estimates)}};
    open_output(path) << root.dump(2) << '\n';
}

void write_estimates_csv(const std::filesystem::path& path, const StateOrdering& ordering,
                         const EstimateResult& result, const EstimateExportOptions& options) {
    std::ofstream out = open_output(path);
    out << "id,kind,re,im,cov00,cov01,cov10,cov11,ellipse_angle,ellipse_a,ellipse_b\n";
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        const Eigen::Matrix2d& cov = result.covariances[i];
        const ConfidenceEllipse ellipse = confidence_ellipse(result, i, options.alpha);
        out << ordering.label(i) << ',' << (ordering.is_voltage(i) ? "voltage" : "current")
            << ',' << result.x_hat(static_cast<Eigen::Index>(i)).real() << ','
            << result.x_hat(static_cast<Eigen::Index>(i)).imag() << ',' << cov(0, 0) << ','
            << cov(0, 1) << ',' << cov(1, 0) << ',' << cov(1, 1) << ',' << ellipse.angle << ','
            << ellipse.semi_major << ',' << ellipse.semi_minor << '\n';
    }
}

void write_hit_rate_csv(const std::filesystem::path& path, const HitRateReport& report) {
    std::ofstream out = open_output(path);
    out << "location,kind,hr,dev_hr\n";
    for (const LocationRate& rate : report.locations) {
        out << rate.id << ',' << (rate.is_current ? "current" : "voltage") << ','
            << rate.hit_rate << ',' << rate.dev_hr << '\n';
    }
}

void write_hit_rate_json(const std::filesystem::path& path, const HitRateReport& report,
                         const CampaignConfig& config) {
    json locations = json::array();
    for (const LocationRate& rate : report.locations) {
        locations.push_back({{"location", rate.id},
                             {"kind", rate.is_current ? "current" : "voltage"},
                             {"hr", rate.hit_rate},
                             {"dev_hr", rate.dev_hr}});
    }
    json root = {{"model", to_string(config.model)},
                 {"alpha", config.alpha},
                 {"repetitions", report.repetitions},
                 {"seed", report.seed},
                 {"avg_voltage_hr", report.avg_voltage_hr},
                 {"avg_current_hr", report.avg_current_hr},
                 {"avg_voltage_dev_hr", report.avg_voltage_dev},
                 {"avg_current_dev_hr", report.avg_current_dev},
                 {"locations", std::move(locations)}};
    open_output(path) << root.dump(2) << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const ConfidenceRangeReport& report) {
    std::ofstream out = open_output(path);
    out << "location,kind,param,value,delta_c\n";
    for (const SweepRow& row : report.rows) {
        out << row.id << ',' << (row.is_current ? "current" : "voltage") << ','
            << to_string(report.parameter) << ',' << row.value << ',' << row.delta_c << '\n';
    }
}

void write_em_measurements_csv(const std::filesystem::path& path, const RawMeasurements& raw) {
    std::ofstream out = open_output(path);
    out << "meter_id,kind,u,i,phi\n";
    for (const MeterReading& reading : raw.readings) {
        if (reading.is_current) {
            out << reading.meter_id << ",current,," << reading.magnitude << ',' << reading.phi
                << '\n';
        } else {
            out << reading.meter_id << ",voltage," << reading.magnitude << ",,\n";
        }
    }
}

RawMeasurements read_em_measurements_csv(const std::filesystem::path& path) {
    std::ifstream stream(path);
    if (!stream) throw InputError("cannot open '" + path.string() + "'");
    RawMeasurements raw;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(stream, line)) {
        ++line_number;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (line_number == 1 && !fields.empty() && fields[0] == "meter_id") continue;
        if (fields.size() != 5) {
            throw InputError(path.string() + ":" + std::to_string(line_number) +
                             ": expected 5 columns (meter_id, kind, u, i, phi)");
        }
        MeterReading reading;
        reading.meter_id = fields[0];
        if (fields[1] == "voltage") {
            reading.is_current = false;
        } else if (fields[1] == "current") {
            reading.is_current = true;
        } else {
            throw InputError(path.string() + ":" + std::to_string(line_number) +
                             ": kind must be voltage or current");
        }
        try {
            if (reading.is_current) {
                reading.magnitude = std::stod(fields[3]);
                reading.phi = std::stod(fields[4]);
            } else {
                reading.magnitude = std::stod(fields[2]);
            }
        } catch (const std::exception&) {
            throw InputError(path.string() + ":" + std::to_string(line_number) +
                             ": magnitude/angle fields are not numbers");
        }
        raw.readings.push_back(std::move(reading));
    }
    if (raw.readings.empty()) {
        throw InputError(path.string() + ": no measurement rows found");
    }
    return raw;
}

void write_prepared_measurements_csv(const std::filesystem::path& path,
                                     const SelectionMatrix& selection, const ComplexVector& z) {
    std::ofstream out = open_output(path);
    out << "meter_id,kind,re,im\n";
    for (std::size_t k = 0; k < selection.rows(); ++k) {
        out << selection.meter_ids[k] << ','
            << (k < selection.num_voltage_rows ? "voltage" : "current") << ','
            << z(static_cast<Eigen::Index>(k)).real() << ','
            << z(static_cast<Eigen::Index>(k)).imag() << '\n';
    }
}

}  // namespace gridstate::io
