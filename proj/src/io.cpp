#include "rabiquench/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "rabiquench/error.hpp"

namespace rabiquench {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream stream(line);
    while (std::getline(stream, item, sep)) {
        while (!item.empty() && (item.back() == '\r' || item.back() == ' ')) item.pop_back();
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        out.push_back(item);
    }
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_number(const std::string& text, const std::string& column) {
    if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw SchemaError("column '" + column + "': not a number: '" + text + "'");
}

struct CsvTable {
    std::vector<std::string> comments;
    std::map<std::string, std::size_t> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t require(const std::string& name) const {
        const auto it = columns.find(name);
        if (it == columns.end()) throw SchemaError("missing column '" + name + "'");
        return it->second;
    }
};

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            table.comments.push_back(line.substr(line.find_first_not_of("# ") == std::string::npos
                                                     ? line.size()
                                                     : line.find_first_not_of("# ")));
            continue;
        }
        auto cells = split(line, ',');
        if (!header) {
            for (std::size_t i = 0; i < cells.size(); ++i) table.columns[cells[i]] = i;
            header = true;
            continue;
        }
        if (cells.size() != table.columns.size()) {
            throw SchemaError("row has " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(table.columns.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!header) throw SchemaError("CSV has no header row");
    return table;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json optional_number(const std::optional<double>& v) { return v ? number_or_null(*v) : Json(nullptr); }

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

std::string content_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
    return buffer;
}

Json config_to_json(const QuantumModelConfig& c) {
    return Json{{"kind", "quantum"},
                {"omega1", c.omega1},
                {"omega0", c.omega0},
                {"omegaP", c.omegaP},
                {"delta_t_sample", c.delta_t_sample},
                {"p_rate", c.p_rate},
                {"n_cycles", c.n_cycles},
                {"seed", c.seed},
                {"impact_side", c.impact_side == SidePolicy::LeftOnly ? "left-only" : "random-side"}};
}

Json config_to_json(const ClassicalModelConfig& c) {
    return Json{
        {"kind", "classical"},
        {"model", c.model == ClassicalModel::FullRandomization ? "full-randomization" : "continuity-constrained"},
        {"epsilon", c.epsilon},
        {"delta_t_sample", c.delta_t_sample},
        {"p_rate", c.p_rate},
        {"n_cycles", c.n_cycles},
        {"seed", c.seed},
        {"velocity_measure", c.velocity_measure == VelocityMeasure::UniformAmplitude ? "uniform-amplitude"
                                                                                      : "uniform-speed"},
        {"weakening", c.weakening == WeakeningRule::Phasor ? "phasor" : "amplitude-phase"}};
}

Json config_to_json(const ModelConfig& config) {
    return std::visit([](const auto& c) { return config_to_json(c); }, config);
}

Json fit_to_json(const LineshapeFit& fit) {
    return Json{{"b", number_or_null(fit.b)},
                {"nu0", number_or_null(fit.nu0)},
                {"A", number_or_null(fit.amplitude)},
                {"residual_norm", number_or_null(fit.residual_norm)},
                {"converged", fit.converged},
                {"pinned_at_zero", fit.pinned_at_zero},
                {"iterations", fit.iterations}};
}

Json comparison_to_json(const ComparisonReport& r) {
    return Json{{"p_per_bar", r.scaling.p_per_bar},
                {"pressure_bar", r.pressure_bar},
                {"nu0_data", r.nu0_data},
                {"nu0_model", r.nu0_model},
                {"nu0_residual", r.nu0_residual},
                {"b_data", r.b_data},
                {"b_model", r.b_model},
                {"b_residual", r.b_residual},
                {"nu0_rms", number_or_null(r.nu0_rms)},
                {"b_rms", number_or_null(r.b_rms)},
                {"quench_pressure_bar", optional_number(r.quench_pressure_bar)},
                {"broadening_ratio", number_or_null(r.broadening_ratio)},
                {"below_quench_points", r.below_quench_points},
                {"data_b_slope_above_quench", optional_number(r.data_b_slope_above)},
                {"model_b_slope_above_quench", optional_number(r.model_b_slope_above)}};
}

Json coherence_to_json(const CoherenceStatistics& s) {
    return Json{{"mean_trajectory_coherence", s.mean_trajectory_coherence},
                {"ensemble_coherence", s.ensemble_coherence},
                {"trajectory_coherence", s.trajectory_coherence},
                {"edge_to_center_ratio", number_or_null(s.edge_to_center_ratio)},
                {"samples_per_trajectory", s.samples_per_trajectory},
                {"occupancy_histogram", Json{{"edges", s.occupancy.edges}, {"density", s.occupancy.density}}}};
}

void write_timeseries_csv(std::ostream& out, const TimeSeries& series, std::string_view column) {
    out << "t," << column << '\n';
    for (std::size_t k = 0; k < series.size(); ++k) {
        out << format_double(series.time(k)) << ',' << format_double(series.values[k]) << '\n';
    }
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum) {
    out << "nu,power\n";
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        out << format_double(spectrum.frequencies[k]) << ',' << format_double(spectrum.power[k]) << '\n';
    }
}

Spectrum read_spectrum_csv(std::istream& in) {
    const CsvTable table = read_csv(in);
    const std::size_t nu = table.require("nu");
    const std::size_t power = table.require("power");
    Spectrum spectrum;
    for (const auto& row : table.rows) {
        spectrum.frequencies.push_back(parse_number(row[nu], "nu"));
        spectrum.power.push_back(parse_number(row[power], "power"));
    }
    return spectrum;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result, std::optional<PressureScaling> scaling) {
    out << "# rabiquench sweep model=" << result.model << " seed=" << result.seed
        << " config_hash=" << content_hash(result.config_json) << '\n';
    out << "# config=" << result.config_json << '\n';
    out << "p,pressure_bar,nu0,b,A,converged,n_traj,nu0_se,b_se\n";
    for (const auto& row : result.rows) {
        out << format_double(row.p) << ',';
        if (scaling) out << format_double(row.p / scaling->p_per_bar);
        out << ',' << format_double(row.fit.nu0) << ',' << format_double(row.fit.b) << ','
            << format_double(row.fit.amplitude) << ',' << (row.fit.converged && !row.failed ? 1 : 0) << ','
            << row.n_trajectories << ',' << format_double(row.nu0_se) << ',' << format_double(row.b_se) << '\n';
    }
}

SweepResult read_sweep_csv(std::istream& in) {
    const CsvTable table = read_csv(in);
    const std::size_t p = table.require("p");
    const std::size_t nu0 = table.require("nu0");
    const std::size_t b = table.require("b");
    const auto optional_column = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = table.columns.find(name);
        if (it == table.columns.end()) return std::nullopt;
        return it->second;
    };
    const auto amplitude = optional_column("A");
    const auto converged = optional_column("converged");
    const auto n_traj = optional_column("n_traj");
    const auto nu0_se = optional_column("nu0_se");
    const auto b_se = optional_column("b_se");

    SweepResult result;
    for (const auto& comment : table.comments) {
        std::stringstream stream(comment);
        std::string token;
        while (stream >> token) {
            if (token.rfind("model=", 0) == 0) result.model = token.substr(6);
            if (token.rfind("seed=", 0) == 0) result.seed = std::stoull(token.substr(5));
        }
        if (comment.rfind("config=", 0) == 0) result.config_json = comment.substr(7);
    }
    for (const auto& cells : table.rows) {
        SweepRow row;
        row.p = parse_number(cells[p], "p");
        row.fit.nu0 = parse_number(cells[nu0], "nu0");
        row.fit.b = parse_number(cells[b], "b");
        if (amplitude) row.fit.amplitude = parse_number(cells[*amplitude], "A");
        row.fit.converged = converged ? cells[*converged] == "1" : true;
        if (n_traj) row.n_trajectories = static_cast<std::size_t>(parse_number(cells[*n_traj], "n_traj"));
        row.nu0_se = nu0_se ? parse_number(cells[*nu0_se], "nu0_se") : std::numeric_limits<double>::quiet_NaN();
        row.b_se = b_se ? parse_number(cells[*b_se], "b_se") : std::numeric_limits<double>::quiet_NaN();
        row.failed = !std::isfinite(row.fit.nu0) || !std::isfinite(row.fit.b);
        result.rows.push_back(row);
    }
    return result;
}

void write_dataset_csv(std::ostream& out, const ExperimentalDataset& data) {
    if (!data.source.empty()) {
        std::stringstream lines(data.source);
        std::string line;
        while (std::getline(lines, line)) out << "# " << line << '\n';
    }
    out << "pressure_bar,nu0_norm,b_norm\n";
    for (const auto& point : data.points) {
        out << format_double(point.pressure_bar) << ',' << format_double(point.nu0_norm) << ','
            << format_double(point.b_norm) << '\n';
    }
}

ExperimentalDataset read_dataset_csv(std::istream& in) {
    const CsvTable table = read_csv(in);
    const std::size_t pressure = table.require("pressure_bar");
    const std::size_t nu0 = table.require("nu0_norm");
    const std::size_t b = table.require("b_norm");
    ExperimentalDataset data;
    for (std::size_t i = 0; i < table.comments.size(); ++i) {
        if (i != 0) data.source += '\n';
        data.source += table.comments[i];
    }
    for (const auto& row : table.rows) {
        data.points.push_back({parse_number(row[pressure], "pressure_bar"), parse_number(row[nu0], "nu0_norm"),
                               parse_number(row[b], "b_norm")});
    }
    data.validate();
    return data;
}

}  // namespace rabiquench
