// rabiquench command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rabiquench/classical.hpp"
#include "rabiquench/error.hpp"
#include "rabiquench/io.hpp"
#include "rabiquench/parallel.hpp"
#include "rabiquench/qdyn.hpp"
#include "rabiquench/spectra.hpp"
#include "rabiquench/svg.hpp"
#include "rabiquench/sweep.hpp"

#ifndef RABIQUENCH_VERSION
#define RABIQUENCH_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace rabiquench;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- options

struct GlobalOptions {
    std::string config_path;
    bool json_errors = false;
    std::size_t threads = 0;
};

struct ModelOptions {
    std::string preset;  // nh3 | nd3
    std::optional<double> omega_p;
    std::string model;   // sweep/spectrum: nh3 | nd3 | custom | classical-full | classical-continuous
    double cycles = 2048.0;
    double dt = 1.0 / 64.0;
    std::uint64_t seed = 1;
    std::string side = "random-side";
    std::string init = "left";
    double epsilon = 1.0;
    std::string velocity_measure = "uniform-amplitude";
    std::string weakening = "phasor";
};

struct OutputOptions {
    std::string out;
    std::string svg;
};

struct TrajectoryOptions {
    ModelOptions model;
    OutputOptions output;
    double p = 0.0;
    std::string impacts;
    std::uint64_t stream = 0;
};

struct SweepCliOptions {
    ModelOptions model;
    OutputOptions output;
    std::string grid;
    std::size_t ensemble = 32;
    std::string fit_range = "0:4";
    std::string estimator = "power";
    std::size_t jackknife_groups = 8;
    std::string scaling;
};

struct SpectrumOptions {
    ModelOptions model;
    OutputOptions output;
    double p = 0.0;
    std::size_t ensemble = 32;
    std::string fit_range = "0:4";
    std::string estimator = "power";
    std::string fit_out;
};

struct CompareOptions {
    OutputOptions output;
    std::string sweep;
    std::string data;
    std::string scaling;
    double threshold = 0.05;
};

struct CoherenceOptions {
    ModelOptions model;
    OutputOptions output;
    double p = 7.5;
    std::size_t ensemble = 16;
    std::string window;
    std::size_t bins = 20;
    std::string trace;
};

// ---------------------------------------------------------------- helpers

fs::path resolve_output(const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) {
        if (const char* dir = std::getenv("RABIQUENCH_OUTPUT_DIR"); dir != nullptr && *dir != '\0') p = fs::path(dir) / p;
    }
    return p;
}

struct Written {
    std::string path;
    std::string hash;
};

Written write_file(const std::string& path, const std::string& content) {
    const fs::path p = resolve_output(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << content;
    if (!out) throw IoError("failed writing '" + p.string() + "'");
    return {p.string(), content_hash(content)};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::pair<double, double> parse_pair(const std::string& text, const std::string& what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError(what + " must be 'lo:hi'");
    try {
        std::size_t a = 0, b = 0;
        const double lo = std::stod(text.substr(0, colon), &a);
        const double hi = std::stod(text.substr(colon + 1), &b);
        if (a != colon || b != text.size() - colon - 1) throw std::invalid_argument(text);
        if (!(hi > lo)) throw UsageError(what + " needs hi > lo");
        return {lo, hi};
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError(what + " must be 'lo:hi', got '" + text + "'");
    }
}

StateVector initial_state(const std::string& name) {
    if (name == "left") return StateVector::left();
    if (name == "right") return StateVector::right();
    if (name == "ground") return StateVector::ground();
    if (name == "excited") return StateVector::excited();
    throw UsageError("unknown initial state '" + name + "'");
}

SidePolicy side_policy(const std::string& name) {
    if (name == "left-only") return SidePolicy::LeftOnly;
    if (name == "random-side") return SidePolicy::RandomSide;
    throw UsageError("unknown impact side policy '" + name + "'");
}

SpectralEstimator estimator_of(const std::string& name) {
    if (name == "power") return SpectralEstimator::Power;
    if (name == "magnitude") return SpectralEstimator::Magnitude;
    throw UsageError("unknown estimator '" + name + "'");
}

QuantumModelConfig quantum_config(const ModelOptions& m, const std::string& preset_name) {
    QuantumModelConfig c;
    if (preset_name == "nh3") {
        c = QuantumModelConfig::nh3();
    } else if (preset_name == "nd3") {
        c = QuantumModelConfig::nd3();
    } else if (preset_name == "custom") {
        if (!m.omega_p) throw UsageError("--omega-p is required for a custom model");
    } else {
        throw UsageError("unknown preset '" + preset_name + "'");
    }
    if (m.omega_p) c.omegaP = *m.omega_p;
    c.n_cycles = m.cycles;
    c.delta_t_sample = m.dt;
    c.seed = m.seed;
    c.impact_side = side_policy(m.side);
    return c;
}

// --preset / --omega-p pair used by trajectory and coherence.
QuantumModelConfig preset_config(const ModelOptions& m) {
    if (m.preset.empty() && !m.omega_p) throw UsageError("one of --preset or --omega-p is required");
    return quantum_config(m, m.preset.empty() ? "custom" : m.preset);
}

ModelConfig model_config(const ModelOptions& m) {
    if (m.model == "classical-full" || m.model == "classical-continuous") {
        ClassicalModelConfig c;
        c.model = m.model == "classical-full" ? ClassicalModel::FullRandomization : ClassicalModel::ContinuityConstrained;
        c.epsilon = m.epsilon;
        c.delta_t_sample = m.dt;
        c.n_cycles = m.cycles;
        c.seed = m.seed;
        if (m.velocity_measure == "uniform-amplitude") {
            c.velocity_measure = VelocityMeasure::UniformAmplitude;
        } else if (m.velocity_measure == "uniform-speed") {
            c.velocity_measure = VelocityMeasure::UniformSpeed;
        } else {
            throw UsageError("unknown velocity measure '" + m.velocity_measure + "'");
        }
        if (m.weakening == "phasor") {
            c.weakening = WeakeningRule::Phasor;
        } else if (m.weakening == "amplitude-phase") {
            c.weakening = WeakeningRule::AmplitudePhase;
        } else {
            throw UsageError("unknown weakening rule '" + m.weakening + "'");
        }
        return c;
    }
    if (m.epsilon != 1.0) throw UsageError("--epsilon applies to the classical models only");
    if (m.model.empty()) throw UsageError("--model is required");
    return quantum_config(m, m.model);
}

std::optional<PressureScaling> scaling_of(const std::string& text, const std::string& model) {
    const std::string key = text.empty() ? model : text;
    if (key == "nh3") return PressureScaling::nh3();
    if (key == "nd3") return PressureScaling::nd3();
    if (text.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        PressureScaling s{std::stod(text, &used)};
        if (used != text.size()) throw std::invalid_argument(text);
        s.validate();
        return s;
    } catch (const std::exception&) {
        throw UsageError("--scaling must be nh3, nd3 or a positive number, got '" + text + "'");
    }
}

std::vector<ScriptedImpact> parse_impacts(const std::string& text) {
    std::vector<ScriptedImpact> impacts;
    std::stringstream items(text);
    std::string item;
    while (std::getline(items, item, ',')) {
        if (item.empty()) continue;
        std::vector<std::string> parts;
        std::stringstream fields(item);
        std::string field;
        while (std::getline(fields, field, ':')) parts.push_back(field);
        if (parts.empty() || parts.size() > 3) throw UsageError("impact must be time[:duration|auto[:L|R]], got '" + item + "'");
        ScriptedImpact impact;
        try {
            impact.time = std::stod(parts[0]);
            if (parts.size() >= 2 && parts[1] != "auto") impact.duration = std::stod(parts[1]);
        } catch (const std::exception&) {
            throw UsageError("invalid impact '" + item + "'");
        }
        if (parts.size() == 3) {
            if (parts[2] == "L") {
                impact.side = ImpactSide::Left;
            } else if (parts[2] == "R") {
                impact.side = ImpactSide::Right;
            } else {
                throw UsageError("impact side must be L or R, got '" + parts[2] + "'");
            }
        }
        impacts.push_back(impact);
    }
    if (impacts.empty()) throw UsageError("--impacts lists no impacts");
    return impacts;
}

// ---------------------------------------------------------------- manifest

struct Run {
    std::string subcommand;
    std::vector<std::string> arguments;
    Json config = Json::object();
    Json summary = Json::object();
    std::vector<Written> outputs;
};

void write_manifest(const Run& run, const std::string& primary) {
    if (primary.empty()) return;
    Json manifest{{"tool", "rabiquench"},
                  {"version", RABIQUENCH_VERSION},
                  {"subcommand", run.subcommand},
                  {"arguments", run.arguments},
                  {"config", run.config},
                  {"summary", run.summary}};
    Json outputs = Json::array();
    for (const auto& w : run.outputs) outputs.push_back({{"path", w.path}, {"fnv1a64", w.hash}});
    manifest["outputs"] = outputs;
    write_file(primary + ".manifest.json", manifest.dump(2) + "\n");
}

void emit(Run& run, const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    run.outputs.push_back(write_file(path, content));
}

std::vector<double> column(const SweepResult& r, double LineshapeFit::*field) {
    std::vector<double> out;
    for (const auto& row : r.rows) out.push_back(row.fit.*field);
    return out;
}

std::vector<double> grid_of(const SweepResult& r) {
    std::vector<double> out;
    for (const auto& row : r.rows) out.push_back(row.p);
    return out;
}

// ---------------------------------------------------------------- commands

void cmd_trajectory(const TrajectoryOptions& o, Run& run) {
    QuantumModelConfig c = preset_config(o.model);
    c.p_rate = o.p;
    const StateVector init = initial_state(o.model.init);
    TimeSeries series;
    std::vector<double> impact_times;
    if (!o.impacts.empty()) {
        const auto impacts = parse_impacts(o.impacts);
        const ScriptedRun scripted = simulate_scripted(c, init, impacts);
        series = scripted.series;
        Json applied = Json::array();
        for (std::size_t i = 0; i < impacts.size(); ++i) {
            applied.push_back({{"time", impacts[i].time}, {"duration", scripted.durations[i]}});
            impact_times.push_back(impacts[i].time);
        }
        const EnergyCoefficients e = basis_transform(scripted.final_state);
        run.summary["impacts"] = applied;
        run.summary["final_a"] = {e.a.real(), e.a.imag()};
        run.summary["final_b"] = {e.b.real(), e.b.imag()};
    } else {
        series = simulate_trajectory(c, init, o.stream);
        run.summary["impacts"] = series.impacts;
        run.summary["renormalizations"] = series.renormalizations;
    }
    run.config = config_to_json(c);
    run.config["initial"] = o.model.init;
    run.config["stream"] = o.stream;

    std::ostringstream csv;
    write_timeseries_csv(csv, series);
    emit(run, o.output.out, csv.str());

    if (!o.output.svg.empty()) {
        svg::Panel panel{"Left-well occupancy", "t (cycles)", "|alpha|^2", {}, std::nullopt, std::pair{0.0, 1.0}};
        svg::Series line{"|alpha|^2", {}, series.values, svg::Style::Line, "#1f77b4"};
        for (std::size_t k = 0; k < series.size(); ++k) line.x.push_back(series.time(k));
        panel.series.push_back(std::move(line));
        if (!impact_times.empty()) {
            panel.series.push_back({"impacts", impact_times, std::vector<double>(impact_times.size(), 1.0),
                                    svg::Style::Points, "#d62728"});
        }
        emit(run, o.output.svg, svg::render(std::span(&panel, 1)));
    }
}

void cmd_sweep(const SweepCliOptions& o, const GlobalOptions& g, Run& run) {
    const ModelConfig model = model_config(o.model);
    const std::vector<double> grid = parse_grid(o.grid);
    SweepOptions opts;
    opts.ensemble = o.ensemble;
    const auto [lo, hi] = parse_pair(o.fit_range, "--fit-range");
    opts.fit_range = {lo, hi};
    opts.estimator = estimator_of(o.estimator);
    opts.threads = g.threads;
    opts.jackknife_groups = o.jackknife_groups;
    opts.initial = initial_state(o.model.init);

    const SweepResult result = run_sweep(model, grid, opts);
    const auto scaling = scaling_of(o.scaling, result.model);

    run.config = config_to_json(model);
    run.config["ensemble"] = o.ensemble;
    run.config["fit_range"] = {lo, hi};
    run.config["estimator"] = o.estimator;
    run.config["initial"] = o.model.init;
    const auto quench = detect_quench(result);
    run.summary["quench_p"] = quench ? Json(*quench) : Json(nullptr);
    try {
        run.summary["broadening_slope"] = broadening_slope(result);
    } catch (const ContractViolation&) {
        run.summary["broadening_slope"] = nullptr;
    }
    std::size_t failed = 0;
    for (const auto& row : result.rows) failed += row.failed;
    run.summary["failed_rows"] = failed;

    std::ostringstream csv;
    write_sweep_csv(csv, result, scaling);
    emit(run, o.output.out, csv.str());

    if (!o.output.svg.empty()) {
        const std::vector<double> p = grid_of(result);
        std::vector<double> reference;
        for (double v : p) reference.push_back(vvw_strong_impact_width(v));
        std::vector<svg::Panel> panels(2);
        panels[0] = {"Peak frequency (" + result.model + ")", "impacts per cycle p", "nu0", {}, std::nullopt, std::nullopt};
        panels[0].series.push_back({"nu0", p, column(result, &LineshapeFit::nu0), svg::Style::Line, "#1f77b4"});
        panels[0].series.push_back({"", p, column(result, &LineshapeFit::nu0), svg::Style::Points, "#1f77b4"});
        panels[1] = {"Width", "impacts per cycle p", "b", {}, std::nullopt, std::nullopt};
        panels[1].series.push_back({"b", p, column(result, &LineshapeFit::b), svg::Style::Line, "#ff7f0e"});
        panels[1].series.push_back({"", p, column(result, &LineshapeFit::b), svg::Style::Points, "#ff7f0e"});
        panels[1].series.push_back({"p/2pi", p, reference, svg::Style::Line, "#7f7f7f"});
        emit(run, o.output.svg, svg::render(panels));
    }
}

void cmd_spectrum(const SpectrumOptions& o, const GlobalOptions& g, Run& run) {
    const ModelConfig model = with_rate(model_config(o.model), o.p);
    std::visit([](const auto& c) { c.validate(); }, model);
    SweepOptions opts;
    opts.ensemble = o.ensemble;
    const auto [lo, hi] = parse_pair(o.fit_range, "--fit-range");
    opts.fit_range = {lo, hi};
    opts.estimator = estimator_of(o.estimator);
    opts.threads = g.threads;
    opts.initial = initial_state(o.model.init);

    const Spectrum spectrum = ensemble_spectrum(model, 0, opts);
    run.config = config_to_json(model);
    run.config["ensemble"] = o.ensemble;
    run.config["estimator"] = o.estimator;

    std::ostringstream csv;
    write_spectrum_csv(csv, spectrum);
    emit(run, o.output.out, csv.str());

    std::optional<LineshapeFit> fit;
    try {
        fit = fit_lineshape(spectrum, opts.fit_range);
        run.summary["fit"] = fit_to_json(*fit);
    } catch (const FitError& e) {
        run.summary["fit_error"] = e.what();
    }
    if (!o.fit_out.empty()) {
        Json record{{"p", o.p}, {"n_trajectories", spectrum.n_trajectories}, {"fit_range", {lo, hi}}};
        record["fit"] = fit ? fit_to_json(*fit) : Json(nullptr);
        emit(run, o.fit_out, record.dump(2) + "\n");
    }
    if (!o.output.svg.empty()) {
        svg::Panel panel{"Ensemble spectrum", "nu (cycles^-1)", "power", {}, std::pair{0.0, hi}, std::nullopt};
        svg::Series data{"spectrum", {}, {}, svg::Style::Line, "#1f77b4"};
        svg::Series model_curve{"fit", {}, {}, svg::Style::Line, "#d62728"};
        for (std::size_t k = 1; k < spectrum.size() && spectrum.frequencies[k] <= hi; ++k) {
            data.x.push_back(spectrum.frequencies[k]);
            data.y.push_back(spectrum.power[k]);
            if (fit && fit->b > 0.0) {
                model_curve.x.push_back(spectrum.frequencies[k]);
                model_curve.y.push_back(fit->amplitude * vvw_lineshape(spectrum.frequencies[k], fit->b, fit->nu0));
            }
        }
        panel.series = {data, model_curve};
        emit(run, o.output.svg, svg::render(std::span(&panel, 1)));
    }
}

void cmd_compare(const CompareOptions& o, Run& run) {
    std::istringstream sweep_text(read_file(o.sweep));
    const SweepResult result = read_sweep_csv(sweep_text);
    std::istringstream data_text(read_file(o.data));
    const ExperimentalDataset data = read_dataset_csv(data_text);
    const auto scaling = scaling_of(o.scaling, result.model);
    if (!scaling) throw UsageError("--scaling is required when the sweep model is not nh3 or nd3");

    const ComparisonReport report = compare_experiment(result, data, *scaling, o.threshold);
    Json json = comparison_to_json(report);
    json["sweep_model"] = result.model;
    json["dataset_source"] = data.source;
    run.config = {{"sweep", o.sweep}, {"data", o.data}, {"p_per_bar", scaling->p_per_bar}, {"threshold", o.threshold}};
    run.summary = {{"nu0_rms", report.nu0_rms}, {"b_rms", report.b_rms}, {"broadening_ratio", report.broadening_ratio}};
    emit(run, o.output.out, json.dump(2) + "\n");

    if (!o.output.svg.empty()) {
        std::vector<double> pressure, data_p, data_nu0, data_b;
        for (const auto& row : result.rows) pressure.push_back(row.p / scaling->p_per_bar);
        for (const auto& pt : data.points) {
            data_p.push_back(pt.pressure_bar);
            data_nu0.push_back(pt.nu0_norm);
            data_b.push_back(pt.b_norm);
        }
        std::vector<svg::Panel> panels(2);
        std::ostringstream unit;
        unit << "pressure (bar), p = " << format_double(scaling->p_per_bar) << " P";
        panels[0] = {"Peak frequency", unit.str(), "nu0 / nu0(P=0)", {}, std::nullopt, std::nullopt};
        panels[0].series.push_back({"model", pressure, column(result, &LineshapeFit::nu0), svg::Style::Line, "#1f77b4"});
        panels[0].series.push_back({"data", data_p, data_nu0, svg::Style::Points, "#d62728"});
        panels[1] = {"Width", unit.str(), "b / nu0(P=0)", {}, std::nullopt, std::nullopt};
        panels[1].series.push_back({"model", pressure, column(result, &LineshapeFit::b), svg::Style::Line, "#1f77b4"});
        panels[1].series.push_back({"data", data_p, data_b, svg::Style::Points, "#d62728"});
        emit(run, o.output.svg, svg::render(panels));
    }
}

void cmd_coherence(const CoherenceOptions& o, const GlobalOptions& g, Run& run) {
    QuantumModelConfig c = preset_config(o.model);
    c.p_rate = o.p;
    c.validate();
    const StateVector init = initial_state(o.model.init);
    if (o.ensemble == 0) throw UsageError("--ensemble must be >= 1");

    CoherenceWindow window{0.5 * c.n_cycles, c.n_cycles};
    if (!o.window.empty()) {
        const auto [lo, hi] = parse_pair(o.window, "--window");
        window = {lo, hi};
    }
    std::vector<StateTrajectory> ensemble(o.ensemble);
    parallel_for(o.ensemble, g.threads, [&](std::size_t i) { ensemble[i] = record_states(c, init, i); });
    const CoherenceStatistics stats = coherence_statistics(ensemble, window, o.bins);

    run.config = config_to_json(c);
    run.config["initial"] = o.model.init;
    run.config["ensemble"] = o.ensemble;
    run.config["window"] = {window.t_start, window.t_end};
    run.summary = {{"mean_trajectory_coherence", stats.mean_trajectory_coherence},
                   {"ensemble_coherence", stats.ensemble_coherence},
                   {"edge_to_center_ratio", stats.edge_to_center_ratio}};
    Json json = coherence_to_json(stats);
    json["p"] = o.p;
    json["window"] = {window.t_start, window.t_end};
    emit(run, o.output.out, json.dump(2) + "\n");

    // |rho_LR| of trajectory 0 and of the ensemble mean over the whole record.
    const std::size_t n = ensemble.front().states.size();
    std::vector<double> t(n), single(n), mean(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex sum{};
        for (const auto& tr : ensemble) sum += tr.states[k].alpha * std::conj(tr.states[k].beta);
        const auto& s0 = ensemble.front().states[k];
        t[k] = static_cast<double>(k) * c.delta_t_sample;
        single[k] = std::abs(s0.alpha * std::conj(s0.beta));
        mean[k] = std::abs(sum) / static_cast<double>(ensemble.size());
    }
    if (!o.trace.empty()) {
        std::ostringstream csv;
        csv << "t,abs_rho_lr,abs_mean_rho_lr\n";
        for (std::size_t k = 0; k < n; ++k) {
            csv << format_double(t[k]) << ',' << format_double(single[k]) << ',' << format_double(mean[k]) << '\n';
        }
        emit(run, o.trace, csv.str());
    }
    if (!o.output.svg.empty()) {
        std::vector<svg::Panel> panels(2);
        std::vector<double> centres;
        for (std::size_t i = 0; i + 1 < stats.occupancy.edges.size(); ++i) {
            centres.push_back(0.5 * (stats.occupancy.edges[i] + stats.occupancy.edges[i + 1]));
        }
        panels[0] = {"Occupancy histogram (late window)", "|alpha|^2", "density", {}, std::pair{0.0, 1.0}, std::nullopt};
        panels[0].series.push_back({"|alpha|^2", centres, stats.occupancy.density, svg::Style::Bars, "#1f77b4"});
        panels[1] = {"Coherence", "t (cycles)", "|rho_LR|", {}, std::nullopt, std::pair{0.0, 0.5}};
        panels[1].series.push_back({"trajectory 0", t, single, svg::Style::Line, "#1f77b4"});
        panels[1].series.push_back({"ensemble mean", t, mean, svg::Style::Line, "#d62728"});
        emit(run, o.output.svg, svg::render(panels));
    }
}

// ---------------------------------------------------------------- config file

std::string json_scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return format_double(v.get<double>());
    throw UsageError("config values must be strings, numbers or booleans");
}

// Expands --config FILE into flags. The file is a JSON object of long option
// names; an optional "command" key names the subcommand. Expanded flags are
// placed before the command-line ones so explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args, const std::vector<std::string>& commands) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;
    Json config;
    try {
        config = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!config.is_object()) throw UsageError("config file must hold a JSON object");

    std::vector<std::string> injected;
    std::string command;
    for (const auto& [key, value] : config.items()) {
        if (key == "command") {
            command = value.get<std::string>();
            continue;
        }
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back("--" + key);
            continue;
        }
        if (value.is_null()) continue;
        injected.push_back("--" + key);
        injected.push_back(json_scalar(value));
    }
    auto sub = std::find_if(args.begin(), args.end(),
                            [&](const std::string& a) { return std::find(commands.begin(), commands.end(), a) != commands.end(); });
    if (sub == args.end()) {
        if (command.empty()) return args;  // CLI11 reports the missing subcommand
        args.insert(args.begin(), command);
        sub = args.begin();
    }
    args.insert(sub + 1, injected.begin(), injected.end());
    return args;
}

// ---------------------------------------------------------------- main

void add_model_options(CLI::App* cmd, ModelOptions& m, bool preset_style) {
    if (preset_style) {
        cmd->add_option("--preset", m.preset, "Molecule preset")->check(CLI::IsMember({"nh3", "nd3"}));
    } else {
        cmd->add_option("--model", m.model, "Model")
            ->check(CLI::IsMember({"nh3", "nd3", "custom", "classical-full", "classical-continuous"}));
        cmd->add_option("--epsilon", m.epsilon, "Impact weakening factor in (0, 1] (classical models)");
        cmd->add_option("--velocity-measure", m.velocity_measure, "uniform-amplitude | uniform-speed");
        cmd->add_option("--weakening", m.weakening, "phasor | amplitude-phase");
    }
    cmd->add_option("--omega-p", m.omega_p, "Perturbation strength omegaP (rad per cycle)");
    cmd->add_option("--dt", m.dt, "Sampling step (cycles)");
    cmd->add_option("--seed", m.seed, "Master seed");
    cmd->add_option("--side", m.side, "Impact side policy: random-side | left-only");
    cmd->add_option("--init", m.init, "Initial state: left | right | ground | excited");
}

int run_cli(int argc, char** argv) {
    GlobalOptions g;
    TrajectoryOptions traj;
    traj.model.cycles = 4.0;
    SweepCliOptions sweep;
    SpectrumOptions spec;
    CompareOptions cmp;
    CoherenceOptions coh;
    coh.model.cycles = 256.0;

    CLI::App app{"Collision broadening and quenching of a two-level inversion line"};
    app.set_version_flag("--version", RABIQUENCH_VERSION);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--config", g.config_path, "JSON file of option values; command-line flags win");
    app.add_flag("--json-errors", g.json_errors, "Report errors as JSON on stderr");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores); results do not depend on it");

    auto* t = app.add_subcommand("trajectory", "Simulate one trajectory and write y(t) = |alpha|^2");
    add_model_options(t, traj.model, true);
    t->add_option("--p", traj.p, "Impacts per cycle");
    t->add_option("--cycles", traj.model.cycles, "Record length (cycles)");
    t->add_option("--impacts", traj.impacts, "Scripted impacts: time[:duration|auto[:L|R]],...");
    t->add_option("--stream", traj.stream, "Sub-stream index");
    t->add_option("--out", traj.output.out, "CSV output (default stdout)");
    t->add_option("--svg", traj.output.svg, "SVG plot output");

    auto* s = app.add_subcommand("sweep", "Sweep the impact rate and fit each ensemble spectrum");
    add_model_options(s, sweep.model, false);
    s->add_option("--p", sweep.grid, "Impact-rate grid start:stop:step")->required();
    s->add_option("--cycles", sweep.model.cycles, "Record length (cycles)");
    s->add_option("--ensemble", sweep.ensemble, "Trajectories per grid point");
    s->add_option("--fit-range", sweep.fit_range, "Fit window lo:hi (cycles^-1)");
    s->add_option("--estimator", sweep.estimator, "power | magnitude");
    s->add_option("--jackknife-groups", sweep.jackknife_groups, "Groups for jackknife standard errors");
    s->add_option("--scaling", sweep.scaling, "Pressure scaling: nh3 | nd3 | impacts per cycle per bar");
    s->add_option("--out", sweep.output.out, "CSV output (default stdout)");
    s->add_option("--svg", sweep.output.svg, "SVG plot output");

    auto* sp = app.add_subcommand("spectrum", "Ensemble spectrum and lineshape fit at one impact rate");
    add_model_options(sp, spec.model, false);
    sp->add_option("--p", spec.p, "Impacts per cycle");
    sp->add_option("--cycles", spec.model.cycles, "Record length (cycles)");
    sp->add_option("--ensemble", spec.ensemble, "Trajectories");
    sp->add_option("--fit-range", spec.fit_range, "Fit window lo:hi (cycles^-1)");
    sp->add_option("--estimator", spec.estimator, "power | magnitude");
    sp->add_option("--out", spec.output.out, "CSV output nu,power (default stdout)");
    sp->add_option("--fit-out", spec.fit_out, "JSON fit record");
    sp->add_option("--svg", spec.output.svg, "SVG plot output");

    auto* c = app.add_subcommand("compare", "Compare a sweep with a pressure-indexed dataset");
    c->add_option("--sweep", cmp.sweep, "Sweep CSV")->required();
    c->add_option("--data", cmp.data, "Dataset CSV (pressure_bar,nu0_norm,b_norm)")->required();
    c->add_option("--scaling", cmp.scaling, "nh3 | nd3 | impacts per cycle per bar");
    c->add_option("--threshold", cmp.threshold, "Quench threshold on nu0");
    c->add_option("--out", cmp.output.out, "JSON report (default stdout)");
    c->add_option("--svg", cmp.output.svg, "SVG overlay output");

    auto* h = app.add_subcommand("coherence", "Density-matrix coherence diagnostics over an ensemble");
    add_model_options(h, coh.model, true);
    h->add_option("--p", coh.p, "Impacts per cycle");
    h->add_option("--cycles", coh.model.cycles, "Record length (cycles)");
    h->add_option("--ensemble", coh.ensemble, "Trajectories");
    h->add_option("--window", coh.window, "Averaging window start:end in cycles (default: second half)");
    h->add_option("--bins", coh.bins, "Histogram bins");
    h->add_option("--trace", coh.trace, "CSV of |rho_LR| traces");
    h->add_option("--out", coh.output.out, "JSON output (default stdout)");
    h->add_option("--svg", coh.output.svg, "SVG output");

    std::vector<std::string> args(argv + 1, argv + argc);
    bool json_errors = std::find(args.begin(), args.end(), "--json-errors") != args.end();
    const auto report = [&](int code, const std::string& kind, const std::string& message) {
        if (json_errors) {
            std::cerr << Json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
        } else {
            std::cerr << "rabiquench: " << message << '\n';
            if (code == 2) std::cerr << "Run with --help for usage.\n";
        }
        return code;
    };

    try {
        args = expand_config(args, {"trajectory", "sweep", "spectrum", "compare", "coherence"});
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        json_errors = g.json_errors;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(2, "usage", e.what());
    } catch (const UsageError& e) {
        return report(2, "usage", e.what());
    } catch (const IoError& e) {
        return report(1, "io", e.what());
    }

    Run run;
    run.arguments = args;
    std::string primary;
    try {
        if (t->parsed()) {
            run.subcommand = "trajectory";
            primary = traj.output.out;
            cmd_trajectory(traj, run);
        } else if (s->parsed()) {
            run.subcommand = "sweep";
            primary = sweep.output.out;
            cmd_sweep(sweep, g, run);
        } else if (sp->parsed()) {
            run.subcommand = "spectrum";
            primary = spec.output.out;
            cmd_spectrum(spec, g, run);
        } else if (c->parsed()) {
            run.subcommand = "compare";
            primary = cmp.output.out;
            cmd_compare(cmp, run);
        } else if (h->parsed()) {
            run.subcommand = "coherence";
            primary = coh.output.out;
            cmd_coherence(coh, g, run);
        }
        if (!primary.empty() && primary != "-") write_manifest(run, primary);
    } catch (const UsageError& e) {
        return report(2, "usage", e.what());
    } catch (const ConfigError& e) {
        return report(1, e.severity() == Severity::Warning ? "config-warning" : "config", e.what());
    } catch (const SchemaError& e) {
        return report(1, "schema", e.what());
    } catch (const IoError& e) {
        return report(1, "io", e.what());
    } catch (const FitError& e) {
        return report(1, "fit", e.what());
    } catch (const ContractViolation& e) {
        return report(1, "contract", e.what());
    } catch (const std::exception& e) {
        return report(1, "runtime", e.what());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
