#include "rabiquench/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rabiquench/error.hpp"
#include "rabiquench/io.hpp"
#include "rabiquench/parallel.hpp"

namespace rabiquench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t stream_id(std::size_t row, std::size_t index) {
    return (static_cast<std::uint64_t>(row) << 32) | static_cast<std::uint64_t>(index);
}

double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

std::optional<double> slope_with_intercept(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx <= 0.0) return std::nullopt;
    return sxy / sxx;
}

double rms(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += x * x;
    return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::string model_label(const ModelConfig& model) {
    if (const auto* q = std::get_if<QuantumModelConfig>(&model)) {
        const double ratio = q->omegaP / q->omega1;
        if (ratio == 260.0) return "nh3";
        if (ratio == 3925.0) return "nd3";
        return "custom";
    }
    const auto& c = std::get<ClassicalModelConfig>(model);
    return c.model == ClassicalModel::FullRandomization ? "classical-full" : "classical-continuous";
}

std::uint64_t model_seed(const ModelConfig& model) {
    return std::visit([](const auto& config) { return config.seed; }, model);
}

ModelConfig with_rate(const ModelConfig& model, double p_rate) {
    return std::visit(
        [p_rate](auto config) -> ModelConfig {
            config.p_rate = p_rate;
            return config;
        },
        model);
}

Spectrum trajectory_spectrum(const ModelConfig& model, std::size_t row, std::size_t index,
                             const SweepOptions& options) {
    const std::uint64_t stream = stream_id(row, index);
    const TimeSeries series = std::visit(
        [&](const auto& config) {
            if constexpr (std::is_same_v<std::decay_t<decltype(config)>, QuantumModelConfig>) {
                return simulate_trajectory(config, options.initial, stream);
            } else {
                return simulate_classical(config, stream);
            }
        },
        model);
    return periodogram(series, true, options.estimator);
}

Spectrum ensemble_spectrum(const ModelConfig& model, std::size_t row, const SweepOptions& options) {
    if (options.ensemble == 0) throw ContractViolation("ensemble size must be >= 1");
    std::vector<Spectrum> spectra(options.ensemble);
    parallel_for(options.ensemble, options.threads,
                 [&](std::size_t i) { spectra[i] = trajectory_spectrum(model, row, i, options); });
    return average_spectra(spectra);
}

SweepResult run_sweep(const ModelConfig& model, std::span<const double> p_grid, const SweepOptions& options) {
    if (p_grid.empty()) throw ContractViolation("p grid is empty");
    if (!std::is_sorted(p_grid.begin(), p_grid.end())) throw ContractViolation("p grid must be ascending");
    if (options.ensemble == 0) throw ContractViolation("ensemble size must be >= 1");

    SweepResult result;
    result.model = model_label(model);
    result.config_json = config_to_json(model).dump();
    result.seed = model_seed(model);

    const std::size_t m = options.ensemble;
    const std::size_t groups = std::min(options.jackknife_groups, m);

    for (std::size_t r = 0; r < p_grid.size(); ++r) {
        SweepRow row;
        row.p = p_grid[r];
        row.nu0_se = kNaN;
        row.b_se = kNaN;
        try {
            const ModelConfig config = with_rate(model, row.p);
            std::visit([](const auto& c) { c.validate(); }, config);

            std::vector<Spectrum> spectra(m);
            parallel_for(m, options.threads,
                         [&](std::size_t i) { spectra[i] = trajectory_spectrum(config, r, i, options); });
            const Spectrum mean = average_spectra(spectra);
            row.fit = fit_lineshape(mean, options.fit_range, options.fit_options);
            row.n_trajectories = mean.n_trajectories;

            if (groups >= 2) {
                // Delete-one-group jackknife over contiguous trajectory blocks.
                std::vector<LineshapeFit> partial(groups);
                parallel_for(groups, options.threads, [&](std::size_t g) {
                    const std::size_t lo = g * m / groups;
                    const std::size_t hi = (g + 1) * m / groups;
                    Spectrum kept;
                    kept.frequencies = mean.frequencies;
                    kept.power.assign(mean.power.size(), 0.0);
                    for (std::size_t i = 0; i < m; ++i) {
                        if (i >= lo && i < hi) continue;
                        for (std::size_t k = 0; k < kept.power.size(); ++k) kept.power[k] += spectra[i].power[k];
                    }
                    const double inv = 1.0 / static_cast<double>(m - (hi - lo));
                    for (double& v : kept.power) v *= inv;
                    partial[g] = fit_lineshape(kept, options.fit_range, options.fit_options);
                });
                double nu0_mean = 0.0, b_mean = 0.0;
                for (const auto& f : partial) {
                    nu0_mean += f.nu0;
                    b_mean += f.b;
                }
                nu0_mean /= static_cast<double>(groups);
                b_mean /= static_cast<double>(groups);
                double nu0_ss = 0.0, b_ss = 0.0;
                for (const auto& f : partial) {
                    nu0_ss += (f.nu0 - nu0_mean) * (f.nu0 - nu0_mean);
                    b_ss += (f.b - b_mean) * (f.b - b_mean);
                }
                const double factor = static_cast<double>(groups - 1) / static_cast<double>(groups);
                row.nu0_se = std::sqrt(factor * nu0_ss);
                row.b_se = std::sqrt(factor * b_ss);
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
            row.fit = LineshapeFit{};
            row.fit.nu0 = kNaN;
            row.fit.b = kNaN;
            row.fit.amplitude = kNaN;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ':')) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ContractViolation("invalid grid '" + text + "'");
        }
        if (used != item.size()) throw ContractViolation("invalid grid '" + text + "'");
        parts.push_back(value);
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3) throw ContractViolation("grid must be 'start:stop:step' or a single value");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || stop < start) throw ContractViolation("grid needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = start + static_cast<double>(i) * step;
    return grid;
}

std::optional<double> detect_quench(const SweepResult& result, double threshold) {
    std::vector<const SweepRow*> rows;
    for (const auto& row : result.rows) {
        if (!row.failed) rows.push_back(&row);
    }
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (rows[i]->fit.nu0 < threshold && rows[i + 1]->fit.nu0 < threshold) {
            if (i == 0) return rows[0]->p;
            const SweepRow& above = *rows[i - 1];
            const SweepRow& below = *rows[i];
            const double drop = above.fit.nu0 - below.fit.nu0;
            if (drop <= 0.0) return below.p;
            return above.p + (above.fit.nu0 - threshold) / drop * (below.p - above.p);
        }
    }
    return std::nullopt;
}

double broadening_slope(const SweepResult& result, double p_max) {
    double sxy = 0.0, sxx = 0.0;
    std::size_t used = 0;
    for (const auto& row : result.rows) {
        if (row.failed || row.p > p_max) continue;
        sxy += row.p * row.fit.b;
        sxx += row.p * row.p;
        ++used;
    }
    if (used < 3 || sxx <= 0.0) throw ContractViolation("broadening_slope needs >= 3 rows with p <= p_max");
    return sxy / sxx;
}

void PressureScaling::validate() const {
    if (!(p_per_bar > 0.0) || !std::isfinite(p_per_bar)) throw ContractViolation("p_per_bar must be positive");
}

PressureIndexedResult map_pressure(const SweepResult& result, PressureScaling scaling) {
    scaling.validate();
    PressureIndexedResult indexed{{}, result, scaling};
    indexed.pressure_bar.reserve(result.rows.size());
    for (const auto& row : result.rows) indexed.pressure_bar.push_back(row.p / scaling.p_per_bar);
    return indexed;
}

SweepResult unmap_pressure(const PressureIndexedResult& indexed) { return indexed.source; }

void ExperimentalDataset::validate() const {
    for (const auto& point : points) {
        if (!(point.pressure_bar >= 0.0)) throw ContractViolation("dataset pressure must be >= 0");
        if (!(point.nu0_norm >= 0.0 && point.nu0_norm <= 1.1)) {
            throw ContractViolation("dataset nu0_norm must lie in [0, 1.1]");
        }
    }
}

ComparisonReport compare_experiment(const SweepResult& result, const ExperimentalDataset& data,
                                    PressureScaling scaling, double quench_threshold) {
    scaling.validate();
    if (data.points.empty()) throw ContractViolation("experimental dataset is empty");
    data.validate();

    std::vector<double> pressure, nu0, b;
    for (const auto& row : result.rows) {
        if (row.failed) continue;
        pressure.push_back(row.p / scaling.p_per_bar);
        nu0.push_back(row.fit.nu0);
        b.push_back(row.fit.b);
    }
    if (pressure.size() < 2) throw ContractViolation("model curve needs at least two valid rows");

    ComparisonReport report;
    report.scaling = scaling;
    if (const auto p_star = detect_quench(result, quench_threshold)) {
        report.quench_pressure_bar = *p_star / scaling.p_per_bar;
    }

    std::vector<ExperimentalPoint> points = data.points;
    std::stable_sort(points.begin(), points.end(),
                     [](const auto& x, const auto& y) { return x.pressure_bar < y.pressure_bar; });
    for (const auto& point : points) {
        if (point.pressure_bar < pressure.front() || point.pressure_bar > pressure.back()) continue;
        const double nu0_model = interpolate(pressure, nu0, point.pressure_bar);
        const double b_model = interpolate(pressure, b, point.pressure_bar);
        report.pressure_bar.push_back(point.pressure_bar);
        report.nu0_data.push_back(point.nu0_norm);
        report.nu0_model.push_back(nu0_model);
        report.nu0_residual.push_back(point.nu0_norm - nu0_model);
        report.b_data.push_back(point.b_norm);
        report.b_model.push_back(b_model);
        report.b_residual.push_back(point.b_norm - b_model);
    }
    if (report.pressure_bar.empty()) throw ContractViolation("dataset and model pressure ranges do not overlap");
    report.nu0_rms = rms(report.nu0_residual);
    report.b_rms = rms(report.b_residual);

    const double cut = report.quench_pressure_bar.value_or(std::numeric_limits<double>::infinity());
    double sxy = 0.0, sxx = 0.0;
    std::vector<double> data_p_above, data_b_above;
    for (std::size_t i = 0; i < report.pressure_bar.size(); ++i) {
        if (report.pressure_bar[i] < cut) {
            sxy += report.b_data[i] * report.b_model[i];
            sxx += report.b_model[i] * report.b_model[i];
            ++report.below_quench_points;
        }
    }
    report.broadening_ratio = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();

    if (report.quench_pressure_bar) {
        for (const auto& point : points) {
            if (point.pressure_bar > cut) {
                data_p_above.push_back(point.pressure_bar);
                data_b_above.push_back(point.b_norm);
            }
        }
        std::vector<double> model_p_above, model_b_above;
        for (std::size_t i = 0; i < pressure.size(); ++i) {
            if (pressure[i] > cut) {
                model_p_above.push_back(pressure[i]);
                model_b_above.push_back(b[i]);
            }
        }
        report.data_b_slope_above = slope_with_intercept(data_p_above, data_b_above);
        report.model_b_slope_above = slope_with_intercept(model_p_above, model_b_above);
    }
    return report;
}

}  // namespace rabiquench
