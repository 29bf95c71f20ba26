#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rabiquench/classical.hpp"
#include "rabiquench/qdyn.hpp"
#include "rabiquench/spectra.hpp"

namespace rabiquench {

using ModelConfig = std::variant<QuantumModelConfig, ClassicalModelConfig>;

std::string model_label(const ModelConfig& model);
std::uint64_t model_seed(const ModelConfig& model);
ModelConfig with_rate(const ModelConfig& model, double p_rate);

struct SweepOptions {
    std::size_t ensemble = 32;
    FitRange fit_range{};
    FitOptions fit_options{};
    SpectralEstimator estimator = SpectralEstimator::Power;
    /// Worker cap; 0 = hardware concurrency. Results do not depend on it.
    std::size_t threads = 0;
    /// Delete-one-group jackknife groups for standard errors (<= ensemble).
    std::size_t jackknife_groups = 8;
    /// Initial state of quantum trajectories.
    StateVector initial = StateVector::left();
};

/// Simulates trajectory `index` of `row` and returns its periodogram.
Spectrum trajectory_spectrum(const ModelConfig& model, std::size_t row, std::size_t index,
                             const SweepOptions& options);

/// Ensemble-averaged spectrum of one model configuration.
Spectrum ensemble_spectrum(const ModelConfig& model, std::size_t row, const SweepOptions& options);

struct SweepRow {
    double p = 0.0;
    LineshapeFit fit;
    double nu0_se = 0.0;  // jackknife standard errors, NaN when unavailable
    double b_se = 0.0;
    std::size_t n_trajectories = 0;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // ascending p
    std::string model;
    std::string config_json;     // snapshot of the template config
    std::uint64_t seed = 0;
};

/// For each p: M trajectories on sub-streams (row << 32 | i), averaged
/// periodograms, lineshape fit. Per-row failures are recorded, not thrown.
SweepResult run_sweep(const ModelConfig& model, std::span<const double> p_grid, const SweepOptions& options = {});

/// Parses "start:stop:step" (inclusive stop, tolerant to rounding) or a
/// single value.
std::vector<double> parse_grid(const std::string& text);

/// Smallest p at which nu0 < threshold on two consecutive rows, linearly
/// interpolated between the bracketing rows. Failed rows are skipped.
std::optional<double> detect_quench(const SweepResult& result, double threshold = 0.05);

/// Least-squares slope of b against p through the origin for p <= p_max.
double broadening_slope(const SweepResult& result, double p_max = 2.0);

struct PressureScaling {
    double p_per_bar = 4.5;

    static PressureScaling nh3() { return {4.5}; }
    static PressureScaling nd3() { return {67.5}; }  // 4.5 impacts per cycle at 1/15 bar
    void validate() const;
};

struct PressureIndexedResult {
    std::vector<double> pressure_bar;  // parallel to source.rows
    SweepResult source;
    PressureScaling scaling;
};

PressureIndexedResult map_pressure(const SweepResult& result, PressureScaling scaling);
/// Inverse relabeling; recovers p exactly from the stored source rows.
SweepResult unmap_pressure(const PressureIndexedResult& indexed);

struct ExperimentalPoint {
    double pressure_bar = 0.0;
    double nu0_norm = 0.0;
    double b_norm = 0.0;
};

struct ExperimentalDataset {
    std::vector<ExperimentalPoint> points;
    std::string source;

    void validate() const;
};

struct ComparisonReport {
    std::vector<double> pressure_bar;  // data pressures inside the model range
    std::vector<double> nu0_data, nu0_model, nu0_residual;
    std::vector<double> b_data, b_model, b_residual;
    double nu0_rms = 0.0;
    double b_rms = 0.0;
    std::optional<double> quench_pressure_bar;
    /// Slope of b_data against b_model through the origin, below quench.
    double broadening_ratio = 0.0;
    std::size_t below_quench_points = 0;
    /// Slopes of b against pressure above the quench pressure.
    std::optional<double> data_b_slope_above;
    std::optional<double> model_b_slope_above;
    PressureScaling scaling;
};

/// Interpolates the model curves at the data pressures. Throws ContractViolation
/// for an empty dataset or no overlap.
ComparisonReport compare_experiment(const SweepResult& result, const ExperimentalDataset& data,
                                    PressureScaling scaling, double quench_threshold = 0.05);

}  // namespace rabiquench
