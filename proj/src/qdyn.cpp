#include "rabiquench/qdyn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace rabiquench {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr Complex kI{0.0, 1.0};

}  // namespace

StateVector StateVector::ground() { return {{kInvSqrt2, 0.0}, {kInvSqrt2, 0.0}}; }
StateVector StateVector::excited() { return {{kInvSqrt2, 0.0}, {-kInvSqrt2, 0.0}}; }

EnergyCoefficients basis_transform(const StateVector& state) {
    return {(state.alpha + state.beta) * kInvSqrt2, (state.alpha - state.beta) * kInvSqrt2};
}

StateVector from_energy_basis(const EnergyCoefficients& c) {
    return {(c.a + c.b) * kInvSqrt2, (c.a - c.b) * kInvSqrt2};
}

QuantumModelConfig QuantumModelConfig::nh3() {
    QuantumModelConfig config;
    config.omegaP = 260.0 * config.omega1;
    return config;
}

QuantumModelConfig QuantumModelConfig::nd3() {
    QuantumModelConfig config;
    config.omegaP = 3925.0 * config.omega1;
    return config;
}

double QuantumModelConfig::max_impact_duration() const noexcept {
    if (omegaP <= 0.0) return std::numeric_limits<double>::infinity();
    return kTwoPi / omegaP;
}

std::size_t QuantumModelConfig::sample_count() const {
    const double exact = n_cycles / delta_t_sample;
    const double rounded = std::round(exact);
    if (!(rounded >= 1.0) || std::abs(exact - rounded) > 1e-9 * rounded) {
        throw ConfigError("n_cycles must be a whole number of sampling steps");
    }
    return static_cast<std::size_t>(rounded);
}

void QuantumModelConfig::validate(bool check_impact_duration) const {
    if (!(omega1 > 0.0) || !std::isfinite(omega1)) throw ConfigError("omega1 must be positive");
    if (!std::isfinite(omega0)) throw ConfigError("omega0 must be finite");
    if (!(omegaP >= 0.0) || !std::isfinite(omegaP)) throw ConfigError("omegaP must be >= 0");
    if (!(delta_t_sample > 0.0) || delta_t_sample > 0.1) {
        throw ConfigError("delta_t_sample must lie in (0, 0.1]");
    }
    if (!(p_rate >= 0.0) || !std::isfinite(p_rate)) throw ConfigError("p_rate must be >= 0");
    if (!(n_cycles >= 1.0)) throw ConfigError("n_cycles must be >= 1");
    if (delta_t_sample * p_rate > 0.5) {
        throw ConfigError("delta_t_sample * p_rate exceeds 0.5; at most one impact per step is modeled");
    }
    sample_count();
    if (check_impact_duration && p_rate > 0.0 && !(max_impact_duration() < delta_t_sample)) {
        std::ostringstream msg;
        msg << "impact duration bound 2pi/omegaP = " << max_impact_duration()
            << " is not shorter than delta_t_sample = " << delta_t_sample;
        throw ConfigError(msg.str(), Severity::Warning);
    }
}

Unitary2 Unitary2::then(const Unitary2& next) const noexcept {
    return {next.m00 * m00 + next.m01 * m10, next.m00 * m01 + next.m01 * m11,
            next.m10 * m00 + next.m11 * m10, next.m10 * m01 + next.m11 * m11};
}

Unitary2 free_unitary(double t, const QuantumModelConfig& config) {
    const double half_angle = 0.5 * config.omega1 * t;
    const double c = std::cos(half_angle);
    const Complex mis = -kI * std::sin(half_angle);
    return {c, mis, mis, c};
}

double perturbed_splitting(const QuantumModelConfig& config) noexcept {
    return std::hypot(config.omegaP, config.omega1);
}

Unitary2 impact_unitary(double duration, ImpactSide side, const QuantumModelConfig& config) {
    const double omega = perturbed_splitting(config);
    if (omega == 0.0) return {1.0, 0.0, 0.0, 1.0};
    // H' - (w0 + wP/2) = (wP/2) sz + (w1/2) sx; sz flips sign for the right well.
    const double cos_theta = (side == ImpactSide::Left ? 1.0 : -1.0) * config.omegaP / omega;
    const double sin_theta = config.omega1 / omega;
    const double c = std::cos(0.5 * omega * duration);
    const double s = std::sin(0.5 * omega * duration);
    const Complex phase = std::polar(1.0, -0.5 * config.omegaP * duration);
    const Complex off = phase * (-kI * (s * sin_theta));
    return {phase * Complex(c, -s * cos_theta), off, off, phase * Complex(c, s * cos_theta)};
}

void require_normalized(const StateVector& state, double tolerance) {
    const double norm = state.norm_squared();
    if (!(std::abs(norm - 1.0) <= tolerance)) {
        std::ostringstream msg;
        msg << "state is not normalized: |alpha|^2 + |beta|^2 = " << norm;
        throw ContractViolation(msg.str());
    }
}

StateVector free_propagate(const StateVector& state, double t, const QuantumModelConfig& config) {
    require_normalized(state);
    return free_unitary(t, config).apply(state);
}

StateVector impact_propagate(const StateVector& state, double duration, ImpactSide side,
                             const QuantumModelConfig& config) {
    require_normalized(state);
    if (!(duration >= 0.0)) throw ContractViolation("impact duration must be >= 0");
    return impact_unitary(duration, side, config).apply(state);
}

DensityMatrix density_matrix(const StateVector& state) {
    require_normalized(state);
    return {std::norm(state.alpha), std::norm(state.beta), state.alpha * std::conj(state.beta)};
}

TimeSeries simulate_trajectory(const QuantumModelConfig& config, const StateVector& initial,
                               std::uint64_t stream) {
    TimeSeries series;
    series.dt = config.delta_t_sample;
    series.values.resize(config.sample_count());
    const TrajectoryStats stats = evolve(config, initial, stream, [&](std::size_t k, const StateVector& s) {
        series.values[k] = s.occupancy_left();
    });
    series.impacts = stats.impacts;
    series.renormalizations = stats.renormalizations;
    return series;
}

StateTrajectory record_states(const QuantumModelConfig& config, const StateVector& initial,
                              std::uint64_t stream) {
    StateTrajectory trajectory;
    trajectory.dt = config.delta_t_sample;
    trajectory.states.resize(config.sample_count());
    trajectory.stats = evolve(config, initial, stream,
                              [&](std::size_t k, const StateVector& s) { trajectory.states[k] = s; });
    return trajectory;
}

ScriptedRun simulate_scripted(const QuantumModelConfig& config, const StateVector& initial,
                              std::span<const ScriptedImpact> impacts) {
    QuantumModelConfig quiet = config;
    quiet.p_rate = 0.0;
    quiet.validate(false);
    require_normalized(initial);

    std::vector<ScriptedImpact> ordered(impacts.begin(), impacts.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ScriptedImpact& x, const ScriptedImpact& y) { return x.time < y.time; });

    const std::size_t n = quiet.sample_count();
    const double record = static_cast<double>(n) * quiet.delta_t_sample;
    for (const auto& impact : ordered) {
        if (!(impact.time >= 0.0) || !(impact.time < record)) {
            throw ContractViolation("scripted impact time outside the record");
        }
        if (impact.duration && !(*impact.duration >= 0.0)) {
            throw ContractViolation("scripted impact duration must be >= 0");
        }
    }

    StreamRng rng(config.seed, 0);
    ScriptedRun run;
    run.series.dt = quiet.delta_t_sample;
    run.series.values.resize(n);
    StateVector state = initial;
    double now = 0.0;
    std::size_t next = 0;
    const auto apply_next_impact = [&] {
        const ScriptedImpact& impact = ordered[next++];
        state = free_unitary(impact.time - now, quiet).apply(state);
        now = impact.time;
        double duration = 0.0;
        if (impact.duration) {
            duration = *impact.duration;
        } else {
            const double bound = quiet.max_impact_duration();
            if (!std::isfinite(bound)) throw ConfigError("cannot draw an impact duration with omegaP = 0");
            duration = rng.uniform() * bound;
        }
        state = impact_unitary(duration, impact.side, quiet).apply(state);
        run.durations.push_back(duration);
        ++run.series.impacts;
    };
    for (std::size_t k = 0; k < n; ++k) {
        const double target = static_cast<double>(k) * quiet.delta_t_sample;
        while (next < ordered.size() && ordered[next].time < target) apply_next_impact();
        state = free_unitary(target - now, quiet).apply(state);
        now = target;
        run.series.values[k] = state.occupancy_left();
    }
    // impacts after the last sample still shape the final state
    while (next < ordered.size()) apply_next_impact();
    run.final_state = state;
    return run;
}

CoherenceStatistics coherence_statistics(std::span<const StateTrajectory> ensemble,
                                         CoherenceWindow window, std::size_t bins) {
    if (ensemble.empty()) throw ContractViolation("coherence_statistics needs at least one trajectory");
    if (bins < 4) throw ContractViolation("histogram needs at least 4 bins");
    const double dt = ensemble.front().dt;
    std::size_t length = ensemble.front().states.size();
    for (const auto& trajectory : ensemble) {
        if (trajectory.dt != dt) throw ContractViolation("trajectories have different sampling steps");
        length = std::min(length, trajectory.states.size());
    }
    if (!(dt > 0.0)) throw ContractViolation("trajectory sampling step must be positive");
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(window.t_start / dt - 1e-9)));
    const auto last = std::min(length, static_cast<std::size_t>(std::max(0.0, std::ceil(window.t_end / dt - 1e-9))));
    if (first >= last) throw ContractViolation("coherence window is empty");
    const std::size_t count = last - first;

    CoherenceStatistics stats;
    stats.samples_per_trajectory = count;
    stats.trajectory_coherence.reserve(ensemble.size());
    std::vector<double> counts(bins, 0.0);
    std::vector<Complex> ensemble_rho(count, Complex{});
    for (const auto& trajectory : ensemble) {
        double sum = 0.0;
        for (std::size_t k = first; k < last; ++k) {
            const StateVector& s = trajectory.states[k];
            const Complex rho_lr = s.alpha * std::conj(s.beta);
            sum += std::abs(rho_lr);
            ensemble_rho[k - first] += rho_lr;
            const double y = s.occupancy_left();
            auto bin = static_cast<std::size_t>(std::clamp(y, 0.0, 1.0) * static_cast<double>(bins));
            counts[std::min(bin, bins - 1)] += 1.0;
        }
        stats.trajectory_coherence.push_back(sum / static_cast<double>(count));
    }
    double mean = 0.0;
    for (double c : stats.trajectory_coherence) mean += c;
    stats.mean_trajectory_coherence = mean / static_cast<double>(ensemble.size());

    double ensemble_sum = 0.0;
    for (const Complex& rho : ensemble_rho) ensemble_sum += std::abs(rho / static_cast<double>(ensemble.size()));
    stats.ensemble_coherence = ensemble_sum / static_cast<double>(count);

    const double width = 1.0 / static_cast<double>(bins);
    const double total = static_cast<double>(count * ensemble.size());
    stats.occupancy.edges.resize(bins + 1);
    stats.occupancy.density.resize(bins);
    for (std::size_t i = 0; i <= bins; ++i) stats.occupancy.edges[i] = static_cast<double>(i) * width;
    for (std::size_t i = 0; i < bins; ++i) stats.occupancy.density[i] = counts[i] / (total * width);

    const auto& d = stats.occupancy.density;
    double center = 0.0;
    const std::size_t lo = bins / 4;
    const std::size_t hi = bins - bins / 4;
    for (std::size_t i = lo; i < hi; ++i) center += d[i];
    center /= static_cast<double>(hi - lo);
    const double edge = 0.5 * (d.front() + d.back());
    stats.edge_to_center_ratio = center > 0.0 ? edge / center : std::numeric_limits<double>::infinity();
    return stats;
}

}  // namespace rabiquench
