#pragma once

// Two-level (double-well) dynamics of the inversion mode.
//
// State amplitudes live in the spatial basis {|L>, |R>}. Time is measured in
// unperturbed Rabi cycles, so omega1 = 2*pi. Free evolution uses
//     H  = [[w0, w1/2], [w1/2, w0]]
// and an impact tilts the left (or right) well for a duration dt:
//     H' = [[w0 + wP, w1/2], [w1/2, w0]].
// Both propagators are applied in closed form; w0 only adds a global phase
// and is dropped.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rabiquench/error.hpp"
#include "rabiquench/random.hpp"
#include "rabiquench/timeseries.hpp"

namespace rabiquench {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct StateVector {
    Complex alpha{1.0, 0.0};  // |L>
    Complex beta{0.0, 0.0};   // |R>

    double norm_squared() const noexcept { return std::norm(alpha) + std::norm(beta); }
    double occupancy_left() const noexcept { return std::norm(alpha); }

    static StateVector left() { return {{1.0, 0.0}, {0.0, 0.0}}; }
    static StateVector right() { return {{0.0, 0.0}, {1.0, 0.0}}; }
    /// Symmetric energy eigenstate (a = 1, b = 0).
    static StateVector ground();
    /// Antisymmetric energy eigenstate (a = 0, b = 1).
    static StateVector excited();
};

/// Coefficients on the energy eigenstates: Psi = a*Psi0 + b*Psi1 with
/// Psi0 = (|L> + |R>)/sqrt2, Psi1 = (|L> - |R>)/sqrt2.
struct EnergyCoefficients {
    Complex a;
    Complex b;
};

EnergyCoefficients basis_transform(const StateVector& state);
StateVector from_energy_basis(const EnergyCoefficients& coefficients);

enum class ImpactSide { Left, Right };
enum class SidePolicy { LeftOnly, RandomSide };

struct QuantumModelConfig {
    double omega1 = kTwoPi;
    double omega0 = 0.0;
    double omegaP = 260.0 * kTwoPi;
    double delta_t_sample = 1.0 / 64.0;
    double p_rate = 0.0;
    double n_cycles = 2048.0;
    std::uint64_t seed = 1;
    SidePolicy impact_side = SidePolicy::RandomSide;

    /// NH3: wP = 208 cm^-1 / 0.8 cm^-1 = 260 w1.
    static QuantumModelConfig nh3();
    /// ND3: wP = 208 cm^-1 / 0.053 cm^-1 = 3925 w1.
    static QuantumModelConfig nd3();

    /// Longest impact duration, 2*pi/wP (infinite when wP = 0).
    double max_impact_duration() const noexcept;
    std::size_t sample_count() const;

    /// Throws ConfigError. The impact-duration bound 2pi/wP < dt is reported
    /// with Severity::Warning and only checked when impacts can occur and
    /// `check_impact_duration` is set.
    void validate(bool check_impact_duration = true) const;
};

struct ImpactEvent {
    std::size_t sample = 0;
    double duration = 0.0;
    ImpactSide side = ImpactSide::Left;
};

/// 2x2 unitary acting on (alpha, beta).
struct Unitary2 {
    Complex m00, m01, m10, m11;

    StateVector apply(const StateVector& s) const noexcept {
        return {m00 * s.alpha + m01 * s.beta, m10 * s.alpha + m11 * s.beta};
    }
    Unitary2 then(const Unitary2& next) const noexcept;
};

Unitary2 free_unitary(double t, const QuantumModelConfig& config);
Unitary2 impact_unitary(double duration, ImpactSide side, const QuantumModelConfig& config);

StateVector free_propagate(const StateVector& state, double t, const QuantumModelConfig& config);
StateVector impact_propagate(const StateVector& state, double duration, ImpactSide side,
                             const QuantumModelConfig& config);

/// Perturbed splitting Omega = sqrt(wP^2 + w1^2).
double perturbed_splitting(const QuantumModelConfig& config) noexcept;

struct DensityMatrix {
    double rho_LL = 1.0;
    double rho_RR = 0.0;
    Complex rho_LR{0.0, 0.0};

    Complex rho_RL() const noexcept { return std::conj(rho_LR); }
    double trace() const noexcept { return rho_LL + rho_RR; }
    /// rho_LL*rho_RR - |rho_LR|^2; zero for pure states.
    double determinant() const noexcept { return rho_LL * rho_RR - std::norm(rho_LR); }
};

DensityMatrix density_matrix(const StateVector& state);

void require_normalized(const StateVector& state, double tolerance = 1e-9);

struct TrajectoryStats {
    std::size_t impacts = 0;
    std::size_t renormalizations = 0;
};

/// Renormalization trigger on |norm^2 - 1| per step.
inline constexpr double kRenormalizeThreshold = 1e-12;

/// Core stochastic loop. At each sample k the observer sees (k, state); then
/// with probability dt*p an impact kick is applied (duration ~ U(0, 2pi/wP),
/// side per policy) and the state advances freely by dt. Kicks take zero
/// clock time so the sample grid stays uniform.
template <class Observer>
TrajectoryStats evolve(const QuantumModelConfig& config, StateVector state, std::uint64_t stream,
                       Observer&& observe, std::vector<ImpactEvent>* events = nullptr) {
    config.validate();
    require_normalized(state);
    StreamRng rng(config.seed, stream);
    const Unitary2 step = free_unitary(config.delta_t_sample, config);
    const double impact_probability = config.delta_t_sample * config.p_rate;
    const double max_duration = config.max_impact_duration();
    const std::size_t n = config.sample_count();
    TrajectoryStats stats;
    for (std::size_t k = 0; k < n; ++k) {
        observe(k, static_cast<const StateVector&>(state));
        if (rng.uniform() < impact_probability) {
            const double duration = rng.uniform() * max_duration;
            ImpactSide side = ImpactSide::Left;
            if (config.impact_side == SidePolicy::RandomSide && rng.coin()) side = ImpactSide::Right;
            state = impact_unitary(duration, side, config).apply(state);
            if (events != nullptr) events->push_back({k, duration, side});
            ++stats.impacts;
        }
        state = step.apply(state);
        const double drift = state.norm_squared() - 1.0;
        if (drift > kRenormalizeThreshold || drift < -kRenormalizeThreshold) {
            const double scale = 1.0 / std::sqrt(state.norm_squared());
            state.alpha *= scale;
            state.beta *= scale;
            ++stats.renormalizations;
        }
    }
    return stats;
}

/// y(k dt) = |alpha(k dt)|^2 for k = 0 .. N-1, N = n_cycles/dt.
/// Bit-identical for identical (config, initial, stream).
TimeSeries simulate_trajectory(const QuantumModelConfig& config,
                               const StateVector& initial = StateVector::left(),
                               std::uint64_t stream = 0);

/// Full state history, for density-matrix diagnostics.
struct StateTrajectory {
    std::vector<StateVector> states;
    double dt = 0.0;
    TrajectoryStats stats;
};

StateTrajectory record_states(const QuantumModelConfig& config,
                              const StateVector& initial = StateVector::left(),
                              std::uint64_t stream = 0);

/// Impact at an explicit time (cycles). A missing duration is drawn from
/// U(0, 2pi/wP) using the config seed.
struct ScriptedImpact {
    double time = 0.0;
    std::optional<double> duration;
    ImpactSide side = ImpactSide::Left;
};

struct ScriptedRun {
    TimeSeries series;
    std::vector<double> durations;  // durations actually applied, in order
    StateVector final_state;
};

/// Deterministic trajectory with impacts at the given times (p_rate ignored).
/// Impacts land at their exact times between grid points; the duration bound
/// 2pi/wP < dt is not enforced here.
ScriptedRun simulate_scripted(const QuantumModelConfig& config, const StateVector& initial,
                              std::span<const ScriptedImpact> impacts);

struct CoherenceWindow {
    double t_start = 0.0;  // cycles, inclusive
    double t_end = 0.0;    // cycles, exclusive
};

struct OccupancyHistogram {
    std::vector<double> edges;    // bins + 1 edges on [0, 1]
    std::vector<double> density;  // normalized so sum(density * width) = 1
};

struct CoherenceStatistics {
    /// Time average of |rho_LR| for each trajectory.
    std::vector<double> trajectory_coherence;
    /// Mean of trajectory_coherence.
    double mean_trajectory_coherence = 0.0;
    /// Time average of |<rho_LR>_ensemble(t)|.
    double ensemble_coherence = 0.0;
    OccupancyHistogram occupancy;
    /// Mean density of the two outermost bins over the mean density of the
    /// central half. 1 for uniform |alpha|^2, ~4 for an undisturbed
    /// oscillation, and large for states piled up at 0 and 1.
    double edge_to_center_ratio = 0.0;
    std::size_t samples_per_trajectory = 0;
};

CoherenceStatistics coherence_statistics(std::span<const StateTrajectory> ensemble,
                                         CoherenceWindow window, std::size_t bins = 20);

}  // namespace rabiquench
