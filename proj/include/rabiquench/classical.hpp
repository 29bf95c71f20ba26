#pragma once

// Classical baselines: a unit-frequency sinusoid x(t) = A cos(2 pi t + phi)
// whose amplitude and phase are reset at random impacts.

#include <cstdint>

#include "rabiquench/random.hpp"
#include "rabiquench/timeseries.hpp"

namespace rabiquench {

struct OscillatorState {
    double amplitude = 1.0;  // [0, 1]
    double phase = 0.0;      // [0, 2pi)

    /// Total phase 2 pi t + phi, reduced to [0, 2pi). Uses the fractional
    /// part of t so large times keep full precision.
    double total_phase(double t) const noexcept;
    double position(double t) const noexcept;
    double velocity(double t) const noexcept;
};

enum class ClassicalModel { FullRandomization, ContinuityConstrained };

/// How the continuity-constrained impact draws the new motion.
///   UniformAmplitude: A' ~ U(|x0|, 1), velocity sign ~ {+,-}.
///   UniformSpeed:     |v| ~ U(0, 2 pi sqrt(1 - x0^2)), A' follows, sign ~ {+,-}.
enum class VelocityMeasure { UniformAmplitude, UniformSpeed };

/// How a weakened impact blends the old and proposed motion.
///   Phasor:         mixes the complex amplitudes A e^{i phi} linearly. Keeps
///                   x(t0) continuous when both states agree there.
///   AmplitudePhase: mixes A linearly and phi along the shortest arc.
enum class WeakeningRule { Phasor, AmplitudePhase };

struct ClassicalModelConfig {
    ClassicalModel model = ClassicalModel::FullRandomization;
    double epsilon = 1.0;
    double delta_t_sample = 1.0 / 64.0;
    double p_rate = 0.0;
    double n_cycles = 2048.0;
    std::uint64_t seed = 1;
    VelocityMeasure velocity_measure = VelocityMeasure::UniformAmplitude;
    WeakeningRule weakening = WeakeningRule::Phasor;

    std::size_t sample_count() const;
    void validate() const;
};

/// Wraps an angle into [0, 2pi).
double wrap_phase(double angle) noexcept;

/// Shortest signed arc from `from` to `to`, in [-pi, pi).
double shortest_arc(double from, double to) noexcept;

/// Strongest impact: A' ~ U(0, 1), phi' ~ U(0, 2pi), independent of `state`.
OscillatorState impact_full(const OscillatorState& state, double t0, StreamRng& rng);

/// Keeps x(t0) fixed and redraws amplitude and velocity consistent with it.
/// Throws ContractViolation if |x(t0)| > 1.
OscillatorState impact_continuous(const OscillatorState& state, double t0, StreamRng& rng,
                                  VelocityMeasure measure = VelocityMeasure::UniformAmplitude);

/// Blends `proposed` into `old_state` with weight epsilon in (0, 1].
/// AmplitudePhase: A' = eps A_p + (1 - eps) A_o, phi' = phi_o + eps * arc(phi_o -> phi_p).
/// Phasor: A' e^{i phi'} = eps A_p e^{i phi_p} + (1 - eps) A_o e^{i phi_o}.
OscillatorState weaken(const OscillatorState& old_state, const OscillatorState& proposed, double epsilon,
                       WeakeningRule rule = WeakeningRule::Phasor);

/// x(k dt) for k = 0 .. N-1 starting from A = 1, phi = 0.
TimeSeries simulate_classical(const ClassicalModelConfig& config, std::uint64_t stream = 0);

}  // namespace rabiquench
