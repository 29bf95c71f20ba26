#include "rabiquench/classical.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "rabiquench/error.hpp"
#include "rabiquench/qdyn.hpp"

namespace rabiquench {

double wrap_phase(double angle) noexcept {
    double wrapped = std::fmod(angle, kTwoPi);
    if (wrapped < 0.0) wrapped += kTwoPi;
    if (wrapped >= kTwoPi) wrapped = 0.0;
    return wrapped;
}

double shortest_arc(double from, double to) noexcept {
    double d = wrap_phase(to - from);
    if (d >= kPi) d -= kTwoPi;
    return d;
}

double OscillatorState::total_phase(double t) const noexcept {
    return wrap_phase(kTwoPi * (t - std::floor(t)) + phase);
}

double OscillatorState::position(double t) const noexcept { return amplitude * std::cos(total_phase(t)); }

double OscillatorState::velocity(double t) const noexcept {
    return -kTwoPi * amplitude * std::sin(total_phase(t));
}

std::size_t ClassicalModelConfig::sample_count() const {
    const double exact = n_cycles / delta_t_sample;
    const double rounded = std::round(exact);
    if (!(rounded >= 1.0) || std::abs(exact - rounded) > 1e-9 * rounded) {
        throw ConfigError("n_cycles must be a whole number of sampling steps");
    }
    return static_cast<std::size_t>(rounded);
}

void ClassicalModelConfig::validate() const {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("epsilon must lie in (0, 1]");
    if (!(delta_t_sample > 0.0) || delta_t_sample > 0.1) {
        throw ConfigError("delta_t_sample must lie in (0, 0.1]");
    }
    if (!(p_rate >= 0.0) || !std::isfinite(p_rate)) throw ConfigError("p_rate must be >= 0");
    if (!(n_cycles >= 1.0)) throw ConfigError("n_cycles must be >= 1");
    if (delta_t_sample * p_rate > 0.5) {
        throw ConfigError("delta_t_sample * p_rate exceeds 0.5; at most one impact per step is modeled");
    }
    sample_count();
}

OscillatorState impact_full(const OscillatorState& /*state*/, double /*t0*/, StreamRng& rng) {
    const double amplitude = rng.uniform();
    const double phase = rng.uniform(0.0, kTwoPi);
    return {amplitude, phase};
}

OscillatorState impact_continuous(const OscillatorState& state, double t0, StreamRng& rng,
                                  VelocityMeasure measure) {
    const double x0 = state.position(t0);
    if (!(std::abs(x0) <= 1.0 + 1e-12)) throw ContractViolation("|x(t0)| exceeds 1");
    const double ax = std::min(std::abs(x0), 1.0);

    double amplitude = 0.0;
    if (measure == VelocityMeasure::UniformAmplitude) {
        amplitude = ax + (1.0 - ax) * rng.uniform();
    } else {
        const double reduced_speed = std::sqrt(std::max(0.0, 1.0 - ax * ax)) * rng.uniform();
        amplitude = std::min(1.0, std::hypot(ax, reduced_speed));
    }
    const bool moving_up = rng.coin();

    // Solve A' cos(psi) = x0; the velocity -2 pi A' sin(psi) takes the drawn sign.
    double psi = amplitude > 0.0 ? std::acos(std::clamp(x0 / amplitude, -1.0, 1.0)) : 0.5 * kPi;
    if (moving_up) psi = -psi;
    return {amplitude, wrap_phase(psi - kTwoPi * (t0 - std::floor(t0)))};
}

OscillatorState weaken(const OscillatorState& old_state, const OscillatorState& proposed, double epsilon,
                       WeakeningRule rule) {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw ContractViolation("epsilon must lie in (0, 1]");
    if (epsilon == 1.0) return proposed;
    if (rule == WeakeningRule::AmplitudePhase) {
        return {epsilon * proposed.amplitude + (1.0 - epsilon) * old_state.amplitude,
                wrap_phase(old_state.phase + epsilon * shortest_arc(old_state.phase, proposed.phase))};
    }
    const std::complex<double> mixed = epsilon * std::polar(proposed.amplitude, proposed.phase) +
                                       (1.0 - epsilon) * std::polar(old_state.amplitude, old_state.phase);
    const double amplitude = std::min(1.0, std::abs(mixed));
    if (amplitude == 0.0) return {0.0, old_state.phase};
    return {amplitude, wrap_phase(std::arg(mixed))};
}

TimeSeries simulate_classical(const ClassicalModelConfig& config, std::uint64_t stream) {
    config.validate();
    StreamRng rng(config.seed, stream);
    const std::size_t n = config.sample_count();
    const double impact_probability = config.delta_t_sample * config.p_rate;

    TimeSeries series;
    series.dt = config.delta_t_sample;
    series.values.resize(n);
    OscillatorState state;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * config.delta_t_sample;
        if (rng.uniform() < impact_probability) {
            const OscillatorState proposed = config.model == ClassicalModel::FullRandomization
                                                 ? impact_full(state, t, rng)
                                                 : impact_continuous(state, t, rng, config.velocity_measure);
            state = weaken(state, proposed, config.epsilon, config.weakening);
            ++series.impacts;
        }
        series.values[k] = state.position(t);
    }
    return series;
}

}  // namespace rabiquench
