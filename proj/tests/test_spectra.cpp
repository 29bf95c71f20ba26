#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rabiquench/error.hpp"
#include "rabiquench/qdyn.hpp"
#include "rabiquench/spectra.hpp"

using namespace rabiquench;

namespace {

TimeSeries make_series(std::size_t n, double dt, auto&& f) {
    TimeSeries s;
    s.dt = dt;
    s.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) s.values[k] = f(static_cast<double>(k) * dt);
    return s;
}

TimeSeries white_noise(std::size_t n, double sigma, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, sigma);
    TimeSeries s;
    s.dt = 1.0 / 64.0;
    s.values.resize(n);
    for (double& v : s.values) v = g(gen);
    return s;
}

Spectrum synthetic(double amplitude, double b, double nu0, double record = 64.0, double dt = 1.0 / 64.0) {
    Spectrum s;
    const auto bins = static_cast<std::size_t>(std::round(record / dt)) / 2 + 1;
    for (std::size_t k = 0; k < bins; ++k) {
        const double nu = static_cast<double>(k) / record;
        s.frequencies.push_back(nu);
        s.power.push_back(amplitude * oracle::vvw(nu, b, nu0));
    }
    return s;
}

}  // namespace

TEST_CASE("periodogram matches a direct DFT") {
    const TimeSeries x = white_noise(250, 1.0, 4);
    const Spectrum fast = periodogram(x);
    const std::vector<double> slow = oracle::direct_periodogram(x.values);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t k = 0; k < slow.size(); ++k) CHECK(fast.power[k] == doctest::Approx(slow[k]).epsilon(1e-9).scale(1.0));
    CHECK(fast.resolution() == doctest::Approx(1.0 / (250.0 / 64.0)));

    const TimeSeries odd = white_noise(251, 1.0, 5);
    const Spectrum fast_odd = periodogram(odd);
    const std::vector<double> slow_odd = oracle::direct_periodogram(odd.values);
    for (std::size_t k = 0; k < slow_odd.size(); ++k) {
        CHECK(fast_odd.power[k] == doctest::Approx(slow_odd[k]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("pure on-grid tone occupies one bin") {
    const TimeSeries x = make_series(2048 * 64, 1.0 / 64.0, [](double t) { return std::cos(kTwoPi * t); });
    const Spectrum s = periodogram(x);
    const auto peak = static_cast<std::size_t>(std::max_element(s.power.begin(), s.power.end()) - s.power.begin());
    CHECK(s.frequencies[peak] == doctest::Approx(1.0));
    CHECK(s.frequencies.back() == doctest::Approx(32.0));
    double worst = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (k != peak) worst = std::max(worst, s.power[k] / s.power[peak]);
    }
    CHECK(worst < 1e-18);
}

TEST_CASE("constant series with mean removal is all zero") {
    const TimeSeries x = make_series(1000, 0.01, [](double) { return 3.25; });
    for (double p : periodogram(x).power) CHECK(std::abs(p) < 1e-24);
    CHECK(periodogram(x, false).power[0] == doctest::Approx(1000.0 * 3.25 * 3.25));
}

TEST_CASE("Parseval") {
    for (std::size_t n : {1000u, 1001u, 65536u}) {
        const TimeSeries x = white_noise(n, 0.7, n);
        const Spectrum s = periodogram(x);
        double total = 0.0;
        for (double p : s.power) total += p;
        CHECK(total == doctest::Approx(static_cast<double>(n) * oracle::variance(x.values)).epsilon(1e-9));
    }
}

TEST_CASE("white noise is flat and averaging shrinks scatter as 1/M") {
    const double sigma = 0.5;
    const std::size_t n = 4096;
    auto scatter = [&](std::size_t m, std::uint64_t seed) {
        std::vector<Spectrum> spectra;
        for (std::size_t i = 0; i < m; ++i) spectra.push_back(periodogram(white_noise(n, sigma, seed + i)));
        const Spectrum mean = average_spectra(spectra);
        CHECK(mean.n_trajectories == m);
        std::vector<double> interior(mean.power.begin() + 1, mean.power.end() - 1);
        double mu = 0.0;
        for (double v : interior) mu += v;
        mu /= static_cast<double>(interior.size());
        // Expected one-sided level 2 sigma^2.
        CHECK(mu == doctest::Approx(2.0 * sigma * sigma).epsilon(0.05));
        // Low and high halves agree: flat.
        const std::size_t h = interior.size() / 2;
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < h; ++i) lo += interior[i];
        for (std::size_t i = h; i < 2 * h; ++i) hi += interior[i];
        CHECK(lo / hi == doctest::Approx(1.0).epsilon(0.1));
        return oracle::variance(interior) / (mu * mu);
    };
    const double v1 = scatter(1, 100);
    const double v16 = scatter(16, 200);
    // Exponential bins: relative variance 1, then 1/16.
    CHECK(v1 == doctest::Approx(1.0).epsilon(0.15));
    CHECK(v16 == doctest::Approx(1.0 / 16.0).epsilon(0.15));
}

TEST_CASE("average_spectra examples and contracts") {
    const Spectrum s = periodogram(white_noise(512, 1.0, 1));
    for (std::size_t k : {1u, 3u, 4u, 5u}) {
        const Spectrum avg = average_spectra(std::vector<Spectrum>(k, s));
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(avg.power[i] == doctest::Approx(s.power[i]).epsilon(1e-15));
    }

    Spectrum triple = s;
    for (double& p : triple.power) p *= 3.0;
    const std::vector<Spectrum> pair{s, triple};
    const Spectrum avg = average_spectra(pair);
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(avg.power[k] == doctest::Approx(2.0 * s.power[k]));

    const std::vector<Spectrum> mismatched{s, periodogram(white_noise(256, 1.0, 2))};
    CHECK_THROWS_AS(average_spectra(mismatched), ContractViolation);
    CHECK_THROWS_AS(average_spectra(std::vector<Spectrum>{}), ContractViolation);
    CHECK_THROWS_AS(periodogram(TimeSeries{{1.0}, 0.1, 0, 0}), ContractViolation);
    CHECK_THROWS_AS(periodogram(TimeSeries{}), ContractViolation);
}

TEST_CASE("magnitude estimator is the square root of power") {
    const TimeSeries x = white_noise(1024, 1.0, 3);
    const Spectrum p = periodogram(x);
    const Spectrum m = periodogram(x, true, SpectralEstimator::Magnitude);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(m.power[k] == doctest::Approx(std::sqrt(p.power[k])));
}

TEST_CASE("lineshape values") {
    CHECK(vvw_lineshape(1.0, 0.1, 1.0) == doctest::Approx(1.0 + 1.0 / 401.0).epsilon(1e-15));
    CHECK(vvw_lineshape(1.0, 0.1, 1.0) == doctest::Approx(1.002494).epsilon(1e-6));
    for (double b : {0.05, 0.3, 2.0}) {
        CHECK(vvw_lineshape(0.0, b, 0.0) == 2.0);
        CHECK(vvw_lineshape(0.7, b, 0.0) == doctest::Approx(2.0 / (1.0 + 0.49 / (b * b))));
        CHECK(vvw_lineshape(0.0, b, 0.4) == doctest::Approx(2.0 / (1.0 + 0.16 / (b * b))));
        for (double nu : {0.1, 0.9, 3.3}) {
            CHECK(vvw_lineshape(nu, b, 0.8) == vvw_lineshape(-nu, b, 0.8));
            CHECK(vvw_lineshape(nu, b, 0.8) == doctest::Approx(oracle::vvw(nu, b, 0.8)).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS(vvw_lineshape(1.0, 0.0, 1.0), ContractViolation);
    CHECK_THROWS_AS(vvw_lineshape(1.0, -0.1, 1.0), ContractViolation);
}

TEST_CASE("strong impact width") {
    CHECK(vvw_strong_impact_width(kTwoPi) == doctest::Approx(1.0));
    CHECK(vvw_strong_impact_width(1.0) == doctest::Approx(0.159).epsilon(1e-3));
    CHECK(vvw_strong_impact_width(0.0) == 0.0);
}

TEST_CASE("noiseless fit round-trip over the parameter grid") {
    for (double b : {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0}) {
        for (double nu0 : {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5}) {
            CAPTURE(b);
            CAPTURE(nu0);
            const double amplitude = 3.7;
            const LineshapeFit fit = fit_lineshape(synthetic(amplitude, b, nu0));
            CHECK(fit.converged);
            CHECK(fit.b == doctest::Approx(b).epsilon(1e-6));
            CHECK(fit.amplitude == doctest::Approx(amplitude).epsilon(1e-6));
            if (nu0 == 0.0) {
                CHECK(fit.nu0 < 1e-6);
            } else {
                CHECK(fit.nu0 == doctest::Approx(nu0).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("fit example: width 0.2 at unit frequency") {
    const LineshapeFit fit = fit_lineshape(synthetic(1.0, 0.2, 1.0));
    CHECK(fit.b == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(fit.nu0 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.amplitude == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_FALSE(fit.pinned_at_zero);
}

TEST_CASE("fit is invariant under scaling") {
    QuantumModelConfig c = QuantumModelConfig::nh3();
    c.n_cycles = 256;
    c.p_rate = 2.0;
    std::vector<Spectrum> spectra;
    for (std::uint64_t i = 0; i < 8; ++i) spectra.push_back(periodogram(simulate_trajectory(c, StateVector::left(), i)));
    const Spectrum s = average_spectra(spectra);
    const LineshapeFit base = fit_lineshape(s);
    for (double factor : {1e-6, 0.37, 1e5}) {
        Spectrum scaled = s;
        for (double& p : scaled.power) p *= factor;
        const LineshapeFit fit = fit_lineshape(scaled);
        CHECK(fit.b == doctest::Approx(base.b).epsilon(1e-9));
        CHECK(fit.nu0 == doctest::Approx(base.nu0).epsilon(1e-9));
        CHECK(fit.amplitude == doctest::Approx(base.amplitude * factor).epsilon(1e-9));
    }
}

TEST_CASE("fit of the unperturbed oscillation") {
    QuantumModelConfig c = QuantumModelConfig::nh3();
    const Spectrum s = periodogram(simulate_trajectory(c));
    const LineshapeFit fit = fit_lineshape(s);
    CHECK(std::abs(fit.nu0 - 1.0) <= s.resolution());
    CHECK(fit.b <= s.resolution());
}

TEST_CASE("fit contracts") {
    CHECK_THROWS_AS(fit_lineshape(synthetic(1.0, 0.2, 1.0), {0.0, 0.1}), FitError);
    CHECK_THROWS_AS(fit_lineshape(synthetic(0.0, 0.2, 1.0)), FitError);
    FitOptions once;
    once.max_iterations = 1;
    const LineshapeFit fit = fit_lineshape(synthetic(1.0, 0.3, 0.8), {}, once);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations == 1);
}

TEST_CASE("pinned fit wins for a zero-centred line") {
    const LineshapeFit fit = fit_lineshape(synthetic(2.0, 0.6, 0.0));
    CHECK(fit.pinned_at_zero);
    CHECK(fit.nu0 == 0.0);
    CHECK(fit.b == doctest::Approx(0.6).epsilon(1e-6));
}
