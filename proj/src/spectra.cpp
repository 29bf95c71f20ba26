#include "rabiquench/spectra.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>

#include "rabiquench/error.hpp"
#include "rabiquench/qdyn.hpp"

namespace rabiquench {

namespace {

// FFTW planner calls are not thread safe.
std::mutex& planner_mutex() {
    static std::mutex mutex;
    return mutex;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

struct PlanDestroy {
    void operator()(fftw_plan_s* plan) const noexcept {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
};

}  // namespace

Spectrum periodogram(const TimeSeries& series, bool remove_mean, SpectralEstimator estimator) {
    const std::size_t n = series.size();
    if (n < 2) throw ContractViolation("periodogram needs at least two samples");
    if (!(series.dt > 0.0)) throw ContractViolation("periodogram needs a positive sampling step");

    const std::size_t bins = n / 2 + 1;
    std::unique_ptr<double, FftwFree> input(fftw_alloc_real(n));
    std::unique_ptr<fftw_complex, FftwFree> output(fftw_alloc_complex(bins));

    double mean = 0.0;
    if (remove_mean) {
        for (double v : series.values) mean += v;
        mean /= static_cast<double>(n);
    }
    // Plan before filling: FFTW_ESTIMATE does not touch the arrays, but keep the
    // order valid for any planner flag.
    std::unique_ptr<fftw_plan_s, PlanDestroy> plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), input.get(), output.get(), FFTW_ESTIMATE));
    }
    if (!plan) throw std::runtime_error("FFTW planning failed");
    for (std::size_t i = 0; i < n; ++i) input.get()[i] = series.values[i] - mean;
    fftw_execute(plan.get());

    Spectrum spectrum;
    spectrum.frequencies.resize(bins);
    spectrum.power.resize(bins);
    const double record = static_cast<double>(n) * series.dt;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < bins; ++k) {
        const double re = output.get()[k][0];
        const double im = output.get()[k][1];
        const bool mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
        double p = (re * re + im * im) * inv_n * (mirrored ? 2.0 : 1.0);
        if (estimator == SpectralEstimator::Magnitude) p = std::sqrt(p);
        spectrum.frequencies[k] = static_cast<double>(k) / record;
        spectrum.power[k] = p;
    }
    return spectrum;
}

Spectrum average_spectra(std::span<const Spectrum> spectra) {
    if (spectra.empty()) throw ContractViolation("average_spectra needs at least one spectrum");
    Spectrum mean;
    mean.frequencies = spectra.front().frequencies;
    mean.power.assign(mean.frequencies.size(), 0.0);
    mean.n_trajectories = 0;
    for (const Spectrum& s : spectra) {
        if (s.frequencies != mean.frequencies || s.power.size() != mean.frequencies.size()) {
            throw ContractViolation("average_spectra: frequency grids differ");
        }
        for (std::size_t k = 0; k < s.power.size(); ++k) mean.power[k] += s.power[k];
        mean.n_trajectories += s.n_trajectories;
    }
    const double inv = 1.0 / static_cast<double>(spectra.size());
    for (double& p : mean.power) p *= inv;
    return mean;
}

double vvw_lineshape(double nu, double b, double nu0) {
    if (!(b > 0.0)) throw ContractViolation("vvw_lineshape: width b must be positive");
    const double lo = (nu - nu0) / b;
    const double hi = (nu + nu0) / b;
    return 1.0 / (1.0 + lo * lo) + 1.0 / (1.0 + hi * hi);
}

double vvw_strong_impact_width(double p) {
    if (!(p >= 0.0)) throw ContractViolation("impact rate must be >= 0");
    return p / kTwoPi;
}

}  // namespace rabiquench
