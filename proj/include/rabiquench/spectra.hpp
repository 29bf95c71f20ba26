#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rabiquench/timeseries.hpp"

namespace rabiquench {

/// One-sided spectrum on the grid k / (N dt), k = 0 .. N/2.
struct Spectrum {
    std::vector<double> frequencies;
    std::vector<double> power;
    std::size_t n_trajectories = 1;

    std::size_t size() const noexcept { return frequencies.size(); }
    /// Grid spacing 1 / (record length).
    double resolution() const noexcept { return frequencies.size() > 1 ? frequencies[1] - frequencies[0] : 0.0; }
};

/// Power: |X_k|^2 / N, doubled on bins that have a mirror image, so the sum
/// over bins equals N * variance. Magnitude: square root of that, kept as an
/// alternative estimator for comparison runs.
enum class SpectralEstimator { Power, Magnitude };

Spectrum periodogram(const TimeSeries& series, bool remove_mean = true,
                     SpectralEstimator estimator = SpectralEstimator::Power);

/// Pointwise mean, summed in input order. Throws on mismatched grids.
Spectrum average_spectra(std::span<const Spectrum> spectra);

/// Van Vleck-Weisskopf profile
///   f(nu) = 1 / (1 + (nu - nu0)^2 / b^2) + 1 / (1 + (nu + nu0)^2 / b^2).
double vvw_lineshape(double nu, double b, double nu0);

/// Strong-collision width b = p / (2 pi).
double vvw_strong_impact_width(double p);

/// Bins with nu_min < nu <= nu_max enter the fit.
struct FitRange {
    double nu_min = 0.0;
    double nu_max = 4.0;
};

struct FitOptions {
    int max_iterations = 500;
    double tolerance = 1e-10;
    /// Report nu0 = 0 when the nu0-pinned fit is within this relative
    /// residual of the free fit.
    double quench_tie_tolerance = 1e-3;
};

struct LineshapeFit {
    double b = 0.0;
    double nu0 = 0.0;
    double amplitude = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    /// nu0 was reported as 0 by the pinned-fit tie break.
    bool pinned_at_zero = false;
    int iterations = 0;
};

/// Least squares fit of A f(nu; b, nu0) over the bins in `range`.
///
/// The profile is even in both nu0 and b, so the optimizer runs unconstrained
/// and the magnitudes are reported; this enforces nu0 >= 0 and b > 0 without
/// clamping. Throws FitError for fewer than 10 bins or an all-zero spectrum.
LineshapeFit fit_lineshape(const Spectrum& spectrum, FitRange range = {}, FitOptions options = {});

}  // namespace rabiquench
