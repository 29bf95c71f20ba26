#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "rabiquench/error.hpp"
#include "rabiquench/spectra.hpp"

namespace rabiquench {

namespace {

// Parameter order: amplitude, width, centre.
using Params = Eigen::Vector3d;

struct Problem {
    std::vector<double> nu;
    std::vector<double> y;  // scaled to max |y| = 1
};

struct Solution {
    Params x = Params::Zero();
    double residual_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

double residual_norm(const Problem& problem, const Params& x) {
    double ss = 0.0;
    for (std::size_t i = 0; i < problem.nu.size(); ++i) {
        const double lo = (problem.nu[i] - x[2]) / x[1];
        const double hi = (problem.nu[i] + x[2]) / x[1];
        const double r = x[0] * (1.0 / (1.0 + lo * lo) + 1.0 / (1.0 + hi * hi)) - problem.y[i];
        ss += r * r;
    }
    return std::sqrt(ss);
}

// Accumulates J^T J and J^T r for the residual A f(nu; b, nu0) - y.
void normal_equations(const Problem& problem, const Params& x, Eigen::Matrix3d& jtj, Params& jtr) {
    jtj.setZero();
    jtr.setZero();
    const double a = x[0];
    const double b = x[1];
    const double nu0 = x[2];
    for (std::size_t i = 0; i < problem.nu.size(); ++i) {
        const double ulo = (problem.nu[i] - nu0) / b;
        const double uhi = (problem.nu[i] + nu0) / b;
        const double llo = 1.0 / (1.0 + ulo * ulo);
        const double lhi = 1.0 / (1.0 + uhi * uhi);
        const double r = a * (llo + lhi) - problem.y[i];
        Params j;
        j[0] = llo + lhi;
        j[1] = 2.0 * a * (ulo * ulo * llo * llo + uhi * uhi * lhi * lhi) / b;
        j[2] = 2.0 * a * (ulo * llo * llo - uhi * lhi * lhi) / b;
        jtj.selfadjointView<Eigen::Lower>().rankUpdate(j);
        jtr += j * r;
    }
    jtj = jtj.selfadjointView<Eigen::Lower>();
}

// Levenberg-Marquardt with Marquardt diagonal scaling. With pin_centre the
// centre stays at its starting value.
Solution levenberg_marquardt(const Problem& problem, Params x, bool pin_centre, const FitOptions& options) {
    Solution out;
    double norm = residual_norm(problem, x);
    double lambda = 1e-3;
    Params diag_scale = Params::Zero();
    const double tol = options.tolerance;

    for (int it = 0; it < options.max_iterations; ++it) {
        out.iterations = it + 1;
        Eigen::Matrix3d jtj;
        Params jtr;
        normal_equations(problem, x, jtj, jtr);
        if (pin_centre) {
            jtj.row(2).setZero();
            jtj.col(2).setZero();
            jtj(2, 2) = 1.0;
            jtr[2] = 0.0;
        }
        if (norm <= 1e-15 * std::sqrt(static_cast<double>(problem.y.size()))) {
            out.converged = true;
            break;
        }
        // Scale-free gradient test: cosine between r and each Jacobian column.
        double gradient_cos = 0.0;
        for (int k = 0; k < 3; ++k) {
            if (jtj(k, k) > 0.0) gradient_cos = std::max(gradient_cos, std::abs(jtr[k]) / (std::sqrt(jtj(k, k)) * norm));
        }
        if (gradient_cos <= tol) {
            out.converged = true;
            break;
        }
        for (int k = 0; k < 3; ++k) diag_scale[k] = std::max(diag_scale[k], jtj(k, k));

        bool accepted = false;
        bool small_step = false;
        while (!accepted) {
            Eigen::Matrix3d damped = jtj;
            for (int k = 0; k < 3; ++k) damped(k, k) += lambda * std::max(diag_scale[k], 1e-300);
            const Params step = damped.ldlt().solve(-jtr);
            Params trial = x + step;
            if (pin_centre) trial[2] = x[2];
            if (trial[1] == 0.0 || !trial.allFinite()) {
                lambda *= 10.0;
            } else {
                const double trial_norm = residual_norm(problem, trial);
                if (trial_norm < norm) {
                    accepted = true;
                    small_step = step.norm() <= tol * (x.norm() + tol);
                    x = trial;
                    norm = trial_norm;
                    lambda = std::max(lambda * 0.3, 1e-15);
                } else {
                    lambda *= 10.0;
                }
            }
            if (!accepted && lambda > 1e16) break;
        }
        if (!accepted) {
            // No descent direction left at machine precision.
            out.converged = gradient_cos <= std::sqrt(tol);
            break;
        }
        if (small_step) {
            out.converged = true;
            break;
        }
    }
    out.x = x;
    out.residual_norm = norm;
    return out;
}

double profile(double nu, double b, double nu0) {
    const double lo = (nu - nu0) / b;
    const double hi = (nu + nu0) / b;
    return 1.0 / (1.0 + lo * lo) + 1.0 / (1.0 + hi * hi);
}

}  // namespace

LineshapeFit fit_lineshape(const Spectrum& spectrum, FitRange range, FitOptions options) {
    if (spectrum.power.size() != spectrum.frequencies.size()) throw FitError("spectrum arrays differ in length");
    Problem problem;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double nu = spectrum.frequencies[k];
        if (nu > range.nu_min && nu <= range.nu_max && nu > 0.0) {
            problem.nu.push_back(nu);
            problem.y.push_back(spectrum.power[k]);
        }
    }
    if (problem.nu.size() < 10) throw FitError("fewer than 10 spectral bins in the fit range");
    double scale = 0.0;
    for (double v : problem.y) scale = std::max(scale, std::abs(v));
    if (!(scale > 0.0) || !std::isfinite(scale)) throw FitError("spectrum is identically zero in the fit range");
    for (double& v : problem.y) v /= scale;

    // Start: peak bin, half-power half-width, amplitude matching the peak.
    const auto peak_it = std::max_element(problem.y.begin(), problem.y.end());
    const auto peak = static_cast<std::size_t>(peak_it - problem.y.begin());
    const double nu_peak = problem.nu[peak];
    const double spacing = problem.nu.size() > 1 ? problem.nu[1] - problem.nu[0] : 1.0;
    double half_width = std::numeric_limits<double>::infinity();
    for (std::size_t i = peak; i < problem.y.size(); ++i) {
        if (problem.y[i] < 0.5 * *peak_it) {
            half_width = problem.nu[i] - nu_peak;
            break;
        }
    }
    for (std::size_t i = peak + 1; i-- > 0;) {
        if (problem.y[i] < 0.5 * *peak_it) {
            half_width = std::min(half_width, nu_peak - problem.nu[i]);
            break;
        }
    }
    if (!std::isfinite(half_width)) half_width = problem.nu.back() - problem.nu.front();
    const double b0 = std::max(half_width, spacing);

    std::vector<double> centres{nu_peak};
    if (nu_peak < 2.0 * b0) centres.push_back(b0);

    Solution best;
    for (double centre : centres) {
        const Params start(*peak_it / profile(nu_peak, b0, centre), b0, centre);
        Solution s = levenberg_marquardt(problem, start, false, options);
        if (s.residual_norm < best.residual_norm) best = s;
    }

    const double b_pinned = std::max(b0, nu_peak);
    const Params pinned_start(*peak_it / profile(nu_peak, b_pinned, 0.0), b_pinned, 0.0);
    const Solution pinned = levenberg_marquardt(problem, pinned_start, true, options);

    const double floor = 1e-12 * std::sqrt(static_cast<double>(problem.y.size()));
    const bool take_pinned = pinned.residual_norm <= best.residual_norm * (1.0 + options.quench_tie_tolerance) + floor;
    const Solution& chosen = take_pinned ? pinned : best;

    LineshapeFit fit;
    fit.amplitude = chosen.x[0] * scale;
    fit.b = std::abs(chosen.x[1]);
    fit.nu0 = take_pinned ? 0.0 : std::abs(chosen.x[2]);
    fit.residual_norm = chosen.residual_norm * scale;
    fit.converged = chosen.converged;
    fit.pinned_at_zero = take_pinned;
    fit.iterations = chosen.iterations;
    return fit;
}

}  // namespace rabiquench
