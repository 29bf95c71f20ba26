#pragma once

// Independent reference implementations used only by the tests. None of them
// call into the library.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
constexpr double pi = 3.14159265358979323846;

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Eigenvalues of the real symmetric matrix [[h00, h01], [h01, h11]] found by
/// bisecting the characteristic polynomial inside Gershgorin bounds.
inline std::pair<double, double> symmetric_eigenvalues(double h00, double h01, double h11) {
    const auto charpoly = [&](double x) { return (h00 - x) * (h11 - x) - h01 * h01; };
    const double lo = std::min(h00, h11) - std::abs(h01) - 1.0;
    const double hi = std::max(h00, h11) + std::abs(h01) + 1.0;
    const double mid = 0.5 * (h00 + h11);
    return {bisect(charpoly, lo, mid), bisect(charpoly, mid, hi)};
}

/// Boundary matching done literally: at onset the state is expanded on the
/// eigenvectors of the impact Hamiltonian (a_P, b_P), each coefficient picks
/// up its own phase during the impact, and the state is re-expanded at
/// offset. `h00` is the raised diagonal entry of the well that is tilted.
inline std::pair<cplx, cplx> literal_impact(cplx alpha, cplx beta, double h00, double h11, double h01,
                                            double duration) {
    const auto [l0, l1] = symmetric_eigenvalues(h00, h01, h11);
    // Eigenvector for eigenvalue l: (h01, l - h00), normalized.
    const auto vec = [&](double l) {
        double x = h01, y = l - h00;
        if (std::hypot(x, y) < 1e-300) {
            x = l - h11;
            y = h01;
        }
        const double n = std::hypot(x, y);
        return std::pair<double, double>{x / n, y / n};
    };
    const auto v0 = vec(l0);
    const auto v1 = vec(l1);
    // Solve [v0 v1] (aP, bP)^T = (alpha, beta)^T by Cramer's rule.
    const double det = v0.first * v1.second - v1.first * v0.second;
    const cplx a_p = (alpha * v1.second - v1.first * beta) / det;
    const cplx b_p = (v0.first * beta - alpha * v0.second) / det;
    const cplx e0 = std::polar(1.0, -l0 * duration);
    const cplx e1 = std::polar(1.0, -l1 * duration);
    return {a_p * e0 * v0.first + b_p * e1 * v1.first, a_p * e0 * v0.second + b_p * e1 * v1.second};
}

/// O(N^2) one-sided periodogram straight from the DFT definition, mean removed,
/// with the same normalization as the library: |X_k|^2 / N, doubled for bins
/// with a mirror image.
inline std::vector<double> direct_periodogram(const std::vector<double>& x) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        cplx sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sum += (x[j] - mean) * std::polar(1.0, -2.0 * pi * static_cast<double>(k * j % n) / static_cast<double>(n));
        }
        const bool mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
        out[k] = std::norm(sum) / static_cast<double>(n) * (mirrored ? 2.0 : 1.0);
    }
    return out;
}

inline double variance(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size());
}

/// Two-term Lorentzian profile written out independently.
inline double vvw(double nu, double b, double nu0) {
    return 1.0 / (1.0 + std::pow((nu - nu0) / b, 2)) + 1.0 / (1.0 + std::pow((nu + nu0) / b, 2));
}

/// Midpoint-rule average of g over [0, 1], used for analytic time averages.
inline double average_over_cycle(const std::function<double(double)>& g, std::size_t steps = 1 << 20) {
    double sum = 0.0;
    for (std::size_t i = 0; i < steps; ++i) sum += g((static_cast<double>(i) + 0.5) / static_cast<double>(steps));
    return sum / static_cast<double>(steps);
}

}  // namespace oracle
