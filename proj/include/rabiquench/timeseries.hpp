#pragma once

#include <cstddef>
#include <vector>

namespace rabiquench {

/// Uniformly sampled real signal: values[k] = y(k * dt).
struct TimeSeries {
    std::vector<double> values;
    double dt = 0.0;
    std::size_t impacts = 0;
    std::size_t renormalizations = 0;

    std::size_t size() const noexcept { return values.size(); }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
    double duration() const noexcept { return static_cast<double>(values.size()) * dt; }
};

}  // namespace rabiquench
