#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "rabiquench/error.hpp"
#include "rabiquench/io.hpp"
#include "rabiquench/sweep.hpp"

using namespace rabiquench;

namespace {

SweepResult synthetic_result(const std::vector<double>& p, const std::vector<double>& nu0, const std::vector<double>& b) {
    SweepResult r;
    r.model = "synthetic";
    for (std::size_t i = 0; i < p.size(); ++i) {
        SweepRow row;
        row.p = p[i];
        row.fit.nu0 = nu0[i];
        row.fit.b = b[i];
        row.fit.converged = true;
        r.rows.push_back(row);
    }
    return r;
}

QuantumModelConfig small_nh3() {
    QuantumModelConfig c = QuantumModelConfig::nh3();
    c.n_cycles = 256;
    return c;
}

std::string csv_of(const SweepResult& r) {
    std::ostringstream out;
    write_sweep_csv(out, r);
    return out.str();
}

}  // namespace

TEST_CASE("grid parsing") {
    const auto g = parse_grid("0.5:8:0.5");
    REQUIRE(g.size() == 16);
    CHECK(g.front() == 0.5);
    CHECK(g.back() == doctest::Approx(8.0));
    CHECK(parse_grid("0:1:0.1").size() == 11);
    CHECK(parse_grid("3.5") == std::vector<double>{3.5});
    CHECK_THROWS_AS(parse_grid("1:2"), ContractViolation);
    CHECK_THROWS_AS(parse_grid("a:2:1"), ContractViolation);
    CHECK_THROWS_AS(parse_grid("2:1:0.5"), ContractViolation);
    CHECK_THROWS_AS(parse_grid("0:1:0"), ContractViolation);
}

TEST_CASE("unperturbed sweep row") {
    SweepOptions opts;
    opts.ensemble = 4;
    const std::vector<double> grid{0.0};
    const SweepResult r = run_sweep(small_nh3(), grid, opts);
    REQUIRE(r.rows.size() == 1);
    CHECK_FALSE(r.rows[0].failed);
    CHECK(std::abs(r.rows[0].fit.nu0 - 1.0) <= 1.0 / 256.0);
    CHECK(r.rows[0].fit.b <= 1.0 / 256.0);
    CHECK(r.rows[0].n_trajectories == 4);
    CHECK(r.model == "nh3");
}

TEST_CASE("sweeps are identical for any thread count") {
    const std::vector<double> grid{1.0, 3.0, 5.0};
    SweepOptions opts;
    opts.ensemble = 6;
    opts.threads = 1;
    const std::string one = csv_of(run_sweep(small_nh3(), grid, opts));
    for (std::size_t t : {2u, 3u, 7u}) {
        opts.threads = t;
        CHECK(csv_of(run_sweep(small_nh3(), grid, opts)) == one);
    }
    ClassicalModelConfig classical;
    classical.n_cycles = 256;
    opts.threads = 1;
    const std::string c1 = csv_of(run_sweep(classical, grid, opts));
    opts.threads = 4;
    CHECK(csv_of(run_sweep(classical, grid, opts)) == c1);
}

TEST_CASE("a bad row does not abort the sweep") {
    SweepOptions opts;
    opts.ensemble = 2;
    const std::vector<double> grid{1.0, 40.0};
    const SweepResult r = run_sweep(small_nh3(), grid, opts);
    REQUIRE(r.rows.size() == 2);
    CHECK_FALSE(r.rows[0].failed);
    CHECK(r.rows[1].failed);
    CHECK(std::isnan(r.rows[1].fit.nu0));
    CHECK_FALSE(r.rows[1].error.empty());
    CHECK(csv_of(r).find("nan") != std::string::npos);
}

TEST_CASE("sweep contracts") {
    SweepOptions opts;
    const std::vector<double> empty;
    const std::vector<double> descending{2.0, 1.0};
    CHECK_THROWS_AS(run_sweep(small_nh3(), empty, opts), ContractViolation);
    CHECK_THROWS_AS(run_sweep(small_nh3(), descending, opts), ContractViolation);
    opts.ensemble = 0;
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(run_sweep(small_nh3(), one, opts), ContractViolation);
}

TEST_CASE("jackknife errors are finite and shrink with the ensemble") {
    const std::vector<double> grid{2.0};
    SweepOptions opts;
    opts.ensemble = 8;
    const SweepRow small = run_sweep(small_nh3(), grid, opts).rows[0];
    opts.ensemble = 64;
    const SweepRow large = run_sweep(small_nh3(), grid, opts).rows[0];
    CHECK(std::isfinite(small.nu0_se));
    CHECK(small.b_se > 0.0);
    CHECK(large.b_se < small.b_se);
    opts.jackknife_groups = 1;
    CHECK(std::isnan(run_sweep(small_nh3(), grid, opts).rows[0].b_se));
}

TEST_CASE("impact side policy makes no statistical difference") {
    QuantumModelConfig left = small_nh3();
    left.n_cycles = 512;
    left.impact_side = SidePolicy::LeftOnly;
    QuantumModelConfig random = left;
    random.impact_side = SidePolicy::RandomSide;
    SweepOptions opts;
    opts.ensemble = 32;
    const std::vector<double> grid{2.0, 5.0};
    const SweepResult a = run_sweep(left, grid, opts);
    const SweepResult b = run_sweep(random, grid, opts);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double se_nu0 = std::hypot(a.rows[i].nu0_se, b.rows[i].nu0_se);
        const double se_b = std::hypot(a.rows[i].b_se, b.rows[i].b_se);
        MESSAGE("p=" << grid[i] << " nu0 " << a.rows[i].fit.nu0 << " vs " << b.rows[i].fit.nu0 << ", b "
                     << a.rows[i].fit.b << " vs " << b.rows[i].fit.b);
        CHECK(std::abs(a.rows[i].fit.nu0 - b.rows[i].fit.nu0) < 4.0 * se_nu0);
        CHECK(std::abs(a.rows[i].fit.b - b.rows[i].fit.b) < 4.0 * se_b);
    }
}

TEST_CASE("quench detection") {
    const SweepResult r = synthetic_result({1, 2, 3, 4, 5, 6}, {1.0, 0.6, 0.2, 0.04, 0.01, 0.03}, {0, 0, 0, 0, 0, 0});
    const auto p = detect_quench(r);
    REQUIRE(p);
    CHECK(*p == doctest::Approx(3.0 + 0.15 / 0.16));

    const SweepResult dip = synthetic_result({1, 2, 3, 4, 5}, {1.0, 0.04, 0.3, 0.02, 0.01}, {0, 0, 0, 0, 0});
    REQUIRE(detect_quench(dip));
    CHECK(*detect_quench(dip) == doctest::Approx(3.0 + 0.25 / 0.28));

    const SweepResult never = synthetic_result({1, 2, 3}, {1.0, 0.9, 0.04}, {0, 0, 0});
    CHECK_FALSE(detect_quench(never));

    const SweepResult already = synthetic_result({1, 2, 3}, {0.0, 0.0, 0.0}, {0, 0, 0});
    CHECK(*detect_quench(already) == 1.0);

    SweepResult with_failure = r;
    with_failure.rows[3].failed = true;
    CHECK(*detect_quench(with_failure) == doctest::Approx(3.0 + 2.0 * 0.15 / 0.19));
}

TEST_CASE("broadening slope") {
    const SweepResult r = synthetic_result({0.5, 1.0, 1.5, 2.0, 2.5}, {1, 1, 1, 1, 1}, {0.125, 0.25, 0.375, 0.5, 9.0});
    CHECK(broadening_slope(r) == doctest::Approx(0.25));
    CHECK(broadening_slope(r, 3.0) > 0.25);
    CHECK_THROWS_AS(broadening_slope(r, 1.0), ContractViolation);
}

TEST_CASE("pressure mapping") {
    const SweepResult r = synthetic_result({4.5, 6.5}, {0.5, 0.0}, {0.4, 0.5});
    const auto nh3 = map_pressure(r, PressureScaling::nh3());
    CHECK(nh3.pressure_bar[0] == doctest::Approx(1.0));
    CHECK(nh3.pressure_bar[1] == doctest::Approx(1.444).epsilon(1e-3));
    const auto nd3 = map_pressure(r, PressureScaling::nd3());
    CHECK(nd3.pressure_bar[0] == doctest::Approx(1.0 / 15.0));
    CHECK(csv_of(unmap_pressure(nh3)) == csv_of(r));
    CHECK(nh3.source.rows[1].fit.b == 0.5);
    CHECK_THROWS_AS(map_pressure(r, PressureScaling{0.0}), ContractViolation);
    CHECK_THROWS_AS(map_pressure(r, PressureScaling{-4.5}), ContractViolation);
}

TEST_CASE("comparison against the model itself") {
    const SweepResult r = synthetic_result({0.5, 1, 2, 3, 4, 5, 6, 7, 8}, {0.99, 0.97, 0.9, 0.75, 0.55, 0.3, 0.1, 0.02, 0.0},
                                           {0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.9, 0.85});
    ExperimentalDataset data;
    data.source = "self";
    for (const auto& row : r.rows) data.points.push_back({row.p / 4.5, row.fit.nu0, row.fit.b});
    const ComparisonReport report = compare_experiment(r, data, PressureScaling::nh3());
    CHECK(report.pressure_bar.size() == r.rows.size());
    for (double v : report.nu0_residual) CHECK(std::abs(v) < 1e-12);
    for (double v : report.b_residual) CHECK(std::abs(v) < 1e-12);
    CHECK(report.nu0_rms < 1e-12);
    CHECK(report.b_rms < 1e-12);
    CHECK(report.broadening_ratio == doctest::Approx(1.0));
    REQUIRE(report.quench_pressure_bar);
    REQUIRE(report.data_b_slope_above);
    CHECK(*report.data_b_slope_above == doctest::Approx(*report.model_b_slope_above));
    CHECK(*report.model_b_slope_above < 0.0);

    ExperimentalDataset scaled = data;
    for (auto& pt : scaled.points) pt.b_norm *= 0.75;
    CHECK(compare_experiment(r, scaled, PressureScaling::nh3()).broadening_ratio == doctest::Approx(0.75));
}

TEST_CASE("comparison contracts") {
    const SweepResult r = synthetic_result({1, 2, 3}, {1, 0.9, 0.8}, {0.1, 0.2, 0.3});
    CHECK_THROWS_AS(compare_experiment(r, ExperimentalDataset{}, PressureScaling::nh3()), ContractViolation);
    ExperimentalDataset far;
    far.points.push_back({50.0, 0.0, 1.0});
    CHECK_THROWS_AS(compare_experiment(r, far, PressureScaling::nh3()), ContractViolation);
    ExperimentalDataset bad;
    bad.points.push_back({0.3, 1.5, 0.1});
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
    bad.points[0] = {-0.1, 0.5, 0.1};
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("ensemble spectrum matches the sweep's average") {
    QuantumModelConfig c = small_nh3();
    c.p_rate = 2.0;
    SweepOptions opts;
    opts.ensemble = 3;
    const Spectrum s = ensemble_spectrum(c, 0, opts);
    const std::vector<double> grid{2.0};
    const SweepResult r = run_sweep(c, grid, opts);
    CHECK(fit_lineshape(s, opts.fit_range).b == r.rows[0].fit.b);
    CHECK(model_label(ModelConfig{QuantumModelConfig::nd3()}) == "nd3");
    ClassicalModelConfig cc;
    cc.model = ClassicalModel::ContinuityConstrained;
    CHECK(model_label(ModelConfig{cc}) == "classical-continuous");
}
