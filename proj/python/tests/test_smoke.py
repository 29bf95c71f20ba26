import math

import numpy as np
import pytest

import rabiquench as rq


def test_unperturbed_trajectory_is_cos_squared():
    cfg = rq.QuantumConfig.nh3()
    cfg.n_cycles = 4
    y, dt, impacts = rq.simulate_trajectory(cfg)
    t = np.arange(len(y)) * dt
    assert len(y) == 256 and impacts == 0
    np.testing.assert_allclose(y, np.cos(math.pi * t) ** 2, atol=1e-12)


def test_periodogram_and_fit_on_simulated_line():
    cfg = rq.QuantumConfig.nh3()
    cfg.n_cycles = 256
    cfg.p_rate = 1.0
    y, dt, _ = rq.simulate_trajectory(cfg, stream=3)
    nu, power = rq.periodogram(y, dt)
    assert power.sum() == pytest.approx(len(y) * np.var(y), rel=1e-9)
    fit = rq.fit_lineshape(nu, power)
    assert fit["converged"]
    assert 0.9 < fit["nu0"] < 1.05


def test_sweep_is_deterministic_across_threads():
    cfg = rq.ClassicalConfig()
    cfg.model = rq.ClassicalModel.CONTINUOUS
    cfg.n_cycles = 128
    a = rq.run_sweep(cfg, rq.parse_grid("1:3:1"), ensemble=4, threads=1)
    b = rq.run_sweep(cfg, [1.0, 2.0, 3.0], ensemble=4, threads=3)
    assert a["csv"] == b["csv"]
    assert [r["p"] for r in a["rows"]] == [1.0, 2.0, 3.0]


def test_errors_are_python_exceptions():
    cfg = rq.QuantumConfig.nh3()
    cfg.p_rate = 40.0
    with pytest.raises(rq.ConfigError):
        cfg.validate()
    with pytest.raises(ValueError):
        rq.parse_grid("3:1:1")
    with pytest.raises(rq.ContractViolation):
        rq.free_propagate(rq.StateVector(2.0, 0.0), 0.1, rq.QuantumConfig())


def test_impact_preserves_norm():
    cfg = rq.QuantumConfig.nh3()
    s = rq.impact_propagate(rq.StateVector.ground(), 0.001, rq.ImpactSide.RIGHT, cfg)
    assert s.norm_squared() == pytest.approx(1.0, abs=1e-14)
    assert rq.perturbed_splitting(cfg) > cfg.omegaP
