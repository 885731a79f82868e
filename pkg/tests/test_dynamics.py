import numpy as np
import pytest

from sqlab.dynamics import (
    SQConfig,
    autocorrelation,
    constant_observable,
    integrated_autocorrelation_time,
    mehler_apply_exp,
    mode_observable,
    mode_square_observable,
    ou_transition,
    ou_variance,
    propagate,
    simulate,
    step,
    time_average,
    wick_observable,
)
from sqlab.errors import DivergenceError
from sqlab.measures import GaussianMeasure, expectation
from sqlab.spectral import DomainSpec, build_basis
from sqlab.wick import WickPolynomial

RECT = DomainSpec.rectangle(2.0, 2.0)


@pytest.fixture
def basis():
    return build_basis(RECT, "neumann", 1.0, 3)


def test_ou_variance_limits():
    lam = np.array([0.5, 2.0])
    np.testing.assert_allclose(ou_variance(lam, 1e-12, 1.0), 1e-12, rtol=1e-6)
    np.testing.assert_allclose(ou_variance(lam, 100.0, 0.5), 1 / lam, rtol=1e-12)


def test_semigroup_property(basis, rng):
    mu = GaussianMeasure(basis, rng.standard_normal(basis.n_modes), rng.uniform(0.1, 1, basis.n_modes))
    a = propagate(propagate(mu, 0.3, 0.5), 0.7, 0.5)
    b = propagate(mu, 1.0, 0.5)
    np.testing.assert_allclose(a.mean, b.mean, rtol=1e-13)
    np.testing.assert_allclose(a.covariance_diag, b.covariance_diag, rtol=1e-13)
    point = ou_transition(basis, mu.mean, 0.0)
    assert point.degenerate and np.all(point.covariance_diag == 0)


def test_mehler_formula_against_sampling(basis, rng):
    x = rng.standard_normal(basis.n_modes)
    y = 0.5 * rng.standard_normal(basis.n_modes)
    t = 0.4
    law = ou_transition(basis, x, t)
    est = expectation(law, lambda z: np.exp(1j * z @ y), 100_000, rng)
    assert abs(est.estimate - mehler_apply_exp(basis, y, x, t)) < 4 * est.stderr


def test_free_step_is_exact_ou_transition(basis, rng):
    h = 0.01
    cfg = SQConfig(basis, step=h, horizon=h, drift_factor=0.5, n_replicas=1)
    x0 = rng.standard_normal(basis.n_modes)
    xs = step(np.broadcast_to(x0, (200_000, basis.n_modes)), cfg, rng)
    law = ou_transition(basis, x0, h, theta=0.5)
    np.testing.assert_allclose(xs.mean(axis=0), law.mean, atol=5 * np.sqrt(law.covariance_diag.max() / 2e5))
    np.testing.assert_allclose(xs.var(axis=0), law.covariance_diag, rtol=0.02)


def test_free_field_is_preserved(basis, rng):
    cfg = SQConfig(basis, step=0.01, horizon=2.0, n_replicas=20_000, record_every=200,
                   observables=(mode_square_observable(1), mode_square_observable(4)))
    traj = simulate(cfg, rng)
    for name, n in (("mode2:1", 1), ("mode2:4", 4)):
        assert traj.series[name][-1].mean() == pytest.approx(1 / basis.eigenvalues[n - 1], rel=0.04)


def test_simulation_is_reproducible(basis):
    obs = (mode_observable(1), wick_observable(basis, 2), constant_observable(2.0))
    poly = WickPolynomial((0, 0, 0, 0, 0.1))
    cfg = SQConfig(basis, poly, step=0.01, horizon=0.5, n_replicas=4, record_every=10, observables=obs)
    a = simulate(cfg, np.random.default_rng(3))
    b = simulate(cfg, np.random.default_rng(3))
    for name in a.series:
        np.testing.assert_array_equal(a.series[name], b.series[name])
    assert np.all(a.series["const"] == 2.0)
    assert a.times[-1] == pytest.approx(0.5)


def test_config_validation(basis):
    lam_max = basis.eigenvalues.max()
    with pytest.raises(ValueError, match="guard"):
        SQConfig(basis, step=1.0 / lam_max, horizon=10 / lam_max)
    with pytest.raises(ValueError, match="multiple"):
        SQConfig(basis, step=0.01, horizon=0.015)
    with pytest.raises(ValueError):
        SQConfig(basis, WickPolynomial((0, 0, 0, 1.0)), step=0.01, horizon=0.1)
    with pytest.raises(ValueError):
        SQConfig(basis, WickPolynomial((0, 0, 0, 0, 1.0)), step=0.01, horizon=0.1, drift_factor=1.0)


def test_divergence_is_reported(basis, rng):
    cfg = SQConfig(basis, WickPolynomial((0, 0, 0, 0, 1e300)), step=0.01, horizon=0.1, n_replicas=2)
    with pytest.raises(DivergenceError):
        simulate(cfg, rng)


def ar1(phi, n, rng, reps=8):
    x = np.empty((n, reps))
    x[0] = rng.standard_normal(reps) / np.sqrt(1 - phi**2)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + rng.standard_normal(reps)
    return x


def test_integrated_autocorrelation_time_ar1(rng):
    phi = 0.8
    x = ar1(phi, 20_000, rng)
    tau = integrated_autocorrelation_time(x)
    assert tau == pytest.approx((1 + phi) / (1 - phi), rel=0.1)
    rho = autocorrelation(x, 5)
    np.testing.assert_allclose(rho, phi ** np.arange(6), atol=0.02)
    mean, se, _ = time_average(x)
    assert abs(mean) < 4 * se
    assert integrated_autocorrelation_time(rng.standard_normal(5000)) == pytest.approx(1.0, abs=0.15)
