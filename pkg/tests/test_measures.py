import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from sqlab.cylinder import CylinderFunction
from sqlab.errors import NumericalDegeneracyError
from sqlab.measures import (
    GaussianMeasure,
    GibbsMeasure,
    characteristic_functional,
    expectation,
    gibbs_expectation,
    ibp_residual,
    ibp_residuals,
    log_derivative,
    sample,
)
from sqlab.spectral import DomainSpec, build_basis
from sqlab.wick import WickPolynomial

SQUARE = DomainSpec.rectangle(1.0, 1.0)


def brute_force_energy(z, a4, a2=0.0):
    """V(z) for the four lowest Neumann modes of (-Delta+1) on the unit square, on an independent grid.

    ``z`` has shape (4,) or (n, 4).
    """
    modes = [(0, 0), (0, 1), (1, 0), (1, 1)]
    lam = np.array([1 + np.pi**2 * (i * i + j * j) for i, j in modes])
    x, w = leggauss(40)
    x, w = (x + 1) / 2, w / 2
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w).ravel()
    f = lambda i, t: np.ones_like(t) if i == 0 else np.sqrt(2) * np.cos(i * np.pi * t)  # noqa: E731
    E = np.array([(f(i, X) * f(j, Y)).ravel() for i, j in modes])
    v = np.asarray(z) @ E
    c = (1 / lam) @ E**2
    wick4 = v**4 - 6 * c * v**2 + 3 * c**2
    wick2 = v**2 - c
    return (a4 * wick4 + a2 * wick2) @ W


def test_energy_against_brute_force(rng):
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    gibbs = GibbsMeasure(GaussianMeasure.free_field(basis), WickPolynomial((0, 0, 0.2, 0, 0.1)))
    z = rng.standard_normal((5, 4))
    ref = brute_force_energy(z, 0.1, 0.2)
    np.testing.assert_allclose(gibbs.energy(z), ref, rtol=1e-12)


def test_energy_gradient_finite_differences(rng):
    basis = build_basis(SQUARE, "neumann", 1.0, 3)
    gibbs = GibbsMeasure(GaussianMeasure.free_field(basis), WickPolynomial((0, 0.3, 0, 0, 0.1)))
    z = rng.standard_normal(basis.n_modes)
    g = gibbs.energy_gradient(z)
    eps = 1e-6
    for n in range(basis.n_modes):
        dz = np.zeros(basis.n_modes)
        dz[n] = eps
        fd = (gibbs.energy(z + dz) - gibbs.energy(z - dz)) / (2 * eps)
        assert g[n] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_quadratic_gibbs_is_gaussian(rng):
    # P = a t^2 gives V = a(|z|^2 - const): precision lambda_n + 2a
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    a = 0.4
    gibbs = GibbsMeasure(GaussianMeasure.free_field(basis), WickPolynomial((0, 0, a)))
    est = gibbs_expectation(gibbs, lambda z: z**2, 200_000, rng)
    exact = 1 / (basis.eigenvalues + 2 * a)
    assert np.all(np.abs(est.estimate - exact) < 4 * est.stderr)
    assert 0 < est.ess <= 200_000


def test_window_restricts_potential(rng):
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    free = GaussianMeasure.free_field(basis)
    poly = WickPolynomial((0, 0, 0, 0, 0.1))
    z = rng.standard_normal((3, 4))
    zero = GibbsMeasure(free, poly, window=np.zeros(basis.n_grid))
    np.testing.assert_array_equal(zero.energy(z), 0.0)
    ones = GibbsMeasure(free, poly, window=np.ones(basis.n_grid))
    np.testing.assert_allclose(ones.energy(z), GibbsMeasure(free, poly).energy(z))
    with pytest.raises(ValueError):
        GibbsMeasure(free, poly, window=-np.ones(basis.n_grid))


def test_gibbs_rejects_non_interactions():
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    with pytest.raises(ValueError):
        GibbsMeasure(GaussianMeasure.free_field(basis), WickPolynomial((0, 0, 0, 1.0)))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_degenerate_weights_raise(rng):
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    gibbs = GibbsMeasure(GaussianMeasure.free_field(basis), WickPolynomial((0, 0, 0, 0, 1e308)))
    with pytest.raises(NumericalDegeneracyError):
        gibbs_expectation(gibbs, lambda z: z[:, 0], 1000, rng)


def test_gaussian_sampling_and_characteristic_functional(rng):
    basis = build_basis(DomainSpec.interval(1.0), "dirichlet", 0.0, 3)
    mu = GaussianMeasure(basis, np.array([1.0, 0.0, -0.5]), np.array([0.5, 0.2, 0.1]))
    z = sample(mu, rng, 200_000)
    np.testing.assert_allclose(z.mean(axis=0), mu.mean, atol=0.01)
    np.testing.assert_allclose(z.var(axis=0), mu.covariance_diag, rtol=0.02)
    y = np.array([0.7, -1.2, 2.0])
    est = expectation(mu, lambda z: np.exp(1j * z @ y), 200_000, rng)
    assert abs(est.estimate - characteristic_functional(mu, y)) < 4 * est.stderr
    with pytest.raises(ValueError):
        GaussianMeasure(basis, np.zeros(3), np.array([1.0, 0.0, 1.0]))
    with pytest.raises(TypeError):
        sample(GibbsMeasure(GaussianMeasure.free_field(basis), WickPolynomial((0, 0, 1.0))), rng, 2)


def test_gaussian_log_derivative_is_exact():
    basis = build_basis(DomainSpec.interval(1.0), "dirichlet", 0.0, 3)
    mu = GaussianMeasure(basis, np.array([0.1, 0.2, 0.3]), np.array([0.5, 0.25, 0.125]))
    k = np.array([1.0, -1.0, 2.0])
    z = np.array([[0.0, 1.0, -1.0]])
    expected = -np.sum(k * (z[0] - mu.mean) / mu.covariance_diag)
    assert log_derivative(mu, k)(z)[0] == pytest.approx(expected)


def test_ibp_holds_and_detects_wrong_log_derivative(rng):
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    free = GaussianMeasure.free_field(basis)
    k = 0.5 * basis.unit(2) / np.sqrt(basis.eigenvalues[1])
    u = CylinderFunction([0.5 * basis.unit(2)], "(sin t0)")
    res = ibp_residual(free, u, k, 100_000, rng)
    assert abs(res.estimate) < 4 * res.stderr
    # a measure with the wrong covariance has a different log-derivative
    wrong = GaussianMeasure(basis, np.zeros(4), 2.0 / basis.eigenvalues)
    z_samples = sample(free, rng, 100_000)
    beta = log_derivative(wrong, k)(z_samples)
    vals = u.directional_derivative(z_samples, k) + u.eval(z_samples) * beta
    assert abs(vals.mean()) > 10 * vals.std() / np.sqrt(len(vals))


def test_ibp_residuals_vector_matches_scalar():
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    free = GaussianMeasure.free_field(basis)
    pairs = [
        (CylinderFunction([basis.unit(1)], "(cos t0)"), 0.3 * basis.unit(1)),
        (CylinderFunction([basis.unit(3)], "(sin t0)"), 0.1 * basis.unit(3)),
    ]
    vec = ibp_residuals(free, pairs, 5000, np.random.default_rng(1))
    one = ibp_residual(free, *pairs[0], 5000, np.random.default_rng(1))
    assert vec.estimate.shape == (2,)
    assert vec.estimate[0] == pytest.approx(one.estimate, abs=1e-15)
    with pytest.raises(ValueError):
        ibp_residuals(free, [], 10, np.random.default_rng(1))


def tensor_quadrature_second_moment(a4, points=16):
    """E[z_1^2] under exp(-V) times the 4-mode free field by Gauss-Hermite tensor quadrature."""
    from numpy.polynomial.hermite_e import hermegauss

    lam = np.array([1.0, 1 + np.pi**2, 1 + np.pi**2, 1 + 2 * np.pi**2])
    x, w = hermegauss(points)
    grids = np.meshgrid(*([x] * 4), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=-1) / np.sqrt(lam)
    W = np.prod(np.meshgrid(*([w] * 4), indexing="ij"), axis=0).ravel()
    V = np.concatenate([brute_force_energy(chunk, a4) for chunk in np.array_split(z, 64)])
    weight = W * np.exp(-V)
    return np.sum(weight * z[:, 0] ** 2) / np.sum(weight)


def test_quartic_gibbs_second_moment_against_tensor_quadrature(rng):
    basis = build_basis(SQUARE, "neumann", 1.0, 2)
    gibbs = GibbsMeasure(GaussianMeasure.free_field(basis), WickPolynomial((0, 0, 0, 0, 0.1)))
    oracle = tensor_quadrature_second_moment(0.1)
    est = gibbs_expectation(gibbs, lambda z: z[:, 0] ** 2, 200_000, rng)
    assert abs(est.estimate - oracle) < 4 * est.stderr
    # the Wick counterterm -6 c z^2 dominates: the second moment rises above the free value 1
    assert oracle > 1.0
