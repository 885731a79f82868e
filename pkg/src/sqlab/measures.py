"""Diagonal Gaussian measures, Wick-polynomial Gibbs measures and their calculus.

A :class:`GaussianMeasure` lives on the coefficient space of a
:class:`~sqlab.spectral.SpectralBasis`; the modes are independent with the
stored variances.  A :class:`GibbsMeasure` reweights a Gaussian by
``exp(-V)`` with ``V(z) = :P(z):(h)``; expectations under it are always
self-normalized, so the partition function never appears.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import NumericalDegeneracyError
from .wick import WickPolynomial, horner, wick_context, wick_polynomial_coefficients

__all__ = [
    "GaussianMeasure",
    "GibbsMeasure",
    "Estimate",
    "sample",
    "characteristic_functional",
    "gibbs_expectation",
    "expectation",
    "log_derivative",
    "log_derivatives",
    "ibp_residual",
    "ibp_residuals",
]

DEFAULT_CHUNK = 100_000
GRID_BUDGET = 2_000_000


class Estimate(NamedTuple):
    estimate: float
    stderr: float
    ess: float = float("nan")


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """N(mean, diag(covariance_diag)) in the coefficients of ``basis``.

    Zero variances are only accepted with ``degenerate=True`` (transition
    kernels at t = 0).
    """

    basis: object
    mean: np.ndarray
    covariance_diag: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).copy()
        c = np.asarray(self.covariance_diag, dtype=float).copy()
        n = self.basis.n_modes
        if m.shape != (n,) or c.shape != (n,):
            raise ValueError(f"mean and covariance must have shape ({n},)")
        if self.degenerate:
            if np.any(c < 0):
                raise ValueError("variances must be nonnegative")
        elif np.any(c <= 0):
            raise ValueError("variances must be positive (pass degenerate=True for t = 0 kernels)")
        m.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "covariance_diag", c)

    @classmethod
    def free_field(cls, basis):
        """Centered field with covariance A^{-1}, A the basis operator (e.g. (-Delta+1)_N)."""
        return cls(basis, np.zeros(basis.n_modes), 1.0 / basis.eigenvalues)

    @classmethod
    def ou_invariant(cls, basis, mean=None):
        """N(mean, A^{-1}/2), the invariant law of dX = -A X dt + dW."""
        m = np.zeros(basis.n_modes) if mean is None else mean
        return cls(basis, m, 0.5 / basis.eigenvalues)

    @property
    def n_modes(self):
        return self.basis.n_modes

    def shifted(self, shift):
        return GaussianMeasure(self.basis, self.mean + np.asarray(shift, dtype=float), self.covariance_diag)

    def describe(self):
        return {"kind": "gaussian", "mean": self.mean.tolist(), "covariance_diag": self.covariance_diag.tolist()}


@dataclass(frozen=True, eq=False)
class GibbsMeasure:
    """``exp(-:P(z):(h)) . base``, normalized implicitly.

    ``window`` is a nonnegative grid function h on the basis grid (default 1).
    Wick ordering uses the base covariance.
    """

    base: GaussianMeasure
    potential: WickPolynomial
    window: np.ndarray | None = None

    def __post_init__(self):
        self.potential.validate_interaction()
        if self.window is not None:
            w = np.asarray(self.window, dtype=float).copy()
            if w.shape != (self.basis.n_grid,) or np.any(w < 0):
                raise ValueError("window must be a nonnegative function on the basis grid")
            w.setflags(write=False)
            object.__setattr__(self, "window", w)
        ctx = wick_context(self.basis, self.base.covariance_diag)
        object.__setattr__(self, "_ctx", ctx)
        # grid coefficients of :P: and :P': as ordinary polynomials in the field value
        object.__setattr__(self, "_p_coeffs", wick_polynomial_coefficients(self.potential, ctx.local_variance))
        object.__setattr__(
            self, "_dp_coeffs", wick_polynomial_coefficients(self.potential.derivative(), ctx.local_variance)
        )

    @property
    def basis(self):
        return self.base.basis

    @property
    def n_modes(self):
        return self.basis.n_modes

    @property
    def context(self):
        return self._ctx

    @property
    def window_values(self):
        return np.ones(self.basis.n_grid) if self.window is None else self.window

    def energy(self, z):
        """V(z) for coefficient arrays of shape (..., n_modes)."""
        dens = horner(self._p_coeffs, self.basis.synthesize(z))
        if self.window is not None:
            dens *= self.window
        return self.basis.integrate(dens)

    def energy_gradient(self, z):
        """Coefficients of grad V(z): n-th entry is :P'(z):(e_n h)."""
        drift = horner(self._dp_coeffs, self.basis.synthesize(z))
        if self.window is not None:
            drift *= self.window
        return self.basis.analyze(drift)

    def describe(self):
        return {
            "kind": "gibbs",
            "base": self.base.describe(),
            "potential": self.potential.to_list(),
        }


def sample(measure, rng, size=None):
    """Draw ``mean + sqrt(c) * xi``; returns shape (n_modes,) or (size, n_modes)."""
    if isinstance(measure, GibbsMeasure):
        raise TypeError("Gibbs measures are not sampled directly; use gibbs_expectation")
    shape = (measure.n_modes,) if size is None else (int(size), measure.n_modes)
    xi = rng.standard_normal(shape)
    return measure.mean + np.sqrt(measure.covariance_diag) * xi


def characteristic_functional(measure, y):
    """E exp(i <y, z>) = exp(i <y, m> - sum_n c_n y_n^2 / 2)."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != measure.n_modes:
        raise ValueError("y must have length n_modes")
    return np.exp(1j * (y @ measure.mean) - 0.5 * ((y * y) @ measure.covariance_diag))


def _chunks(n, chunk):
    done = 0
    while done < n:
        size = min(chunk, n - done)
        yield size
        done += size


def _grid_chunk(basis, chunk):
    # keep grid-sized temporaries around a few million entries
    return max(256, min(chunk, GRID_BUDGET // basis.n_grid))


def _evaluate(observable, z):
    vals = np.asarray(observable(z))
    if vals.shape[:1] != z.shape[:1]:
        raise ValueError("observable must return one value (or row) per sample")
    return vals


def gibbs_expectation(measure, observable, n_samples, rng, chunk=DEFAULT_CHUNK):
    """Self-normalized importance sampling of E_mu_bar[f] against the Gaussian base.

    ``observable`` maps an array of states (n, n_modes) to values (n,) or (n, k).
    Returns an :class:`Estimate` whose ``ess`` is sum(w) / max(w); the standard
    error is the delta-method one, sqrt(sum w^2 (f - est)^2) / sum w.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if not isinstance(measure, GibbsMeasure):
        return expectation(measure, observable, n_samples, rng, chunk)
    energies, values = [], []
    for size in _chunks(n_samples, _grid_chunk(measure.basis, chunk)):
        z = sample(measure.base, rng, size)
        energies.append(measure.energy(z))
        values.append(_evaluate(observable, z))
    energy = np.concatenate(energies)
    f = np.concatenate(values)
    if not np.all(np.isfinite(energy)):
        raise NumericalDegeneracyError("non-finite potential energy; rescale the coupling")
    log_w = -(energy - energy.min())
    w = np.exp(log_w)
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericalDegeneracyError("importance weights degenerate; rescale the coupling")
    wn = w / total
    wn_b = wn.reshape(wn.shape + (1,) * (f.ndim - 1))
    est = np.sum(wn_b * f, axis=0)
    se = np.sqrt(np.sum(wn_b**2 * (f - est) ** 2, axis=0))
    ess = total / w.max()
    return Estimate(_scalar(est), _scalar(se), float(ess))


def _scalar(x):
    x = np.asarray(x)
    if x.ndim:
        return x
    return complex(x) if np.iscomplexobj(x) else float(x)


def expectation(measure, fn, n_samples, rng, chunk=DEFAULT_CHUNK):
    """Monte-Carlo mean of ``fn`` (vectorized over samples) with its standard error.

    Complex-valued ``fn`` is allowed; its standard error is that of the
    complex mean, sqrt(E|f - mean|^2 / n).  Plain averaging for Gaussian measures, self-normalized importance sampling
    for Gibbs measures.
    """
    if isinstance(measure, GibbsMeasure):
        return gibbs_expectation(measure, fn, n_samples, rng, chunk)
    if n_samples < 2:
        raise ValueError("need at least two samples")
    total = total_sq = 0.0
    for size in _chunks(n_samples, _grid_chunk(measure.basis, chunk)):
        vals = _evaluate(fn, sample(measure, rng, size))
        total = total + vals.sum(axis=0)
        total_sq = total_sq + (np.abs(vals) ** 2).sum(axis=0)
    mean = total / n_samples
    var = (total_sq - n_samples * np.abs(mean) ** 2) / (n_samples - 1)
    se = np.sqrt(np.maximum(var, 0.0) / n_samples)
    return Estimate(_scalar(mean), _scalar(se), float(n_samples))


def log_derivatives(measure, directions, z):
    """beta_k(z) for each row k of ``directions`` (shape (N, n_modes)); returns (..., N).

    Gaussian N(m, C): beta_k(z) = -<C^{-1} k, z - m>.  Gibbs adds
    -sum_n n a_n :z^{n-1}:(k h), i.e. minus the derivative of V along k.
    """
    K = np.atleast_2d(np.asarray(directions, dtype=float))
    z = np.asarray(z, dtype=float)
    base = measure.base if isinstance(measure, GibbsMeasure) else measure
    if np.any(base.covariance_diag <= 0):
        raise ValueError("log-derivative needs a non-degenerate covariance")
    beta = -((z - base.mean) / base.covariance_diag) @ K.T
    if isinstance(measure, GibbsMeasure):
        beta = beta - measure.energy_gradient(z) @ K.T
    return beta


def log_derivative(measure, k) -> Callable[[np.ndarray], np.ndarray]:
    """The function z -> beta_k(z) for a single direction ``k``."""
    k = np.asarray(k, dtype=float)

    def beta(z):
        return log_derivatives(measure, k[None, :], z)[..., 0]

    return beta


def ibp_residual(measure, u, k, n_samples, rng, chunk=DEFAULT_CHUNK):
    """Estimate of  E[d_k u] + E[u beta_k], zero for an exact log-derivative.

    ``u`` needs ``eval(z)`` and ``directional_derivative(z, k)`` (a
    :class:`~sqlab.cylinder.CylinderFunction`).
    """
    k = np.asarray(k, dtype=float)

    def integrand(z):
        return u.directional_derivative(z, k) + u.eval(z) * log_derivatives(measure, k[None, :], z)[:, 0]

    res = expectation(measure, integrand, n_samples, rng, chunk)
    return Estimate(res.estimate, res.stderr, res.ess)


def ibp_residuals(measure, pairs, n_samples, rng, chunk=DEFAULT_CHUNK):
    """Vector version of :func:`ibp_residual` sharing one sample set.

    ``pairs`` is a sequence of (u, k); returns an :class:`Estimate` whose
    ``estimate`` and ``stderr`` are arrays with one entry per pair.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (u, k) pair")
    K = np.array([np.asarray(k, dtype=float) for _, k in pairs])

    def integrand(z):
        beta = log_derivatives(measure, K, z)  # (n, P)
        cols = [u.directional_derivative(z, k) + u.eval(z) * beta[:, j] for j, (u, k) in enumerate(pairs)]
        return np.stack(cols, axis=-1)

    res = expectation(measure, integrand, n_samples, rng, chunk)
    return Estimate(np.atleast_1d(res.estimate), np.atleast_1d(res.stderr), res.ess)
