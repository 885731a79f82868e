"""Cylinder functions, their gradients, and generators of OU / gradient type.

A cylinder function is ``u(z) = F(<k_1, z>, ..., <k_N, z>)`` with directions
given as coefficient vectors in a basis.  Directions that come from actual
functions on the domain (interior bumps) keep two extra pieces of data: the
exact L2 Gram matrix of the functions and, optionally, the coefficients of
``A k_j`` computed from the closed-form second derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import outer as _outer
from .measures import GaussianMeasure, GibbsMeasure, expectation, log_derivatives
from .spectral import gauss_legendre, project_function

__all__ = [
    "CylinderFunction",
    "Bump",
    "poly_bump",
    "smooth_bump",
    "cylinder_from_functions",
    "GeneratorSpec",
    "apply_generator",
    "dirichlet_energy",
    "invariance_residual",
    "symmetry_residual",
]


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """u(z) = F(K z) for a direction matrix K of shape (N, n_modes).

    Parameters
    ----------
    directions : array (N, n_modes)
    outer : Expr or str
        Outer function of ``t0 .. t{N-1}`` (see :mod:`sqlab.outer`).
    gram : array (N, N), optional
        <k_i, k_j> in L2; defaults to K K^T, exact when the directions lie in
        the truncated span.
    operator_directions : array (N, n_modes), optional
        Coefficients of A k_j when known independently of the spectral
        truncation (e.g. projections of -k'').
    """

    directions: np.ndarray
    outer: object
    gram: np.ndarray | None = None
    operator_directions: np.ndarray | None = None

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.directions, dtype=float)).copy()
        expr = _outer.parse(self.outer) if isinstance(self.outer, str) else self.outer
        if expr.n_vars() > K.shape[0]:
            raise ValueError(f"outer function uses {expr.n_vars()} variables but only {K.shape[0]} directions given")
        gram = K @ K.T if self.gram is None else np.asarray(self.gram, dtype=float)
        if gram.shape != (K.shape[0],) * 2:
            raise ValueError("gram must be N x N")
        op = self.operator_directions
        if op is not None:
            op = np.atleast_2d(np.asarray(op, dtype=float))
            if op.shape != K.shape:
                raise ValueError("operator_directions must match directions")
        object.__setattr__(self, "directions", K)
        object.__setattr__(self, "outer", expr)
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "operator_directions", op)

    @property
    def n_directions(self):
        return self.directions.shape[0]

    def _jet(self, z):
        t = np.asarray(z, dtype=float) @ self.directions.T
        return self.outer.jet(t)

    def eval(self, z):
        return self._jet(z).val

    def partials(self, z):
        """(F, dF, d2F) at K z; shapes S, (N, *S), (N, N, *S)."""
        j = self._jet(z)
        return j.val, j.grad, j.hess

    def gradient_H(self, z):
        """sum_j d_jF(Kz) k_j, shape (..., n_modes)."""
        g = self._jet(z).grad
        return np.moveaxis(g, 0, -1) @ self.directions

    def directional_derivative(self, z, h):
        """d/ds u(z + s h) at s = 0."""
        g = self._jet(z).grad
        return np.tensordot(self.directions @ np.asarray(h, dtype=float), g, axes=(0, 0))

    def check_derivatives(self, rng, n_probes=5, step=1e-5, scale=1.0):
        """Max relative mismatch of the rule-based gradient/Hessian of F against central differences."""
        n = self.n_directions
        worst = 0.0
        for _ in range(n_probes):
            t = scale * rng.standard_normal(n)
            j = self.outer.jet(t[None, :])
            for a in range(n):
                e = np.zeros(n)
                e[a] = step
                fp = self.outer.jet((t + e)[None, :])
                fm = self.outer.jet((t - e)[None, :])
                fd_grad = (fp.val - fm.val) / (2 * step)
                fd_hess = (fp.grad - fm.grad) / (2 * step)
                worst = max(worst, _rel(fd_grad, j.grad[a]), _rel(fd_hess[:, 0], j.hess[:, a, 0]))
        return worst


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


# ---------------------------------------------------------------------------
# interior bumps on (0, a)


@dataclass(frozen=True)
class Bump:
    """Bump ``amplitude * g((x - center) / halfwidth)`` supported in [center -/+ halfwidth].

    ``kind='poly'``: g(s) = (1 - s^2)^power (C^{power-1});
    ``kind='smooth'``: g(s) = exp(1 - 1/(1 - s^2)) (C-infinity).
    """

    center: float
    halfwidth: float
    amplitude: float = 1.0
    kind: str = "smooth"
    power: int = 3

    @property
    def support(self):
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def _s(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.halfwidth

    def __call__(self, x):
        return self._derivs(x)[0]

    def second_derivative(self, x):
        return self._derivs(x)[2]

    def _derivs(self, x):
        s = self._s(x)
        inside = np.abs(s) < 1
        g0 = np.zeros_like(s)
        g2 = np.zeros_like(s)
        si = s[inside]
        if self.kind == "poly":
            p = self.power
            q = 1 - si**2
            g0[inside] = q**p
            # d2/ds2 (1-s^2)^p = -2p (1-s^2)^{p-1} + 4 p (p-1) s^2 (1-s^2)^{p-2}
            g2[inside] = -2 * p * q ** (p - 1) + (4 * p * (p - 1) * si**2 * q ** (p - 2) if p >= 2 else 0.0)
        elif self.kind == "smooth":
            q = 1 - si**2
            e = np.exp(1 - 1 / q)
            # phi = 1 - 1/q, phi' = -2s/q^2, phi'' = -2/q^2 - 8 s^2/q^3
            d1 = -2 * si / q**2
            d2 = -2 / q**2 - 8 * si**2 / q**3
            g0[inside] = e
            g2[inside] = e * (d1**2 + d2)
        else:
            raise ValueError(f"unknown bump kind {self.kind!r}")
        a = self.amplitude
        return a * g0, None, a * g2 / self.halfwidth**2


def poly_bump(center=0.5, halfwidth=0.25, amplitude=1.0, power=3):
    return Bump(center, halfwidth, amplitude, "poly", power)


def smooth_bump(center=0.5, halfwidth=0.25, amplitude=1.0):
    return Bump(center, halfwidth, amplitude, "smooth")


def _function_gram(funcs, extent, order=2048):
    x, w = gauss_legendre(order, extent)
    vals = np.array([f(x) for f in funcs])
    return (vals * w) @ vals.T


def cylinder_from_functions(basis, funcs, outer, operator_values=True):
    """Cylinder function whose directions are 1D functions on the basis interval.

    Each entry of ``funcs`` is a callable; when it also has
    ``second_derivative`` and ``support`` (a :class:`Bump`) the direction and
    ``A k = -k''`` are projected on the support only, and the Gram matrix is
    computed from the functions themselves.
    """
    if basis.dimension != 1:
        raise ValueError("function directions are implemented for 1D bases")
    K, AK = [], []
    for f in funcs:
        support = getattr(f, "support", None)
        K.append(project_function(basis, f, support=support))
        if operator_values and hasattr(f, "second_derivative"):
            AK.append(project_function(basis, lambda x, f=f: -f.second_derivative(x), support=support))
    gram = _function_gram(funcs, basis.domain.extents[0])
    op = np.array(AK) if operator_values and len(AK) == len(K) else None
    return CylinderFunction(np.array(K), outer, gram=gram, operator_directions=op)


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """L u = trace_factor * sum <k_j,k_j'> d_jj'F + drift term.

    ``drift='ou_linear'``: drift term is -drift_factor * sum_j <A k_j, z> d_jF
    with A the operator of ``basis``.  ``drift`` a :class:`GibbsMeasure`:
    drift term is drift_factor * sum_j beta_{k_j}(z) d_jF with the Gibbs
    log-derivative.
    """

    basis: object
    drift: object = "ou_linear"
    trace_factor: float = 0.5
    drift_factor: float = 1.0

    def __post_init__(self):
        for f in (self.trace_factor, self.drift_factor):
            if f not in (0.5, 1.0):
                raise ValueError("trace and drift factors must be 1/2 or 1")
        if not (self.drift == "ou_linear" or isinstance(self.drift, GibbsMeasure)):
            raise ValueError("drift must be 'ou_linear' or a GibbsMeasure")
        if isinstance(self.drift, GibbsMeasure) and self.drift.basis is not self.basis:
            raise ValueError("Gibbs drift must live on the generator basis")

    @classmethod
    def ornstein_uhlenbeck(cls, basis):
        """Generator of dX = -A X dt + dW: invariant law N(0, A^{-1}/2)."""
        return cls(basis, "ou_linear", 0.5, 1.0)

    @classmethod
    def gradient_form(cls, measure):
        """Generator of the classical gradient form of ``measure`` (1/2 Laplacian + 1/2 beta)."""
        if isinstance(measure, GibbsMeasure):
            return cls(measure.basis, measure, 0.5, 0.5)
        # Gaussian N(0, C) with C = (2 theta A)^{-1}: beta = -2 theta A z
        if np.any(measure.mean != 0):
            raise ValueError("OU generators are only matched to centered Gaussians")
        lam = measure.basis.eigenvalues
        ratio = 1.0 / (measure.covariance_diag * lam)
        if np.allclose(ratio, 2.0):
            return cls(measure.basis, "ou_linear", 0.5, 1.0)
        if np.allclose(ratio, 1.0):
            return cls(measure.basis, "ou_linear", 0.5, 0.5)
        raise ValueError("covariance is neither A^{-1} nor A^{-1}/2")

    @property
    def is_gibbs(self):
        return isinstance(self.drift, GibbsMeasure)


def apply_generator(gen, u, z):
    """(L u)(z) for states ``z`` of shape (..., n_modes)."""
    z = np.asarray(z, dtype=float)
    _, grad, hess = u.partials(z)
    trace = np.tensordot(u.gram, hess, axes=([0, 1], [0, 1]))
    if gen.is_gibbs:
        beta = log_derivatives(gen.drift, u.directions, z)  # (..., N)
        drift = np.sum(np.moveaxis(beta, -1, 0) * grad, axis=0)
        return gen.trace_factor * trace + gen.drift_factor * drift
    AK = u.operator_directions if u.operator_directions is not None else u.directions * gen.basis.eigenvalues
    pair = z @ AK.T  # <A k_j, z>
    drift = np.sum(np.moveaxis(pair, -1, 0) * grad, axis=0)
    return gen.trace_factor * trace - gen.drift_factor * drift


def dirichlet_energy(u, v, measure, n_samples, rng):
    """(1/2) E_mu <grad u, grad v>_H with standard error."""
    def integrand(z):
        return 0.5 * np.sum(u.gradient_H(z) * v.gradient_H(z), axis=-1)

    return expectation(measure, integrand, n_samples, rng)


def invariance_residual(gen, measure, u, n_samples, rng):
    """E_mu[L u]; zero for L-infinitesimally invariant ``measure``."""
    return expectation(measure, lambda z: apply_generator(gen, u, z), n_samples, rng)


def symmetry_residual(gen, measure, u, v, n_samples, rng):
    """E_mu[L u . v - u . L v]."""
    def integrand(z):
        return apply_generator(gen, u, z) * v.eval(z) - u.eval(z) * apply_generator(gen, v, z)

    return expectation(measure, integrand, n_samples, rng)


def generator_form_residual(gen, measure, u, v, n_samples, rng):
    """E_mu[-(L u) v - <grad u, grad v>/2]; zero when L is the generator of the gradient form of mu."""
    def integrand(z):
        return -apply_generator(gen, u, z) * v.eval(z) - 0.5 * np.sum(u.gradient_H(z) * v.gradient_H(z), axis=-1)

    return expectation(measure, integrand, n_samples, rng)
