"""Hermite polynomials and Wick powers of spectrally truncated Gaussian fields.

Wick ordering is taken with respect to a reference diagonal Gaussian; its
pointwise variance on the quadrature grid, c(x) = sum_n c_n e_n(x)^2, plays
the role of the renormalization constant.  All Wick powers are computed
through the scaled recurrence

    W_0 = 1,  W_1 = v,  W_{n+1} = v W_n - n c W_{n-1},

which equals c^{n/2} He_n(v / sqrt(c)) and stays finite as c -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

__all__ = [
    "hermite",
    "hermite_explicit",
    "WickPolynomial",
    "WickContext",
    "wick_context",
    "wick_powers",
    "wick_power_pointwise",
    "wick_power_paired",
    "wick_translate_check",
    "wick_polynomial_pointwise",
    "wick_polynomial_coefficients",
    "horner",
    "wick_polynomial_pair",
    "wick_drift_polynomial",
]


def hermite(n, t):
    """Probabilists' Hermite polynomial He_n(t) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    t = np.asarray(t, dtype=float)
    prev, cur = np.ones_like(t), t.copy()
    if n == 0:
        return prev if prev.ndim else float(prev)
    for k in range(1, n):
        prev, cur = cur, t * cur - k * prev
    return cur if cur.ndim else float(cur)


def hermite_explicit(n, t):
    """He_n from its coefficient formula sum_m (-1)^m n!/((n-2m)! 2^m m!) t^(n-2m)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for m in range(n // 2 + 1):
        alpha = factorial(n) // (factorial(n - 2 * m) * 2**m * factorial(m))
        out = out + (-1) ** m * alpha * t ** (n - 2 * m)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class WickPolynomial:
    """Coefficients a_0..a_d of P(t) = sum_n a_n t^n, Wick-ordered when paired with a field."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coefficients)
        if not coeffs:
            coeffs = (0.0,)
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def monomial(cls, degree, coefficient=1.0):
        return cls((0.0,) * degree + (coefficient,))

    @property
    def degree(self):
        nz = [n for n, a in enumerate(self.coefficients) if a != 0.0]
        return nz[-1] if nz else 0

    @property
    def is_zero(self):
        return all(a == 0.0 for a in self.coefficients)

    @property
    def is_interaction(self):
        """True when P has even degree 2N >= 2 and positive leading coefficient."""
        d = self.degree
        return d >= 2 and d % 2 == 0 and self.coefficients[d] > 0

    def validate_interaction(self):
        if not self.is_interaction:
            raise ValueError(
                f"interaction polynomial must have even degree with a_2N > 0, got {list(self.coefficients)}"
            )
        return self

    def derivative(self):
        c = self.coefficients
        return WickPolynomial(tuple(n * c[n] for n in range(1, len(c))) or (0.0,))

    def to_list(self):
        return list(self.coefficients[: self.degree + 1])


def wick_drift_polynomial(poly):
    """Formal derivative P' (coefficients n a_n shifted down one degree)."""
    return poly.derivative()


@dataclass(frozen=True, eq=False)
class WickContext:
    """Basis plus reference covariance used for Wick ordering.

    ``local_variance`` is c(x) = sum_n c_n e_n(x)^2 on the basis grid.
    """

    basis: object
    covariance_diag: np.ndarray
    local_variance: np.ndarray

    def check(self, atol=1e-12):
        recomputed = _local_variance(self.basis, self.covariance_diag)
        if np.any(self.local_variance <= 0):
            raise ValueError("local variance must be positive on the grid")
        return np.max(np.abs(recomputed - self.local_variance)) <= atol * max(1.0, np.max(recomputed))


def _local_variance(basis, cov):
    return (basis.grid_table**2) @ np.asarray(cov, dtype=float)


def wick_context(basis, covariance_diag):
    cov = np.asarray(covariance_diag, dtype=float)
    if cov.shape != (basis.n_modes,):
        raise ValueError("covariance_diag must have one entry per mode")
    if np.any(cov <= 0):
        raise ValueError("covariance_diag must be positive")
    c = _local_variance(basis, cov)
    cov = cov.copy()
    cov.setflags(write=False)
    c.setflags(write=False)
    ctx = WickContext(basis, cov, c)
    if np.any(c <= 0):
        raise ValueError("local variance vanishes at a grid point")
    return ctx


def wick_powers(v, c, nmax):
    """List [:v^0:, ..., :v^nmax:] for pointwise values ``v`` and variance ``c``."""
    v = np.asarray(v, dtype=float)
    out = [np.ones_like(v)]
    if nmax >= 1:
        out.append(v.copy())
    for n in range(1, nmax):
        out.append(v * out[n] - n * c * out[n - 1])
    return out


def wick_power_pointwise(ctx, v, n):
    """x -> c(x)^{n/2} He_n(v(x) / sqrt(c(x))) on the grid."""
    if n < 0:
        raise ValueError("Wick power must be nonnegative")
    return wick_powers(v, _variance_of(ctx), n)[n]


def _variance_of(ctx):
    # WickContext or a bare array of local variances
    return ctx.local_variance if isinstance(ctx, WickContext) else np.asarray(ctx, dtype=float)


def _window(ctx, h):
    if h is None:
        return np.ones(ctx.basis.n_grid)
    h = np.asarray(h, dtype=float)
    if h.shape[-1] != ctx.basis.n_grid:
        raise ValueError("window must be given on the basis grid")
    return h


def wick_power_paired(ctx, z, n, h=None):
    """:z^n:(h) = integral of :z^n:(x) h(x) dx by grid quadrature; ``z`` has shape (..., n_modes)."""
    v = ctx.basis.synthesize(z)
    return ctx.basis.integrate(wick_power_pointwise(ctx, v, n) * _window(ctx, h))


def wick_translate_check(ctx, z, k, n, h=None):
    """Both sides of :(z+k)^n:(h) = sum_m C(n,m) :z^m:(k^{n-m} h).

    Returns (lhs, rhs, abs error); ``k`` is a coefficient vector synthesized to the grid.
    """
    h = _window(ctx, h)
    lhs = wick_power_paired(ctx, np.asarray(z) + np.asarray(k), n, h)
    v = ctx.basis.synthesize(z)
    kv = ctx.basis.synthesize(k)
    powers = wick_powers(v, ctx.local_variance, n)
    rhs = sum(comb(n, m) * ctx.basis.integrate(powers[m] * kv ** (n - m) * h) for m in range(n + 1))
    return lhs, rhs, np.abs(lhs - rhs)


def wick_polynomial_coefficients(poly, c):
    """Grid coefficients b_j(x) with :P(v):(x) = sum_j b_j(x) v^j.

    Expands each :v^n: = sum_m (-1)^m alpha_nm c^m v^(n-2m); entries that
    vanish identically are returned as 0.0.
    """
    c = np.asarray(c, dtype=float)
    a = poly.coefficients
    out = [0.0] * len(a)
    for n, an in enumerate(a):
        if an == 0.0:
            continue
        for m in range(n // 2 + 1):
            alpha = factorial(n) // (factorial(n - 2 * m) * 2**m * factorial(m))
            term = an * (-1) ** m * alpha * (c**m if m else 1.0)
            out[n - 2 * m] = out[n - 2 * m] + term
    return out


def horner(coeffs, v):
    """sum_j coeffs[j] v^j with grid-function (or scalar) coefficients."""
    v = np.asarray(v, dtype=float)
    live = [j for j, bj in enumerate(coeffs) if np.any(bj != 0)]
    if not live:
        return np.zeros(np.broadcast_shapes(v.shape, *(np.shape(b) for b in coeffs)))
    d = live[-1]
    out = coeffs[d] * v if d else np.zeros(v.shape) + coeffs[0]
    for j in range(d - 1, -1, -1):
        if j in live:
            out += coeffs[j]
        if j:
            out *= v
    return out


def wick_polynomial_pointwise(ctx, poly, v):
    """Grid values of :P(v):(x) = sum_n a_n :v^n:(x)."""
    return horner(wick_polynomial_coefficients(poly, _variance_of(ctx)), v)


def wick_polynomial_pair(ctx, poly, z, h=None):
    """:P(z):(h) = sum_n a_n :z^n:(h)."""
    v = ctx.basis.synthesize(z)
    return ctx.basis.integrate(wick_polynomial_pointwise(ctx, poly, v) * _window(ctx, h))
