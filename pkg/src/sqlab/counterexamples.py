"""Infinitesimally invariant Gaussians that are not invariant for an OU semigroup.

Setting: E is a space of functions on (0, 1), A1 = -Laplacian with Dirichlet
conditions at both ends, A2 = -Laplacian with Dirichlet at 0 and Neumann at
1.  The OU semigroup p_t of A1 has invariant law mu1 = N(0, A1^{-1}/2).  On
cylinder functions whose directions are interior bumps k (k, k', k'' vanish
at both ends) the generators of A1 and A2 coincide, so

* mu2 = N(0, A2^{-1}/2) is infinitesimally invariant, yet
  E_mu2[p_t f] != E_mu2[f] for f = exp(i <y, .>) (first example);
* the shifted law N(1, A1^{-1}/2) is infinitesimally invariant because
  <A1 k, 1> = int -k'' = 0, yet p_t moves its mean (second example).

Both examples are evaluated in closed form and cross-checked by Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cylinder import (
    GeneratorSpec,
    apply_generator,
    cylinder_from_functions,
    invariance_residual,
    poly_bump,
)
from .dynamics import mehler_apply_exp, ou_variance
from .errors import RefinementError
from .measures import GaussianMeasure, characteristic_functional, expectation
from .spectral import DomainSpec, build_basis, cross_overlap, project_function

__all__ = [
    "FirstExampleBundle",
    "SecondExampleBundle",
    "first_example_bundle",
    "second_example_bundle",
    "interior_suite",
    "run_first_example",
    "run_second_example",
    "generator_agreement_check",
    "dirichlet_shift_coefficient",
]

UNIT = DomainSpec.interval(1.0)
COMPLETENESS_TOL = 1e-3


def interior_suite():
    """Default interior-bump test functions as (bumps, outer expression) pairs.

    The bumps are (1 - s^2)^8: their sine coefficients decay fast enough that
    <A k, 1> = int -k'' stays ~1e-5 after truncation at 32 modes, and the
    amplitudes keep the Monte-Carlo error of each residual below 1e-3 at 1e6
    samples.
    """
    return [
        ([poly_bump(0.5, 0.4, 0.3, 8)], "(sin t0)"),
        ([poly_bump(0.45, 0.35, 0.25, 8)], "(cos (* 2 t0))"),
        ([poly_bump(0.55, 0.4, 0.3, 8)], "(exp (* -0.5 (pow t0 2)))"),
        ([poly_bump(0.35, 0.3, 0.2, 8), poly_bump(0.65, 0.3, 0.2, 8)], "(* (sin t0) (cos t1))"),
        ([poly_bump(0.5, 0.45, 0.25, 8), poly_bump(0.5, 0.3, -0.2, 8)], "(sin (+ t0 (* 0.5 t1)))"),
    ]


def _suite_functions(basis, suite):
    return [cylinder_from_functions(basis, bumps, expr) for bumps, expr in suite]


def _residual_records(label, basis, measure, suite, n_samples, rng):
    # generator of A1 restricted to interior directions: A k = -k'' in any basis
    gen = GeneratorSpec.ornstein_uhlenbeck(basis)
    out = []
    for (bumps, expr), u in zip(suite, _suite_functions(basis, suite)):
        est = invariance_residual(gen, measure, u, n_samples, rng)
        r, se = float(np.real(est.estimate)), float(est.stderr)
        out.append(
            {
                "measure": label,
                "outer": expr,
                "bumps": [[b.center, b.halfwidth, b.amplitude] for b in bumps],
                "residual": r,
                "stderr": se,
                "z_score": abs(r) / se if se > 0 else 0.0,
            }
        )
    return out


# ---------------------------------------------------------------------------
# first example


@dataclass(frozen=True, eq=False)
class FirstExampleBundle:
    """Dirichlet basis (M modes), mixed basis (2M modes), their overlap and mu1, mu2."""

    basis_a1: object
    basis_a2: object
    overlap: np.ndarray
    mu1: GaussianMeasure
    mu2: GaussianMeasure
    gen_a1: GeneratorSpec

    def __post_init__(self):
        norms = np.sqrt(np.sum(self.overlap**2, axis=1))
        if np.any(norms > 1 + 1e-10):
            raise ValueError("overlap rows exceed unit norm; quadrature too coarse")
        for mu in (self.mu1, self.mu2):
            if np.any(np.diff(mu.covariance_diag) >= 0):
                raise ValueError("variances must decrease with the mode index")

    def completeness_deficit(self):
        """1 - |row|^2 of the overlap, per Dirichlet mode."""
        return 1.0 - np.sum(self.overlap**2, axis=1)

    def a2_inverse_form(self, y):
        """<A2^{-1} y, y> for y given in Dirichlet coefficients, via the overlap."""
        b = np.asarray(y, dtype=float) @ self.overlap
        return float(np.sum(b * b / self.basis_a2.eigenvalues))


def first_example_bundle(M, b_factor=2):
    a1 = build_basis(UNIT, "dirichlet", 0.0, M)
    a2 = build_basis(UNIT, "mixed", 0.0, b_factor * M)
    order = max(512, 8 * b_factor * M)
    return FirstExampleBundle(
        basis_a1=a1,
        basis_a2=a2,
        overlap=cross_overlap(a1, a2, order=order),
        mu1=GaussianMeasure.ou_invariant(a1),
        mu2=GaussianMeasure.ou_invariant(a2),
        gen_a1=GeneratorSpec.ornstein_uhlenbeck(a1),
    )


def _direction(basis, y):
    """Mode number (1-based) or coefficient vector -> coefficient vector."""
    if np.ndim(y) == 0:
        return basis.unit(int(y))
    v = np.asarray(y, dtype=float)
    if v.shape != (basis.n_modes,):
        raise ValueError(f"y must be a mode number or have {basis.n_modes} coefficients")
    return v


def _complex_z(diff, se):
    return float(abs(diff) / se) if se > 0 else (0.0 if diff == 0 else float("inf"))


def run_first_example(M=32, t=0.1, y=1, n_mc=200_000, n_residual=1_000_000, rng=None, suite=None):
    """Non-invariance of mu2 under the A1 semigroup, with mu1 as control.

    Returns a dict with the analytic sides ``E_mu2 f`` (lhs) and
    ``E_mu2 p_t f`` (rhs), their gap, a Monte-Carlo estimate of the gap from
    common samples z ~ mu2, the same for mu1, and infinitesimal-invariance
    residuals of mu1 and mu2 on the interior suite.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    rng = np.random.default_rng(0) if rng is None else rng
    bundle = first_example_bundle(M)
    a1 = bundle.basis_a1
    yv = _direction(a1, y)
    deficit = float(np.max(bundle.completeness_deficit() * (yv != 0)))
    if deficit > COMPLETENESS_TOL:
        raise RefinementError(f"mixed-basis truncation too small: completeness deficit {deficit:.2e}")

    lam = a1.eigenvalues
    decay = np.exp(-lam * t)
    form_a2 = bundle.a2_inverse_form(yv)
    form_a2_t = bundle.a2_inverse_form(decay * yv)
    q_form = float(np.sum(ou_variance(lam, t, 1.0) * yv * yv))
    lhs = float(np.exp(-0.25 * form_a2))
    rhs = float(np.exp(-0.25 * form_a2_t - 0.5 * q_form))

    # Monte Carlo: z ~ mu2 in the mixed basis; <y, z> through the overlap
    b = yv @ bundle.overlap
    bt = (decay * yv) @ bundle.overlap

    def diff_mu2(z):
        return np.exp(1j * (z @ b)) - np.exp(1j * (z @ bt) - 0.5 * q_form)

    mc2 = expectation(bundle.mu2, diff_mu2, n_mc, rng)

    def diff_mu1(z):
        return np.exp(1j * (z @ yv)) - mehler_apply_exp(a1, yv, z, t)

    mc1 = expectation(bundle.mu1, diff_mu1, n_mc, rng)
    control_gap = float(abs(characteristic_functional(bundle.mu1, yv) - np.exp(-0.25 * np.sum(yv**2 / lam))))

    suite = interior_suite() if suite is None else suite
    residuals = _residual_records("mu1", a1, bundle.mu1, suite, n_residual, rng)
    residuals += _residual_records("mu2", bundle.basis_a2, bundle.mu2, suite, n_residual, rng)

    mc_gap = complex(mc2.estimate)
    return {
        "example": "first",
        "M": int(M),
        "t": float(t),
        "y": yv.tolist(),
        "a2_inverse_form": form_a2,
        "completeness_deficit": deficit,
        "analytic_lhs": lhs,
        "analytic_rhs": rhs,
        "gap": abs(lhs - rhs),
        "mc_estimate": abs(mc_gap),
        "mc_stderr": float(mc2.stderr),
        "mc_z_score": _complex_z(mc_gap - (lhs - rhs), float(mc2.stderr)),
        "control": {
            "measure": "mu1",
            "analytic_gap": control_gap,
            "mc_estimate": abs(complex(mc1.estimate)),
            "mc_stderr": float(mc1.stderr),
            "z_score": _complex_z(complex(mc1.estimate), float(mc1.stderr)),
        },
        "residuals": residuals,
    }


# ---------------------------------------------------------------------------
# second example


def dirichlet_shift_coefficient(n):
    """<1, sqrt(2) sin(n pi x)> = sqrt(2) (1 - (-1)^n) / (n pi)."""
    n = np.asarray(n, dtype=float)
    return np.sqrt(2.0) * (1.0 - (-1.0) ** n) / (n * np.pi)


@dataclass(frozen=True, eq=False)
class SecondExampleBundle:
    """Dirichlet basis, the coefficients of the constant 1 and mu = N(1, A1^{-1}/2)."""

    basis_a1: object
    shift: np.ndarray
    measure: GaussianMeasure

    def __post_init__(self):
        n = np.arange(1, self.basis_a1.n_modes + 1)
        if np.max(np.abs(self.shift - dirichlet_shift_coefficient(n))) > 1e-10:
            raise ValueError("shift coefficients do not match the expansion of 1")


def second_example_bundle(M):
    """Closed-form shift (exact zeros on even modes), checked against a quadrature projection."""
    a1 = build_basis(UNIT, "dirichlet", 0.0, M)
    shift = dirichlet_shift_coefficient(np.arange(1, M + 1))
    projected = project_function(a1, np.ones_like)
    if np.max(np.abs(projected - shift)) > 1e-10:
        raise ValueError("quadrature projection of 1 disagrees with the closed-form coefficients")
    return SecondExampleBundle(a1, shift, GaussianMeasure.ou_invariant(a1, mean=shift))


def phase_defect(bundle, y, t):
    """delta(t) = <y, e^{-t A1} 1 - 1>; ``t = inf`` gives -<y, 1>."""
    yv = _direction(bundle.basis_a1, y)
    if np.isinf(t):
        return float(-(yv @ bundle.shift))
    decay = np.exp(-bundle.basis_a1.eigenvalues * t)
    return float(yv @ ((decay - 1.0) * bundle.shift))


def run_second_example(M=32, t=1.0, y=1, n_mc=200_000, n_residual=1_000_000, rng=None, suite=None):
    """Non-invariance of the shifted Gaussian N(1, A1^{-1}/2) under the A1 semigroup.

    The exact relation is E_mu[p_t f] = e^{i delta(t)} E_mu[f]; the gap
    |E_mu p_t f - E_mu f| is cross-checked by Monte Carlo on common samples.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    rng = np.random.default_rng(0) if rng is None else rng
    bundle = second_example_bundle(M)
    a1, mu = bundle.basis_a1, bundle.measure
    yv = _direction(a1, y)
    delta = phase_defect(bundle, yv, t)
    base = complex(characteristic_functional(mu, yv))
    moved = np.exp(1j * delta) * base
    analytic = moved - base

    def diff(z):
        return mehler_apply_exp(a1, yv, z, t) - np.exp(1j * (z @ yv))

    mc = expectation(mu, diff, n_mc, rng)
    suite = interior_suite() if suite is None else suite
    residuals = _residual_records("shifted", a1, mu, suite, n_residual, rng)
    est = complex(mc.estimate)
    return {
        "example": "second",
        "M": int(M),
        "t": float(t),
        "y": yv.tolist(),
        "delta": delta,
        "delta_limit": phase_defect(bundle, yv, np.inf),
        "phase_factor": [float(np.cos(delta)), float(np.sin(delta))],
        "analytic_lhs": [base.real, base.imag],
        "analytic_rhs": [moved.real, moved.imag],
        "gap": abs(analytic),
        "mc_estimate": abs(est),
        "mc_stderr": float(mc.stderr),
        "mc_z_score": _complex_z(est - analytic, float(mc.stderr)),
        "residuals": residuals,
    }


# ---------------------------------------------------------------------------
# generator agreement


def default_probe_functions(n_probes=3, seed=0, n_terms=6):
    """Probe fields z(x) = g0 x + sum_j g_j sin(j pi x) / j with z(1) = g0 != 0."""
    rng = np.random.default_rng(seed)
    probes = []
    for _ in range(n_probes):
        g0 = 1.0 + rng.random()
        g = rng.standard_normal(n_terms)

        def z(x, g0=g0, g=g):
            j = np.arange(1, len(g) + 1)
            return g0 * x + np.sin(np.pi * np.multiply.outer(x, j)) @ (g / j)

        probes.append(z)
    return probes


def _generator_value(basis, func, outer, zfun):
    # A k through the eigenvalues of the basis (the operator acting on its own domain)
    u = cylinder_from_functions(basis, [func], outer, operator_values=False)
    gen = GeneratorSpec.ornstein_uhlenbeck(basis)
    return float(apply_generator(gen, u, project_function(basis, zfun)))


def generator_agreement_check(Ms=(16, 32, 64), directions=None, outer="(sin t0)", probes=None):
    """max |L^{A1} u(z) - L^{A2} u(z)| over directions and probes, for each M.

    ``directions`` defaults to a C^2 bump supported in [1/4, 3/4]; the
    control direction sqrt(2) sin(pi x) (first A1 eigenfunction, nonzero
    slope at x = 1) is always evaluated as well.
    """
    directions = [poly_bump(0.5, 0.25, 2.0)] if directions is None else directions
    probes = default_probe_functions() if probes is None else probes

    def eigenmode(x):
        return np.sqrt(2.0) * np.sin(np.pi * np.asarray(x, dtype=float))

    rows = []
    for M in Ms:
        a1 = build_basis(UNIT, "dirichlet", 0.0, M)
        a2 = build_basis(UNIT, "mixed", 0.0, M)
        worst_bump = max(
            abs(_generator_value(a1, k, outer, z) - _generator_value(a2, k, outer, z))
            for k in directions
            for z in probes
        )
        worst_mode = max(
            abs(_generator_value(a1, eigenmode, outer, z) - _generator_value(a2, eigenmode, outer, z))
            for z in probes
        )
        zero = max(
            abs(_generator_value(a1, k, outer, np.zeros_like) - _generator_value(a2, k, outer, np.zeros_like))
            for k in directions
        )
        rows.append({"M": int(M), "bump": worst_bump, "eigenmode": worst_mode, "zero_state": zero})
    bump = [r["bump"] for r in rows]
    mode = [r["eigenmode"] for r in rows]
    return {
        "rows": rows,
        "bump_monotone": bool(all(b2 < b1 for b1, b2 in zip(bump, bump[1:]))),
        "eigenmode_min": float(min(mode)),
        "zero_state_max": float(max(r["zero_state"] for r in rows)),
    }
