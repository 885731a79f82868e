"""Truncated eigenbases of Laplace-type operators on intervals and rectangles.

The eigenfunctions are the closed-form sine/cosine families, normalized in
L2 of the domain.  Every basis carries a Gauss-Legendre tensor grid, which is
used for projection onto the modes (``analyze``) and for point evaluation of
truncated fields (``synthesize``).  In two dimensions both transforms are done
separably through the 1D factor matrices.

Mode numbers in the public functions taking a single mode (``n``) are
1-based, matching the usual e_1, e_2, ... labelling; coefficient arrays are
ordinary 0-based numpy arrays in the same (ascending-eigenvalue) order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import GridMismatchError, UnsupportedConfigurationError

__all__ = [
    "BoundaryCondition",
    "DomainSpec",
    "SpectralBasis",
    "build_basis",
    "eval_eigenfunction",
    "sobolev_inner",
    "apply_operator_power",
    "transform",
    "cross_overlap",
    "project_function",
]


class BoundaryCondition(enum.Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"
    MIXED = "dirichlet-neumann"  # Dirichlet at 0, Neumann at the right end; 1D only

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "neumann": cls.NEUMANN,
            "neumann-all": cls.NEUMANN,
            "dirichlet": cls.DIRICHLET,
            "dirichlet-all": cls.DIRICHLET,
            "mixed": cls.MIXED,
            "dirichlet-neumann": cls.MIXED,
            "dirichlet-at-zero-neumann-at-one": cls.MIXED,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown boundary condition {value!r}") from None


@dataclass(frozen=True)
class DomainSpec:
    """The interval (0, a) or the rectangle (0, a) x (0, b)."""

    extents: tuple[float, ...]

    def __post_init__(self):
        ext = tuple(float(e) for e in self.extents)
        if len(ext) not in (1, 2):
            raise ValueError("only 1D and 2D domains are supported")
        if any(not np.isfinite(e) or e <= 0 for e in ext):
            raise ValueError(f"domain extents must be positive, got {ext}")
        object.__setattr__(self, "extents", ext)

    @classmethod
    def interval(cls, a=1.0):
        return cls((a,))

    @classmethod
    def rectangle(cls, a=1.0, b=1.0):
        return cls((a, b))

    @property
    def dimension(self):
        return len(self.extents)

    @property
    def volume(self):
        return float(np.prod(self.extents))

    def contains(self, x, tol=1e-12):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= -tol) and np.all(x <= np.asarray(self.extents) + tol))


# ---------------------------------------------------------------------------
# 1D factor families


def _factor_indices(bc, m):
    if bc is BoundaryCondition.NEUMANN:
        return np.arange(0, m)
    return np.arange(1, m + 1)


def _factor_wavenumbers(bc, idx, a):
    idx = np.asarray(idx, dtype=float)
    if bc is BoundaryCondition.MIXED:
        return (idx - 0.5) * np.pi / a
    return idx * np.pi / a


def _factor_values(bc, idx, a, x):
    """Matrix of 1D orthonormal eigenfunctions, shape (len(x), len(idx))."""
    x = np.asarray(x, dtype=float)[:, None]
    k = _factor_wavenumbers(bc, idx, a)[None, :]
    if bc is BoundaryCondition.NEUMANN:
        vals = np.sqrt(2.0 / a) * np.cos(k * x)
        vals[:, np.asarray(idx) == 0] = 1.0 / np.sqrt(a)
        return vals
    return np.sqrt(2.0 / a) * np.sin(k * x)


@lru_cache(maxsize=64)
def _leggauss(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(order, a):
    """Gauss-Legendre nodes and weights on [0, a]."""
    nodes, weights = _leggauss(int(order))
    return 0.5 * a * (nodes + 1.0), 0.5 * a * weights


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Truncated orthonormal eigenbasis of ``-Delta + mass_shift``.

    Attributes
    ----------
    domain, bc, mass_shift, truncation
        Construction parameters; ``truncation`` is M (1D) or the side M of the
        M x M index box (2D).
    eigenvalues : ndarray, shape (n_modes,)
        Ascending.
    multi_index : ndarray, shape (n_modes, dim)
        1D factor index of each mode (0-based frequency for Neumann factors,
        1-based for sine factors).
    quadrature_order : tuple of int
        Gauss-Legendre nodes per axis.
    """

    domain: DomainSpec
    bc: BoundaryCondition
    mass_shift: float
    truncation: int
    eigenvalues: np.ndarray
    multi_index: np.ndarray
    quadrature_order: tuple[int, ...]
    _axis_nodes: tuple = field(repr=False)
    _axis_weights: tuple = field(repr=False)

    @property
    def n_modes(self):
        return len(self.eigenvalues)

    @property
    def dimension(self):
        return self.domain.dimension

    @property
    def max_factor_index(self):
        return int(self.multi_index.max())

    @cached_property
    def nodes(self):
        """Quadrature nodes, shape (n_grid, dim); first axis varies slowest."""
        mesh = np.meshgrid(*self._axis_nodes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def weights(self):
        w = self._axis_weights[0]
        for wa in self._axis_weights[1:]:
            w = np.multiply.outer(w, wa)
        return np.ravel(w)

    @property
    def n_grid(self):
        return len(self.weights)

    @cached_property
    def _axis_factors(self):
        # per axis: 1D eigenfunction table on that axis' nodes, columns = factor index slot
        out = []
        for ax in range(self.dimension):
            idx = _factor_indices(self.bc, self.truncation)
            out.append(_factor_values(self.bc, idx, self.domain.extents[ax], self._axis_nodes[ax]))
        return tuple(out)

    @cached_property
    def _slots(self):
        # position of each mode's factor index inside the per-axis tables
        offset = 0 if self.bc is BoundaryCondition.NEUMANN else 1
        return tuple(self.multi_index[:, ax] - offset for ax in range(self.dimension))

    def eigenfunctions(self, points):
        """Evaluate all modes at ``points`` (shape (n,) in 1D or (n, dim)); returns (n, n_modes)."""
        pts = np.asarray(points, dtype=float)
        if self.dimension == 1:
            pts = pts.reshape(-1, 1)
        else:
            pts = pts.reshape(-1, self.dimension)
        out = np.ones((pts.shape[0], self.n_modes))
        for ax in range(self.dimension):
            out *= _factor_values(self.bc, self.multi_index[:, ax], self.domain.extents[ax], pts[:, ax])
        return out

    @cached_property
    def grid_table(self):
        """Eigenfunctions on the quadrature grid, shape (n_grid, n_modes)."""
        table = self.eigenfunctions(self.nodes)
        table.setflags(write=False)
        return table

    @cached_property
    def _box_order(self):
        # full index box: flat position of each box cell among the modes
        K = self._axis_factors[0].shape[1]
        flat = self._slots[0] * K + self._slots[1]
        inv = np.empty(K * K, dtype=int)
        inv[flat] = np.arange(self.n_modes)
        return flat, inv

    def synthesize(self, coeffs):
        """Grid values of sum_n c_n e_n; ``coeffs`` has shape (..., n_modes)."""
        c = np.asarray(coeffs, dtype=float)
        if c.shape[-1] != self.n_modes:
            raise ValueError(f"expected {self.n_modes} coefficients, got {c.shape[-1]}")
        if self.dimension == 1:
            return c @ self._axis_factors[0].T
        fx, fy = self._axis_factors
        K = fx.shape[1]
        box = c[..., self._box_order[1]].reshape(c.shape[:-1] + (K, K))
        vals = fx @ box @ fy.T
        return vals.reshape(c.shape[:-1] + (-1,))

    def analyze(self, values):
        """Quadrature projection <f, e_n>; ``values`` has shape (..., n_grid)."""
        v = np.asarray(values, dtype=float)
        if v.shape[-1] != self.n_grid:
            raise GridMismatchError(f"expected {self.n_grid} grid values, got {v.shape[-1]}")
        if self.dimension == 1:
            return (v * self.weights) @ self._axis_factors[0]
        fx, fy = self._axis_factors
        wx, wy = self._axis_weights
        vv = v.reshape(v.shape[:-1] + (len(wx), len(wy)))
        box = (fx * wx[:, None]).T @ vv @ (fy * wy[:, None])
        return box.reshape(v.shape[:-1] + (-1,))[..., self._box_order[0]]

    def integrate(self, values):
        v = np.asarray(values, dtype=float)
        if v.shape[-1] != self.n_grid:
            raise GridMismatchError(f"expected {self.n_grid} grid values, got {v.shape[-1]}")
        return v @ self.weights

    def unit(self, n):
        """Coefficient vector of mode number ``n`` (1-based)."""
        _check_mode(self, n)
        e = np.zeros(self.n_modes)
        e[n - 1] = 1.0
        return e

    def describe(self):
        return {
            "extents": list(self.domain.extents),
            "bc": self.bc.value,
            "mass_shift": self.mass_shift,
            "truncation": self.truncation,
            "quadrature_order": list(self.quadrature_order),
        }


def _check_mode(basis, n):
    if not (1 <= int(n) <= basis.n_modes):
        raise IndexError(f"mode number {n} outside 1..{basis.n_modes}")


def default_quadrature_order(max_index, degree=2):
    """Gauss-Legendre order resolving products of ``degree`` modes of frequency index <= ``max_index``."""
    return max(4 * max_index, degree * max_index + 16)


def build_basis(domain, bc, mass_shift=0.0, truncation=8, quadrature_order=None):
    """Closed-form eigenbasis of ``-Delta + mass_shift`` with the given boundary condition.

    Parameters
    ----------
    domain : DomainSpec
    bc : BoundaryCondition or str
    mass_shift : float
        0 for the bare Laplacian, 1 for ``(-Delta + 1)``.
    truncation : int
        Number of modes in 1D, index-box side in 2D.
    quadrature_order : int or tuple, optional
        Gauss-Legendre nodes per axis; default ``max(4 K, 2 K + 16)`` with K the
        largest 1D frequency index, which integrates all products of two modes
        to machine precision.
    """
    bc = BoundaryCondition.parse(bc)
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if mass_shift < 0:
        raise ValueError("mass_shift must be >= 0")
    d = domain.dimension
    if bc is BoundaryCondition.MIXED and d != 1:
        raise UnsupportedConfigurationError("mixed Dirichlet/Neumann boundary is only supported in 1D")

    idx = _factor_indices(bc, truncation)
    if d == 1:
        multi = idx[:, None]
        lam = _factor_wavenumbers(bc, idx, domain.extents[0]) ** 2 + mass_shift
        order = np.argsort(lam, kind="stable")
    else:
        ii, jj = np.meshgrid(idx, idx, indexing="ij")
        multi = np.stack([ii.ravel(), jj.ravel()], axis=-1)
        kx = _factor_wavenumbers(bc, multi[:, 0], domain.extents[0])
        ky = _factor_wavenumbers(bc, multi[:, 1], domain.extents[1])
        lam = kx**2 + ky**2 + mass_shift
        # ascending eigenvalue, ties broken lexicographically by index
        order = np.lexsort((multi[:, 1], multi[:, 0], lam))
    multi = multi[order]
    lam = lam[order]

    if quadrature_order is None:
        quadrature_order = default_quadrature_order(int(idx.max()))
    q = tuple(int(o) for o in np.broadcast_to(quadrature_order, (d,)))
    nodes, weights = zip(*(gauss_legendre(q[ax], domain.extents[ax]) for ax in range(d)))
    lam.setflags(write=False)
    multi.setflags(write=False)
    return SpectralBasis(
        domain=domain,
        bc=bc,
        mass_shift=float(mass_shift),
        truncation=int(truncation),
        eigenvalues=lam,
        multi_index=multi,
        quadrature_order=q,
        _axis_nodes=tuple(nodes),
        _axis_weights=tuple(weights),
    )


def eval_eigenfunction(basis, n, x):
    """Value of the n-th (1-based) orthonormal eigenfunction at point ``x``."""
    _check_mode(basis, n)
    if not basis.domain.contains(x):
        raise ValueError(f"point {x!r} outside the closed domain")
    pts = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    val = 1.0
    for ax in range(basis.dimension):
        col = basis.multi_index[n - 1, ax : ax + 1]
        val *= _factor_values(basis.bc, col, basis.domain.extents[ax], pts[:, ax])[0, 0]
    return float(val)


def _powers(basis, alpha):
    lam = basis.eigenvalues
    if alpha < 0 and np.any(lam <= 0):
        raise ZeroDivisionError("negative operator power with a zero eigenvalue")
    return lam**alpha


def sobolev_inner(basis, u_coeffs, v_coeffs, alpha):
    """H_alpha inner product sum_n lambda_n^alpha u_n v_n."""
    u = np.asarray(u_coeffs, dtype=float)
    v = np.asarray(v_coeffs, dtype=float)
    if u.shape[-1] != basis.n_modes or v.shape[-1] != basis.n_modes:
        raise ValueError("coefficient vectors must have length n_modes")
    return np.sum(_powers(basis, alpha) * u * v, axis=-1)


def apply_operator_power(basis, coeffs, alpha):
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != basis.n_modes:
        raise ValueError("coefficient vector must have length n_modes")
    if alpha == 0:
        return c.copy()
    return c * _powers(basis, alpha)


def transform(basis, data, direction):
    """``direction='analyze'``: grid values -> coefficients; ``'synthesize'``: the reverse."""
    if direction == "analyze":
        return basis.analyze(data)
    if direction == "synthesize":
        return basis.synthesize(data)
    raise ValueError(f"direction must be 'analyze' or 'synthesize', not {direction!r}")


def project_function(basis, func, support=None, order=None):
    """Coefficients <f, e_n> of a callable by Gauss-Legendre quadrature.

    ``func`` takes an array of points (shape (n,) in 1D, (n, dim) in 2D).  In
    1D an integration ``support`` (lo, hi) can be given; quadrature is then
    done on that subinterval only, which keeps piecewise-smooth bumps exact.
    """
    if basis.dimension == 1:
        lo, hi = support if support is not None else (0.0, basis.domain.extents[0])
        q = order or max(256, 8 * basis.max_factor_index + 32)
        x, w = gauss_legendre(q, hi - lo)
        x = x + lo
        return (np.asarray(func(x), dtype=float) * w) @ basis.eigenfunctions(x)
    if support is not None:
        raise ValueError("support restriction is only implemented in 1D")
    q = order or max(64, 4 * basis.max_factor_index + 16)
    axes = [gauss_legendre(q, a) for a in basis.domain.extents]
    mesh = np.meshgrid(*(n for n, _ in axes), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    w = np.multiply.outer(axes[0][1], axes[1][1]).ravel()
    return (np.asarray(func(pts), dtype=float) * w) @ basis.eigenfunctions(pts)


def cross_overlap(basis_a, basis_b, order=None):
    """Matrix O[n, m] = <e_n^A, e_m^B> by quadrature on a common fine grid."""
    if basis_a.domain != basis_b.domain:
        raise ValueError("bases live on different domains")
    top = max(basis_a.max_factor_index, basis_b.max_factor_index)
    q = order or max(64, 2 * top + 16, *basis_a.quadrature_order, *basis_b.quadrature_order)
    axes = [gauss_legendre(q, a) for a in basis_a.domain.extents]
    if basis_a.dimension == 1:
        pts, w = axes[0]
    else:
        mesh = np.meshgrid(*(n for n, _ in axes), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        w = np.multiply.outer(axes[0][1], axes[1][1]).ravel()
    fa = basis_a.eigenfunctions(pts)
    fb = basis_b.eigenfunctions(pts)
    return (fa * w[:, None]).T @ fb
