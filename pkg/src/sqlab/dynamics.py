"""Ornstein-Uhlenbeck transitions and the stochastic quantization integrator.

The Galerkin system integrated here is, per mode n,

    dX_n = -theta (lambda_n X_n + dV/dX_n) dt + dW_n,

with theta = 1/2 for stochastic quantization.  The linear part is advanced
exactly (exponential Euler), the Wick drift explicitly:

    x_n <- e^{-theta lambda_n h} x_n + phi_n(h) d_n(x) + eta_n,
    phi_n(h) = (1 - e^{-theta lambda_n h}) / (theta lambda_n),
    d_n(x)   = -theta :P'(x):(e_n h_window),
    eta_n    ~ N(0, (1 - e^{-2 theta lambda_n h}) / (2 theta lambda_n)).

With P = 0 one step has exactly the OU transition law, so the free field is
preserved step by step.  Many independent replicas are advanced together as a
batch; replicas never interact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergenceError
from .measures import GaussianMeasure, GibbsMeasure, gibbs_expectation, sample
from .wick import WickPolynomial, wick_context, wick_power_paired

__all__ = [
    "ou_variance",
    "ou_transition",
    "propagate",
    "mehler_apply_exp",
    "Observable",
    "mode_observable",
    "mode_square_observable",
    "wick_observable",
    "constant_observable",
    "SQConfig",
    "Trajectory",
    "step",
    "simulate",
    "integrated_autocorrelation_time",
    "time_average",
    "autocorrelation",
    "stationarity_report",
    "ergodicity_report",
    "sample_gibbs_resampled",
]


# ---------------------------------------------------------------------------
# exact OU calculus


def _decay(lam, t, theta):
    return np.exp(-theta * lam * t)


def ou_variance(lam, t, theta=1.0):
    """q(t) = (1 - e^{-2 theta lambda t}) / (2 theta lambda), per mode."""
    lam = np.asarray(lam, dtype=float)
    return -np.expm1(-2.0 * theta * lam * t) / (2.0 * theta * lam)


def ou_transition(basis, x, t, theta=1.0):
    """Law of X_t for dX = -theta A X dt + dW started at ``x``.

    At t = 0 the result is the point mass at ``x`` (flagged ``degenerate``).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    lam = basis.eigenvalues
    mean = _decay(lam, t, theta) * np.asarray(x, dtype=float)
    var = ou_variance(lam, t, theta)
    return GaussianMeasure(basis, mean, var, degenerate=bool(np.any(var == 0)))


def propagate(measure, t, theta=1.0):
    """Image of a Gaussian initial law under the OU transition over time ``t``."""
    lam = measure.basis.eigenvalues
    d = _decay(lam, t, theta)
    var = d**2 * measure.covariance_diag + ou_variance(lam, t, theta)
    return GaussianMeasure(measure.basis, d * measure.mean, var, degenerate=bool(np.any(var == 0)))


def mehler_apply_exp(basis, y, x, t, theta=1.0):
    """p_t f(x) for f = exp(i <y, .>):  exp(i <e^{-tA} y, x> - <Q_t y, y>/2).

    ``x`` may be a batch of states (..., n_modes).
    """
    lam = basis.eigenvalues
    y = np.asarray(y, dtype=float)
    phase = np.asarray(x, dtype=float) @ (_decay(lam, t, theta) * y)
    return np.exp(1j * phase - 0.5 * np.sum(ou_variance(lam, t, theta) * y * y))


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class Observable:
    """Named function of a batch of states (R, n_modes) -> (R,)."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    def __call__(self, states):
        return self.fn(states)


def mode_observable(n):
    return Observable(f"mode:{n}", lambda x, i=n - 1: x[..., i])


def mode_square_observable(n):
    return Observable(f"mode2:{n}", lambda x, i=n - 1: x[..., i] ** 2)


def constant_observable(c=1.0):
    return Observable("const", lambda x: np.full(x.shape[:-1], float(c)))


def wick_observable(basis, power, window=None, covariance_diag=None):
    """:X^power:(window), Wick-ordered w.r.t. the free field of ``basis`` by default."""
    cov = 1.0 / basis.eigenvalues if covariance_diag is None else covariance_diag
    ctx = wick_context(basis, cov)
    return Observable(f"wick:{power}", lambda x: wick_power_paired(ctx, x, power, window))


# ---------------------------------------------------------------------------
# stochastic quantization


@dataclass(frozen=True, eq=False)
class SQConfig:
    """Finite-volume stochastic quantization run.

    Parameters
    ----------
    basis : SpectralBasis
        Basis of (-Delta + 1)_N; its quadrature order governs the Wick drift.
    polynomial : WickPolynomial
        Interaction P (zero for the free field).
    step, horizon : float
        Time step h and total time; horizon must be a multiple of h.
    drift_factor : float
        theta in the module docstring, 1/2 for stochastic quantization.
    n_replicas : int
        Independent trajectories advanced together.
    record_every : int
        Record observables every this many steps.
    guard : float
        Stability guard h <= guard / lambda_max.
    """

    basis: object
    polynomial: WickPolynomial = WickPolynomial((0.0,))
    step: float = 1e-3
    horizon: float = 1.0
    drift_factor: float = 0.5
    observables: tuple = ()
    seed: int | None = None
    n_replicas: int = 1
    record_every: int = 1
    window: np.ndarray | None = None
    guard: float = 0.5

    def __post_init__(self):
        if self.step <= 0 or self.horizon <= 0:
            raise ValueError("step and horizon must be positive")
        lam_max = float(self.basis.eigenvalues.max())
        if self.step > self.guard / lam_max * (1 + 1e-12):
            raise ValueError(
                f"step {self.step} violates the stability guard h <= {self.guard}/lambda_max = {self.guard / lam_max:.3e}"
            )
        n = self.horizon / self.step
        if abs(n - round(n)) > 1e-8 * max(1.0, n):
            raise ValueError("horizon must be a multiple of the step")
        if self.drift_factor not in (0.5, 1.0):
            raise ValueError("drift_factor must be 1/2 or 1")
        if not self.polynomial.is_zero:
            self.polynomial.validate_interaction()
        if self.n_replicas < 1 or self.record_every < 1:
            raise ValueError("n_replicas and record_every must be >= 1")
        object.__setattr__(self, "observables", tuple(self.observables))
        object.__setattr__(self, "_gibbs", self._make_gibbs())

    def _make_gibbs(self):
        if self.polynomial.is_zero:
            return None
        if self.drift_factor != 0.5:
            raise ValueError("an interaction requires drift_factor 1/2 (Wick ordering w.r.t. the free field)")
        return GibbsMeasure(GaussianMeasure.free_field(self.basis), self.polynomial, self.window)

    @property
    def n_steps(self):
        return int(round(self.horizon / self.step))

    def stationary_measure(self):
        """Invariant law of the continuous-time Galerkin system (Gaussian or Gibbs)."""
        if self._gibbs is not None:
            return self._gibbs
        return GaussianMeasure(
            self.basis, np.zeros(self.basis.n_modes), 1.0 / (2 * self.drift_factor * self.basis.eigenvalues)
        )

    def _drift_gradient(self, x):
        return self._gibbs.energy_gradient(x)

    @property
    def _coefficients(self):
        lam = self.basis.eigenvalues
        th = self.drift_factor
        h = self.step
        decay = np.exp(-th * lam * h)
        phi = -np.expm1(-th * lam * h) / (th * lam)
        noise = np.sqrt(ou_variance(lam, h, th))
        return decay, phi, noise


@dataclass
class Trajectory:
    """Recorded times, states (n_times, R, n_modes) and observable series (n_times, R)."""

    times: np.ndarray
    states: np.ndarray | None
    series: dict

    @property
    def n_replicas(self):
        first = next(iter(self.series.values()), None)
        if first is not None:
            return first.shape[1]
        return self.states.shape[1]


def step(state, config, rng, _coeffs=None):
    """Advance a batch of states (..., n_modes) by one exponential-Euler step."""
    decay, phi, noise = _coeffs if _coeffs is not None else config._coefficients
    x = np.asarray(state, dtype=float)
    out = decay * x + noise * rng.standard_normal(x.shape)
    if config._gibbs is not None:
        # overflow is reported below as a divergence
        with np.errstate(over="ignore", invalid="ignore"):
            out -= phi * config.drift_factor * config._drift_gradient(x)
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out))[0]
        mode = int(bad[-1]) + 1
        raise DivergenceError(f"state diverged in mode {mode}; reduce the step or the coupling", mode=mode)
    return out


def simulate(config, rng=None, initial=None, keep_states=False):
    """Integrate ``config.n_replicas`` trajectories from ``initial``.

    ``initial`` defaults to independent free-field draws (covariance
    1/(2 theta lambda)); pass an array (R, n_modes) to override.
    """
    if rng is None:
        if config.seed is None:
            raise ValueError("no rng given and config.seed is unset")
        rng = np.random.default_rng(config.seed)
    R, M = config.n_replicas, config.basis.n_modes
    if initial is None:
        free = GaussianMeasure(config.basis, np.zeros(M), 1.0 / (2 * config.drift_factor * config.basis.eigenvalues))
        x = sample(free, rng, R)
    else:
        x = np.array(np.broadcast_to(np.asarray(initial, dtype=float), (R, M)))
    n_rec = config.n_steps // config.record_every + 1
    times = np.arange(n_rec) * config.record_every * config.step
    series = {obs.name: np.empty((n_rec, R)) for obs in config.observables}
    states = np.empty((n_rec, R, M)) if keep_states else None

    def record(i, x):
        for obs in config.observables:
            series[obs.name][i] = obs(x)
        if keep_states:
            states[i] = x

    coeffs = config._coefficients
    record(0, x)
    for i in range(1, n_rec):
        for _ in range(config.record_every):
            x = step(x, config, rng, coeffs)
        record(i, x)
    return Trajectory(times, states, series)


# ---------------------------------------------------------------------------
# time-series diagnostics


def _pooled_autocovariance(series, max_lag=None):
    """Autocovariance averaged over replicas; ``series`` has shape (T,) or (T, R)."""
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    T = x.shape[0]
    xc = x - x.mean()
    nfft = 1 << int(np.ceil(np.log2(2 * T)))
    f = np.fft.rfft(xc, n=nfft, axis=0)
    acov = np.fft.irfft(f * np.conj(f), n=nfft, axis=0)[:T].mean(axis=1) / T
    if max_lag is not None:
        acov = acov[: max_lag + 1]
    return acov


def integrated_autocorrelation_time(series):
    """tau = 1 + 2 sum_k rho_k, truncated by the initial positive sequence rule (in samples)."""
    acov = _pooled_autocovariance(series)
    if acov[0] <= 0:
        return 1.0
    pairs = acov[:-1:2] + acov[1::2]
    n_pos = len(pairs)
    neg = np.nonzero(pairs <= 0)[0]
    if len(neg):
        n_pos = neg[0]
    # initial monotone sequence
    gam = np.minimum.accumulate(pairs[:n_pos]) if n_pos else pairs[:0]
    tau = (2.0 * gam.sum() - acov[0]) / acov[0]
    return float(max(tau, 1.0))


def time_average(series):
    """(mean, stderr, tau) with the error corrected for autocorrelation."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("time average needs at least two recorded samples")
    tau = integrated_autocorrelation_time(x)
    var = _pooled_autocovariance(x, 0)[0]
    return float(x.mean()), float(np.sqrt(var * tau / n)), tau


def autocorrelation(series, max_lag):
    acov = _pooled_autocovariance(series, max_lag)
    return acov / acov[0] if acov[0] > 0 else np.zeros_like(acov)


def stationarity_report(config, burn_in, rng, n_reference=200_000, exact=None, initial=None):
    """Compare post-burn-in time averages with ensemble values of the invariant law.

    ``exact`` may map observable names to known ensemble values (stderr 0);
    otherwise the ensemble value is a (self-normalized) Monte-Carlo estimate.
    Returns a list of records with fixed keys.
    """
    if not 0 <= burn_in < config.horizon:
        raise ValueError("burn_in must lie in [0, horizon)")
    traj = simulate(config, rng, initial=initial)
    keep = traj.times >= burn_in - 1e-12
    reference = config.stationary_measure()
    exact = exact or {}
    records = []
    for obs in config.observables:
        mean, se, tau = time_average(traj.series[obs.name][keep])
        if obs.name in exact:
            ens, ens_se = float(exact[obs.name]), 0.0
        else:
            est = gibbs_expectation(reference, obs.fn, n_reference, rng)
            ens, ens_se = float(est.estimate), float(est.stderr)
        combined = np.hypot(se, ens_se)
        records.append(
            {
                "observable": obs.name,
                "time_avg": mean,
                "time_stderr": se,
                "ensemble_avg": ens,
                "ensemble_stderr": ens_se,
                "z_score": float(abs(mean - ens) / combined) if combined > 0 else float("inf") * (mean != ens),
                "tau_int": tau * config.record_every * config.step,
            }
        )
    return records


def sample_gibbs_resampled(measure, n, rng, pool_factor=20):
    """Approximate draws from a Gibbs measure by multinomial importance resampling."""
    if not isinstance(measure, GibbsMeasure):
        return sample(measure, rng, n)
    pool = sample(measure.base, rng, n * pool_factor)
    e = measure.energy(pool)
    w = np.exp(-(e - e.min()))
    idx = rng.choice(len(pool), size=n, replace=True, p=w / w.sum())
    return pool[idx]


def ergodicity_report(config, observable, rng, max_lag, n_outer=64, n_inner=32, burn_in=0.0):
    """Autocorrelation curve of ``observable`` and the L2 decay of T_t f - mean.

    The autocorrelation is pooled over the ``config.n_replicas`` stationary
    trajectories.  The L2 curve uses ``n_outer`` stationary starting points,
    each followed by ``n_inner`` independent continuations; the squared
    distance is bias-corrected by the inner-sample variance.
    Lags are in recorded samples.
    """
    cfg = SQConfig(
        config.basis, config.polynomial, config.step, config.horizon, config.drift_factor,
        (observable,), config.seed, config.n_replicas, config.record_every, config.window, config.guard,
    )
    start = sample_gibbs_resampled(cfg.stationary_measure(), cfg.n_replicas, rng)
    traj = simulate(cfg, rng, initial=start)
    keep = traj.times >= burn_in - 1e-12
    rho = autocorrelation(traj.series[observable.name][keep], max_lag)
    lags = np.arange(len(rho)) * cfg.record_every * cfg.step

    horizon = max_lag * cfg.record_every * cfg.step
    nested = SQConfig(
        cfg.basis, cfg.polynomial, cfg.step, horizon, cfg.drift_factor, (observable,), cfg.seed,
        n_outer * n_inner, cfg.record_every, cfg.window, cfg.guard,
    )
    x0 = sample_gibbs_resampled(cfg.stationary_measure(), n_outer, rng)
    ens = simulate(nested, rng, initial=np.repeat(x0, n_inner, axis=0))
    f = ens.series[observable.name]
    f = f - f[0, 0]  # reference shift; constant observables become exactly zero
    f = f.reshape(f.shape[0], n_outer, n_inner)
    inner_mean = f.mean(axis=2)
    inner_var = f.var(axis=2, ddof=1) if n_inner > 1 else np.zeros_like(inner_mean)
    grand = f.mean(axis=(1, 2))
    sq = (inner_mean - grand[:, None]) ** 2 - inner_var / n_inner
    l2 = np.sqrt(np.maximum(sq.mean(axis=1), 0.0))
    return {"lags": lags, "autocorrelation": rho, "times": ens.times, "l2_distance": l2}
