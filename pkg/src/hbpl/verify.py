"""Pointwise trajectory checks: energy monotonicity, Lyapunov decay, rate envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress

from .certificates import RateCertificate
from .errors import InsufficientData, MissingVelocities

SLACK = 1e-6
MARGINAL_SLACK = 1e-4
FLOOR = 1e-14


@dataclass
class EnergySeries:
    """Total energy ``U`` and, when ``a``/``delta`` are given, the Lyapunov function ``V``."""

    times: np.ndarray
    U: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    a: Optional[float] = None
    delta: Optional[float] = None

    @property
    def max_increase(self):
        """Largest forward increase ``max_{i<j} (U_j - U_i)``, zero when non-increasing."""
        if self.U is None or len(self.U) < 2:
            return 0.0
        running_min = np.minimum.accumulate(self.U)
        return float(max(np.max(self.U[1:] - running_min[:-1]), 0.0))


@dataclass
class EnvelopeCheck:
    """Observed series against a certificate envelope.

    ``status`` is ``"pass"`` when ``max_ratio <= 1 + 1e-6``,
    ``"tolerance-marginal"`` up to ``1 + 1e-4`` and ``"fail"`` beyond.
    """

    certificate: RateCertificate
    max_ratio: float
    first_violation_time: Optional[float]
    passed: bool
    status: str
    n_checked: int
    truncated_at: Optional[float] = None
    bound: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self):
        return {
            "certificate": self.certificate.to_dict(),
            "max_ratio": self.max_ratio,
            "first_violation_time": self.first_violation_time,
            "passed": self.passed,
            "status": self.status,
            "n_checked": self.n_checked,
            "truncated_at": self.truncated_at,
        }


def _need_velocities(traj):
    if traj.velocities is None:
        raise MissingVelocities("trajectory has no velocities (gradient flow?)")


def total_energy(traj):
    """``U = F(x) - F* + |v|^2 / 2`` along a Heavy-Ball trajectory."""
    _need_velocities(traj)
    kinetic = 0.5 * np.sum(traj.velocities**2, axis=-1)
    return EnergySeries(traj.times, U=traj.values + kinetic)


def lyapunov_series(traj, fn, a, delta):
    """``V = a (F - F*) + <grad F(x), v> + delta |v|^2 / 2`` along a trajectory."""
    _need_velocities(traj)
    v = traj.velocities
    w_dot = np.sum(fn.grad(traj.positions) * v, axis=-1)
    V = a * traj.values + w_dot + 0.5 * delta * np.sum(v * v, axis=-1)
    es = total_energy(traj)
    es.V, es.a, es.delta = V, a, delta
    return es


def _classify(max_ratio):
    if max_ratio <= 1.0 + SLACK:
        return "pass"
    if max_ratio <= 1.0 + MARGINAL_SLACK:
        return "tolerance-marginal"
    return "fail"


def check_bound(times, observed, bound, floor=FLOOR):
    """Compare ``observed`` with ``bound`` pointwise.

    Returns ``(max_ratio, first_violation_time, n_checked, truncated_at)``.
    Ratios use ``observed / (bound + floor)``; samples after the bound falls
    below the floor are skipped and the truncation time is reported.
    """
    times = np.asarray(times, dtype=float)
    observed = np.asarray(observed, dtype=float)
    bound = np.asarray(bound, dtype=float)
    live = bound > floor
    truncated_at = None
    if not np.all(live):
        first_dead = int(np.argmin(live))
        truncated_at = float(times[first_dead])
        live[first_dead:] = False
    if not np.any(live):
        return 0.0, None, 0, truncated_at
    ratio = observed[live] / (bound[live] + floor)
    max_ratio = float(np.max(ratio))
    bad = np.nonzero(ratio > 1.0 + SLACK)[0]
    first = float(times[live][bad[0]]) if len(bad) else None
    return max_ratio, first, int(np.count_nonzero(live)), truncated_at


def check_envelope(traj, cert, observed=None, initial_gap=None, floor=FLOOR):
    """Check ``quantity(t) <= C gap0 (1 + p t) exp(-m t)`` at every sample.

    Parameters
    ----------
    traj : Trajectory
    cert : RateCertificate
    observed : array, optional
        Series to test; defaults to ``traj.values`` or ``traj.grad_sq``
        according to ``cert.quantity``.
    initial_gap : float, optional
        Reference gap; defaults to ``traj.values[0]``.
    """
    if observed is None:
        observed = traj.values if cert.quantity == "objective-gap" else traj.grad_sq
    gap0 = float(traj.values[0]) if initial_gap is None else float(initial_gap)
    bound = cert.bound(traj.times, gap0)
    max_ratio, first, n, trunc = check_bound(traj.times, observed, bound, floor)
    status = _classify(max_ratio)
    return EnvelopeCheck(cert, max_ratio, first, status == "pass", status, n, trunc, bound)


def check_lyapunov_decay(series, R, floor=FLOOR):
    """``V(t) <= V(0) exp(-R t)`` pointwise; returns ``(max_ratio, status)``."""
    bound = series.V[0] * np.exp(-R * series.times)
    max_ratio, _, _, _ = check_bound(series.times, series.V, bound, floor)
    return max_ratio, _classify(max_ratio)


def gronwall_envelope(u0, g, h, grid):
    """Grönwall bound ``exp(G(t)) (u0 + int_0^t exp(-G(r)) h(r) dr)`` with ``G = int g``.

    ``g`` and ``h`` are arrays sampled on ``grid`` (or callables). Both
    integrals use the trapezoidal rule.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    gv = g(grid) if callable(g) else np.broadcast_to(np.asarray(g, dtype=float), grid.shape)
    hv = h(grid) if callable(h) else np.broadcast_to(np.asarray(h, dtype=float), grid.shape)
    G = cumulative_trapezoid(gv, grid, initial=0.0)
    inner = cumulative_trapezoid(np.exp(-G) * hv, grid, initial=0.0)
    return np.exp(G) * (u0 + inner)


def fit_decay_rate(times, series, window_fraction=0.5):
    """Empirical decay exponent from a log-linear least-squares fit.

    Samples at or below ``1e2 * eps * series[0]`` are discarded, then the
    trailing ``window_fraction`` of the remaining samples is fitted.

    Returns
    -------
    slope : float
        Negated slope of ``log(series)`` against time.
    r_squared : float
    """
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    floor = 1e2 * np.finfo(float).eps * abs(series[0])
    ok = series > floor
    t, s = times[ok], series[ok]
    k = int(math.ceil(window_fraction * len(t)))
    t, s = t[len(t) - k:], s[len(s) - k:]
    if len(t) < 10:
        raise InsufficientData(f"only {len(t)} usable samples (need 10)")
    res = linregress(t, np.log(s))
    return float(-res.slope), float(res.rvalue**2)


def time_to_threshold(times, series, threshold):
    """First time ``series`` drops below ``threshold``, interpolating ``log(series)`` linearly.

    Returns ``inf`` when the threshold is never reached.
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    below = np.nonzero(series <= threshold)[0]
    if len(below) == 0:
        return math.inf
    i = int(below[0])
    if i == 0:
        return float(times[0])
    y0, y1 = math.log(series[i - 1]), math.log(max(series[i], 1e-300))
    frac = (y0 - math.log(threshold)) / (y0 - y1)
    return float(times[i - 1] + frac * (times[i] - times[i - 1]))
