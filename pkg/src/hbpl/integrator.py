"""Heavy-Ball and gradient-flow integration.

The Heavy-Ball system ``x'' + alpha x' + grad F(x) = 0`` is integrated in
first-order form ``(x, v)' = (v, -alpha v - grad F(x))`` with a Dormand-Prince
5(4) pair, PI step-size control and the pair's 4th-order dense output, so the
returned samples sit exactly on a uniform time grid.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IntegrationBudgetExceeded, InvalidDimension, NumericalBlowup

DEFAULT_ABS_TOL = 1e-13
DEFAULT_REL_TOL = 1e-10
DEFAULT_MAX_STEPS = 10_000_000

# Dormand-Prince 5(4), Hairer-Norsett-Wanner Table 5.2
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# 5th-order minus embedded 4th-order weights
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40
# dense output coefficients
_D1 = -12715105075 / 11282082432
_D3 = 87487479700 / 32700410799
_D4 = -10690763975 / 1880347072
_D5 = 701980252875 / 199316789632
_D6 = -1453857185 / 822651844
_D7 = 69997945 / 29380423

_SAFETY = 0.9
_ORDER = 5.0
_K_I = 0.7 / _ORDER
_K_P = 0.4 / _ORDER
_FAC_MIN, _FAC_MAX = 0.2, 5.0


@dataclass
class Trajectory:
    """Uniformly sampled solution of the Heavy-Ball system or gradient flow.

    ``velocities`` is None for gradient flow. ``values`` holds ``F(x) - F*``
    and ``grad_sq`` holds ``|grad F(x)|^2`` at each sample.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: Optional[np.ndarray]
    values: np.ndarray
    grad_sq: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def dim(self):
        return self.positions.shape[1]

    def csv_columns(self, extra=None):
        cols = {
            "t": self.times,
            "F_minus_Fstar": self.values,
            "grad_norm_sq": self.grad_sq,
        }
        for name, series in (extra or {}).items():
            cols[name] = np.asarray(series, dtype=float)
        if self.dim <= 3:
            for i in range(self.dim):
                cols[f"x_{i}"] = self.positions[:, i]
            if self.velocities is not None:
                for i in range(self.dim):
                    cols[f"v_{i}"] = self.velocities[:, i]
        return cols

    def to_csv(self, path, extra=None):
        """Write the samples; ``extra`` maps column name to a per-sample series."""
        cols = self.csv_columns(extra)
        names = list(cols)
        data = np.column_stack([cols[n] for n in names])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for row in data:
                writer.writerow([repr(float(v)) for v in row])

    def summary(self):
        out = dict(self.meta)
        out.update(
            n_samples=len(self.times),
            t_end=float(self.times[-1]),
            initial_gap=float(self.values[0]),
            final_gap=float(self.values[-1]),
            final_grad_sq=float(self.grad_sq[-1]),
        )
        return out

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def closed_form_1d_quadratic(mu, alpha, x0, t):
    """Exact solution of ``x'' + alpha x' + mu x = 0``, ``x(0) = x0``, ``x'(0) = 0``.

    Returns ``(x, v)``; ``t`` may be a scalar or an array.
    """
    t = np.asarray(t, dtype=float)
    s = 0.5 * alpha
    disc = s * s - mu
    decay = np.exp(-s * t)
    if abs(disc) <= 1e-14 * mu:
        x = x0 * (1.0 + s * t) * decay
        v = -x0 * s * s * t * decay
    elif disc < 0:
        w = np.sqrt(-disc)
        x = x0 * decay * (np.cos(w * t) + (s / w) * np.sin(w * t))
        v = -x0 * decay * (mu / w) * np.sin(w * t)
    else:
        q = np.sqrt(disc)
        qt = q * t
        small = qt <= 20.0
        qt_s = np.where(small, qt, 0.0)
        # hyperbolic form is free of cancellation when q is small
        x_h = x0 * decay * (np.cosh(qt_s) + (s / q) * np.sinh(qt_s))
        v_h = -x0 * decay * (mu / q) * np.sinh(qt_s)
        slow = np.exp(-(s - q) * t)
        fast = np.exp(-(s + q) * t)
        x_e = 0.5 * x0 * ((1.0 + s / q) * slow + (1.0 - s / q) * fast)
        v_e = -0.5 * x0 * (mu / q) * (slow - fast)
        x = np.where(small, x_h, x_e)
        v = np.where(small, v_h, v_e)
    if x.ndim == 0:
        return float(x), float(v)
    return x, v


def quadratic_decay_exponent(mu, alpha):
    """Asymptotic decay exponent of ``F = mu x^2 / 2`` along the 1-D solution."""
    disc = alpha * alpha - 4.0 * mu
    if disc <= 0:
        return alpha
    return alpha - np.sqrt(disc)


def dopri5(rhs, y0, t_end, n_samples, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL,
           max_steps=DEFAULT_MAX_STEPS, h0=None):
    """Integrate ``y' = rhs(y)`` on ``[0, t_end]``, sampled on a uniform grid.

    Returns ``(grid, samples, stats)`` where ``samples[i]`` approximates
    ``y(grid[i])`` and ``stats`` counts accepted and rejected steps.
    """
    if not (abs_tol > 0 and rel_tol > 0):
        raise ValueError("abs_tol and rel_tol must be positive")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")

    grid = np.linspace(0.0, float(t_end), n_samples)
    y = np.array(y0, dtype=float)
    out = np.empty((n_samples, y.size))
    out[0] = y
    next_idx = 1

    h = min(1e-4, t_end / n_samples) if h0 is None else float(h0)
    t = 0.0
    k1 = rhs(y)
    err_prev = 1.0
    accepted = rejected = 0
    last_rejected = False

    while next_idx < n_samples:
        if accepted + rejected >= max_steps:
            raise IntegrationBudgetExceeded(
                f"step budget {max_steps} exhausted at t={t:.6g} of {t_end:.6g}")
        if t + h > t_end:
            h = t_end - t

        # overflow shows up as a non-finite error estimate and is handled below
        with np.errstate(over="ignore", invalid="ignore"):
            k2 = rhs(y + h * (_A21 * k1))
            k3 = rhs(y + h * (_A31 * k1 + _A32 * k2))
            k4 = rhs(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
            k5 = rhs(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
            k6 = rhs(y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
            y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = rhs(y_new)

            err_vec = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale))

        if not np.isfinite(err):
            rejected += 1
            h *= _FAC_MIN
            if h < 1e-14 * max(t_end, 1.0):
                raise NumericalBlowup("non-finite state encountered", t)
            last_rejected = True
            continue

        if err <= 1.0:
            t_new = t + h
            # dense output on grid points in (t, t_new]
            if grid[next_idx] <= t_new * (1 + 1e-15):
                r2 = y_new - y
                r3 = h * k1 - r2
                r4 = r2 - h * k7 - r3
                r5 = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6 + _D7 * k7)
                while next_idx < n_samples and grid[next_idx] <= t_new * (1 + 1e-15):
                    theta = (grid[next_idx] - t) / h
                    th1 = 1.0 - theta
                    out[next_idx] = y + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))
                    next_idx += 1
            t = t_new
            y = y_new
            k1 = k7
            accepted += 1
            err = max(err, 1e-10)
            fac = _SAFETY * err ** (-_K_I) * err_prev ** _K_P
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            if last_rejected:
                fac = min(fac, 1.0)
            h *= fac
            err_prev = err
            last_rejected = False
        else:
            rejected += 1
            h *= max(_FAC_MIN, _SAFETY * err ** (-1.0 / _ORDER))
            last_rejected = True

    if not np.all(np.isfinite(out)):
        raise NumericalBlowup("non-finite state in output", t)
    return grid, out, {"steps": accepted, "rejected": rejected}


def _check_point(fn, x, what):
    x = np.array(x, dtype=float).reshape(-1)
    if x.size != fn.dim:
        raise InvalidDimension(f"{what} has dimension {x.size}, function has {fn.dim}")
    return x


def _finish(fn, grid, xs, vs, meta):
    values = fn.value(xs) - fn.f_star
    grad_sq = fn.grad_sq(xs)
    return Trajectory(grid, xs, vs, np.asarray(values, dtype=float),
                      np.asarray(grad_sq, dtype=float), meta)


def integrate_heavy_ball(fn, alpha, x0, v0=None, t_end=10.0, abs_tol=DEFAULT_ABS_TOL,
                         rel_tol=DEFAULT_REL_TOL, n_samples=1001, max_steps=DEFAULT_MAX_STEPS):
    """Integrate ``x'' + alpha x' + grad F(x) = 0`` from ``(x0, v0)``; ``v0`` defaults to 0."""
    if fn.grad is None:
        raise ValueError(f"{fn.name} has no gradient oracle")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x0 = _check_point(fn, x0, "x0")
    v0 = np.zeros_like(x0) if v0 is None else _check_point(fn, v0, "v0")
    d = fn.dim
    grad = fn.grad
    alpha = float(alpha)

    def rhs(y):
        x, v = y[:d], y[d:]
        return np.concatenate((v, -alpha * v - grad(x)))

    grid, ys, stats = dopri5(rhs, np.concatenate((x0, v0)), t_end, n_samples,
                             abs_tol, rel_tol, max_steps)
    meta = {"dynamics": "heavy-ball", "alpha": alpha, "abs_tol": abs_tol,
            "rel_tol": rel_tol, "function": fn.name, **stats}
    return _finish(fn, grid, ys[:, :d], ys[:, d:], meta)


def integrate_gradient_flow(fn, x0, t_end=10.0, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL,
                            n_samples=1001, max_steps=DEFAULT_MAX_STEPS):
    """Integrate ``x' = -grad F(x)`` from ``x0``."""
    if fn.grad is None:
        raise ValueError(f"{fn.name} has no gradient oracle")
    x0 = _check_point(fn, x0, "x0")
    grad = fn.grad

    def rhs(y):
        return -grad(y)

    grid, ys, stats = dopri5(rhs, x0, t_end, n_samples, abs_tol, rel_tol, max_steps)
    meta = {"dynamics": "gradient-flow", "alpha": None, "abs_tol": abs_tol,
            "rel_tol": rel_tol, "function": fn.name, **stats}
    return _finish(fn, grid, ys, None, meta)
