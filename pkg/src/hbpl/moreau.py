"""Moreau envelopes of convex (possibly nonsmooth) functions and Heavy-Ball on the envelope."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidConstants, MissingConstant, ProxBudgetExceeded
from .integrator import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, Trajectory, integrate_heavy_ball
from .objectives import ObjectiveFunction

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
PROX_MAX_ITER = 200_000


@dataclass(frozen=True)
class MoreauHandle:
    """A convex base function together with the envelope parameter.

    Attributes
    ----------
    base : ObjectiveFunction
    lam : float
        Envelope parameter ``lambda > 0``.
    mu_ns : float, optional
        Nonsmooth PL constant of ``base``, supplied by the caller for the
        region of interest.
    lipschitz_M : float, optional
        Lipschitz constant of ``base``; defaults to ``base.extras["lipschitz_M"]``.
    """

    base: ObjectiveFunction
    lam: float
    mu_ns: Optional[float] = None
    lipschitz_M: Optional[float] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidConstants(f"lambda must be positive, got {self.lam}")
        if self.mu_ns is not None and not self.mu_ns > 0:
            raise InvalidConstants(f"mu_ns must be positive, got {self.mu_ns}")
        if not self.base.is_convex:
            raise InvalidConstants(f"{self.base.name} is not convex")
        if self.lipschitz_M is None and "lipschitz_M" in self.base.extras:
            object.__setattr__(self, "lipschitz_M", float(self.base.extras["lipschitz_M"]))


def _prox_gradient(handle, x, tol, max_iter):
    base, lam = handle.base, handle.lam
    if base.lipschitz_L is None:
        raise MissingConstant(f"numeric prox of {base.name} needs its gradient Lipschitz constant")
    step = lam / (1.0 + lam * base.lipschitz_L)
    y = x.copy()
    thresh = tol * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True) / lam)
    for _ in range(max_iter):
        g = base.grad(y) + (y - x) / lam
        if np.all(np.linalg.norm(g, axis=-1, keepdims=True) <= thresh):
            return y
        y = y - step * g
    raise ProxBudgetExceeded(f"gradient prox did not reach tolerance {tol} in {max_iter} iterations")


def _prox_golden(handle, x, tol, max_iter):
    base, lam = handle.base, handle.lam
    if handle.lipschitz_M is None:
        raise MissingConstant(f"scalar prox of {base.name} needs a slope bound (lipschitz_M)")
    width = lam * handle.lipschitz_M
    out = np.empty_like(x)
    flat_in, flat_out = x.reshape(-1), out.reshape(-1)
    for k, xi in enumerate(flat_in):
        phi = lambda y: float(base.value(np.array([y]))) + (y - xi) ** 2 / (2.0 * lam)
        a, b = xi - width, xi + width
        c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
        fc, fd = phi(c), phi(d)
        for _ in range(max_iter):
            if b - a <= tol * (1.0 + abs(xi)):
                break
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = phi(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = phi(d)
        else:
            raise ProxBudgetExceeded("golden-section prox did not converge")
        flat_out[k] = 0.5 * (a + b)
    return out


def prox(handle, x, tol=1e-12, max_iter=PROX_MAX_ITER):
    """``argmin_y F(y) + |y - x|^2 / (2 lambda)`` for a point or a stack of points."""
    x = np.asarray(x, dtype=float)
    base = handle.base
    if base.exact_prox is not None:
        return base.exact_prox(handle.lam, x)
    if base.grad is not None:
        return _prox_gradient(handle, x, tol, max_iter)
    if base.dim == 1:
        return _prox_golden(handle, x, tol, max_iter)
    raise ProxBudgetExceeded(f"no prox method for nonsmooth {base.dim}-d base {base.name}")


def envelope_value_grad(handle, x, tol=1e-12):
    """Moreau envelope value and gradient ``(x - prox(x)) / lambda``."""
    x = np.asarray(x, dtype=float)
    p = prox(handle, x, tol)
    d = x - p
    value = handle.base.value(p) + np.sum(d * d, axis=-1) / (2.0 * handle.lam)
    return value, d / handle.lam


def pl_transfer(mu, lam, direction="base-to-envelope"):
    """PL constant carried between a convex function and its envelope."""
    if not (mu > 0 and lam > 0):
        raise InvalidConstants("mu and lambda must be positive")
    if direction == "base-to-envelope":
        return mu / (lam * mu + 1.0)
    if direction == "envelope-to-base":
        return mu / 4.0
    raise ValueError(f"unknown direction {direction!r}")


def envelope_objective(handle):
    """The envelope as a smooth :class:`ObjectiveFunction` with ``1/lambda``-Lipschitz gradient."""
    base = handle.base

    def value(x):
        return envelope_value_grad(handle, x)[0]

    def grad(x):
        return envelope_value_grad(handle, x)[1]

    return ObjectiveFunction(
        name=f"moreau-{base.name}",
        dim=base.dim,
        value=value,
        grad=grad,
        f_star=base.f_star,
        lipschitz_L=1.0 / handle.lam,
        pl_mu=pl_transfer(handle.mu_ns, handle.lam) if handle.mu_ns else None,
        is_convex=True,
        project=base.project,
        params={"base": base.name, "lambda": handle.lam, **base.params},
    )


def envelope_alpha(lam, mu):
    """Damping for Heavy-Ball on the envelope, ``(2s - 1) / (sqrt(lambda) s)`` with ``s = sqrt(lambda mu + 1)``."""
    s = math.sqrt(lam * mu + 1.0)
    return (2.0 * s - 1.0) / (math.sqrt(lam) * s)


def envelope_alpha_expanded(lam, mu):
    """The same damping in unsimplified form, kept as a cross-check."""
    s = math.sqrt(lam * mu + 1.0)
    return (2.0 * lam * mu + 1.0 + s) / (math.sqrt(lam) * (lam * mu + 1.0 + s))


def prox_gap_rate(lam, mu, lipschitz_scaled=False):
    """Exponent and constant of the bound on ``F(prox(x_lambda(t))) - F*``.

    The constant multiplies ``F_lambda(x0) - F*``. ``lipschitz_scaled``
    restores the factor ``1/lambda`` (the envelope's Lipschitz constant), see
    :func:`hbpl.certificates.rate_convex`.
    """
    s = math.sqrt(lam * mu + 1.0)
    m = 2.0 * mu * math.sqrt(lam) / (s * (s + 1.0))
    C = (lam + 1.0 / mu) * (1.0 + s)
    if lipschitz_scaled:
        C /= lam
    return m, C


@dataclass
class MoreauRun:
    """Heavy-Ball trajectory on the envelope and the derived bound curves.

    ``bound_46`` bounds ``prox_gap = F(prox(x_lambda(t))) - F*`` and
    ``bound_47`` bounds ``base_gap = F(x_lambda(t)) - F*``; the names are the
    bounds CSV column headers.
    """

    traj: Trajectory
    alpha: float
    prox_gap: np.ndarray
    gap_lambda: np.ndarray
    base_gap: np.ndarray
    bound_46: np.ndarray
    bound_47: Optional[np.ndarray]
    exponent: float
    constant: float
    meta: dict = field(default_factory=dict)

    def bounds_columns(self):
        base_bound = self.bound_47 if self.bound_47 is not None else np.full_like(self.bound_46, np.nan)
        return {
            "t": self.traj.times,
            "prox_gap": self.prox_gap,
            "bound_46": self.bound_46,
            "gap_lambda": self.gap_lambda,
            "bound_47": base_bound,
        }

    def bounds_to_csv(self, path):
        cols = self.bounds_columns()
        names = list(cols)
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for row in zip(*(cols[k] for k in names)):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def nonsmooth_heavy_ball(handle, x0, t_end=20.0, n_samples=1001, abs_tol=DEFAULT_ABS_TOL,
                         rel_tol=DEFAULT_REL_TOL, lipschitz_scaled=False):
    """Integrate Heavy-Ball on the envelope and evaluate both bound curves.

    Returns a :class:`MoreauRun`. ``bound_47`` (on ``F(x_lambda(t)) - F*``)
    is only produced when the handle carries ``lipschitz_M``.
    """
    if handle.mu_ns is None:
        raise MissingConstant("mu_ns must be set on the handle")
    lam, mu = handle.lam, handle.mu_ns
    env = envelope_objective(handle)
    alpha = envelope_alpha(lam, mu)
    traj = integrate_heavy_ball(env, alpha, x0, t_end=t_end, abs_tol=abs_tol, rel_tol=rel_tol,
                                n_samples=n_samples)
    base = handle.base
    p = prox(handle, traj.positions)
    prox_gap = base.value(p) - base.f_star
    gap_lambda = traj.values
    base_gap = base.value(traj.positions) - base.f_star

    m, C = prox_gap_rate(lam, mu, lipschitz_scaled)
    g0 = float(gap_lambda[0])
    t = traj.times
    bound_46 = C * g0 * np.exp(-m * t)
    bound_47 = None
    if handle.lipschitz_M is not None:
        s = math.sqrt(lam * mu + 1.0)
        c_root = math.sqrt(g0 * (1.0 + s))
        decay = np.exp(-0.5 * m * t)
        bound_47 = 2.0 * np.maximum(math.sqrt(2.0) * handle.lipschitz_M * lam, c_root / mu * decay) * c_root * decay
    traj.meta.update(lam=lam, mu_ns=mu)
    return MoreauRun(traj, alpha, prox_gap, gap_lambda, base_gap, bound_46, bound_47, m, C,
                     meta={"lambda": lam, "mu_ns": mu, "lipschitz_M": handle.lipschitz_M,
                           "lipschitz_scaled": lipschitz_scaled})
