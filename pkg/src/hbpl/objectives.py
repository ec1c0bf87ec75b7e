"""Objective oracles and the built-in test functions.

Every built-in evaluates in batch: ``value`` accepts a point of shape
``(dim,)`` or a stack of points ``(n, dim)`` and ``grad`` returns an array
with the same shape as its input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidConstants, InvalidDimension

Array = np.ndarray


@dataclass(frozen=True)
class ObjectiveFunction:
    """Value/gradient oracle with the constants the rate theory needs.

    Attributes
    ----------
    name : str
        Registry id (``"quadratic"``, ``"sin-valley"``, ...).
    dim : int
        Dimension of the domain.
    value, grad : callable
        Batch-aware oracles. ``grad`` is None for nonsmooth functions.
    f_star : float
        Known minimum value.
    lipschitz_L : float or None
        Lipschitz constant of the gradient, when known globally.
    pl_mu : float or None
        Polyak-Lojasiewicz constant, when known.
    is_convex : bool
    exact_prox : callable or None
        ``exact_prox(lam, x)`` returns the proximal point in closed form.
    project : callable or None
        Euclidean projection of a point onto the minimizer set.
    subgrad_dist : callable or None
        ``dist(0, subdifferential)`` at a point, for nonsmooth functions.
    kink_distance : callable or None
        Distance from a point to the set where the function is not twice
        differentiable; finite-difference checks stay away from it.
    params : dict
        Construction parameters, for serialization.
    extras : dict
        Built-in specific data (Hessian and eigenbasis for quadratics).
    """

    name: str
    dim: int
    value: Callable[[Array], Array]
    grad: Optional[Callable[[Array], Array]]
    f_star: float
    lipschitz_L: Optional[float] = None
    pl_mu: Optional[float] = None
    is_convex: bool = False
    exact_prox: Optional[Callable[[float, Array], Array]] = None
    project: Optional[Callable[[Array], Array]] = None
    subgrad_dist: Optional[Callable[[Array], Array]] = None
    kink_distance: Optional[Callable[[Array], Array]] = None
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def gap(self, x):
        """F(x) - F*."""
        return self.value(x) - self.f_star

    def grad_sq(self, x):
        g = self.grad(x)
        return np.sum(g * g, axis=-1)

    def dist_to_minimizers(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.project(x), axis=-1)


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise InvalidDimension(f"expected trailing dimension {dim}, got shape {x.shape}")
    return x


def _shrink(x, t):
    """Soft threshold: sign(x) * max(|x| - t, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


# ---------------------------------------------------------------------------
# quadratic


def make_quadratic(dim, mu, L, seed=0):
    """Convex quadratic ``F(x) = x.A.x / 2`` with spectrum containing 0, mu and L.

    The Hessian is ``A = Q^T diag(0, mu, L, filler) Q`` where ``Q`` comes from
    the QR factorization of a seeded Gaussian matrix and the ``dim - 3``
    filler eigenvalues are uniform on ``[mu, L]``. The rows of ``Q`` are the
    eigenvectors, in the order of ``extras["eigenvalues"]``.
    """
    dim = int(dim)
    if dim < 3:
        raise InvalidDimension(f"quadratic needs dim >= 3 to hold the spectrum {{0, mu, L}}, got {dim}")
    if not mu > 0:
        raise InvalidConstants(f"mu must be positive, got {mu}")
    if mu > L:
        raise InvalidConstants(f"mu={mu} exceeds L={L}")
    mu, L = float(mu), float(L)

    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    eigvecs = q.T  # rows are eigenvectors
    spectrum = np.concatenate(([0.0, mu, L], rng.uniform(mu, L, dim - 3)))
    A = eigvecs.T @ (spectrum[:, None] * eigvecs)
    A = 0.5 * (A + A.T)
    A.setflags(write=False)
    kernel = eigvecs[0].copy()

    def value(x):
        x = _as_points(x, dim)
        return 0.5 * np.einsum("...i,...i->...", x @ A, x)

    def grad(x):
        return _as_points(x, dim) @ A

    def project(x):
        x = _as_points(x, dim)
        return (x @ kernel)[..., None] * kernel

    return ObjectiveFunction(
        name="quadratic",
        dim=dim,
        value=value,
        grad=grad,
        f_star=0.0,
        lipschitz_L=L,
        pl_mu=mu,
        is_convex=True,
        project=project,
        params={"dim": dim, "mu": mu, "L": L, "seed": int(seed)},
        extras={"hessian": A, "eigenvalues": spectrum, "eigenvectors": eigvecs},
    )


# ---------------------------------------------------------------------------
# graph residual  c * (y - f(x))^2


def _curve_projection(f, x, y, n_grid=65):
    """Closest point on the curve s -> (s, f(s)) to (x, y), by multistart + Brent."""
    radius = abs(y - f(x))
    if radius == 0.0:
        return np.array([x, y])

    def sqdist(s):
        return (s - x) ** 2 + (y - f(s)) ** 2

    grid = np.linspace(x - radius, x + radius, n_grid)
    vals = np.array([sqdist(s) for s in grid])
    best_s, best_val = x, sqdist(x)
    step = grid[1] - grid[0]
    # refine around every local minimum of the grid values
    for i in range(n_grid):
        left = vals[i - 1] if i > 0 else np.inf
        right = vals[i + 1] if i < n_grid - 1 else np.inf
        if vals[i] <= left and vals[i] <= right:
            lo, hi = grid[i] - step, grid[i] + step
            res = minimize_scalar(sqdist, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-13 * (1 + abs(grid[i]))})
            if res.fun < best_val:
                best_s, best_val = res.x, res.fun
    return np.array([best_s, f(best_s)])


_CURVES = {
    "sin": (np.sin, np.cos, None),
    "linear": (lambda s: s, lambda s: np.ones_like(np.asarray(s, dtype=float)), 1.0),
}


def make_graph_residual(c, f=np.sin, fprime=np.cos, *, affine_slope=None, curve="custom"):
    """``F(x, y) = c * (y - f(x))**2`` whose minimizers are the graph of ``f``.

    The PL ratio is ``2c (1 + f'(x)^2) >= 2c``, so ``pl_mu = 2c``. Pass
    ``affine_slope`` when ``f`` is affine; the function is then convex with
    gradient Lipschitz constant ``2c (1 + slope^2)``.
    """
    if not c > 0:
        raise InvalidConstants(f"c must be positive, got {c}")
    c = float(c)

    def value(p):
        p = _as_points(p, 2)
        r = p[..., 1] - f(p[..., 0])
        return c * r * r

    def grad(p):
        p = _as_points(p, 2)
        r = p[..., 1] - f(p[..., 0])
        return np.stack((-2.0 * c * r * fprime(p[..., 0]), 2.0 * c * r), axis=-1)

    def project(p):
        p = _as_points(p, 2)
        if p.ndim == 1:
            return _curve_projection(f, p[0], p[1])
        return np.array([_curve_projection(f, a, b) for a, b in p])

    convex = affine_slope is not None
    return ObjectiveFunction(
        name="sin-valley" if curve == "sin" else "graph-residual",
        dim=2,
        value=value,
        grad=grad,
        f_star=0.0,
        lipschitz_L=2.0 * c * (1.0 + affine_slope**2) if convex else None,
        pl_mu=2.0 * c,
        is_convex=convex,
        project=project,
        params={"c": c, "f": curve},
    )


def make_sin_valley(c=0.125, f="sin"):
    """Registry wrapper: ``c * (y - f(x))^2`` with ``f`` in {"sin", "linear"}."""
    try:
        fn, dfn, slope = _CURVES[f]
    except KeyError:
        raise InvalidConstants(f"unknown curve {f!r}; choose from {sorted(_CURVES)}") from None
    return make_graph_residual(c, fn, dfn, affine_slope=slope, curve=f)


# ---------------------------------------------------------------------------
# one-dimensional examples


def make_piecewise_nonconvex(eps=1.0):
    """Nonconvex PL function, flat on ``[-eps, eps]``.

    Outside the flat region it equals ``u^2 + 3 sin^2(u)`` with ``u`` the
    signed distance to the region. Claimed constants: PL with 1/32 and
    gradient Lipschitz with 14.
    """
    if not eps > 0:
        raise InvalidConstants(f"eps must be positive, got {eps}")
    eps = float(eps)

    def value(x):
        u = _shrink(_as_points(x, 1)[..., 0], eps)
        return u * u + 3.0 * np.sin(u) ** 2

    def grad(x):
        u = _shrink(_as_points(x, 1)[..., 0], eps)
        return (2.0 * u + 3.0 * np.sin(2.0 * u))[..., None]

    return ObjectiveFunction(
        name="piecewise",
        dim=1,
        value=value,
        grad=grad,
        f_star=0.0,
        lipschitz_L=14.0,
        pl_mu=1.0 / 32.0,
        is_convex=False,
        project=lambda x: np.clip(_as_points(x, 1), -eps, eps),
        kink_distance=lambda x: np.abs(np.abs(_as_points(x, 1)[..., 0]) - eps),
        params={"eps": eps},
    )


def make_flat_bottom():
    """``F(x) = max(|x| - 1, 0)^2``: convex, PL, minimizers ``[-1, 1]``.

    Off the flat region ``F'(x)^2 = 4 F(x)``, so the PL constant is 2.
    """

    def value(x):
        u = _shrink(_as_points(x, 1)[..., 0], 1.0)
        return u * u

    def grad(x):
        return 2.0 * _shrink(_as_points(x, 1), 1.0)

    return ObjectiveFunction(
        name="flat-bottom",
        dim=1,
        value=value,
        grad=grad,
        f_star=0.0,
        lipschitz_L=2.0,
        pl_mu=2.0,
        is_convex=True,
        project=lambda x: np.clip(_as_points(x, 1), -1.0, 1.0),
        kink_distance=lambda x: np.abs(np.abs(_as_points(x, 1)[..., 0]) - 1.0),
    )


def make_abs(M=1.0):
    """``F(x) = M * |x|_1``, nonsmooth; only value, prox and subgradient data.

    No global PL constant is attached: ``|x| <= M / (2 mu)`` only holds on a
    bounded set, so callers state the constant for the region they use.
    """
    M = float(M)

    def value(x):
        return M * np.sum(np.abs(_as_points(x, 1)), axis=-1)

    def prox(lam, x):
        return _shrink(np.asarray(x, dtype=float), lam * M)

    def subgrad_dist(x):
        x = _as_points(x, 1)
        return M * np.sqrt(np.count_nonzero(x, axis=-1))

    return ObjectiveFunction(
        name="abs",
        dim=1,
        value=value,
        grad=None,
        f_star=0.0,
        is_convex=True,
        exact_prox=prox,
        project=lambda x: np.zeros_like(_as_points(x, 1)),
        subgrad_dist=subgrad_dist,
        kink_distance=lambda x: np.abs(_as_points(x, 1)[..., 0]),
        params={"M": M},
        extras={"lipschitz_M": M},
    )


REGISTRY = {
    "quadratic": make_quadratic,
    "sin-valley": make_sin_valley,
    "piecewise": make_piecewise_nonconvex,
    "flat-bottom": make_flat_bottom,
    "abs": make_abs,
}

PARAM_KEYS = {
    "quadratic": ("dim", "mu", "L", "seed"),
    "sin-valley": ("c", "f"),
    "piecewise": ("eps",),
    "flat-bottom": (),
    "abs": ("M",),
}


def build(function_id, params=None):
    """Construct a registered built-in from its string id and parameters."""
    params = dict(params or {})
    if function_id not in REGISTRY:
        raise KeyError(f"unknown function id {function_id!r}; known: {sorted(REGISTRY)}")
    unknown = set(params) - set(PARAM_KEYS[function_id])
    if unknown:
        raise TypeError(f"{function_id} does not take parameters {sorted(unknown)}")
    return REGISTRY[function_id](**params)
