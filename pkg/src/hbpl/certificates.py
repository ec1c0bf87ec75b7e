"""Closed-form damping choices and linear-rate certificates for the Heavy-Ball ODE.

All functions are pure scalar algebra. Notation: ``L`` gradient Lipschitz
constant, ``mu`` PL constant, ``kappa = L / mu``, ``delta > 0`` the free
Lyapunov parameter, ``a = delta + 2L/delta - alpha`` and
``R = 2 (alpha - L/delta)`` the two competing decay exponents.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import InfeasibleDamping, InvalidConstants, NoFeasibleDelta, VacuousEpsilon

KAPPA_THRESHOLD = 9.0 / 8.0
KAPPA_STAR_QG = (19.0 + 6.0 * math.sqrt(2.0)) / 8.0
KAPPA_STAR_QSC = (1.0 + math.sqrt(2.0)) / 2.0
_ENDPOINT_RTOL = 1e-12

REGIMES = (
    "nonconvex-small-kappa",
    "nonconvex-large-kappa",
    "convex-kappa-one",
    "convex-kappa-gt-one",
    "theorem-6.1",
    "theorem-6.2",
    "moreau-4.1",
)
QUANTITIES = ("objective-gap", "grad-norm-sq")


@dataclass(frozen=True)
class RateCertificate:
    """``quantity(t) <= C (F(x0) - F*) (1 + p t) exp(-m t)``.

    ``polynomial_factor`` (``p``) is nonzero only for the degenerate case
    ``a == R``, where the envelope picks up a linear factor and ``C == 1``.
    """

    exponent_m: float
    constant_C: float
    alpha: float
    delta: Optional[float]
    regime: str
    quantity: str = "objective-gap"
    epsilon: float = 0.0
    polynomial_factor: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if not self.exponent_m > 0:
            raise ValueError(f"exponent must be positive, got {self.exponent_m}")
        if not self.constant_C > 0:
            raise ValueError(f"constant must be positive, got {self.constant_C}")

    @property
    def consistent_at_origin(self):
        """Whether the bound at t=0 admits the initial gap (only meaningful for gaps)."""
        return self.quantity != "objective-gap" or self.constant_C >= 1.0

    def bound(self, t, initial_gap):
        t = np.asarray(t, dtype=float)
        env = self.constant_C * initial_gap * np.exp(-self.exponent_m * t)
        if self.polynomial_factor:
            env = env * (1.0 + self.polynomial_factor * t)
        return env

    def with_exponent(self, exponent_m):
        """Copy with another exponent (used for falsification controls)."""
        d = asdict(self)
        d["exponent_m"] = exponent_m
        return RateCertificate(**d)

    def to_dict(self):
        return {
            "exponent_m": self.exponent_m,
            "constant_C": self.constant_C,
            "alpha": self.alpha,
            "delta": self.delta,
            "regime": self.regime,
            "quantity": self.quantity,
            "epsilon": self.epsilon,
            "polynomial_factor": self.polynomial_factor,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in d if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class AlphaRegion:
    """``(lower_open, left_closed_end] U [right_closed_start, upper_open)``."""

    lower_open: float
    left_closed_end: float
    right_closed_start: float
    upper_open: float

    def __post_init__(self):
        if not (self.lower_open < self.left_closed_end <= self.right_closed_start * (1 + 1e-15)
                and self.right_closed_start < self.upper_open):
            raise ValueError(f"inconsistent region {self}")

    def __contains__(self, alpha):
        tol = _ENDPOINT_RTOL * abs(alpha)
        return ((self.lower_open < alpha <= self.left_closed_end + tol)
                or (self.right_closed_start - tol <= alpha < self.upper_open))


def _check_constants(L, mu):
    if not (mu > 0 and L > 0):
        raise InvalidConstants(f"L and mu must be positive, got L={L}, mu={mu}")
    if mu > L:
        raise InvalidConstants(f"mu={mu} exceeds L={L}: kappa < 1 is impossible for an L-smooth PL function")


def alpha_roots(L, mu, delta):
    """The two roots ``alpha_-(delta) <= alpha_+(delta)`` bounding the feasible damping."""
    s = delta + L / delta
    root = math.sqrt(max(s * s - 4.0 * mu, 0.0))
    # alpha_- - L/delta = (s - root)/2 = 2 mu / (s + root), free of cancellation
    alpha_minus = L / delta + 2.0 * mu / (s + root)
    alpha_plus = 0.5 * (delta + 3.0 * L / delta + root)
    return alpha_minus, alpha_plus


def alpha_minus(L, mu, delta):
    return alpha_roots(L, mu, delta)[0]


def feasible_alpha_region(L, mu, delta):
    """Damping values for which the Lyapunov function decays at rate ``2(alpha - L/delta)``."""
    _check_constants(L, mu)
    if not delta > 0:
        raise InvalidConstants(f"delta must be positive, got {delta}")
    lo, hi = alpha_roots(L, mu, delta)
    return AlphaRegion(L / delta, lo, hi, delta + 2.0 * L / delta)


def tie_alpha(L, delta):
    """The damping where ``a == R``: ``(delta + 4L/delta) / 3``."""
    return (delta + 4.0 * L / delta) / 3.0


def small_kappa_deltas(L, mu):
    """``delta_-`` and ``delta_+`` (defined for ``kappa <= 9/8``), else None."""
    disc = 9.0 * mu - 8.0 * L
    if disc < 0:
        return None
    r = math.sqrt(disc)
    return ((3.0 * math.sqrt(mu) - r) / (2.0 * math.sqrt(2.0)),
            (3.0 * math.sqrt(mu) + r) / (2.0 * math.sqrt(2.0)))


def rate_nonconvex(L, mu, delta, alpha, tie_rtol=1e-12):
    """Objective-gap certificate for the nonconvex PL setting at a given ``(delta, alpha)``.

    At the tie ``alpha == (delta + 4L/delta)/3`` the envelope is
    ``(1 + a t) exp(-a t)``; the returned certificate then has ``C = 1`` and
    ``polynomial_factor = a``.
    """
    region = feasible_alpha_region(L, mu, delta)
    if alpha not in region:
        raise InfeasibleDamping(
            f"alpha={alpha} outside ({region.lower_open:.6g}, {region.left_closed_end:.6g}] U "
            f"[{region.right_closed_start:.6g}, {region.upper_open:.6g}) for delta={delta}")
    a = delta + 2.0 * L / delta - alpha
    R = 2.0 * (alpha - L / delta)
    kappa = L / mu
    meta = {"a": a, "R": R, "kappa": kappa, "limited_by": "R" if R < a else "a"}
    deltas = small_kappa_deltas(L, mu)
    if deltas is not None:
        meta["delta_minus"], meta["delta_plus"] = deltas
        meta["delta_inside"] = deltas[0] < delta < deltas[1]
    m = min(a, R)
    if abs(a - R) <= tie_rtol * max(a, R):
        meta["degenerate_tie"] = True
        return RateCertificate(m, 1.0, alpha, delta, "theorem-6.1", polynomial_factor=a, meta=meta)
    C = 1.0 + a / abs(delta + 4.0 * L / delta - 3.0 * alpha)
    return RateCertificate(m, C, alpha, delta, "theorem-6.1", meta=meta)


def _convex_window(L, mu, delta, alpha):
    lo = L / delta
    hi = alpha_minus(L, mu, delta)
    strict = mu == L and delta <= math.sqrt(L)
    tol = _ENDPOINT_RTOL * abs(alpha)
    if strict:
        ok = lo < alpha < hi
        if not ok:
            raise InfeasibleDamping(
                f"alpha={alpha} outside the open interval ({lo:.6g}, {hi:.6g}); with mu == L and "
                f"delta <= sqrt(L) the right endpoint is excluded")
    elif not lo < alpha <= hi + tol:
        raise InfeasibleDamping(f"alpha={alpha} outside ({lo:.6g}, {hi:.6g}]")


def rate_convex(L, mu, delta, alpha, lipschitz_scaled=False):
    """Gradient-norm and objective-gap certificates for convex PL functions.

    Returns ``(grad_cert, gap_cert)``, both with exponent ``2(alpha - L/delta)``.
    The constants follow the published statement. With ``lipschitz_scaled``
    both are multiplied by ``L``: the lower bound ``V >= (a/L - 1/delta)|grad F|^2 / 2``
    carries a factor ``L`` that the published constants drop, so they are
    only dimensionally consistent when ``L == 1``.
    """
    _check_constants(L, mu)
    if not delta > 0:
        raise InvalidConstants(f"delta must be positive, got {delta}")
    _convex_window(L, mu, delta, alpha)
    gap_den = delta + L / delta - alpha
    a = delta + 2.0 * L / delta - alpha
    c_grad = 2.0 * (1.0 + L / (delta * gap_den))
    c_gap = a / (mu * gap_den)
    scale = L if lipschitz_scaled else 1.0
    m = 2.0 * (alpha - L / delta)
    meta = {"a": a, "kappa": L / mu, "lipschitz_scaled": lipschitz_scaled,
            "gap_constant_statement": scale * 2.0 * c_grad / mu}
    grad_cert = RateCertificate(m, scale * c_grad, alpha, delta, "theorem-6.2",
                                quantity="grad-norm-sq", meta=meta)
    gap_cert = RateCertificate(m, scale * c_gap, alpha, delta, "theorem-6.2", meta=meta)
    return grad_cert, gap_cert


def _sqrt_gap(kappa):
    """``sqrt(kappa) - sqrt(kappa - 1)`` without cancellation."""
    return 1.0 / (math.sqrt(kappa) + math.sqrt(kappa - 1.0))


def heavy_ball_factor(L, mu):
    """Worst-case exponent ``2 (sqrt(kappa) - sqrt(kappa-1)) sqrt(mu)``."""
    return 2.0 * _sqrt_gap(L / mu) * math.sqrt(mu)


def optimal_damping_nonconvex(L, mu, eps=None, variant="+"):
    """Rate-optimal damping and its certificate for nonconvex PL functions.

    For ``kappa < 9/8`` the exponent is ``sqrt(2 mu) - eps``; ``variant``
    picks the sign in ``5 +- sqrt(9 - 8 kappa)`` (``"+"`` pairs with
    ``delta_-``, ``"-"`` with ``delta_+``). The certificate constant is the
    stated ``(4 eps + 2 sqrt(2 mu)) / eps``; the smaller value from the
    derivation is kept in ``meta["proof_constant"]``. From ``kappa = 9/8`` on
    the large-kappa formula applies and ``eps`` is ignored.
    """
    _check_constants(L, mu)
    kappa = L / mu
    if kappa < KAPPA_THRESHOLD:
        if eps is None or not eps > 0:
            raise VacuousEpsilon("eps > 0 is required when kappa < 9/8")
        root2mu = math.sqrt(2.0 * mu)
        if eps >= root2mu:
            raise VacuousEpsilon(f"eps={eps} >= sqrt(2 mu)={root2mu}: exponent would be nonpositive")
        if variant not in ("+", "-"):
            raise ValueError("variant must be '+' or '-'")
        sign = 1.0 if variant == "+" else -1.0
        alpha = (math.sqrt(mu) / (2.0 * math.sqrt(2.0))) * (5.0 + sign * math.sqrt(9.0 - 8.0 * kappa)) - eps / 2.0
        d_minus, d_plus = small_kappa_deltas(L, mu)
        delta = d_minus if variant == "+" else d_plus
        m = root2mu - eps
        C = (4.0 * eps + 2.0 * root2mu) / eps
        meta = {"kappa": kappa, "variant": variant,
                "proof_constant": 2.0 * (2.0 * eps + root2mu) / (3.0 * eps)}
        return RateCertificate(m, C, alpha, delta, "nonconvex-small-kappa", epsilon=eps, meta=meta)

    g = _sqrt_gap(kappa)
    alpha = (2.0 * math.sqrt(kappa) - math.sqrt(kappa - 1.0)) * math.sqrt(mu)
    m = 2.0 * g * math.sqrt(mu)
    q = math.sqrt(kappa - 1.0)
    denom = 8.0 * kappa - 9.0
    if abs(denom) <= 1e-12 * kappa:
        # at kappa = 9/8 the two exponents tie and the envelope is (1 + m t) exp(-m t)
        return RateCertificate(m, 1.0, alpha, math.sqrt(L), "nonconvex-large-kappa",
                               polynomial_factor=m, meta={"kappa": kappa, "degenerate_tie": True})
    C = 4.0 * q * (3.0 * q + math.sqrt(kappa)) / denom
    return RateCertificate(m, C, alpha, math.sqrt(L), "nonconvex-large-kappa",
                           meta={"kappa": kappa})


def optimal_damping_convex(L, mu, eps=None, lipschitz_scaled=False):
    """Rate-optimal damping for convex PL functions: ``(grad_cert, gap_cert)``.

    ``kappa == 1`` needs ``eps`` and uses ``alpha = 2 sqrt(mu) - eps``;
    otherwise ``alpha = (2 sqrt(kappa) - sqrt(kappa - 1)) sqrt(mu)``.
    See :func:`rate_convex` for ``lipschitz_scaled``.
    """
    _check_constants(L, mu)
    kappa = L / mu
    delta = math.sqrt(L)
    if kappa == 1.0:
        if eps is None or not eps > 0:
            raise VacuousEpsilon("eps > 0 is required when kappa == 1")
        if eps >= math.sqrt(mu):
            raise VacuousEpsilon(f"eps={eps} >= sqrt(mu)={math.sqrt(mu)}: exponent would be nonpositive")
        alpha = 2.0 * math.sqrt(mu) - eps
        regime = "convex-kappa-one"
    else:
        alpha = (2.0 * math.sqrt(kappa) - math.sqrt(kappa - 1.0)) * math.sqrt(mu)
        regime = "convex-kappa-gt-one"
        eps = 0.0
    grad_cert, gap_cert = rate_convex(L, mu, delta, alpha, lipschitz_scaled=lipschitz_scaled)
    out = []
    for cert in (grad_cert, gap_cert):
        d = asdict(cert)
        d.update(regime=regime, epsilon=eps)
        out.append(RateCertificate(**d))
    return tuple(out)


def delta_cubic(delta, alpha, L, mu):
    """``alpha d^3 - (alpha^2 + L + mu) d^2 + 3 L alpha d - 2 L^2``."""
    return ((alpha * delta - (alpha * alpha + L + mu)) * delta + 3.0 * L * alpha) * delta - 2.0 * L * L


def _delta_cubic_prime(delta, alpha, L, mu):
    return (3.0 * alpha * delta - 2.0 * (alpha * alpha + L + mu)) * delta + 3.0 * L * alpha


def _newton_bisect(f, df, lo, hi, xtol=1e-15, maxiter=200):
    """Safeguarded Newton on a bracket ``[lo, hi]`` with ``f(lo) * f(hi) <= 0``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo > 0:
        lo, hi = hi, lo
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = f(x)
        if fx == 0.0:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        d = df(x)
        step_ok = d != 0.0
        if step_ok:
            x_new = x - fx / d
            step_ok = min(lo, hi) < x_new < max(lo, hi)
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= xtol * max(1.0, abs(x_new)):
            return x_new
        x = x_new
    return x


def delta_for_alpha(alpha, L, mu, closed=False):
    """Lyapunov parameter ``delta`` with ``alpha_-(delta) == alpha`` inside the convex window.

    Positive roots of :func:`delta_cubic` are bracketed by splitting
    ``(0, upper]`` at the cubic's critical points. Roots that do not satisfy
    ``alpha_-(delta) == alpha`` (the cubic also carries ``alpha_+`` solutions)
    or fall outside the window are discarded; among the rest the one with the
    largest exponent ``2 (alpha - L/delta)`` is returned. ``closed=True``
    admits the open endpoint of the ``mu == L, delta <= sqrt(L)`` window.
    """
    _check_constants(L, mu)
    if not alpha > 0:
        raise InvalidConstants(f"alpha must be positive, got {alpha}")
    f = lambda d: delta_cubic(d, alpha, L, mu)
    df = lambda d: _delta_cubic_prime(d, alpha, L, mu)

    upper = 10.0 * max(alpha, math.sqrt(L), (L + mu) / alpha)
    lower = 1e-12 * min(1.0, L / alpha)
    knots = [lower, upper]
    # critical points of the cubic
    qa, qb, qc = 3.0 * alpha, -2.0 * (alpha * alpha + L + mu), 3.0 * L * alpha
    disc = qb * qb - 4.0 * qa * qc
    candidates = []
    scale = 2.0 * L * L + 1e-300
    if disc >= 0:
        r = math.sqrt(disc)
        for c in ((-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa)):
            if lower < c < upper:
                knots.append(c)
                if abs(f(c)) <= 1e-12 * scale:
                    candidates.append(c)
    knots.sort()
    for lo, hi in zip(knots[:-1], knots[1:]):
        if f(lo) * f(hi) <= 0:
            candidates.append(_newton_bisect(f, df, lo, hi))

    valid = []
    for d in candidates:
        if abs(alpha_minus(L, mu, d) - alpha) > 1e-10 * alpha or not L / d < alpha:
            continue
        # with mu == L and delta <= sqrt(L) the window is open at alpha_-(delta), so a
        # root there never qualifies; the test is structural because at a multiple
        # root the computed delta is only accurate to about eps**(1/3)
        if mu == L and d <= math.sqrt(L) * (1.0 + 1e-8) and not closed:
            continue
        valid.append(d)
    if not valid:
        raise NoFeasibleDelta(f"no delta > 0 with alpha_-(delta) = {alpha} in the convex window (L={L}, mu={mu})")
    return max(valid, key=lambda d: alpha - L / d)


@dataclass(frozen=True)
class FactorComparison:
    """Worst-case exponents of competing methods for one ``(L, mu)``."""

    L: float
    mu: float
    kappa: float
    heavy_ball: float
    gradient_flow: float
    qg_unique_minimizer: float
    qsc_unique_minimizer: float
    winner_vs_gradient_flow: str
    winner_vs_qg: str
    winner_vs_qsc: str
    gradient_flow_window: bool
    kappa_star_qg: float
    kappa_star_qsc: float
    kappa_star_qg_bisected: float
    kappa_star_qsc_bisected: float

    def to_dict(self):
        return asdict(self)


def _hb_unit(kappa):
    return 2.0 * _sqrt_gap(kappa)


def bisect_root(g, lo, hi, tol=1e-13, maxiter=500):
    """Plain bisection for a sign change of ``g`` on ``[lo, hi]``."""
    glo = g(lo)
    if glo * g(hi) > 0:
        raise ValueError("no sign change on the bracket")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or hi - lo <= tol * max(1.0, abs(mid)):
            return mid
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossing_kappas():
    """Bisected condition numbers where the heavy-ball factor meets the two alternatives."""
    k_qg = bisect_root(lambda k: _hb_unit(k) - (2.0 - math.sqrt(2.0)), 1.0, 100.0)
    k_qsc = bisect_root(lambda k: _hb_unit(k) - math.sqrt(2.0 / k), 1.0, 100.0)
    return k_qg, k_qsc


def compare_factors(L, mu):
    """Compare the heavy-ball exponent with gradient flow and two unique-minimizer rates."""
    _check_constants(L, mu)
    kappa = L / mu
    hb = heavy_ball_factor(L, mu)
    gf = 2.0 * mu
    qg = (2.0 - math.sqrt(2.0)) * math.sqrt(mu)
    qsc = math.sqrt(2.0 * mu / kappa)

    def winner(other_name, other):
        return "heavy-ball" if hb >= other else other_name

    k_qg, k_qsc = crossing_kappas()
    return FactorComparison(
        L=L, mu=mu, kappa=kappa,
        heavy_ball=hb, gradient_flow=gf, qg_unique_minimizer=qg, qsc_unique_minimizer=qsc,
        winner_vs_gradient_flow=winner("gradient-flow", gf),
        winner_vs_qg=winner("qg-unique-minimizer", qg),
        winner_vs_qsc=winner("qsc-unique-minimizer", qsc),
        gradient_flow_window=(2.0 * math.sqrt(L) - 1.0 <= mu <= 1.0),
        kappa_star_qg=KAPPA_STAR_QG, kappa_star_qsc=KAPPA_STAR_QSC,
        kappa_star_qg_bisected=k_qg, kappa_star_qsc_bisected=k_qsc,
    )
