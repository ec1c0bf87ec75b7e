"""Sampled estimation and checking of the growth conditions PL, QG, EB, qSC and ns-PL."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyEstimate, MissingOracle, NoImplication

KINDS = ("PL", "QG", "EB", "qSC", "ns-PL")
_DISTANCE_KINDS = ("QG", "EB", "qSC")
NEAR_MIN = 1e-12
CHECK_RTOL = 1e-10


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of checking one condition on a sample set.

    ``worst_margin`` is the smallest ``rhs - lhs`` over the samples (negative
    means violated) and ``witness`` the sample attaining it.
    """

    kind: str
    parameter: float
    holds: bool
    sample_count: int
    n_checked: int
    n_violations: int
    worst_margin: float
    witness: Optional[list]
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "kind": self.kind,
            "parameter": self.parameter,
            "holds": self.holds,
            "sample_count": self.sample_count,
            "n_checked": self.n_checked,
            "n_violations": self.n_violations,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "notes": list(self.notes),
        }


def box_array(box, dim):
    """Normalize ``box`` to shape ``(dim, 2)``; a single ``(lo, hi)`` is broadcast."""
    b = np.asarray(box, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (dim, 1))
    if b.shape != (dim, 2) or np.any(b[:, 0] > b[:, 1]):
        raise ValueError(f"box must be (lo, hi) or {dim} rows of (lo, hi), got {box!r}")
    return b


def sample_box(box, n, dim, seed=0):
    """Uniform grid with about ``n`` points when ``dim <= 2``, seeded Monte Carlo otherwise."""
    if n < 1:
        raise ValueError("n must be at least 1")
    b = box_array(box, dim)
    if dim <= 2:
        per_axis = max(1, int(round(n ** (1.0 / dim))))
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in b]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)
    rng = np.random.default_rng(seed)
    return b[:, 0] + (b[:, 1] - b[:, 0]) * rng.random((n, dim))


def estimate_pl(fn, box, n, seed=0, near_min=NEAR_MIN):
    """Smallest sampled PL ratio ``|grad F|^2 / (2 (F - F*))``.

    Returns ``(mu_hat, witness)``. Samples with ``F - F* <= near_min`` are skipped.
    """
    if fn.grad is None:
        raise ValueError(f"{fn.name} has no gradient")
    x = sample_box(box, n, fn.dim, seed)
    gap = fn.gap(x)
    keep = gap > near_min
    if not np.any(keep):
        raise EmptyEstimate("every sample lies at the minimum value")
    x, gap = x[keep], gap[keep]
    ratio = fn.grad_sq(x) / (2.0 * gap)
    i = int(np.argmin(ratio))
    return float(ratio[i]), x[i].copy()


def check_condition(fn, kind, parameter, box, n, seed=0, projector=None):
    """Evaluate a growth condition's defining inequality on sampled points.

    Parameters
    ----------
    kind : {"PL", "QG", "EB", "qSC", "ns-PL"}
    parameter : float
        ``mu``, ``theta``, ``eta`` or ``beta`` depending on ``kind``.
    projector : callable, optional
        Projection onto the minimizer set; defaults to ``fn.project``.
        Required for the distance-based kinds.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown condition {kind!r}; choose from {KINDS}")
    if not parameter > 0:
        raise ValueError(f"parameter must be positive, got {parameter}")
    projector = projector if projector is not None else fn.project
    if kind in _DISTANCE_KINDS and projector is None:
        raise MissingOracle(f"{kind} needs a projection onto the minimizer set")
    if kind == "ns-PL" and fn.subgrad_dist is None:
        raise MissingOracle("ns-PL needs dist(0, subdifferential)")
    if kind in ("PL", "EB", "qSC") and fn.grad is None:
        raise ValueError(f"{kind} needs a gradient")

    x = sample_box(box, n, fn.dim, seed)
    gap = fn.gap(x)
    notes = []
    if kind == "PL":
        lhs, rhs = gap, fn.grad_sq(x) / (2.0 * parameter)
    elif kind == "ns-PL":
        d = fn.subgrad_dist(x)
        lhs, rhs = gap, d * d / (2.0 * parameter)
    else:
        xbar = projector(x)
        diff = xbar - x
        dist_sq = np.sum(diff * diff, axis=-1)
        if kind == "QG":
            lhs, rhs = 0.5 * parameter * dist_sq, gap
        elif kind == "EB":
            lhs, rhs = parameter * np.sqrt(dist_sq), np.sqrt(fn.grad_sq(x))
        else:
            inner = np.sum(fn.grad(x) * diff, axis=-1)
            lhs = gap + inner + 0.5 * parameter * dist_sq
            rhs = np.zeros_like(lhs)
            notes.append("checked against one projection per sample")
    margin = rhs - lhs
    tol = CHECK_RTOL * (1.0 + np.abs(lhs) + np.abs(rhs))
    violated = margin < -tol
    i = int(np.argmin(margin + tol))
    return ConditionReport(
        kind=kind,
        parameter=float(parameter),
        holds=not bool(np.any(violated)),
        sample_count=len(x),
        n_checked=len(x),
        n_violations=int(np.count_nonzero(violated)),
        worst_margin=float(margin[i]),
        witness=x[i].tolist(),
        notes=notes,
    )


def convert_constants(source, target, value, is_convex=False, L=None):
    """Translate a condition constant along a licensed implication.

    ===========  ===========  ======================  ==================
    source       target       result                  requires
    ===========  ===========  ======================  ==================
    qSC (beta)   PL (mu)      beta                    nothing
    qSC (beta)   QG (theta)   beta                    nothing
    PL (mu)      QG (theta)   mu                      nothing
    EB (eta)     PL (mu)      eta^2 / L               L
    EB (eta)     PL (mu)      eta / 2                 convexity, no L
    QG (theta)   EB (eta)     theta / 2               convexity
    QG (theta)   PL (mu)      theta / 4               convexity
    PL (mu)      qSC (beta)   mu^2 / L                convexity and L
    ===========  ===========  ======================  ==================
    """
    if not value > 0:
        raise ValueError(f"value must be positive, got {value}")
    if L is not None and not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    pair = (source, target)
    if pair in (("qSC", "PL"), ("qSC", "QG"), ("PL", "QG")):
        return value
    if pair == ("EB", "PL"):
        if L is not None:
            return value * value / L
        if is_convex:
            return value / 2
        raise NoImplication("EB -> PL needs L (or convexity)")
    if pair == ("QG", "EB"):
        if is_convex:
            return value / 2
        raise NoImplication("QG -> EB needs convexity")
    if pair == ("QG", "PL"):
        if is_convex:
            return value / 4
        raise NoImplication("QG -> PL needs convexity")
    if pair == ("PL", "qSC"):
        if is_convex and L is not None:
            return value * value / L
        raise NoImplication("PL -> qSC needs convexity and L")
    raise NoImplication(f"no implication {source} -> {target}")


def estimate_lipschitz_grad(fn, box, n_pairs, seed=0, level=None, directions=None,
                            local_fraction=0.5):
    """Sampled lower bound on the gradient Lipschitz constant.

    Draws ``n_pairs`` pairs in ``box``: a ``local_fraction`` share are
    short-range pairs (steps between 1e-4 and 1e-1 of the box width), the
    rest independent uniform points. ``directions`` adds short pairs along
    given vectors at every base point. With ``level`` only pairs whose
    endpoints both satisfy ``F <= level`` count, which yields a sublevel-set
    constant.

    Returns
    -------
    float
        ``max |grad F(x) - grad F(y)| / |x - y|`` over the kept pairs.
    """
    if fn.grad is None:
        raise ValueError(f"{fn.name} has no gradient")
    rng = np.random.default_rng(seed)
    b = box_array(box, fn.dim)
    lo, width = b[:, 0], b[:, 1] - b[:, 0]
    n_local = int(round(local_fraction * n_pairs))
    n_far = n_pairs - n_local

    x_far = lo + width * rng.random((n_far, fn.dim))
    y_far = lo + width * rng.random((n_far, fn.dim))

    x_loc = lo + width * rng.random((n_local, fn.dim))
    u = rng.standard_normal((n_local, fn.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    steps = 10.0 ** rng.uniform(-4, -1, n_local) * np.max(width)
    y_loc = x_loc + steps[:, None] * u

    xs, ys = [x_far, x_loc], [y_far, y_loc]
    if directions is not None:
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        base = np.concatenate([x_far, x_loc])[: max(1, n_pairs // 10)]
        h = 1e-3 * np.max(width)
        for d in dirs:
            xs.append(base)
            ys.append(base + h * d)
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    if level is not None:
        keep = (fn.value(x) <= level) & (fn.value(y) <= level)
        x, y = x[keep], y[keep]
    dist = np.linalg.norm(x - y, axis=1)
    ok = dist > 0
    if not np.any(ok):
        raise EmptyEstimate("no usable sample pairs")
    ratio = np.linalg.norm(fn.grad(x[ok]) - fn.grad(y[ok]), axis=1) / dist[ok]
    return float(np.max(ratio))
