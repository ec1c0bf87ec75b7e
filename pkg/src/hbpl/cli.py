"""Command-line runner: experiments from JSON configs plus one subcommand per module.

Exit status is 0 when every enabled check passes (tolerance-marginal counts
as passing), 1 when a check fails and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import certificates as cert_mod
from .errors import ConfigError, HBPLError, InfeasibleDamping, NoFeasibleDelta, VacuousEpsilon
from .geometry import KINDS, check_condition, estimate_lipschitz_grad
from .integrator import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, integrate_gradient_flow, integrate_heavy_ball
from .moreau import MoreauHandle, nonsmooth_heavy_ball
from .objectives import PARAM_KEYS, REGISTRY, build
from .verify import (
    _classify,
    check_bound,
    check_envelope,
    check_lyapunov_decay,
    fit_decay_rate,
    lyapunov_series,
    time_to_threshold,
    total_energy,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2
DYNAMICS = ("heavy-ball", "gradient-flow", "moreau-heavy-ball")
CHECKS = ("energy", "envelope", "lyapunov", "sublevel", "rate")
ENERGY_RTOL = 1e-9
SUBLEVEL_SAFETY = 1.05
MAX_HORIZON = 1e4
SUMMARY_FIELDS = (
    "name", "function", "params", "dynamics", "alpha_spec", "alpha", "constants",
    "certificate", "t_end", "n_samples", "seed", "fitted_rate", "fit_r_squared",
    "final_gap", "time_to_1e-6", "steps", "checks", "passed", "wall_time",
)
_OFFSET_RE = re.compile(r"^optimal\s*([+-])\s*([0-9.eE+-]+)$")


@dataclass
class RunConfig:
    """One experiment: a registered function, the dynamics and the checks to run.

    ``alpha`` is a number or one of ``"optimal-convex"``, ``"optimal-nonconvex"``,
    ``"2*sqrt(mu)"``, ``"optimal+<offset>"`` and ``"optimal-<offset>"``.
    ``L``/``mu`` override the function's constants; ``L="sublevel"``
    estimates the gradient Lipschitz constant on the initial sublevel set.
    ``x0=None`` draws a standard normal start from ``seed``.
    """

    function: str
    params: dict = field(default_factory=dict)
    dynamics: str = "heavy-ball"
    alpha: object = "optimal-convex"
    eps: Optional[float] = None
    L: object = None
    mu: Optional[float] = None
    x0: Optional[list] = None
    v0: Optional[list] = None
    t_end: Optional[float] = None
    n_samples: int = 1001
    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    seed: int = 0
    checks: list = field(default_factory=lambda: ["energy", "envelope"])
    lam: Optional[float] = None
    mu_ns: Optional[float] = None
    output_dir: str = "runs"
    name: str = "run"

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config key")
        if "function" not in d:
            raise ConfigError("function", "missing")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from exc
        return cls.from_dict(d)

    def to_dict(self):
        return dataclasses.asdict(self)

    def validate(self):
        if self.function not in REGISTRY:
            raise ConfigError("function", f"unknown id {self.function!r}; known: {sorted(REGISTRY)}")
        bad = set(self.params) - set(PARAM_KEYS[self.function])
        if bad:
            raise ConfigError("params", f"{self.function} does not take {sorted(bad)}")
        if self.dynamics not in DYNAMICS:
            raise ConfigError("dynamics", f"must be one of {DYNAMICS}")
        bad = set(self.checks) - set(CHECKS)
        if bad:
            raise ConfigError("checks", f"unknown checks {sorted(bad)}; choose from {CHECKS}")
        if not (isinstance(self.n_samples, int) and self.n_samples >= 2):
            raise ConfigError("n_samples", "must be an integer >= 2")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError("t_end", "must be positive")
        if self.dynamics == "moreau-heavy-ball":
            if self.lam is None or not self.lam > 0:
                raise ConfigError("lam", "moreau-heavy-ball needs lam > 0")
            if self.mu_ns is None or not self.mu_ns > 0:
                raise ConfigError("mu_ns", "moreau-heavy-ball needs mu_ns > 0")
        if isinstance(self.L, str) and self.L != "sublevel":
            raise ConfigError("L", "must be a number or 'sublevel'")
        if not isinstance(self.alpha, (int, float, str)):
            raise ConfigError("alpha", "must be a number or a named rule")


def apply_overrides(d, assignments):
    """Apply ``key=value`` strings to a config dict; values are parsed as JSON when possible."""
    d = dict(d)
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        try:
            d[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            d[key.strip()] = raw
    return d


# ---------------------------------------------------------------------------
# damping resolution


def _optimal(L, mu, eps, convex):
    if convex:
        return cert_mod.optimal_damping_convex(L, mu, eps, lipschitz_scaled=True)[1]
    return cert_mod.optimal_damping_nonconvex(L, mu, eps)


def certificate_for_alpha(alpha, L, mu, convex):
    """Best available gap certificate for an explicit damping, or None."""
    if convex:
        try:
            delta = cert_mod.delta_for_alpha(alpha, L, mu)
            return cert_mod.rate_convex(L, mu, delta, alpha, lipschitz_scaled=True)[1]
        except (NoFeasibleDelta, InfeasibleDamping):
            pass
    best = None
    for delta in math.sqrt(L) * np.logspace(-2, 2, 801):
        try:
            c = cert_mod.rate_nonconvex(L, mu, float(delta), alpha)
        except InfeasibleDamping:
            continue
        if best is None or c.exponent_m > best.exponent_m:
            best = c
    return best


def resolve_alpha(spec, L, mu, eps=None, convex=True):
    """Turn an ``alpha`` config entry into ``(alpha, certificate or None)``."""
    if isinstance(spec, (int, float)):
        alpha = float(spec)
        if not alpha > 0:
            raise ConfigError("alpha", "must be positive")
        return alpha, certificate_for_alpha(alpha, L, mu, convex)
    s = spec.strip()
    try:
        if s == "optimal-convex":
            c = _optimal(L, mu, eps, True)
            return c.alpha, c
        if s == "optimal-nonconvex":
            c = _optimal(L, mu, eps, False)
            return c.alpha, c
        if s.replace(" ", "") == "2*sqrt(mu)":
            alpha = 2.0 * math.sqrt(mu)
            return alpha, certificate_for_alpha(alpha, L, mu, convex)
        m = _OFFSET_RE.match(s)
        if m:
            offset = float(m.group(2)) * (1.0 if m.group(1) == "+" else -1.0)
            alpha = _optimal(L, mu, eps, convex).alpha + offset
            if not alpha > 0:
                raise ConfigError("alpha", f"{spec} resolves to a nonpositive damping")
            return alpha, certificate_for_alpha(alpha, L, mu, convex)
        alpha = float(s)
    except (VacuousEpsilon, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("alpha", f"cannot resolve {spec!r}: {exc}") from exc
    return resolve_alpha(alpha, L, mu, eps, convex)


# ---------------------------------------------------------------------------
# run


def sublevel_lipschitz(fn, x0, n_pairs=200_000, seed=0):
    """Sampled gradient Lipschitz constant on ``{F <= F(x0)}`` times a 1.05 safety factor."""
    x0 = np.asarray(x0, dtype=float)
    half = max(2.0 * math.pi, 2.0 * float(np.max(np.abs(x0))))
    box = np.stack([x0 - half, x0 + half], axis=1)
    level = float(fn.value(x0))
    return SUBLEVEL_SAFETY * estimate_lipschitz_grad(fn, box, n_pairs, seed=seed, level=level)


def _resolve_constants(cfg, fn, x0):
    source = "function"
    L = cfg.L if cfg.L is not None else fn.lipschitz_L
    if cfg.L == "sublevel" or (L is None and fn.grad is not None):
        L, source = sublevel_lipschitz(fn, x0, seed=cfg.seed), "sublevel-estimate"
    elif cfg.L is not None:
        source = "config"
    mu = cfg.mu if cfg.mu is not None else fn.pl_mu
    return L, mu, source


def _x0(cfg, dim):
    if cfg.x0 is None:
        return np.random.default_rng(cfg.seed).standard_normal(dim)
    x0 = np.asarray(cfg.x0, dtype=float).reshape(-1)
    if x0.shape != (dim,):
        raise ConfigError("x0", f"expected {dim} coordinates, got {x0.size}")
    return x0


def _write_csv(path, columns):
    names = list(columns)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*(columns[k] for k in names)):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _status_ok(status):
    return status in ("pass", "tolerance-marginal")


def run(cfg, out_dir=None):
    """Execute one configured experiment; returns the summary dict.

    Writes ``<name>.csv`` and ``<name>.json`` into ``out_dir``.
    """
    t_start = time.perf_counter()
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        fn = build(cfg.function, cfg.params)
    except (TypeError, HBPLError) as exc:
        raise ConfigError("params", str(exc)) from exc
    x0 = _x0(cfg, fn.dim)

    if cfg.dynamics == "moreau-heavy-ball":
        return _run_moreau(cfg, fn, x0, out, t_start)

    if fn.grad is None:
        raise ConfigError("function", f"{fn.name} is nonsmooth; use dynamics moreau-heavy-ball")
    L, mu, L_source = _resolve_constants(cfg, fn, x0)
    alpha, cert = None, None
    if cfg.dynamics == "heavy-ball":
        if L is None or mu is None:
            if not isinstance(cfg.alpha, (int, float)):
                raise ConfigError("alpha", "named damping rules need L and mu")
        else:
            alpha, cert = resolve_alpha(cfg.alpha, L, mu, cfg.eps, fn.is_convex)
        if alpha is None:
            alpha = float(cfg.alpha)
    m_ref = cert.exponent_m if cert else (2.0 * mu if mu else 1.0)
    t_end = cfg.t_end or min(40.0 / m_ref, MAX_HORIZON)

    if cfg.dynamics == "heavy-ball":
        traj = integrate_heavy_ball(fn, alpha, x0, cfg.v0, t_end=t_end, abs_tol=cfg.abs_tol,
                                    rel_tol=cfg.rel_tol, n_samples=cfg.n_samples)
    else:
        traj = integrate_gradient_flow(fn, x0, t_end=t_end, abs_tol=cfg.abs_tol,
                                       rel_tol=cfg.rel_tol, n_samples=cfg.n_samples)

    nan = np.full(len(traj), np.nan)
    U = total_energy(traj).U if traj.velocities is not None else nan
    V = nan
    envelope = cert.bound(traj.times, float(traj.values[0])) if cert else nan
    checks = {}
    if cert and cert.delta is not None and traj.velocities is not None:
        a = cert.delta + 2.0 * L / cert.delta - alpha
        R = 2.0 * (alpha - L / cert.delta)
        series = lyapunov_series(traj, fn, a, cert.delta)
        V = series.V
        if "lyapunov" in cfg.checks:
            ratio, status = check_lyapunov_decay(series, R)
            checks["lyapunov"] = {"max_ratio": ratio, "status": status}
    elif "lyapunov" in cfg.checks:
        checks["lyapunov"] = {"status": "skipped", "reason": "needs a heavy-ball run with a certificate"}

    if "energy" in cfg.checks:
        if traj.velocities is None:
            checks["energy"] = {"status": "skipped", "reason": "gradient flow has no kinetic energy"}
        else:
            inc = total_energy(traj).max_increase
            limit = ENERGY_RTOL * (1.0 + float(U[0]))
            checks["energy"] = {"max_increase": inc, "limit": limit,
                                "status": "pass" if inc <= limit else "fail"}
    if "envelope" in cfg.checks:
        if cert is None:
            checks["envelope"] = {"status": "skipped", "reason": "no certificate for this damping"}
        else:
            checks["envelope"] = check_envelope(traj, cert).to_dict()
    if "sublevel" in cfg.checks:
        excess = float(np.max(traj.values) - traj.values[0])
        limit = ENERGY_RTOL * (1.0 + float(traj.values[0]))
        checks["sublevel"] = {"max_excess": excess, "status": "pass" if excess <= limit else "fail"}

    rate, r2 = _fit(traj)
    if "rate" in cfg.checks:
        if cert is None or rate is None:
            checks["rate"] = {"status": "skipped", "reason": "needs a certificate and enough samples"}
        else:
            ok = rate >= cert.exponent_m * (1.0 - 0.02)
            checks["rate"] = {"fitted": rate, "certified": cert.exponent_m,
                              "status": "pass" if ok else "fail"}

    columns = traj.csv_columns({"U": U, "V": V, "envelope": envelope})
    _write_csv(out / f"{cfg.name}.csv", columns)
    summary = {
        "name": cfg.name,
        "function": cfg.function,
        "params": fn.params,
        "dynamics": cfg.dynamics,
        "alpha_spec": cfg.alpha if cfg.dynamics == "heavy-ball" else None,
        "alpha": alpha,
        "constants": {"L": L, "mu": mu, "kappa": (L / mu) if (L and mu) else None, "L_source": L_source},
        "certificate": cert.to_dict() if cert else None,
        "t_end": t_end,
        "n_samples": cfg.n_samples,
        "seed": cfg.seed,
        "fitted_rate": rate,
        "fit_r_squared": r2,
        "final_gap": float(traj.values[-1]),
        "time_to_1e-6": _finite(time_to_threshold(traj.times, traj.values, 1e-6)),
        "steps": traj.meta.get("steps"),
        "checks": checks,
        "passed": all(_status_ok(c["status"]) or c["status"] == "skipped" for c in checks.values()),
        "wall_time": time.perf_counter() - t_start,
    }
    _write_json(out / f"{cfg.name}.json", summary)
    return summary


def _finite(x):
    return None if not math.isfinite(x) else x


def _fit(traj):
    try:
        return fit_decay_rate(traj.times, traj.values)
    except HBPLError:
        return None, None


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def _run_moreau(cfg, fn, x0, out, t_start):
    handle = MoreauHandle(fn, cfg.lam, mu_ns=cfg.mu_ns)
    t_end = cfg.t_end or 20.0
    res = nonsmooth_heavy_ball(handle, x0, t_end=t_end, n_samples=cfg.n_samples,
                               abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol)
    traj = res.traj
    U = total_energy(traj).U
    columns = traj.csv_columns({"U": U, "V": np.full(len(traj), np.nan), "envelope": res.bound_46})
    _write_csv(out / f"{cfg.name}.csv", columns)
    res.bounds_to_csv(out / f"{cfg.name}_bounds.csv")
    checks = {}
    ratio, first, _, _ = check_bound(traj.times, res.prox_gap, res.bound_46)
    checks["bound_46"] = {"max_ratio": ratio, "first_violation_time": first, "status": _classify(ratio)}
    if res.bound_47 is not None:
        ratio, first, _, _ = check_bound(traj.times, res.base_gap, res.bound_47)
        checks["bound_47"] = {"max_ratio": ratio, "first_violation_time": first, "status": _classify(ratio)}
    if "energy" in cfg.checks:
        inc = total_energy(traj).max_increase
        limit = ENERGY_RTOL * (1.0 + float(U[0]))
        checks["energy"] = {"max_increase": inc, "limit": limit, "status": "pass" if inc <= limit else "fail"}
    rate, r2 = _fit(traj)
    summary = {
        "name": cfg.name,
        "function": cfg.function,
        "params": fn.params,
        "dynamics": cfg.dynamics,
        "alpha_spec": "envelope-optimal",
        "alpha": res.alpha,
        "constants": {"lambda": cfg.lam, "mu_ns": cfg.mu_ns, "exponent": res.exponent, "constant": res.constant},
        "certificate": None,
        "t_end": t_end,
        "n_samples": cfg.n_samples,
        "seed": cfg.seed,
        "fitted_rate": rate,
        "fit_r_squared": r2,
        "final_gap": float(traj.values[-1]),
        "time_to_1e-6": _finite(time_to_threshold(traj.times, traj.values, 1e-6)),
        "steps": traj.meta.get("steps"),
        "checks": checks,
        "passed": all(_status_ok(c["status"]) for c in checks.values()),
        "wall_time": time.perf_counter() - t_start,
    }
    _write_json(out / f"{cfg.name}.json", summary)
    return summary


# ---------------------------------------------------------------------------
# reproductions

EXAMPLE1_KAPPAS = (10, 100, 200)
EXAMPLE1_SEEDS = (0, 1, 2)
EXAMPLE2_STARTS = ((4.5, 4.5), (-1.75, 4.5), (-1.0, 4.5))


def repro_example1(kappa, seed=0, out_dir="repro/example1", n_samples=8001):
    """Quadratic benchmark with ``L = 1``, ``mu = 1/kappa``: gradient flow and four dampings."""
    if kappa not in EXAMPLE1_KAPPAS:
        raise ConfigError("kappa", f"must be one of {EXAMPLE1_KAPPAS}")
    mu = 1.0 / kappa
    star = cert_mod.optimal_damping_convex(1.0, mu, lipschitz_scaled=True)[1]
    t_end = min(40.0 / star.exponent_m, MAX_HORIZON)
    base = {"function": "quadratic", "params": {"dim": 100, "mu": mu, "L": 1.0, "seed": seed},
            "x0": None, "seed": seed, "t_end": t_end, "n_samples": n_samples}
    curves = [
        ("gradient-flow", {"dynamics": "gradient-flow", "checks": []}),
        ("hb-alpha-star", {"alpha": "optimal-convex", "checks": ["energy", "envelope", "lyapunov"]}),
        ("hb-alpha-star-minus", {"alpha": "optimal-0.1", "checks": ["energy", "envelope"]}),
        ("hb-alpha-star-plus", {"alpha": "optimal+0.1", "checks": ["energy", "envelope"]}),
        ("hb-2sqrt-mu", {"alpha": "2*sqrt(mu)", "checks": ["energy", "envelope"]}),
    ]
    out = Path(out_dir) / f"kappa{kappa}_seed{seed}"
    results = {}
    for name, extra in curves:
        cfg = RunConfig.from_dict({**base, **extra, "name": name})
        results[name] = run(cfg, out)
    ranking = sorted(results, key=lambda k: results[k]["time_to_1e-6"] or math.inf)
    summary = {
        "example": 1, "kappa": kappa, "seed": seed, "t_end": t_end,
        "curves": {k: {f: v[f] for f in ("alpha", "fitted_rate", "time_to_1e-6", "passed")}
                   for k, v in results.items()},
        "ranking_time_to_1e-6": ranking,
        "passed": all(v["passed"] for v in results.values()),
    }
    _write_json(out / "summary.json", summary)
    return summary


def repro_example2(start, out_dir="repro/example2", n_samples=2001, seed=0):
    """Sin-valley ``(y - sin x)^2 / 8`` with ``mu = 1/4`` and a sublevel-set ``L``."""
    start = tuple(float(s) for s in start)
    if start not in EXAMPLE2_STARTS:
        raise ConfigError("start", f"must be one of {EXAMPLE2_STARTS}")
    fn = build("sin-valley", {"c": 0.125})
    mu = 0.25
    L = sublevel_lipschitz(fn, np.array(start), seed=seed)
    star = cert_mod.optimal_damping_nonconvex(L, mu)
    t_end = min(40.0 / star.exponent_m, MAX_HORIZON)
    base = {"function": "sin-valley", "params": {"c": 0.125}, "x0": list(start), "L": L, "mu": mu,
            "seed": seed, "t_end": t_end, "n_samples": n_samples}
    curves = [
        ("gradient-flow", {"dynamics": "gradient-flow", "checks": ["sublevel"]}),
        ("hb-alpha-star", {"alpha": "optimal-nonconvex", "checks": ["energy", "envelope", "sublevel"]}),
        ("hb-2sqrt-mu", {"alpha": "2*sqrt(mu)", "checks": ["energy", "sublevel"]}),
    ]
    out = Path(out_dir) / "start_{:g}_{:g}".format(*start)
    results = {}
    for name, extra in curves:
        cfg = RunConfig.from_dict({**base, **extra, "name": name})
        results[name] = run(cfg, out)
    summary = {
        "example": 2, "start": list(start), "mu": mu, "L_sublevel": L, "t_end": t_end,
        "curves": {k: {f: v[f] for f in ("alpha", "final_gap", "fitted_rate", "passed")}
                   for k, v in results.items()},
        "passed": all(v["passed"] for v in results.values()),
    }
    _write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# argument parsing


def _floats(text):
    return [float(s) for s in text.split(",")]


def build_parser():
    p = argparse.ArgumentParser(prog="hbpl", description="Heavy-Ball dynamics under the PL condition.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config", help="path to a JSON config")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    r.add_argument("--alpha", help="override the damping rule")
    r.add_argument("--seed", type=int)
    r.add_argument("--t-end", type=float)
    r.add_argument("--out", help="output directory")

    c = sub.add_parser("certify", help="print rate certificates")
    c.add_argument("--L", type=float, required=True)
    c.add_argument("--mu", type=float, required=True)
    c.add_argument("--setting", choices=("convex", "nonconvex"), default="nonconvex")
    c.add_argument("--eps", type=float)
    c.add_argument("--delta", type=float)
    c.add_argument("--alpha", type=float)
    c.add_argument("--lipschitz-scaled", action="store_true")

    g = sub.add_parser("check-geometry", help="sample a growth condition on a box")
    g.add_argument("--function", required=True, choices=sorted(REGISTRY))
    g.add_argument("--params", default="{}", help="JSON dict of function parameters")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--parameter", type=float, required=True)
    g.add_argument("--box", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    g.add_argument("--n", type=int, default=10_000)
    g.add_argument("--seed", type=int, default=0)

    m = sub.add_parser("moreau", help="Heavy-Ball on a Moreau envelope")
    m.add_argument("--base", default="abs", choices=sorted(REGISTRY))
    m.add_argument("--params", default="{}")
    m.add_argument("--lam", type=float, default=1.0)
    m.add_argument("--mu", type=float, required=True, help="nonsmooth PL constant of the base")
    m.add_argument("--x0", type=_floats, required=True)
    m.add_argument("--t-end", type=float, default=20.0)
    m.add_argument("--n-samples", type=int, default=1001)
    m.add_argument("--out", default="runs")
    m.add_argument("--name", default="moreau")

    k = sub.add_parser("compare", help="compare worst-case exponents")
    k.add_argument("--L", type=float, required=True)
    k.add_argument("--mu", type=float, required=True)

    rp = sub.add_parser("repro", help="reproduce the numerical examples")
    rsub = rp.add_subparsers(dest="example", required=True)
    e1 = rsub.add_parser("example1")
    e1.add_argument("--kappa", type=int, default=10, choices=EXAMPLE1_KAPPAS)
    e1.add_argument("--seed", type=int, default=0)
    e1.add_argument("--out", default="repro/example1")
    e2 = rsub.add_parser("example2")
    e2.add_argument("--start", type=_floats, default=[4.5, 4.5])
    e2.add_argument("--out", default="repro/example2")
    return p


def _print(obj):
    print(json.dumps(obj, indent=2, default=_json_default))


def _certify(args):
    L, mu = args.L, args.mu
    if args.alpha is not None and args.delta is not None:
        if args.setting == "convex":
            certs = cert_mod.rate_convex(L, mu, args.delta, args.alpha, args.lipschitz_scaled)
        else:
            certs = (cert_mod.rate_nonconvex(L, mu, args.delta, args.alpha),)
    elif args.setting == "convex":
        certs = cert_mod.optimal_damping_convex(L, mu, args.eps, args.lipschitz_scaled)
    else:
        certs = (cert_mod.optimal_damping_nonconvex(L, mu, args.eps),)
    _print([c.to_dict() for c in certs])
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            d = RunConfig.from_json(args.config).to_dict()
            d = apply_overrides(d, args.set)
            for key, val in (("alpha", args.alpha), ("seed", args.seed), ("t_end", args.t_end)):
                if val is not None:
                    d[key] = val
            cfg = RunConfig.from_dict(d)
            summary = run(cfg, args.out)
            print(json.dumps({k: summary[k] for k in ("name", "alpha", "fitted_rate", "passed")},
                             default=_json_default))
            return EXIT_OK if summary["passed"] else EXIT_CHECK_FAILED
        if args.command == "certify":
            return _certify(args)
        if args.command == "check-geometry":
            fn = build(args.function, json.loads(args.params))
            rep = check_condition(fn, args.kind, args.parameter, args.box, args.n, args.seed)
            _print(rep.to_dict())
            return EXIT_OK if rep.holds else EXIT_CHECK_FAILED
        if args.command == "moreau":
            cfg = RunConfig.from_dict({
                "function": args.base, "params": json.loads(args.params),
                "dynamics": "moreau-heavy-ball", "lam": args.lam, "mu_ns": args.mu,
                "x0": args.x0, "t_end": args.t_end, "n_samples": args.n_samples,
                "name": args.name, "checks": ["energy"],
            })
            summary = run(cfg, args.out)
            _print({k: summary[k] for k in ("alpha", "constants", "checks", "passed")})
            return EXIT_OK if summary["passed"] else EXIT_CHECK_FAILED
        if args.command == "compare":
            _print(cert_mod.compare_factors(args.L, args.mu).to_dict())
            return EXIT_OK
        if args.command == "repro":
            if args.example == "example1":
                summary = repro_example1(args.kappa, args.seed, args.out)
            else:
                summary = repro_example2(args.start, args.out)
            _print(summary)
            return EXIT_OK if summary["passed"] else EXIT_CHECK_FAILED
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HBPLError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
