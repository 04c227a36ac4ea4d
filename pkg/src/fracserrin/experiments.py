"""Verification suites and the command-line harness.

Each suite takes a :class:`SuiteConfig` and returns a :class:`Report` whose
checks carry a measured value, a target, a signed margin and an anchor string
naming the statement being probed.  A check passes exactly when its margin is
non-negative.  Reports serialise deterministically; wall-clock data lives in a
separate ``timing`` block that :meth:`Report.canonical_json` leaves out.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import closedform as cf
from . import geometry as geo
from . import quadrature as qd
from . import solver as sv
from .errors import DomainError, FracSerrinError, SingularityError
from .specfun import derive_constants, gauss_2f1, lemma23_funcs

SUITES = ("identities", "barrier", "maxprinciple", "stability", "solve")

ANCHORS = {
    "torsion": r"$(-\Delta)^s\psi =1$",
    "divergence": r"$(-\Delta)^s \psi(x)=-\infty$",
    "exterior": r"$-a_{n,s} \vert x \vert^{-n-2s } {}_2F_1$",
    "signs": r"$f(\tau )\leqslant 1$ and~$g(\tau) \leqslant 0$",
    "euler": r"$(1-\tau)^{c-a-b} {}_2F_1 ( c-a  ,c-b  ; c; \tau )$",
    "contiguous": r"$\frac {b\tau} c  {}_2F_1 ( a  ,b+1 ; c+1; \tau)$",
    "gauss_value": r"$= \frac{n+2s}{2s}$",
    "gamma_def": r"$\gamma_{n,s}:= \frac{4^{-s} \Gamma(\frac{n}{2})}{\Gamma(\frac{n}{2}+s)(\Gamma(1+s))}$",
    "gamma_rec": r"$\frac n {n+2s} \gamma_{n,s}$",
    "kappa": r"$(1-s) \pi^{-n/2}$",
    "a_def": r"$a_{n,s}:=  \frac { s\Gamma(n/2)  } {\Gamma  ( \frac{n+2s}2 +1   )\Gamma  ( 1-s)}$",
    "pluto": r"$2(1-t)^s-(1-2t)^s \ge 1$",
    "tilde": r"$\psi_{\widetilde{B}} \ge \frac{1}{2} \left( \psi_{B} + \psi_{B_*} \right)$",
    "sandwich": r"$B \cap B_* \subset \widetilde{B} \subset B \cup B_*$",
    "barrier": r"$(-\Delta)^s \varphi (x) \leqslant \frac{n+2s}n  x_1$",
    "overlap": r"$\frac{2(n+2s)} n x_1$",
    "annulus": r"$-\vert y \vert^{-2 }K \big (  \vert y \vert^{-2 } \big )$",
    "positivity": r"$v_\mu \ge 0 $ in~$\Omega_\mu'$",
    "max_principle": r"$v(x) \geq C \| \delta_{\partial H} v\|_{L^1(K)}$",
    "hopf": r"$\liminf_{t\to 0^+}$",
    "corner": r"$\| \delta_{\partial H} v\|_{L^1(K)}$",
    "stability": r"$\rho(\Omega) \leq C [ \partial_\nu^s u]_{\partial \Omega}^{\frac 1 {s+2}}$",
    "deficit": r"$\rho_e - \rho_i$",
    "cap": r"$\delta_{\pi_\lambda}(x) u (x) \dd x$",
    "symdiff": r"$\vert \Omega \triangle \Omega' \vert \leqslant C_\star$",
    "faber_krahn": r"$\lambda_1(A) \ge \kappa_{n,s} |A|^{- \frac{2s}{n}}$",
    "dirichlet": r"$(-\Delta)^s u =f(u)$",
    "normal_derivative": r"$\lim_{t \to 0^+ } \frac{u(x) - u(x - t \nu(x))}{t^s}$",
}

FAULTS = ("corrupt_gamma", "flip_barrier", "negate_v", "scramble_sweep", "perturb_solution")


# ---------------------------------------------------------------------------
# configuration


def _default_options(suite: str) -> dict:
    if suite == "identities":
        return {"interior_points": 20, "exterior_points": 10, "sphere_points": 4,
                "sign_sweep_dims": [1, 2, 3], "tau_points": 10000, "pluto_points": 200,
                "tilde_points": 10000, "recursion_dims": [1, 2, 3, 4, 5, 6], "seed": 0}
    if suite == "barrier":
        return {"ratios": [0.1, 0.25, 0.45], "rho": 1.0, "samples": 2000,
                "oracle_points": 10, "axis_points": 12, "seed": 0}
    if suite == "maxprinciple":
        return {
            "domain": geo.StarDomain.ellipse(1.1, 1.0).to_dict(),
            "direction": [1.0, 1.0],
            "hopf_domain": geo.StarDomain.polar(1.0, (0.0, 0.0, 0.08)).to_dict(),
            "hopf_direction": [1.0, 0.0],
            "interval": [-1.0, 1.0],
            "eps_h_coef": 1.0,
            "quotient_points": 10,
        }
    if suite == "stability":
        return {"eps_grid": [0.0, 0.005, 0.01, 0.02, 0.04, 0.08], "direction": [1.0, 1.0],
                "c0": 1.0, "trace_points": 128, "trace_modes": 2, "eps_h_coef": 0.05}
    if suite == "solve":
        return {"interval": [-1.0, 1.0], "c0": 1.0, "eps_h_coef": 1.0}
    return {}


def _default_params(suite: str) -> list:
    if suite == "identities":
        return [[n, s] for n in (1, 2) for s in (0.25, 0.5, 0.75)]
    if suite == "barrier":
        return [[n, s] for n in (1, 2) for s in (0.25, 0.5, 0.75)]
    if suite == "maxprinciple":
        return [[2, 0.5]]
    if suite == "stability":
        return [[2, 0.25], [2, 0.5], [2, 0.75]]
    if suite == "solve":
        return [[1, 0.5]]
    return []


def _default_resolutions(suite: str) -> list:
    return {"maxprinciple": [36, 72], "stability": [36], "solve": [128, 256, 512, 1024]}.get(suite, [])


def _default_tolerances(suite: str) -> dict:
    if suite == "identities":
        return {"interior_n1": 1e-6, "interior_n2": 1e-3, "exterior_n1": 1e-5, "exterior_n2": 1e-3,
                "signs": 1e-12, "hypergeometric": 1e-9, "constants": 1e-12, "pluto": 1e-12,
                "tilde": 1e-12}
    if suite == "barrier":
        return {"inequality": 1e-9, "overlap": 1e-12, "oracle": 1e-3, "axis": 1e-6}
    if suite == "maxprinciple":
        return {"refinement": 0.2}
    if suite == "stability":
        return {"slope_slack": 0.05, "deficit_zero": 1e-6, "symdiff_zero": 1e-5}
    if suite == "solve":
        return {"sup_error": 2e-2, "normal_derivative": 2e-2, "faber_krahn": 1e-12}
    return {}


@dataclass(frozen=True)
class SuiteConfig:
    """Everything a suite run depends on.

    ``params`` lists ``(n, s)`` pairs, ``resolutions`` grid sizes (nodes per
    unit length in 2D, nodes across the interval in 1D), ``options`` the
    suite-specific knobs and ``fault`` an optional injected defect.
    """

    suite: str
    params: tuple = ()
    resolutions: tuple = ()
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    out: str = "reports"
    deterministic: bool = True
    fault: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.suite not in SUITES:
            raise DomainError(f"unknown suite {self.suite!r}")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise DomainError(f"tolerance {k} must be a positive number")
        if self.fault is not None and self.fault not in FAULTS:
            raise DomainError(f"unknown fault {self.fault!r}")
        if self.threads < 1:
            raise DomainError("threads must be at least 1")
        object.__setattr__(self, "params", tuple((int(n), float(s)) for n, s in self.params))
        object.__setattr__(self, "resolutions", tuple(int(r) for r in self.resolutions))

    @classmethod
    def default(cls, suite: str, **overrides) -> "SuiteConfig":
        base = cls(suite, tuple(_default_params(suite)), tuple(_default_resolutions(suite)),
                   _default_tolerances(suite), _default_options(suite))
        return replace(base, **overrides) if overrides else base

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        """Fill the fields missing from ``data`` with the suite defaults."""
        suite = data["suite"]
        tol = _default_tolerances(suite)
        tol.update(data.get("tolerances") or {})
        opts = _default_options(suite)
        opts.update(data.get("options") or {})
        return cls(
            suite,
            tuple(data["params"]) if "params" in data else tuple(_default_params(suite)),
            tuple(data["resolutions"]) if "resolutions" in data else tuple(_default_resolutions(suite)),
            tol,
            opts,
            data.get("out", "reports"),
            bool(data.get("deterministic", True)),
            data.get("fault"),
            int(data.get("threads", 1)),
        )

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "params": [list(p) for p in self.params],
            "resolutions": list(self.resolutions),
            "tolerances": dict(self.tolerances),
            "options": self.options,
            "deterministic": self.deterministic,
            "fault": self.fault,
        }

    def scaled(self, factor: float) -> "SuiteConfig":
        """Copy with every tolerance multiplied by ``factor``."""
        if not factor > 0:
            raise DomainError("tolerance scale must be positive")
        return replace(self, tolerances={k: v * factor for k, v in self.tolerances.items()})


# ---------------------------------------------------------------------------
# reports


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    return value


@dataclass
class Check:
    check_id: str
    anchor: str
    inputs: dict
    measured: float
    target: float
    margin: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.margin >= 0)

    def to_dict(self) -> dict:
        return _clean({
            "check_id": self.check_id,
            "anchor": self.anchor,
            "inputs": self.inputs,
            "measured": self.measured,
            "target": self.target,
            "margin": self.margin,
            "pass": self.passed,
            "note": self.note,
        })


@dataclass
class Report:
    suite: str
    config: dict
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    runtime: float = 0.0
    timestamp: str = ""

    def add(self, check_id: str, anchor_key: str, inputs: dict, measured, target, margin, note: str = ""):
        self.checks.append(Check(check_id, ANCHORS[anchor_key], inputs, float(measured),
                                 float(target), float(margin), note))

    def fail(self, check_id: str, anchor_key: str, inputs: dict, err: Exception):
        """Record a module error as a failed check."""
        self.checks.append(Check(check_id, ANCHORS[anchor_key], inputs, math.nan, math.nan, -math.inf,
                                 f"{type(err).__name__}: {err}"))

    @property
    def passed(self) -> int:
        return sum(c.passed for c in self.checks)

    @property
    def ok(self) -> bool:
        return self.passed == len(self.checks)

    def summary(self) -> dict:
        return {"total": len(self.checks), "passed": self.passed, "failed": len(self.checks) - self.passed}

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "config": _clean(self.config),
            "checks": [c.to_dict() for c in self.checks],
            "summary": self.summary(),
            "tables": _clean(self.tables),
        }
        if timing:
            out["timing"] = {"runtime_s": self.runtime, "timestamp": self.timestamp}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def canonical_json(self) -> str:
        """Serialisation without the timing block; identical configs give identical text."""
        return json.dumps(self.to_dict(timing=False), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite", "check_id", "measured", "target", "margin", "pass", "anchor"])
        for c in self.checks:
            w.writerow([self.suite, c.check_id, repr(c.measured), repr(c.target), repr(c.margin),
                        int(c.passed), c.anchor])
        return buf.getvalue()

    def table_csv(self, name: str) -> str:
        rows = self.tables[name]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if rows:
            keys = list(rows[0].keys())
            w.writerow(keys)
            for r in rows:
                w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
        return buf.getvalue()


def _run_cells(cfg: SuiteConfig, func, cells):
    """Map ``func`` over independent cells; results come back in input order."""
    if cfg.threads == 1 or len(cells) < 2:
        return [func(c) for c in cells]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(func, cells))


def _params_for(cfg: SuiteConfig, n: int, s: float):
    p = derive_constants(n, s)
    if cfg.fault == "corrupt_gamma":
        p = replace(p, gamma_ns=p.gamma_ns * 1.01)
    return p


def _tol(cfg: SuiteConfig, key: str) -> float:
    return float(cfg.tolerances[key])


# ---------------------------------------------------------------------------
# identities


def _unit_sphere_points(rng, n: int, count: int) -> np.ndarray:
    d = rng.normal(size=(count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _identity_cell(args):
    cfg, n, s = args
    rep = Report("identities", {})
    opts = cfg.options
    rng = np.random.default_rng([int(opts["seed"]), n, int(round(s * 1000))])
    p_true = derive_constants(n, s)
    p = _params_for(cfg, n, s)
    ball = cf.Ball(np.zeros(n), 1.0)
    fld = qd.torsion_field(ball, p)
    tag = {"n": n, "s": s}

    tol = _tol(cfg, f"interior_n{min(n, 2)}")
    pts = _unit_sphere_points(rng, n, opts["interior_points"]) * rng.uniform(0.0, 0.95, (opts["interior_points"], 1))
    try:
        err = max(abs(qd.frac_lap_numeric(fld, p_true, x, tol=0.1 * tol) - 1.0) for x in pts)
        rep.add(f"interior_identity[n={n},s={s}]", "torsion", dict(tag, points=len(pts)), err, tol, tol - err)
    except FracSerrinError as e:
        rep.fail(f"interior_identity[n={n},s={s}]", "torsion", tag, e)

    tol = _tol(cfg, f"exterior_n{min(n, 2)}")
    pts = _unit_sphere_points(rng, n, opts["exterior_points"]) * rng.uniform(1.05, 3.0, (opts["exterior_points"], 1))
    try:
        worst = 0.0
        for x in pts:
            exact = float(cf.frac_lap_torsion(ball, p, x))
            num = qd.frac_lap_numeric(qd.torsion_field(ball, p_true), p_true, x, tol=0.1 * tol * abs(exact))
            worst = max(worst, abs(num - exact) / abs(exact))
        rep.add(f"exterior_closed_form[n={n},s={s}]", "exterior", dict(tag, points=len(pts)), worst, tol, tol - worst)
    except FracSerrinError as e:
        rep.fail(f"exterior_closed_form[n={n},s={s}]", "exterior", tag, e)

    pts = _unit_sphere_points(rng, n, opts["sphere_points"])
    pts = pts * (1.0 + rng.uniform(-1e-10, 1e-10, (len(pts), 1)))
    detected = 0
    for x in pts:
        closed = cf.frac_lap_torsion(ball, p, x / np.linalg.norm(x))
        try:
            qd.frac_lap_numeric(fld, p, x, tol=1e-6)
        except SingularityError:
            detected += int(closed.tag == cf.MINUS_INFINITY)
        except FracSerrinError:
            pass
    rep.add(f"sphere_divergence[n={n},s={s}]", "divergence", dict(tag, points=len(pts)),
            detected, len(pts), detected - len(pts))
    return rep.checks


def _sign_sweep(cfg: SuiteConfig, svals) -> list:
    rep = Report("identities", {})
    tol = _tol(cfg, "signs")
    taus = (np.arange(cfg.options["tau_points"]) + 0.5) / cfg.options["tau_points"]
    for n in cfg.options["sign_sweep_dims"]:
        for s in svals:
            p = derive_constants(n, s)
            worst_f = worst_g = -math.inf
            bad = 0
            for t in taus:
                v = lemma23_funcs(p, float(t))
                worst_f, worst_g = max(worst_f, v.f - 1.0), max(worst_g, v.g)
                bad += int(v.f > 1.0 + tol or v.g > tol)
            rep.add(f"lemma_signs[n={n},s={s}]", "signs", {"n": n, "s": s, "tau_points": len(taus)},
                    max(worst_f, worst_g), tol, tol - max(worst_f, worst_g),
                    f"violations={bad}")
    return rep.checks


def _hypergeometric_checks(cfg: SuiteConfig, n: int, s: float) -> list:
    rep = Report("identities", {})
    tol = _tol(cfg, "hypergeometric")
    tag = {"n": n, "s": s}
    taus = np.linspace(0.02, 0.98, 49)
    a, b, c = 1.0, n / 2.0, (n + 2.0 * s) / 2.0 + 1.0
    worst = 0.0
    for t in taus:
        lhs = gauss_2f1(a, b, c, t)
        rhs = (1.0 - t) ** (c - a - b) * gauss_2f1(c - a, c - b, c, t)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    rep.add(f"euler_transformation[n={n},s={s}]", "euler", tag, worst, tol, tol - worst)
    a, b, c = 1.0, n / 2.0, (n + 2.0 * s + 2.0) / 2.0
    worst = 0.0
    for t in taus:
        lhs = b * t / c * gauss_2f1(a, b + 1.0, c + 1.0, t)
        rhs = gauss_2f1(a, b, c, t) - gauss_2f1(a - 1.0, b, c, t)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    rep.add(f"contiguous_relation[n={n},s={s}]", "contiguous", tag, worst, tol, tol - worst)
    target = (n + 2.0 * s) / (2.0 * s)
    val = gauss_2f1(1.0, n / 2.0, (n + 2.0 * s) / 2.0 + 1.0, 1.0)
    err = abs(val - target) / target
    rep.add(f"gauss_value_at_one[n={n},s={s}]", "gauss_value", tag, err, tol, tol - err)
    grid = [gauss_2f1((n + 2.0 * s) / 2.0, s + 1.0, (n + 2.0 * s) / 2.0 + 2.0, t) for t in taus]
    drop = max(0.0, -float(np.min(np.diff(grid))))
    rep.add(f"monotone_profile[n={n},s={s}]", "signs", tag, drop, tol, tol - drop)
    return rep.checks


def _constant_checks(cfg: SuiteConfig, svals) -> list:
    rep = Report("identities", {})
    tol = _tol(cfg, "constants")
    if 0.5 in svals:
        p = derive_constants(1, 0.5)
        for name, val, target, key in (("gamma_1_half", p.gamma_ns, 1.0, "gamma_def"),
                                       ("a_1_half", p.a_ns, 0.5, "a_def"),
                                       ("kappa_1_half", p.kappa_ns, 8.0 / (3.0 * math.pi), "kappa")):
            err = abs(val - target)
            rep.add(name, key, {"n": 1, "s": 0.5}, err, tol, tol - err)
    for s in svals:
        wg = wa = 0.0
        for n in cfg.options["recursion_dims"]:
            p, q = derive_constants(n, s), derive_constants(n + 2, s)
            wg = max(wg, abs(q.gamma_ns / (n / (n + 2.0 * s) * p.gamma_ns) - 1.0))
            wa = max(wa, abs(q.a_ns / (n / (n + 2.0 * s + 2.0) * p.a_ns) - 1.0))
        dims = list(cfg.options["recursion_dims"])
        rep.add(f"gamma_recursion[s={s}]", "gamma_rec", {"s": s, "dims": dims}, wg, tol, tol - wg)
        rep.add(f"a_recursion[s={s}]", "a_def", {"s": s, "dims": dims}, wa, tol, tol - wa)
    return rep.checks


def _pluto_checks(cfg: SuiteConfig, svals) -> list:
    rep = Report("identities", {})
    tol = _tol(cfg, "pluto")
    m = cfg.options["pluto_points"]
    ts = 0.5 * np.arange(m) / m
    for s in svals:
        low = min(cf.pluto_lhs(s, float(t)) for t in ts)
        rep.add(f"pluto_inequality[s={s}]", "pluto", {"s": s, "points": m}, low, 1.0, low - 1.0 + tol)
    return rep.checks


def _tilde_checks(cfg: SuiteConfig, n: int, s: float) -> list:
    """Sandwich ``B ∩ B_* ⊂ B~ ⊂ B ∪ B_*`` and the torsion comparison on ``B_*^+``."""
    rep = Report("identities", {})
    tol = _tol(cfg, "tilde")
    rng = np.random.default_rng([int(cfg.options["seed"]), 7, n, int(round(s * 1000))])
    p = derive_constants(n, s)
    count = cfg.options["tilde_points"]
    worst_sand = worst_tor = -math.inf
    for ratio in (0.1, 0.25, 0.45):
        a = np.zeros(n)
        a[0] = ratio
        if n > 1:
            a[1] = 0.3
        bc = cf.BarrierConfig(a, 1.0, p)
        B, Bs, Bt = bc.ball, bc.mirror_ball, cf.tilde_ball(bc)
        pts = a + rng.uniform(-1.5, 1.5, (count, n))
        inB = np.linalg.norm(pts - B.center, axis=1) < B.radius
        inBs = np.linalg.norm(pts - Bs.center, axis=1) < Bs.radius
        inBt = np.linalg.norm(pts - Bt.center, axis=1) < Bt.radius
        viol = np.count_nonzero((inB & inBs & ~inBt) | (inBt & ~(inB | inBs)))
        worst_sand = max(worst_sand, float(viol))
        sel = inBs & (pts[:, 0] > 0)
        lhs = cf.torsion(Bt, p, pts[sel])
        rhs = 0.5 * (cf.torsion(B, p, pts[sel]) + cf.torsion(Bs, p, pts[sel]))
        if sel.any():
            worst_tor = max(worst_tor, float(np.max(rhs - lhs)))
    rep.add(f"tilde_sandwich[n={n},s={s}]", "sandwich", {"n": n, "s": s, "points": 3 * count},
            worst_sand, 0.0, -worst_sand)
    rep.add(f"tilde_torsion[n={n},s={s}]", "tilde", {"n": n, "s": s, "points": 3 * count},
            worst_tor, tol, tol - worst_tor)
    return rep.checks


def run_identity_suite(cfg: SuiteConfig) -> Report:
    """Closed forms against the quadrature oracle plus the scalar identities and inequalities."""
    rep = Report("identities", cfg.to_dict())
    if not cfg.params:
        return rep
    for chunk in _run_cells(cfg, _identity_cell, [(cfg, n, s) for n, s in cfg.params]):
        rep.checks.extend(chunk)
    svals = sorted({s for _, s in cfg.params})
    rep.checks.extend(_sign_sweep(cfg, svals))
    for n, s in cfg.params:
        rep.checks.extend(_hypergeometric_checks(cfg, n, s))
        rep.checks.extend(_tilde_checks(cfg, n, s))
    rep.checks.extend(_constant_checks(cfg, svals))
    rep.checks.extend(_pluto_checks(cfg, svals))
    return rep


# ---------------------------------------------------------------------------
# barrier


def _barrier_samples(bc: cf.BarrierConfig, rng, count: int):
    """Stratified points of ``B^+``: half in ``B ∩ B_*``, half in ``B^+`` minus closed ``B_*``."""
    n, rho, a = bc.params.n, bc.rho, bc.a
    want = {"overlap": count // 2, "annulus": count - count // 2}
    got = {"overlap": [], "annulus": []}
    while any(len(got[k]) < want[k] for k in got):
        d = rng.normal(size=(4 * count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = rho * rng.uniform(0.0, 1.0, (4 * count, 1)) ** (1.0 / n)
        pts = a + d * r
        pts = pts[pts[:, 0] > 0]
        dist_star = np.linalg.norm(pts - bc.a_star, axis=1)
        keep = np.abs(dist_star - rho) > 1e-9 * rho
        pts, dist_star = pts[keep], dist_star[keep]
        for key, sel in (("overlap", dist_star < rho), ("annulus", dist_star > rho)):
            room = want[key] - len(got[key])
            if room > 0:
                got[key].extend(pts[sel][:room])
    return {k: np.array(v) for k, v in got.items()}


def _barrier_cell(args):
    cfg, n, s, ratio = args
    rep = Report("barrier", {})
    opts = cfg.options
    p = derive_constants(n, s)
    rho = float(opts["rho"])
    a = np.zeros(n)
    a[0] = ratio * rho
    bc = cf.BarrierConfig(a, rho, p)
    rng = np.random.default_rng([int(opts["seed"]), n, int(round(s * 1000)), int(round(ratio * 1000))])
    tag = {"n": n, "s": s, "a1_over_rho": ratio}
    samples = _barrier_samples(bc, rng, int(opts["samples"]))
    slope = (n + 2.0 * s) / n
    bound_factor = 0.5 if cfg.fault == "flip_barrier" else 1.0

    # in the overlap the closed form is twice the slope bound, so only equality is gated there
    tol = _tol(cfg, "overlap")
    worst, le_margin = 0.0, math.inf
    for x in samples["overlap"]:
        val = float(cf.frac_lap_barrier(bc, x))
        worst = max(worst, abs(val - 2.0 * slope * x[0]) / max(abs(2.0 * slope * x[0]), 1e-300))
        le_margin = min(le_margin, slope * x[0] - val)
    rep.add(f"overlap_equality[n={n},s={s},r={ratio}]", "overlap",
            dict(tag, points=len(samples["overlap"]), slope_bound_margin_min=le_margin),
            worst, tol, tol - worst)

    tol = _tol(cfg, "inequality")
    viol, worst = 0, -math.inf
    for x in samples["annulus"]:
        val = float(cf.frac_lap_barrier(bc, x))
        excess = val - bound_factor * slope * x[0]
        worst = max(worst, excess)
        viol += int(excess > tol)
    rep.add(f"barrier_inequality[n={n},s={s},r={ratio}]", "barrier",
            dict(tag, points=len(samples["annulus"])), worst, tol, tol - worst,
            f"violations={viol}")

    # margins along the x_1 -> 0 line shrink with the prefactor
    tol_axis = _tol(cfg, "axis")
    margins = []
    for k in range(int(opts["axis_points"])):
        x = a.copy()
        x[0] = 10.0 ** (-1.0 - 0.5 * k) * rho
        val = float(cf.frac_lap_barrier(bc, x))
        margins.append((x[0], bound_factor * slope * x[0] - val))
    x1, last = margins[-1]
    worst_rate = max(abs(m) / x for x, m in margins)
    rep.add(f"axis_margin_vanishes[n={n},s={s},r={ratio}]", "barrier", dict(tag, points=len(margins), x1=x1),
            abs(last), tol_axis, tol_axis - abs(last), f"max |margin|/x1={worst_rate:.6g}")

    tol = _tol(cfg, "oracle")
    fld = qd.barrier_field(bc)
    pick = np.concatenate([samples["overlap"][: opts["oracle_points"] // 2],
                           samples["annulus"][: opts["oracle_points"] - opts["oracle_points"] // 2]])
    worst = 0.0
    try:
        for x in pick:
            exact = float(cf.frac_lap_barrier(bc, x))
            scale = max(abs(exact), 1.0)
            num = qd.frac_lap_numeric(fld, p, x, tol=0.1 * tol * scale)
            worst = max(worst, abs(num - exact) / scale)
        rep.add(f"barrier_oracle[n={n},s={s},r={ratio}]", "annulus", dict(tag, points=len(pick)),
                worst, tol, tol - worst)
    except FracSerrinError as e:
        rep.fail(f"barrier_oracle[n={n},s={s},r={ratio}]", "annulus", tag, e)
    return rep.checks


def run_barrier_suite(cfg: SuiteConfig) -> Report:
    """Closed-form barrier inequality on stratified samples with an oracle subsample."""
    rep = Report("barrier", cfg.to_dict())
    cells = [(cfg, n, s, r) for n, s in cfg.params for r in cfg.options["ratios"]]
    for chunk in _run_cells(cfg, _barrier_cell, cells):
        rep.checks.extend(chunk)
    return rep


# ---------------------------------------------------------------------------
# moving-plane helpers shared by the last suites


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _eps_h(coef: float, h: float, u: sv.GridField) -> float:
    """First-order discretisation allowance ``coef * h * max|u|``."""
    return coef * h * float(np.max(np.abs(u.values)))


def cap_region(u: sv.GridField, domain: geo.StarDomain, plane: geo.Hyperplane) -> np.ndarray:
    """Nodes of ``K``: inside, behind the plane, with mirror image outside the domain."""
    X = u.coords()
    behind = X @ plane.direction < plane.offset
    return u.mask & behind & ~domain.contains(geo.reflect_point(X, plane))


def reflected_cap(u: sv.GridField, domain: geo.StarDomain, plane: geo.Hyperplane) -> np.ndarray:
    """Nodes behind the plane whose mirror image lies in the domain."""
    X = u.coords()
    behind = X @ plane.direction < plane.offset
    return u.mask & behind & domain.contains(geo.reflect_point(X, plane))


def cap_integral(v: sv.GridField, domain: geo.StarDomain, plane: geo.Hyperplane) -> float:
    """Nodal quadrature of ``∫_K (mu - x.e) v``."""
    K = cap_region(v, domain, plane)
    depth = plane.offset - v.coords() @ plane.direction
    return v.h ** v.n * float(np.sum(depth[K] * v.values[K]))


def _boundary_distance(domain: geo.StarDomain, pts, samples: int = 4096) -> np.ndarray:
    _, bpts, _ = domain.boundary_samples(samples)
    pts = np.atleast_2d(pts)
    return np.min(np.linalg.norm(pts[:, None, :] - bpts[None, :, :], axis=-1), axis=1)


def _solve(domain: geo.StarDomain, params, K: int, c0: float, fault: str | None):
    u = sv.solve_dirichlet(domain, sv.ReactionSpec.constant(c0), params, 1.0 / K)
    if fault == "perturb_solution":
        u = u.with_values(u.values * (1.0 + 0.05 * np.cos(40.0 * u.coords()[..., 0])) * u.mask)
    return u


# ---------------------------------------------------------------------------
# maximum principle, Hopf and corner quotients


def _ball_cases(domain, plane, h):
    """Balls ``B_rho(a)`` behind the plane with ``a`` on, near and far from it."""
    e = plane.direction
    perp = np.array([-e[1], e[0]])
    sig = np.linspace(-4.0, 4.0, 8001) * geo.diameter(domain)
    on = domain.contains(plane.offset * e + sig[:, None] * perp)
    foot = plane.offset * e + 0.5 * (sig[on].min() + sig[on].max()) * perp
    cases = []
    for name, frac in (("on_plane", 0.0), ("near_plane", 0.5), ("far_from_plane", 1.5)):
        best = 0.0
        for rho in np.linspace(0.005, 1.0, 200):
            mirror = foot + frac * rho * e
            if not domain.contains(mirror[None])[0]:
                break
            if _boundary_distance(domain, mirror)[0] >= 1.05 * rho:
                best = rho
        cases.append((name, foot - frac * best * e, best))
    return cases


def _quotients(u, v_of, domain, plane, cfg, K):
    """Fitted constants of the three lower bounds at one resolution."""
    h, s = u.h, u.params.s
    L = cap_integral(v_of(u), domain, plane)
    out = {"L1": L}
    v = v_of(u)
    X = u.coords()
    depth = plane.offset - X @ plane.direction
    for name, a, rho in _ball_cases(domain, plane, h):
        r2 = rho**2 - np.sum((X - a) ** 2, axis=-1)
        sel = u.mask & (depth >= 2 * h) & (r2 >= 2 * h * rho)
        if L <= 0 or not sel.any():
            out[f"ball_{name}"] = (0.0, rho)
            continue
        ratio = v.values[sel] / (L * depth[sel] * r2[sel] ** s)
        out[f"ball_{name}"] = (float(np.min(ratio)), rho)
    return out


def _hopf_quotient(u, v_of, domain, plane, crit, cfg):
    h, s = u.h, u.params.s
    p = geo.reflect_point(crit.contact_point, plane)
    th = math.atan2(p[1] - domain.center[1], p[0] - domain.center[0])
    pb, nu = domain.boundary_point(th), domain.outward_normal(th)
    t = h * np.geomspace(4.0, 0.5 * geo.inner_sphere_radius(domain) / h, cfg.options["quotient_points"])
    x = pb[None] - t[:, None] * nu[None]
    v = v_of(u)
    vals = _antisym_at(u, x, plane)
    if cfg.fault == "negate_v":
        vals = -vals
    depth = plane.offset - x @ plane.direction
    q = vals / (t**s * depth)
    L = cap_integral(v, domain, plane)
    return float(np.min(q)) / L if L > 0 else 0.0, q


def _corner_quotient(u, domain, plane, crit, cfg):
    h, s = u.h, u.params.s
    p = np.asarray(crit.contact_point, dtype=float)
    th = math.atan2(p[1] - domain.center[1], p[0] - domain.center[0])
    nu = domain.outward_normal(th)
    eta = -plane.direction - nu
    rho = geo.inner_sphere_radius(domain)
    t = np.geomspace(4.0 * h, 0.5 * rho, cfg.options["quotient_points"])
    x = p[None] + t[:, None] * eta[None]
    vals = _antisym_at(u, x, plane)
    if cfg.fault == "negate_v":
        vals = -vals
    q = vals / t ** (1.0 + s)
    v = sv.antisymmetric_difference(u, plane)
    L = cap_integral(v, domain, plane)
    return float(np.min(q)) / L if L > 0 else 0.0, q


def _antisym_at(u: sv.GridField, x, plane) -> np.ndarray:
    return u.interpolate(x, weighted=True) - u.interpolate(geo.reflect_point(x, plane), weighted=True)


def _positive_margin(value: float) -> float:
    """Margin of a strict ``value > 0`` check: zero counts as a failure."""
    return value if value > 0 else min(value, -1e-300)


def _relative_change(a: float, b: float) -> float:
    return abs(b - a) / max(abs(a), 1e-300)


def run_maxprinciple_suite(cfg: SuiteConfig) -> Report:
    """Positivity of ``v_lambda`` and the fitted constants of the quantitative bounds."""
    rep = Report("maxprinciple", cfg.to_dict())
    opts = cfg.options
    for n, s in cfg.params:
        params = derive_constants(n, s)
        if n == 1:
            _maxprinciple_1d(cfg, rep, params)
            continue
        dom = geo.StarDomain.from_dict(opts["domain"])
        hdom = geo.StarDomain.from_dict(opts["hopf_domain"])
        try:
            crit = geo.critical_value(dom, _unit(opts["direction"]))
            hcrit = geo.critical_value(hdom, _unit(opts["hopf_direction"]))
        except FracSerrinError as e:
            rep.fail(f"critical_plane[s={s}]", "positivity", {"s": s}, e)
            continue
        plane, hplane = crit.plane, hcrit.plane
        fitted = {}

        def v_of(u, plane=plane):
            v = sv.antisymmetric_difference(u, plane)
            return v.with_values(-v.values) if cfg.fault == "negate_v" else v

        def hv_of(u, plane=hplane):
            return sv.antisymmetric_difference(u, plane)

        for K in cfg.resolutions:
            tag = {"n": n, "s": s, "resolution": K}
            try:
                u = _solve(dom, params, K, 1.0, cfg.fault)
                hu = _solve(hdom, params, K, 1.0, cfg.fault)
            except FracSerrinError as e:
                rep.fail(f"solve[s={s},K={K}]", "positivity", tag, e)
                continue
            v = v_of(u)
            cap = reflected_cap(u, dom, plane)
            low = float(np.min(v.values[cap]))
            eps = _eps_h(opts["eps_h_coef"], u.h, u)
            rep.add(f"positivity_reflected_cap[s={s},K={K}]", "positivity", dict(tag, eps_h=eps),
                    low, -eps, low + eps, f"contact={crit.contact_case}")
            q = _quotients(u, v_of, dom, plane, cfg, K)
            for name in ("ball_on_plane", "ball_near_plane", "ball_far_from_plane"):
                c, rho = q[name]
                fitted.setdefault(name, []).append(c)
                rep.add(f"max_principle_{name}[s={s},K={K}]", "max_principle",
                        dict(tag, rho=rho, L1=q["L1"]), c, 0.0, _positive_margin(c))
            ch, _ = _hopf_quotient(hu, hv_of, hdom, hplane, hcrit, cfg)
            fitted.setdefault("hopf", []).append(ch)
            rep.add(f"hopf_quotient[s={s},K={K}]", "hopf", dict(tag, contact=hcrit.contact_case),
                    ch, 0.0, _positive_margin(ch))
            cc, _ = _corner_quotient(u, dom, plane, crit, cfg)
            fitted.setdefault("corner", []).append(cc)
            rep.add(f"corner_quotient[s={s},K={K}]", "corner", dict(tag, contact=crit.contact_case),
                    cc, 0.0, _positive_margin(cc))
        tol = _tol(cfg, "refinement")
        for name, vals in fitted.items():
            if len(vals) >= 2:
                change = _relative_change(vals[-2], vals[-1])
                key = {"hopf": "hopf", "corner": "corner"}.get(name, "max_principle")
                rep.add(f"refinement_{name}[s={s}]", key, {"s": s, "resolutions": list(cfg.resolutions[-2:])},
                        change, tol, tol - change)
    return rep


def _maxprinciple_1d(cfg: SuiteConfig, rep: Report, params):
    """Symmetric interval: ``v`` vanishes and the bounds hold vacuously."""
    a, b = cfg.options["interval"]
    dom = geo.StarDomain.interval(a, b)
    plane = geo.Hyperplane(np.array([1.0]), 0.5 * (a + b))
    for N in cfg.resolutions:
        h = (b - a) / N
        tag = {"n": 1, "s": params.s, "resolution": N}
        try:
            u = sv.solve_dirichlet(dom, sv.ReactionSpec.constant(1.0), params, h)
        except FracSerrinError as e:
            rep.fail(f"solve_1d[s={params.s},N={N}]", "positivity", tag, e)
            continue
        v = sv.antisymmetric_difference(u, plane)
        if cfg.fault == "negate_v":
            v = v.with_values(-v.values - h)
        low = float(np.min(v.values[u.mask]))
        eps = _eps_h(cfg.options["eps_h_coef"], h, u)
        L = abs(cap_integral(v, dom, plane))
        rep.add(f"positivity_1d[s={params.s},N={N}]", "positivity", dict(tag, eps_h=eps, L1=L),
                low, -eps, low + eps, "degenerate: symmetric domain, vacuous bounds")


# ---------------------------------------------------------------------------
# stability sweep


def _stability_cell(args):
    cfg, s, eps, K = args
    opts = cfg.options
    params = derive_constants(2, s)
    dom = geo.StarDomain.ellipse(1.0 + eps, 1.0) if eps > 0 else geo.StarDomain.ball([0.0, 0.0], 1.0)
    u = _solve(dom, params, K, float(opts["c0"]), cfg.fault)
    trace = sv.boundary_trace(u, dom, m=int(opts["trace_points"]), modes=opts["trace_modes"])
    semi = sv.lipschitz_seminorm(trace)
    deficit = geo.rho_deficit(dom).rho
    crit = geo.critical_value(dom, _unit(opts["direction"]))
    cap = cap_integral(u, dom, crit.plane)
    sd = geo.symmetric_difference_measure(dom, crit.plane)
    return {"s": s, "eps": eps, "h": u.h, "rho": deficit, "seminorm": semi, "cap_integral": cap,
            "symdiff": sd, "lambda": crit.lambda_, "contact": crit.contact_case,
            "R": geo.R_param(dom, params, 0.0), "eps_h": _eps_h(opts["eps_h_coef"], u.h, u)}


def _loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(lx, ly, 1)[0])


def run_stability_sweep(cfg: SuiteConfig) -> Report:
    """Deficit, boundary seminorm, cap integral and symmetric difference along an ellipse family."""
    rep = Report("stability", cfg.to_dict())
    K = cfg.resolutions[-1] if cfg.resolutions else 36
    grid = [float(e) for e in cfg.options["eps_grid"]]
    cells = [(cfg, s, e, K) for n, s in cfg.params if n == 2 for e in grid]
    rows = []

    def safe(cell):
        try:
            return _stability_cell(cell)
        except FracSerrinError as err:
            return err

    results = _run_cells(cfg, safe, cells)
    svals = [s for n, s in cfg.params if n == 2]
    for s in svals:
        mine = [r for c, r in zip(cells, results) if c[1] == s]
        errs = [r for r in mine if isinstance(r, Exception)]
        if errs:
            rep.fail(f"sweep[s={s}]", "stability", {"s": s}, errs[0])
            continue
        if cfg.fault == "scramble_sweep":
            mine = [dict(r, seminorm=mine[-1 - i]["seminorm"]) for i, r in enumerate(mine)]
        rows.extend(mine)
        tag = {"s": s, "resolution": K, "eps_grid": grid}
        nonzero = [r for r in mine if r["eps"] > 0]
        for key, anchor in (("rho", "deficit"), ("seminorm", "stability"),
                            ("cap_integral", "cap"), ("symdiff", "symdiff")):
            steps = np.diff([r[key] for r in mine])
            low = float(np.min(steps)) if len(steps) else 0.0
            rep.add(f"monotone_{key}[s={s}]", anchor, tag, low, 0.0, _positive_margin(low))
        zero = [r for r in mine if r["eps"] == 0.0]
        if zero:
            z = zero[0]
            limits = {"rho": _tol(cfg, "deficit_zero"), "seminorm": z["eps_h"],
                      "cap_integral": z["eps_h"], "symdiff": _tol(cfg, "symdiff_zero")}
            for key, lim in limits.items():
                val = abs(z[key])
                rep.add(f"vanishes_at_ball_{key}[s={s}]", "stability", dict(tag, limit=lim), val, lim, lim - val)
        if len(nonzero) >= 2:
            slope = _loglog_slope([r["seminorm"] for r in nonzero], [r["rho"] for r in nonzero])
            target = 1.0 / (s + 2.0) - _tol(cfg, "slope_slack")
            rep.add(f"loglog_slope[s={s}]", "stability", tag, slope, target, slope - target)
            cslope = _loglog_slope([r["seminorm"] for r in nonzero], [r["cap_integral"] for r in nonzero])
            ratio = max(r["cap_integral"] / r["seminorm"] for r in nonzero)
            target = 1.0 - _tol(cfg, "slope_slack")
            rep.add(f"cap_vs_seminorm_slope[s={s}]", "cap", dict(tag, fitted_constant=ratio),
                    cslope, target, cslope - target)
    rep.tables["sweep"] = rows
    return rep


# ---------------------------------------------------------------------------
# one-dimensional solve: convergence, normal derivative and eigenvalue bound


def run_solve_suite(cfg: SuiteConfig) -> Report:
    """Torsion solve on an interval against the closed form, plus the eigenvalue bound."""
    rep = Report("solve", cfg.to_dict())
    a, b = cfg.options["interval"]
    dom = geo.StarDomain.interval(a, b)
    c0 = float(cfg.options["c0"])
    half = 0.5 * (b - a)
    for n, s in cfg.params:
        if n != 1:
            continue
        params = derive_constants(1, s)
        errors, rows = [], []
        for N in cfg.resolutions:
            h = (b - a) / N
            tag = {"n": 1, "s": s, "resolution": N}
            try:
                u = sv.solve_dirichlet(dom, sv.ReactionSpec.constant(c0), params, h)
                if cfg.fault == "perturb_solution":
                    u = u.with_values(u.values * (1.0 + 0.05 * np.cos(40.0 * u.coords()[..., 0])))
                x = u.coords()[..., 0]
                exact = c0 * params.gamma_ns * np.clip(half**2 - (x - 0.5 * (a + b)) ** 2, 0.0, None) ** s
                err = float(np.max(np.abs(u.values - exact)))
                dn = sv.frac_normal_derivative(u, dom, [b])
                lam = sv.eigen_lambda1(dom, params, h)
            except FracSerrinError as e:
                rep.fail(f"solve[s={s},N={N}]", "dirichlet", tag, e)
                continue
            errors.append(err)
            eps = _eps_h(cfg.options["eps_h_coef"], h, u)
            low = float(np.min(u.values[u.mask]))
            rep.add(f"nonnegative[s={s},N={N}]", "dirichlet", dict(tag, eps_h=eps), low, -eps, low + eps)
            bound = params.kappa_ns * (b - a) ** (-2.0 * s)
            rep.add(f"faber_krahn[s={s},N={N}]", "faber_krahn", dict(tag, bound=bound), lam, bound,
                    lam - bound - _tol(cfg, "faber_krahn"))
            dn_exact = c0 * params.gamma_ns * (2.0 * half) ** s
            rows.append({"s": s, "N": N, "sup_error": err, "normal_derivative": dn,
                         "normal_derivative_exact": dn_exact, "lambda1": lam, "faber_krahn_bound": bound})
            if N == 512 or N == cfg.resolutions[-1]:
                tol = _tol(cfg, "normal_derivative")
                rep.add(f"normal_derivative[s={s},N={N}]", "normal_derivative", tag,
                        abs(dn - dn_exact), tol, tol - abs(dn - dn_exact))
            if N == 512:
                tol = _tol(cfg, "sup_error")
                rep.add(f"sup_error[s={s},N={N}]", "dirichlet", tag, err, tol, tol - err)
        if len(errors) >= 2:
            worst = float(np.max(np.diff(errors)))
            rep.add(f"monotone_convergence[s={s}]", "dirichlet", {"s": s, "resolutions": list(cfg.resolutions)},
                    worst, 0.0, _positive_margin(-worst))
        rep.tables.setdefault("convergence", []).extend(rows)
    return rep


RUNNERS = {
    "identities": run_identity_suite,
    "barrier": run_barrier_suite,
    "maxprinciple": run_maxprinciple_suite,
    "stability": run_stability_sweep,
    "solve": run_solve_suite,
}


def run_suite(cfg: SuiteConfig) -> Report:
    """Dispatch to the runner for ``cfg.suite`` and stamp the timing block."""
    t0 = time.perf_counter()
    rep = RUNNERS[cfg.suite](cfg)
    rep.runtime = time.perf_counter() - t0
    rep.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return rep


# ---------------------------------------------------------------------------
# CLI


def _write(rep: Report, out: Path, fmt: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt == "json":
        path = out / f"{rep.suite}.json"
        path.write_text(rep.to_json())
    else:
        path = out / f"{rep.suite}.csv"
        path.write_text(rep.to_csv())
    paths.append(path)
    for name in rep.tables:
        tpath = out / f"{rep.suite}_{name}.csv"
        tpath.write_text(rep.table_csv(name))
        paths.append(tpath)
    return paths


def summarize_reports(out: Path) -> Report:
    """Roll the suite reports found in ``out`` into one report (one check per suite)."""
    rep = Report("report", {"out": str(out)})
    for suite in SUITES:
        path = out / f"{suite}.json"
        if not path.exists():
            continue
        data = json.loads(path.read_text())
        summ = data["summary"]
        anchor = data["checks"][0]["anchor"] if data["checks"] else ANCHORS["dirichlet"]
        rep.checks.append(Check(f"suite_{suite}", anchor, {"path": path.name}, summ["passed"],
                                summ["total"], summ["passed"] - summ["total"]))
    return rep


def _load_config(args, suite: str) -> SuiteConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if isinstance(data, dict) and "suites" in data:
            data = data["suites"].get(suite, {"suite": suite})
        data = dict(data)
        data.setdefault("suite", suite)
        if data["suite"] != suite:
            raise DomainError(f"config is for suite {data['suite']!r}, not {suite!r}")
        cfg = SuiteConfig.from_dict(data)
    else:
        cfg = SuiteConfig.default(suite)
    if args.tol_scale != 1.0:
        cfg = cfg.scaled(args.tol_scale)
    return replace(cfg, threads=args.threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracserrin", description="Run the verification suites.")
    parser.add_argument("command", choices=SUITES + ("report",))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default=None, help="output directory (default: reports)")
    parser.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    parser.add_argument("--threads", type=int, default=1, help="workers for independent cells")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            out = Path(args.out or "reports")
            rep = summarize_reports(out)
            rep.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        else:
            cfg = _load_config(args, args.command)
            out = Path(args.out or cfg.out)
            rep = run_suite(cfg)
    except (FracSerrinError, OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    paths = _write(rep, out, args.format)
    s = rep.summary()
    print(f"{rep.suite}: {s['passed']}/{s['total']} checks passed -> {', '.join(str(p) for p in paths)}")
    for c in rep.checks:
        if not c.passed:
            print(f"  FAIL {c.check_id}: measured={c.measured!r} target={c.target!r} {c.note}")
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
