"""Star-shaped domains in one and two dimensions and their geometric functionals.

Two-dimensional domains are described by a polar radius ``r(theta)`` about a
centre; intervals are the one-dimensional case.  Boundary extrema are found on
a dense angular sample and then polished with bounded scalar minimisation, so
results are accurate well beyond the sampling resolution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import DegenerateCurvatureError, DomainError, PredicateResolutionError
from .specfun import FracParams, unit_ball_volume

__all__ = [
    "StarDomain",
    "Hyperplane",
    "CriticalPlaneResult",
    "RhoDeficit",
    "TANGENCY",
    "ORTHOGONALITY",
    "rho_deficit",
    "diameter",
    "inner_sphere_radius",
    "R_param",
    "reflect_point",
    "critical_value",
    "containment_violation",
    "line_sections",
    "cap_sections",
    "symmetric_difference_measure",
    "symmetric_difference_gridcount",
]

KINDS = ("ball", "interval", "ellipse", "polar")
TANGENCY = "tangency"
ORTHOGONALITY = "orthogonality"

BOUNDARY_SAMPLES = 4096
TWO_PI = 2.0 * math.pi


def _unit(e) -> np.ndarray:
    e = np.atleast_1d(np.asarray(e, dtype=float))
    norm = float(np.linalg.norm(e))
    if not norm > 0:
        raise DomainError("direction must be non-zero")
    return e / norm


@dataclass(frozen=True, eq=False)
class StarDomain:
    """Bounded domain, star-shaped about ``center_hint``.

    ``parameters`` depend on ``kind``:

    * ``interval``: ``{"a", "b"}`` (one-dimensional)
    * ``ball``: ``{"center", "radius"}``
    * ``ellipse``: ``{"center", "semi_axes": [a, b]}`` (axis-aligned)
    * ``polar``: ``{"center", "r0", "cos": [...], "sin": [...]}`` for
      ``r(theta) = r0 + sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)``

    ``regularity`` holds bounds on ``r``, ``|r'|`` and ``|r''|``; defaults are
    derived analytically from the parameters.
    """

    dimension: int
    kind: str
    parameters: dict
    center_hint: tuple = ()
    regularity: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.dimension not in (1, 2):
            raise DomainError("domains are implemented for dimension 1 and 2")
        if (self.kind == "interval") != (self.dimension == 1) and self.kind != "ball":
            raise DomainError(f"kind {self.kind!r} does not live in dimension {self.dimension}")
        params = json.loads(json.dumps(self.parameters))
        object.__setattr__(self, "parameters", params)
        if self.dimension == 1:
            a, b = self._interval()
            if not b > a:
                raise DomainError(f"empty interval ({a}, {b})")
        elif self.kind == "ellipse" and min(params["semi_axes"]) <= 0:
            raise DomainError("ellipse semi-axes must be positive")
        elif self.kind == "ball" and not params["radius"] > 0:
            raise DomainError("ball radius must be positive")
        center = tuple(self.center_hint) or tuple(self._center())
        object.__setattr__(self, "center_hint", tuple(float(c) for c in center))
        reg = dict(self._default_regularity())
        reg.update(self.regularity or {})
        object.__setattr__(self, "regularity", reg)
        if self.dimension == 2 and not reg["r_min"] > 0:
            raise DomainError(f"radial function must stay positive (lower bound {reg['r_min']})")

    # constructors ---------------------------------------------------------

    @classmethod
    def interval(cls, a: float, b: float) -> "StarDomain":
        return cls(1, "interval", {"a": float(a), "b": float(b)})

    @classmethod
    def ball(cls, center, radius: float) -> "StarDomain":
        center = [float(c) for c in np.atleast_1d(center)]
        return cls(len(center), "ball", {"center": center, "radius": float(radius)})

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0)) -> "StarDomain":
        return cls(
            2, "ellipse", {"center": [float(c) for c in center], "semi_axes": [float(a), float(b)]}
        )

    @classmethod
    def polar(cls, r0: float, cos=(), sin=(), center=(0.0, 0.0)) -> "StarDomain":
        return cls(
            2,
            "polar",
            {
                "center": [float(c) for c in center],
                "r0": float(r0),
                "cos": [float(c) for c in cos],
                "sin": [float(c) for c in sin],
            },
        )

    # serialisation ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "kind": self.kind,
            "parameters": self.parameters,
            "center_hint": list(self.center_hint),
            "regularity": self.regularity,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "StarDomain":
        return cls(
            int(data["dimension"]),
            data["kind"],
            data["parameters"],
            tuple(data.get("center_hint") or ()),
            dict(data.get("regularity") or {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "StarDomain":
        return cls.from_dict(json.loads(text))

    # basic geometry ---------------------------------------------------------

    def _interval(self) -> tuple[float, float]:
        p = self.parameters
        if self.kind == "interval":
            return float(p["a"]), float(p["b"])
        c, r = float(p["center"][0]), float(p["radius"])
        return c - r, c + r

    def _center(self) -> np.ndarray:
        if self.dimension == 1:
            a, b = self._interval()
            return np.array([0.5 * (a + b)])
        return np.asarray(self.parameters["center"], dtype=float)

    @property
    def center(self) -> np.ndarray:
        """Centre of the polar description (the interval midpoint in 1D)."""
        return self._center()

    @property
    def bounds(self) -> tuple[float, float]:
        """End points of a one-dimensional domain."""
        if self.dimension != 1:
            raise DomainError("bounds are defined for intervals only")
        return self._interval()

    def _default_regularity(self) -> dict:
        if self.dimension == 1:
            a, b = self._interval()
            half = 0.5 * (b - a)
            return {"r_min": half, "r_max": half, "dr_max": 0.0, "d2r_max": 0.0}
        p = self.parameters
        if self.kind == "ball":
            r = float(p["radius"])
            return {"r_min": r, "r_max": r, "dr_max": 0.0, "d2r_max": 0.0}
        if self.kind == "ellipse":
            a, b = (float(v) for v in p["semi_axes"])
            m, d = min(a, b), abs(a * a - b * b)
            return {
                "r_min": m,
                "r_max": max(a, b),
                "dr_max": 0.5 * a * b * d / m**3,
                "d2r_max": a * b * (0.75 * d * d / m**5 + d / m**3),
            }
        coef = [abs(c) for c in p["cos"]], [abs(c) for c in p["sin"]]
        amp = sum(coef[0]) + sum(coef[1])
        d1 = sum((k + 1) * (c + s) for k, (c, s) in enumerate(_zip_pad(*coef)))
        d2 = sum((k + 1) ** 2 * (c + s) for k, (c, s) in enumerate(_zip_pad(*coef)))
        r0 = float(p["r0"])
        return {"r_min": r0 - amp, "r_max": r0 + amp, "dr_max": d1, "d2r_max": d2}

    def radial(self, theta, deriv: int = 0):
        """``r(theta)`` (``deriv=0``) or its first/second derivative."""
        th = np.asarray(theta, dtype=float)
        p = self.parameters
        if self.dimension == 1:
            raise DomainError("radial function is defined for planar domains only")
        if self.kind == "ball":
            return np.full_like(th, float(p["radius"])) if deriv == 0 else np.zeros_like(th)
        if self.kind == "ellipse":
            a, b = (float(v) for v in p["semi_axes"])
            q = (b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2
            if deriv == 0:
                return a * b / np.sqrt(q)
            dq = (a * a - b * b) * np.sin(2.0 * th)
            if deriv == 1:
                return -0.5 * a * b * q**-1.5 * dq
            d2q = 2.0 * (a * a - b * b) * np.cos(2.0 * th)
            return a * b * (0.75 * q**-2.5 * dq**2 - 0.5 * q**-1.5 * d2q)
        out = np.full_like(th, float(p["r0"])) if deriv == 0 else np.zeros_like(th)
        for k, (c, s) in enumerate(_zip_pad(p["cos"], p["sin"]), start=1):
            if deriv == 0:
                out = out + c * np.cos(k * th) + s * np.sin(k * th)
            elif deriv == 1:
                out = out + k * (-c * np.sin(k * th) + s * np.cos(k * th))
            else:
                out = out - k * k * (c * np.cos(k * th) + s * np.sin(k * th))
        return out

    def boundary_point(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        r = self.radial(th)
        return self.center + np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    def tangent(self, theta) -> np.ndarray:
        """Unit tangent, counter-clockwise."""
        th = np.asarray(theta, dtype=float)
        r, dr = self.radial(th), self.radial(th, 1)
        t = np.stack([dr * np.cos(th) - r * np.sin(th), dr * np.sin(th) + r * np.cos(th)], axis=-1)
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    def outward_normal(self, theta) -> np.ndarray:
        t = self.tangent(theta)
        return np.stack([t[..., 1], -t[..., 0]], axis=-1)

    def curvature(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        r, dr, d2r = self.radial(th), self.radial(th, 1), self.radial(th, 2)
        return (r * r + 2.0 * dr * dr - r * d2r) / (r * r + dr * dr) ** 1.5

    def boundary_samples(self, m: int = BOUNDARY_SAMPLES):
        """Angles, points and outward normals at ``m`` equispaced angles."""
        th = np.arange(m) * (TWO_PI / m)
        return th, self.boundary_point(th), self.outward_normal(th)

    def radial_gap(self, pts) -> np.ndarray:
        """``|x - c| - r(angle)``: negative inside, zero on the boundary."""
        pts = np.asarray(pts, dtype=float)
        if self.dimension == 1:
            x = pts[..., 0] if pts.ndim and pts.shape[-1] == 1 else pts
            a, b = self._interval()
            return np.abs(x - 0.5 * (a + b)) - 0.5 * (b - a)
        d = pts - self.center
        return np.hypot(d[..., 0], d[..., 1]) - self.radial(np.arctan2(d[..., 1], d[..., 0]))

    def contains(self, pts, margin: float = 0.0) -> np.ndarray:
        """Open-set membership; ``margin > 0`` demands that much radial clearance."""
        return self.radial_gap(pts) < -margin

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.dimension == 1:
            a, b = self._interval()
            return np.array([a]), np.array([b])
        _, pts, _ = self.boundary_samples(1024)
        pad = 1e-3 * float(np.ptp(pts, axis=0).max())
        return pts.min(axis=0) - pad, pts.max(axis=0) + pad

    def area(self) -> float:
        """Lebesgue measure (length in 1D)."""
        if self.dimension == 1:
            a, b = self._interval()
            return b - a
        x, w = np.polynomial.legendre.leggauss(64)
        panels = 32
        total = 0.0
        for k in range(panels):
            th = (k + 0.5 * (x + 1.0)) * TWO_PI / panels
            total += float(np.dot(w, 0.5 * self.radial(th) ** 2)) * 0.5 * TWO_PI / panels
        return total

    def translated(self, shift) -> "StarDomain":
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        params = json.loads(json.dumps(self.parameters))
        if self.kind == "interval":
            params["a"] += float(shift[0])
            params["b"] += float(shift[0])
        else:
            params["center"] = [float(c + s) for c, s in zip(params["center"], shift)]
        hint = tuple(float(c + s) for c, s in zip(self.center_hint, shift))
        return StarDomain(self.dimension, self.kind, params, hint, dict(self.regularity))


def _zip_pad(cos, sin):
    m = max(len(cos), len(sin))
    cos = list(cos) + [0.0] * (m - len(cos))
    sin = list(sin) + [0.0] * (m - len(sin))
    return list(zip(cos, sin))


@dataclass(frozen=True)
class Hyperplane:
    """``{x : x . e = offset}`` with unit normal ``e``."""

    direction: np.ndarray
    offset: float

    def __post_init__(self):
        e = _unit(self.direction)
        e.setflags(write=False)
        object.__setattr__(self, "direction", e)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, pts) -> np.ndarray:
        """``x . e - offset``; positive on the side the normal points to."""
        return np.asarray(pts, dtype=float) @ self.direction - self.offset


def reflect_point(x, plane: Hyperplane) -> np.ndarray:
    """``x - 2 (x . e - mu) e``; vectorised over a trailing coordinate axis."""
    x = np.asarray(x, dtype=float)
    e = plane.direction
    return x - 2.0 * (x @ e - plane.offset)[..., None] * e


# ---------------------------------------------------------------------------
# rho(Omega), diameter, interior sphere radius


class RhoDeficit(NamedTuple):
    rho: float
    center: np.ndarray
    rho_i: float
    rho_e: float


def _polish_extreme(dom: StarDomain, func, th_samples, idx, sign: float) -> float:
    """Refine ``sign * min`` of ``func(theta)`` around sample ``idx``."""
    step = th_samples[1] - th_samples[0]
    center = th_samples[idx]
    res = minimize_scalar(
        lambda t: sign * func(t),
        bounds=(center - step, center + step),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return min(sign * float(func(center)), float(res.fun))


def _boundary_distances(dom: StarDomain, z: np.ndarray, th, pts, polish: bool):
    d = np.linalg.norm(pts - z, axis=1)
    if not polish:
        return float(d.min()), float(d.max())

    def dist(t):
        return float(np.linalg.norm(dom.boundary_point(t) - z))

    lo = _polish_extreme(dom, dist, th, int(np.argmin(d)), 1.0)
    hi = -_polish_extreme(dom, dist, th, int(np.argmax(d)), -1.0)
    return lo, hi


def rho_deficit(
    domain: StarDomain, grid: int = 11, samples: int = BOUNDARY_SAMPLES, xtol: float = 1e-10
) -> RhoDeficit:
    """Smallest ``rho_e - rho_i`` over centres, ``B_{rho_i}(x) < Omega < B_{rho_e}(x)``.

    A coarse ``grid x grid`` search over the bounding box is followed by a
    compass pattern search; the value is an upper bound on the infimum.
    """
    if domain.dimension == 1:
        a, b = domain.bounds
        half = 0.5 * (b - a)
        return RhoDeficit(0.0, np.array([0.5 * (a + b)]), half, half)
    th, pts, _ = domain.boundary_samples(samples)

    def objective(z):
        if not domain.contains(z[None, :])[0]:
            return math.inf
        lo, hi = _boundary_distances(domain, z, th, pts, polish=False)
        return hi - lo

    lo_box, hi_box = domain.bounding_box()
    axes = [np.linspace(lo_box[i], hi_box[i], grid) for i in range(2)]
    best, best_z = math.inf, np.asarray(domain.center_hint, dtype=float)
    candidates = [best_z] + [np.array([x, y]) for x in axes[0] for y in axes[1]]
    for z in candidates:
        val = objective(z)
        if val < best:
            best, best_z = val, z
    step = 0.5 * float(np.max(hi_box - lo_box)) / (grid - 1)
    moves = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    while step > xtol:
        improved = False
        for mv in moves:
            z = best_z + step * mv
            val = objective(z)
            if val < best:
                best, best_z, improved = val, z, True
                break
        if not improved:
            step *= 0.5
    rho_i, rho_e = _boundary_distances(domain, best_z, th, pts, polish=True)
    return RhoDeficit(max(rho_e - rho_i, 0.0), best_z, rho_i, rho_e)


def diameter(domain: StarDomain, samples: int = 1024) -> float:
    """Largest distance between two boundary points, polished to ~1e-12 relative."""
    if domain.dimension == 1:
        a, b = domain.bounds
        return b - a
    th, pts, _ = domain.boundary_samples(samples)
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    i, j = np.unravel_index(int(np.argmax(d2)), d2.shape)

    def negdist(v):
        return -float(np.linalg.norm(domain.boundary_point(v[0]) - domain.boundary_point(v[1])))

    res = minimize(
        negdist,
        np.array([th[i], th[j]]),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000},
    )
    return max(float(np.sqrt(d2[i, j])), -float(res.fun))


def _check_regularity(domain: StarDomain, th: np.ndarray) -> None:
    reg = domain.regularity
    slack = 1e-9 * max(1.0, reg["r_max"])
    r = domain.radial(th)
    dr = np.abs(domain.radial(th, 1))
    d2r = np.abs(domain.radial(th, 2))
    if (
        r.min() < reg["r_min"] - slack
        or r.max() > reg["r_max"] + slack
        or dr.max() > reg["dr_max"] + slack
        or d2r.max() > reg["d2r_max"] + slack
    ):
        raise DegenerateCurvatureError(
            "boundary samples violate the declared regularity bounds "
            f"(r in [{r.min()}, {r.max()}], |r'| <= {dr.max()}, |r''| <= {d2r.max()}; "
            f"declared {reg})"
        )


def inner_sphere_radius(domain: StarDomain, samples: int = 1024) -> float:
    """Uniform interior-sphere radius ``r_Omega``.

    For every boundary point ``p`` the largest interior ball tangent at ``p``
    has radius ``min_q |q - p|^2 / (2 (p - q) . nu(p))``; the result is the
    minimum of that medial clearance over the samples and of the polished
    minimal radius of curvature.  One-dimensional domains return half the
    length.
    """
    if domain.dimension == 1:
        a, b = domain.bounds
        return 0.5 * (b - a)
    th, pts, nu = domain.boundary_samples(samples)
    _check_regularity(domain, th)
    diff = pts[None, :, :] - pts[:, None, :]  # q - p
    along = -np.einsum("pqk,pk->pq", diff, nu)  # (p - q) . nu(p)
    dist2 = np.sum(diff**2, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        radii = np.where(along > 1e-14, dist2 / (2.0 * along), np.inf)
    clearance = float(radii.min())
    kappa = domain.curvature(th)
    idx = int(np.argmax(kappa))
    if kappa[idx] > 0:
        curv_radius = _polish_extreme(domain, lambda t: 1.0 / domain.curvature(t), th, idx, 1.0)
    else:
        curv_radius = math.inf
    return min(clearance, curv_radius)


def R_param(domain: StarDomain, params: FracParams, lip_f: float) -> float:
    """``min(r_Omega, kappa^(1/2s) |B_1|^(-1/n) / lip_f^(1/2s))``."""
    if lip_f < 0:
        raise DomainError("the Lipschitz constant must be non-negative")
    r = inner_sphere_radius(domain)
    if lip_f == 0:
        return r
    n, s = params.n, params.s
    spectral = params.kappa_ns ** (0.5 / s) * unit_ball_volume(n) ** (-1.0 / n) / lip_f ** (0.5 / s)
    return min(r, spectral)


# ---------------------------------------------------------------------------
# moving planes


@dataclass(frozen=True)
class CriticalPlaneResult:
    lambda_: float
    contact_case: str
    contact_point: np.ndarray
    Lambda: float
    direction: np.ndarray
    both_sided: bool = False

    @property
    def plane(self) -> Hyperplane:
        return Hyperplane(self.direction, self.lambda_)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_,
            "contact_case": self.contact_case,
            "contact_point": [float(v) for v in self.contact_point],
            "Lambda": self.Lambda,
            "direction": [float(v) for v in self.direction],
            "both_sided": self.both_sided,
        }


class _Violation(NamedTuple):
    tangency: float  # largest radial gap of a reflected cap point (> 0 means outside)
    tangency_point: np.ndarray
    orthogonality: float  # most negative nu . e where the plane meets the boundary
    orthogonality_point: np.ndarray


def _support_value(domain: StarDomain, e: np.ndarray, th, pts) -> float:
    proj = pts @ e
    return -_polish_extreme(domain, lambda t: float(domain.boundary_point(t) @ e), th, int(np.argmax(proj)), -1.0)


def containment_violation(domain: StarDomain, plane: Hyperplane, samples: int = BOUNDARY_SAMPLES) -> _Violation:
    """How far the reflected cap ``{x in Omega : x . e > mu}`` sticks out of ``Omega``.

    Returns the largest radial gap of reflected boundary points of the cap and
    the smallest ``nu . e`` over the points where the plane cuts the boundary.
    """
    e, mu = plane.direction, plane.offset
    th, pts, nu = domain.boundary_samples(samples)
    height = pts @ e - mu
    on_cap = height > 0
    gap_pt, orth_pt = np.full(2, np.nan), np.full(2, np.nan)
    tang, orth = -math.inf, math.inf
    if on_cap.any():

        def gap(t):
            x = domain.boundary_point(t)
            if float(x @ e) <= mu:
                return -math.inf
            return float(domain.radial_gap(reflect_point(x, plane)))

        g = np.where(on_cap, domain.radial_gap(reflect_point(pts, plane)), -np.inf)
        m = len(th)
        # polish the three largest interior local maxima of the sampled gap
        peaks = [
            i for i in range(m)
            if on_cap[i] and on_cap[i - 1] and on_cap[(i + 1) % m]
            and g[i] >= g[i - 1] and g[i] >= g[(i + 1) % m]
        ]
        peaks.sort(key=lambda i: -g[i])
        for i in peaks[:3]:
            val = -_polish_extreme(domain, lambda t: gap(t), th, i, -1.0)
            if val > tang:
                tang = val
                res = minimize_scalar(lambda t: -gap(t), bounds=(th[i] - th[1], th[i] + th[1]),
                                      method="bounded", options={"xatol": 1e-13})
                best_t = float(res.x) if -float(res.fun) >= g[i] else th[i]
                gap_pt = domain.boundary_point(best_t)
        if tang == -math.inf:
            tang = 0.0
        crossings = np.nonzero(on_cap != np.roll(on_cap, -1))[0]
        for i in crossings:
            t0, t1 = th[i], th[i] + th[1]
            tc = brentq(lambda t: float(domain.boundary_point(t) @ e) - mu, t0, t1, xtol=1e-15)
            val = float(domain.outward_normal(tc) @ e)
            if val < orth:
                orth, orth_pt = val, domain.boundary_point(tc)
    return _Violation(tang, gap_pt, orth, orth_pt)


def _passes(v: _Violation, margin: float) -> bool:
    return v.tangency <= margin and v.orthogonality >= -1e-12


def critical_value(
    domain: StarDomain,
    e,
    rel_tol: float = 1e-8,
    scan_steps: int = 200,
    samples: int = BOUNDARY_SAMPLES,
) -> CriticalPlaneResult:
    """Critical position ``lambda_e`` of the moving plane orthogonal to ``e``.

    The plane starts at ``Lambda = sup x . e`` and moves down while the
    reflected cap stays inside ``Omega`` and the boundary meets the plane
    with ``nu . e >= 0``.  A scan brackets the first failure, bisection then
    pins it to ``rel_tol * diam``.  The reflected cap may leave ``Omega`` by
    half of that tolerance without failing.

    Raises
    ------
    PredicateResolutionError
        If the predicate passes again just below the bracketed value, so the
        sampling cannot resolve the contact.
    """
    diam = diameter(domain)
    if domain.dimension == 1:
        sign = float(np.sign(np.atleast_1d(e)[0])) or 1.0
        a, b = domain.bounds
        mid = 0.5 * (a + b)
        end = b if sign > 0 else a
        return CriticalPlaneResult(sign * mid, ORTHOGONALITY, np.array([mid]), sign * end,
                                   np.array([sign]), True)
    e = _unit(e)
    th, pts, _ = domain.boundary_samples(samples)
    Lam = _support_value(domain, e, th, pts)
    tol = rel_tol * diam
    margin = 0.5 * tol

    def check(mu):
        return containment_violation(domain, Hyperplane(e, mu), samples)

    step = diam / scan_steps
    hi = Lam - 1e-3 * step
    lo = hi - step
    while _passes(check(lo), margin):
        hi = lo
        lo -= step
        if lo < Lam - diam - step:
            raise PredicateResolutionError("moving plane crossed the whole domain without contact")
    while hi - lo > tol:
        mid = 0.5 * (hi + lo)
        if _passes(check(mid), margin):
            hi = mid
        else:
            lo = mid
    probe = hi - 1e-6 * diam
    v = check(probe)
    if _passes(v, margin):
        raise PredicateResolutionError(
            f"containment ambiguous below mu={hi}: passes again at {probe}"
        )
    tang_fail = v.tangency > margin
    orth_fail = v.orthogonality < -1e-12
    if orth_fail:
        case, point = ORTHOGONALITY, v.orthogonality_point
    else:
        case, point = TANGENCY, v.tangency_point
    return CriticalPlaneResult(float(hi), case, np.asarray(point), float(Lam), e,
                               bool(tang_fail and orth_fail))


# ---------------------------------------------------------------------------
# chord geometry along lines parallel to e


def _perp(e: np.ndarray) -> np.ndarray:
    return np.array([-e[1], e[0]])


def line_sections(domain: StarDomain, e, t: float, samples: int = 512) -> list[tuple[float, float]]:
    """Intervals of ``sigma`` with ``t e_perp + sigma e`` inside ``Omega``."""
    e = _unit(e)
    base = t * _perp(e)
    reach = float(np.linalg.norm(domain.center)) + domain.regularity["r_max"] * 1.01 + abs(t)
    sig = np.linspace(-reach, reach, samples)
    g = domain.radial_gap(base + sig[:, None] * e)

    def f(x):
        return float(domain.radial_gap((base + x * e)[None, :])[0])

    roots = []
    for i in np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]:
        roots.append(brentq(f, sig[i], sig[i + 1], xtol=1e-15))
    if len(roots) % 2:
        raise PredicateResolutionError(f"odd number of boundary crossings on the line t={t}")
    return [(roots[k], roots[k + 1]) for k in range(0, len(roots), 2)]


def _clip(intervals, lo, hi):
    out = []
    for a, b in intervals:
        a, b = max(a, lo), min(b, hi)
        if b > a:
            out.append((a, b))
    return out


def _subtract(intervals, holes):
    out = []
    for a, b in intervals:
        pieces = [(a, b)]
        for c, d in holes:
            nxt = []
            for x, y in pieces:
                if d <= x or c >= y:
                    nxt.append((x, y))
                    continue
                if c > x:
                    nxt.append((x, c))
                if d < y:
                    nxt.append((d, y))
            pieces = nxt
        out.extend(pieces)
    return out


def _measure(intervals) -> float:
    return float(sum(b - a for a, b in intervals))


def cap_sections(domain: StarDomain, plane: Hyperplane, t: float):
    """Pieces of ``K = (Omega ∩ {x.e < mu}) minus (reflected cap)`` on the line ``t``."""
    lam = plane.offset
    sec = line_sections(domain, plane.direction, t)
    below = _clip(sec, -math.inf, lam)
    mirrored = [(2.0 * lam - b, 2.0 * lam - a) for a, b in _clip(sec, lam, math.inf)]
    return _subtract(below, mirrored)


def _transverse_range(domain: StarDomain, e: np.ndarray) -> tuple[float, float]:
    th, pts, _ = domain.boundary_samples(BOUNDARY_SAMPLES)
    p = _perp(e)
    hi = -_polish_extreme(domain, lambda v: float(domain.boundary_point(v) @ p), th, int(np.argmax(pts @ p)), -1.0)
    lo = _polish_extreme(domain, lambda v: float(domain.boundary_point(v) @ p), th, int(np.argmin(pts @ p)), 1.0)
    return lo, hi


def transverse_quadrature(domain: StarDomain, e, panels: int, order: int = 8):
    """Nodes and weights in the coordinate across ``e``, graded at both ends."""
    lo, hi = _transverse_range(domain, _unit(e))
    # substitution t = lo + (hi-lo) (1 - cos(pi u))/2 removes the square-root ends
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    u = np.concatenate([0.5 * (edges[k] + edges[k + 1]) + 0.5 * (edges[k + 1] - edges[k]) * x for k in range(panels)])
    wu = np.concatenate([0.5 * (edges[k + 1] - edges[k]) * w for k in range(panels)])
    t = lo + (hi - lo) * 0.5 * (1.0 - np.cos(math.pi * u))
    wt = wu * (hi - lo) * 0.5 * math.pi * np.sin(math.pi * u)
    return t, wt


def symmetric_difference_measure(
    domain: StarDomain, plane: Hyperplane, rel_tol: float = 1e-4, max_panels: int = 2048
) -> float:
    """``|Omega △ Omega'|`` with ``Omega'`` the mirror image of ``Omega`` in the plane.

    Lines parallel to the plane normal are mapped to themselves by the
    reflection, so the measure is an integral of one-dimensional interval
    differences over the transverse coordinate.  Panels are doubled until two
    successive values agree to ``rel_tol``.
    """
    lam = plane.offset
    if domain.dimension == 1:
        a, b = domain.bounds
        return _measure(_subtract([(a, b)], [(2 * lam - b, 2 * lam - a)])) * 2.0
    e = plane.direction

    def integrand(t):
        sec = line_sections(domain, e, t)
        mir = [(2.0 * lam - b, 2.0 * lam - a) for a, b in sec]
        return _measure(_subtract(sec, mir)) + _measure(_subtract(mir, sec))

    prev = None
    panels = 16
    while panels <= max_panels:
        t, w = transverse_quadrature(domain, e, panels)
        val = float(np.dot(w, [integrand(v) for v in t]))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
            return val
        if prev is not None and val < 1e-14 and prev < 1e-14:
            return val
        prev = val
        panels *= 2
    return prev


def symmetric_difference_gridcount(domain: StarDomain, plane: Hyperplane, cells: int) -> float:
    """Cell-centre count of ``Omega △ Omega'`` on a ``cells x cells`` grid."""
    lo, hi = domain.bounding_box()
    span = float(np.max(hi - lo)) * 1.5
    mid = 0.5 * (lo + hi)
    h = span / cells
    ax = [mid[i] - 0.5 * span + (np.arange(cells) + 0.5) * h for i in range(2)]
    X, Y = np.meshgrid(*ax, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    inside = domain.contains(pts)
    mirrored = domain.contains(reflect_point(pts, plane))
    return float(np.count_nonzero(inside != mirrored)) * h * h
