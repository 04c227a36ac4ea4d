"""Collocation solver for ``(-Delta)^s u = f(u)`` in ``Omega``, ``u = 0`` outside.

The unknowns are nodal values on a uniform grid.  The singular integral is
split at ``|z| = h``: inside, the second-order Taylor model with a
finite-difference Laplacian; outside, the kernel is integrated exactly
against the piecewise linear (1D) or bilinear (2D) interpolant of the nodal
values.  The constant part ``2 u(x) |z|^{-n-2s}`` is integrated analytically
to infinity, so the zero exterior needs no truncation.

Plain hat functions miss the ``d^s`` boundary layer.  In 1D the first
``CLOSURE_NODES`` nodes at each end use the weighted basis
``phi_j (x / x_j)^s``; in 2D a band of cells next to the boundary carries
the analogous radial weight.  Either way the matrix is nonsymmetric, so it
is factorised by dense LU when small and solved by preconditioned BiCGStab
otherwise.  Point evaluation near the boundary interpolates ``u / d^s`` and
multiplies the weight back in.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.signal import fftconvolve
from scipy.sparse.linalg import LinearOperator, bicgstab

from .closure import CLOSURE_NODES, BandCorrection, band_correction_2d, closed_matrix_1d
from .errors import (
    DomainError,
    IllConditionedFitError,
    IterationStallError,
    NonConvergenceError,
    ResolutionError,
    SpectralError,
)
from .geometry import Hyperplane, StarDomain, reflect_point
from .specfun import FracParams, derive_constants

__all__ = [
    "GridField",
    "ReactionSpec",
    "BoundaryTrace",
    "FracLapOperator",
    "build_grid",
    "hat_weights_1d",
    "bilinear_weights_2d",
    "solve_dirichlet",
    "frac_normal_derivative",
    "boundary_trace",
    "lipschitz_seminorm",
    "antisymmetric_difference",
    "c_mu_field",
    "eigen_lambda1",
    "discrete_energy",
    "MIN_NODES_ACROSS",
]

MIN_NODES_ACROSS = 32
DENSE_LIMIT = 4500
BOUNDARY_SNAP = 1e-9
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class ReactionSpec:
    """Affine reaction ``f(u) = c0 + c1 u``; ``kind`` is ``constant`` when ``c1 = 0``."""

    kind: str
    c0: float
    c1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "affine"):
            raise DomainError(f"unknown reaction kind {self.kind!r}")
        if self.kind == "constant" and self.c1 != 0.0:
            raise DomainError("a constant reaction has c1 = 0")
        if self.c0 < 0:
            raise DomainError(f"f(0) = {self.c0} must be non-negative")

    @classmethod
    def constant(cls, c0: float) -> "ReactionSpec":
        return cls("constant", float(c0), 0.0)

    @classmethod
    def affine(cls, c0: float, c1: float) -> "ReactionSpec":
        return cls("affine", float(c0), float(c1))

    @property
    def lip(self) -> float:
        return abs(self.c1)

    def __call__(self, u):
        return self.c0 + self.c1 * np.asarray(u, dtype=float)

    def difference(self, u, w):
        """``f(u) - f(w)`` without the cancellation of ``c0``."""
        return self.c1 * (np.asarray(u, dtype=float) - np.asarray(w, dtype=float))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c0": self.c0, "c1": self.c1}


@dataclass(frozen=True, eq=False)
class GridField:
    """Nodal values on the lattice ``origin + h * index``.

    ``values`` and ``mask`` share the grid shape; ``mask`` flags nodes inside
    the domain.  Solutions vanish at every node outside the mask.
    """

    origin: np.ndarray
    h: float
    values: np.ndarray
    mask: np.ndarray
    params: FracParams
    domain: StarDomain | None = None

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``grid shape + (n,)``."""
        axes = [self.origin[i] + self.h * np.arange(m) for i, m in enumerate(self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_values(self, values) -> "GridField":
        return GridField(self.origin, self.h, np.asarray(values, dtype=float), self.mask,
                         self.params, self.domain)

    def interpolate(self, pts, weighted: bool = False, quotient: bool = False) -> np.ndarray:
        """Piecewise (bi)linear interpolant; zero off the grid.

        With ``weighted`` (needs ``domain``) cells that touch the exterior
        interpolate ``u / d^s`` over their interior corners and multiply back by
        ``d^s``, ``d`` the radial gap to the boundary.  This keeps the
        ``d^s`` boundary layer of a solution intact between nodes.
        ``quotient`` does the same in every cell, which is what a fit of the
        boundary expansion wants a few cells inside.
        """
        pts = np.asarray(pts, dtype=float)
        if self.n == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        lead = pts.shape[:-1]
        flat = pts.reshape(-1, self.n)
        rel = (flat - self.origin) / self.h
        base = np.floor(rel).astype(int)
        frac = rel - base
        out = np.zeros(flat.shape[0])
        shape = np.array(self.shape)
        use_w = (weighted or quotient) and self.domain is not None
        if use_w:
            s = self.params.s
            depth = np.clip(-self.domain.radial_gap(flat if self.n == 2 else flat[:, 0]), 0.0, None)
            wsum = np.zeros(flat.shape[0])
            qsum = np.zeros(flat.shape[0])
            cut = np.zeros(flat.shape[0], dtype=bool)
        for corner in np.ndindex(*(2,) * self.n):
            idx = base + np.array(corner)
            w = np.prod(np.where(np.array(corner) == 1, frac, 1.0 - frac), axis=1)
            ok = np.all((idx >= 0) & (idx < shape), axis=1)
            vals = np.zeros(flat.shape[0])
            vals[ok] = self.values[tuple(idx[ok].T)]
            out += w * vals
            if use_w:
                inside = np.zeros(flat.shape[0], dtype=bool)
                inside[ok] = self.mask[tuple(idx[ok].T)]
                cut |= ~inside
                node = self.origin + self.h * idx[inside]
                nd = -self.domain.radial_gap(node if self.n == 2 else node[:, 0])
                qsum[inside] += w[inside] * vals[inside] / nd**s
                wsum[inside] += w[inside]
        if use_w:
            fix = (cut | quotient) & (wsum > 0)
            out[fix] = depth[fix] ** s * qsum[fix] / wsum[fix]
            # the mask drops nodes this close to the boundary; match it
            out[cut & (depth <= BOUNDARY_SNAP * self.h)] = 0.0
        return out.reshape(lead)

    # serialisation --------------------------------------------------------

    def header(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "h": self.h,
            "origin": [float(v) for v in self.origin],
            "shape": list(self.shape),
            "params": self.params.to_dict(),
            "domain": None if self.domain is None else self.domain.to_dict(),
        }

    def to_csv(self) -> str:
        """JSON header line followed by ``coords..., value, mask`` rows."""
        lines = [json.dumps(self.header(), sort_keys=True)]
        xs = self.coords().reshape(-1, self.n)
        for x, v, m in zip(xs, self.values.ravel(), self.mask.ravel()):
            lines.append(",".join([repr(float(c)) for c in x] + [repr(float(v)), str(int(m))]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "GridField":
        lines = text.strip().splitlines()
        head = json.loads(lines[0])
        if head.get("format_version") != FORMAT_VERSION:
            raise DomainError(f"unsupported grid field format {head.get('format_version')}")
        shape = tuple(head["shape"])
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        n = len(shape)
        params = derive_constants(head["params"]["n"], head["params"]["s"])
        dom = None if head["domain"] is None else StarDomain.from_dict(head["domain"])
        return cls(np.array(head["origin"]), float(head["h"]), rows[:, n].reshape(shape),
                   rows[:, n + 1].reshape(shape).astype(bool), params, dom)


class BoundaryTrace(NamedTuple):
    points: np.ndarray
    normals: np.ndarray
    values: np.ndarray
    residuals: np.ndarray


# ---------------------------------------------------------------------------
# kernel weights


def _g_derivative(s: float, j: int, t):
    # j-th derivative of t^(-1-2s)
    coef = 1.0
    for m in range(j):
        coef *= -(1.0 + 2.0 * s + m)
    return coef * np.asarray(t, dtype=float) ** (-1.0 - 2.0 * s - j)


@lru_cache(maxsize=32)
def hat_weights_1d(s: float, kmax: int) -> np.ndarray:
    """``J[k] = int_{|t|>1} hat(t - k) |t|^{-1-2s} dt`` for ``k = 0..kmax``.

    ``hat`` is the unit hat function; ``J[0] = 0``.
    """
    J = np.zeros(kmax + 1)
    if s == 0.5:
        G = lambda t: -math.log(t)
        dG = lambda t: -1.0 / t
    else:
        G = lambda t: t ** (1.0 - 2.0 * s) / ((-2.0 * s) * (1.0 - 2.0 * s))
        dG = lambda t: t ** (-2.0 * s) / (-2.0 * s)
    if kmax >= 1:
        J[1] = -dG(1.0) + G(2.0) - G(1.0)
    series_from = 30
    for k in range(2, min(kmax, series_from - 1) + 1):
        J[k] = G(k + 1.0) - 2.0 * G(float(k)) + G(k - 1.0)
    if kmax >= series_from:
        k = np.arange(series_from, kmax + 1, dtype=float)
        # int hat(t-k) g(t) dt = sum_m 2 g^(2m)(k) / (2m+2)!
        acc = np.zeros_like(k)
        for m in range(6):
            acc += 2.0 * _g_derivative(s, 2 * m, k) / math.factorial(2 * m + 2)
        J[series_from:] = acc
    J.setflags(write=False)
    return J


def _radial_moment(j: int, s: float, a: float, b: float) -> float:
    # int_a^b r^(j - 1 - 2s) dr, b may be inf
    p = j - 2.0 * s
    if p == 0.0:
        return math.log(b / a)
    if math.isinf(b):
        return -a**p / p
    return (b**p - a**p) / p


def _polar_cell_weight(s: float, k1: int, k2: int, order: int = 24) -> float:
    """Bilinear hat at ``(k1, k2)`` against ``|z|^{-2-2s}`` over ``|z| > 1``."""
    lines1 = [k1 - 1.0, float(k1), k1 + 1.0]
    lines2 = [k2 - 1.0, float(k2), k2 + 1.0]
    angles = {0.0, 2.0 * math.pi}
    for a in lines1:
        for b in lines2:
            if a or b:
                angles.add(math.atan2(b, a) % (2.0 * math.pi))
    for v in lines1:  # unit circle meets z1 = v
        if abs(v) <= 1.0:
            c = math.acos(v)
            angles.update({c, (2.0 * math.pi - c) % (2.0 * math.pi)})
    for v in lines2:
        if abs(v) <= 1.0:
            c = math.asin(v)
            angles.update({c % (2.0 * math.pi), (math.pi - c) % (2.0 * math.pi)})
    brk = sorted(angles)
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in zip(brk[:-1], brk[1:]):
        if hi - lo < 1e-15:
            continue
        for xi, wi in zip(x, w):
            th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi
            c, sn = math.cos(th), math.sin(th)
            total += 0.5 * (hi - lo) * wi * _ray_integral(s, c, sn, k1, k2)
    return total


def _ray_integral(s: float, c: float, sn: float, k1: int, k2: int) -> float:
    # int_1^inf (1-|r c - k1|)_+ (1-|r sn - k2|)_+ r^{-1-2s} dr
    cuts = [1.0]
    for comp, k in ((c, k1), (sn, k2)):
        if abs(comp) > 1e-300:
            for v in (k - 1.0, float(k), k + 1.0):
                r = v / comp
                if r > 1.0:
                    cuts.append(r)
    cuts = sorted(cuts) + [math.inf]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b) if math.isfinite(b) else a + 1.0
        f1 = 1.0 - abs(mid * c - k1)
        f2 = 1.0 - abs(mid * sn - k2)
        if f1 <= 0 or f2 <= 0:
            continue
        # each factor is affine in r on (a, b): 1 - sgn (r comp - k)
        s1 = 1.0 if mid * c - k1 >= 0 else -1.0
        s2 = 1.0 if mid * sn - k2 >= 0 else -1.0
        p0, p1 = 1.0 + s1 * k1, -s1 * c
        q0, q1 = 1.0 + s2 * k2, -s2 * sn
        coefs = (p0 * q0, p0 * q1 + p1 * q0, p1 * q1)
        total += sum(coefs[j] * _radial_moment(j, s, a, b) for j in range(3) if coefs[j] != 0.0)
    return total


@lru_cache(maxsize=16)
def bilinear_weights_2d(s: float, kmax: int) -> np.ndarray:
    """``W[k1, k2] = int_{|z|>1} phi(z - k) |z|^{-2-2s} dz`` for ``0 <= k1, k2 <= kmax``.

    ``phi`` is the unit bilinear hat.  Cells meeting the unit disc are done in
    polar coordinates with exact radial integrals, the rest with tensor
    Gauss-Legendre rules on the four sub-squares of the hat.
    """
    W = np.zeros((kmax + 1, kmax + 1))
    x, w = np.polynomial.legendre.leggauss(10)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    # sub-square offsets and the hat restricted to them
    nodes, weights = [], []
    for ox in (-1.0, 0.0):
        for oy in (-1.0, 0.0):
            X, Y = np.meshgrid(ox + u, oy + u, indexing="ij")
            WX = np.outer(wu, wu)
            nodes.append(np.stack([X.ravel(), Y.ravel()], axis=1))
            weights.append((WX * (1 - np.abs(X)) * (1 - np.abs(Y))).ravel())
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    k = np.arange(kmax + 1, dtype=float)
    for i in range(kmax + 1):
        z1 = k[i] + nodes[:, 0]
        z2 = k[None, :] + nodes[:, 1][:, None]
        r2 = z1[:, None] ** 2 + z2**2
        W[i, :] = weights @ (r2 ** (-1.0 - s))
    for k1 in range(min(kmax, 1) + 1):
        for k2 in range(min(kmax, 1) + 1):
            W[k1, k2] = _polar_cell_weight(s, k1, k2)
    W.setflags(write=False)
    return W


# ---------------------------------------------------------------------------
# grids and the discrete operator



def build_grid(domain: StarDomain, h: float) -> tuple[np.ndarray, tuple, np.ndarray]:
    """Origin, shape and interior mask of a grid with a node at the domain centre."""
    if not h > 0:
        raise DomainError("grid spacing must be positive")
    if domain.dimension == 1:
        a, b = domain.bounds
        N = int(round((b - a) / h))
        if abs(N * h - (b - a)) > 1e-9 * (b - a):
            raise DomainError(f"h={h} does not divide the interval length {b - a}")
        coords = a + h * np.arange(N + 1)
        mask = np.zeros(N + 1, dtype=bool)
        mask[1:-1] = True
        return np.array([a]), (N + 1,), mask
    c = domain.center
    K = int(math.ceil(domain.regularity["r_max"] / h)) + 1
    origin = c - K * h
    shape = (2 * K + 1, 2 * K + 1)
    axes = [origin[i] + h * np.arange(2 * K + 1) for i in range(2)]
    X, Y = np.meshgrid(*axes, indexing="ij")
    # nodes a rounding error inside the boundary count as boundary nodes
    mask = domain.contains(np.stack([X, Y], axis=-1), margin=BOUNDARY_SNAP * h)
    return origin, shape, mask


def _check_resolution(mask: np.ndarray) -> None:
    for ax in range(mask.ndim):
        across = int(np.max(np.sum(mask, axis=ax)))
        if across < MIN_NODES_ACROSS:
            raise ResolutionError(
                f"only {across} interior nodes across axis {1 - ax if mask.ndim == 2 else 0}; "
                f"need at least {MIN_NODES_ACROSS}"
            )


class FracLapOperator:
    """Discrete ``(-Delta)^s`` on the masked nodes of a uniform grid.

    ``correction`` (2D only) switches the boundary band to the weighted basis;
    without it the operator is the plain translation-invariant scheme.
    """

    def __init__(self, mask: np.ndarray, h: float, params: FracParams,
                 correction: BandCorrection | None = None):
        self.mask = np.asarray(mask, dtype=bool)
        self.h = float(h)
        self.params = params
        self.n = self.mask.ndim
        if self.n != params.n:
            raise DomainError("grid dimension and params.n differ")
        self.index = np.argwhere(self.mask)
        self.size = len(self.index)
        self.correction = correction
        self._dense = None
        s, c = params.s, params.c_ns
        scale = c * self.h ** (-2.0 * s)
        self._scale = scale
        if self.n == 1:
            kmax = self.mask.shape[0]
            J = hat_weights_1d(s, kmax)
            near = 1.0 / (2.0 - 2.0 * s)
            self._diag = scale * (1.0 / s + 2.0 * near)
            self._kernel = np.concatenate([J[:0:-1], [0.0], J[1:]]).copy()
            self._kernel[kmax - 1] += near
            self._kernel[kmax + 1] += near
            self._dense = scale * closed_matrix_1d(self.size, s, self._kernel, kmax, 1.0 / s + 2.0 * near)
            self._kernel *= scale
        else:
            kmax = max(self.mask.shape)
            W = bilinear_weights_2d(s, kmax)
            near = math.pi / (2.0 * (2.0 - 2.0 * s))
            self._diag = scale * (math.pi / s - W[0, 0] + 4.0 * near)
            full = np.zeros((2 * kmax + 1, 2 * kmax + 1))
            full[kmax:, kmax:] = W
            full[:kmax + 1, kmax:] = W[::-1, :]
            full[kmax:, :kmax + 1] = W[:, ::-1]
            full[:kmax + 1, :kmax + 1] = W[::-1, ::-1]
            full[kmax, kmax] = 0.0
            for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                full[kmax + d[0], kmax + d[1]] += near
            self._kernel = scale * full
        self._kmax = kmax
        self._factor = None

    @property
    def symmetric(self) -> bool:
        return self.n == 2 and self.correction is None

    @property
    def diagonal(self) -> np.ndarray:
        if self._dense is not None:
            return np.diag(self._dense).copy()
        d = np.full(self.size, self._diag)
        if self.correction is not None:
            corr = self.correction
            d += self._scale * corr.local.diagonal()
            d[corr.band] += self._scale * corr.far[corr.band, np.arange(len(corr.band))]
        return d

    def _scatter(self, u: np.ndarray) -> np.ndarray:
        full = np.zeros(self.mask.shape)
        full[self.mask] = u
        return full

    def matvec(self, u) -> np.ndarray:
        """Apply the operator to interior values (exterior values are zero)."""
        u = np.asarray(u, dtype=float)
        if self._dense is not None:
            return self._dense @ u
        full = self._scatter(u)
        conv = fftconvolve(full, self._kernel, mode="same")
        out = self._diag * u - conv[self.mask]
        if self.correction is not None:
            out += self._scale * self.correction.matvec(u)
        return out

    def dense(self) -> np.ndarray:
        if self._dense is None:
            idx = self.index
            A = np.empty((self.size, self.size))
            K = self._kmax
            for start in range(0, self.size, 512):
                block = idx[start:start + 512]
                off = idx[None, :, :] - block[:, None, :] + K
                A[start:start + 512] = -self._kernel[tuple(np.moveaxis(off, -1, 0))]
            A[np.diag_indices(self.size)] = self._diag
            if self.correction is not None:
                self.correction.add_to(A, self._scale)
            self._dense = A
        return self._dense

    def _factorised(self):
        if self._factor is None:
            if self.symmetric:
                self._factor = ("cho", linalg.cho_factor(self.dense(), lower=False, check_finite=False))
            else:
                self._factor = ("lu", linalg.lu_factor(self.dense(), check_finite=False))
        return self._factor

    def solve(self, rhs, shift: float = 0.0, rtol: float = 1e-12) -> np.ndarray:
        """Solve ``(A - shift I) u = rhs``.

        Dense factorisation up to ``DENSE_LIMIT`` unknowns (and always in 1D),
        otherwise a Jacobi-preconditioned Krylov iteration on the FFT matvec.
        """
        rhs = np.asarray(rhs, dtype=float)
        if self.size <= DENSE_LIMIT or self.n == 1:
            if shift == 0.0:
                kind, fac = self._factorised()
                if kind == "cho":
                    return linalg.cho_solve(fac, rhs, check_finite=False)
                return linalg.lu_solve(fac, rhs, check_finite=False)
            M = self.dense() - shift * np.eye(self.size)
            return linalg.solve(M, rhs, assume_a="sym" if self.symmetric else "gen", check_finite=False)
        op = LinearOperator((self.size, self.size), matvec=lambda v: self.matvec(v) - shift * v)
        pre = 1.0 / (self.diagonal - shift)
        M = LinearOperator((self.size, self.size), matvec=lambda v: pre * v)
        x, info = bicgstab(op, rhs, rtol=rtol, atol=0.0, M=M, maxiter=20 * self.size)
        if info != 0:
            raise NonConvergenceError(f"Krylov iteration stopped with info={info}")
        return x

    def lambda1(self, rtol: float = 1e-8, maxiter: int = 500) -> tuple[float, np.ndarray]:
        """Smallest eigenvalue and unit eigenvector by inverse power iteration.

        The Rayleigh quotient ``w^T A w`` of a unit right eigenvector equals its
        eigenvalue, so the estimate is exact at convergence in 1D as well.
        """
        v = np.ones(self.size) / math.sqrt(self.size)
        lam = None
        for _ in range(maxiter):
            w = self.solve(v)
            w /= np.linalg.norm(w)
            new = float(w @ self.matvec(w))
            if lam is not None and abs(new - lam) <= rtol * abs(new):
                return new, w
            v, lam = w, new
        raise IterationStallError(f"inverse iteration did not reach rtol={rtol} in {maxiter} steps")


# ---------------------------------------------------------------------------
# public solver API


def _grid_for(domain: StarDomain, params: FracParams, h: float):
    if domain.dimension != params.n:
        raise DomainError("domain dimension and params.n differ")
    origin, shape, mask = build_grid(domain, h)
    _check_resolution(mask)
    return origin, shape, mask


@lru_cache(maxsize=8)
def _cached_operator(domain_key: str, h: float, params: FracParams, closure: bool):
    domain = StarDomain.from_json(domain_key)
    origin, shape, mask = _grid_for(domain, params, h)
    correction = None
    if closure and domain.dimension == 2:
        correction = band_correction_2d(mask, origin, h, domain, params.s)
    return origin, mask, FracLapOperator(mask, h, params, correction)


def operator_for(domain: StarDomain, params: FracParams, h: float, closure: bool = True):
    """Grid origin, interior mask and the (cached) operator for ``domain``."""
    return _cached_operator(domain.to_json(), float(h), params, bool(closure))


def solve_dirichlet(domain: StarDomain, f: ReactionSpec, params: FracParams, h: float) -> GridField:
    """Nodal solution of ``(-Delta)^s u = f(u)`` with zero exterior values.

    Raises
    ------
    ResolutionError
        Fewer than ``MIN_NODES_ACROSS`` interior nodes across an axis.
    SpectralError
        ``c1`` is not below the first discrete eigenvalue.
    """
    origin, mask, op = operator_for(domain, params, h)
    if f.c1 > 0:
        lam, _ = op.lambda1()
        if f.c1 >= lam:
            raise SpectralError(f"c1={f.c1} is not below the discrete first eigenvalue {lam}")
    u = op.solve(np.full(op.size, f.c0), shift=f.c1)
    values = np.zeros(mask.shape)
    values[mask] = u
    return GridField(origin, float(h), values, mask, params, domain)


def eigen_lambda1(domain: StarDomain, params: FracParams, h: float, rtol: float = 1e-8):
    """First discrete Dirichlet eigenvalue of the operator on ``domain``."""
    _, _, op = operator_for(domain, params, h)
    return op.lambda1(rtol=rtol)[0]


def eigen_pair(domain: StarDomain, params: FracParams, h: float, rtol: float = 1e-8):
    """First eigenvalue and its eigenfunction as a ``GridField`` with unit ``h^n``-weighted norm."""
    origin, mask, op = operator_for(domain, params, h)
    lam, vec = op.lambda1(rtol=rtol)
    values = np.zeros(mask.shape)
    values[mask] = vec * np.sign(vec.sum()) / h ** (0.5 * params.n)
    return lam, GridField(origin, float(h), values, mask, params, domain)


def discrete_energy(u: GridField, v: GridField) -> float:
    """``h^n u^T A v``: the bilinear form paired with the collocation operator."""
    if u.shape != v.shape or u.h != v.h or not np.array_equal(u.mask, v.mask):
        raise DomainError("fields live on different grids")
    if u.domain is not None:
        _, _, op = operator_for(u.domain, u.params, u.h)
    else:
        op = FracLapOperator(u.mask, u.h, u.params)
    a = u.values[u.mask]
    b = v.values[v.mask]
    return 0.5 * u.h**u.n * float(a @ op.matvec(b) + b @ op.matvec(a))


# ---------------------------------------------------------------------------
# boundary post-processing


def _boundary_normal(domain: StarDomain, pt) -> tuple[np.ndarray, np.ndarray]:
    pt = np.atleast_1d(np.asarray(pt, dtype=float))
    if domain.dimension == 1:
        a, b = domain.bounds
        nu = np.array([1.0 if abs(pt[0] - b) <= abs(pt[0] - a) else -1.0])
        return np.array([b if nu[0] > 0 else a]), nu
    d = pt - domain.center
    th = math.atan2(d[1], d[0])
    return domain.boundary_point(th), domain.outward_normal(th)


def _fit_times(h: float, window=(2.0, 16.0), samples: int = 12) -> np.ndarray:
    return h * np.geomspace(window[0], window[1], samples)


def frac_normal_derivative(
    u: GridField, domain: StarDomain, boundary_pt, window=(2.0, 16.0), samples: int = 12,
    full: bool = False,
):
    """``alpha`` from the least-squares fit ``u(p - t nu) ~ alpha t^s + beta t^(1+s)``.

    Raises
    ------
    IllConditionedFitError
        If the fit window reaches past half the interior sphere radius or the
        design matrix is numerically singular.
    """
    from .geometry import inner_sphere_radius

    p, nu = _boundary_normal(domain, boundary_pt)
    t = _fit_times(u.h, window, samples)
    # relative slack absorbs the sampling error of the radius estimate
    if t[-1] > 0.5 * inner_sphere_radius(domain) * (1.0 + 1e-6):
        raise IllConditionedFitError(
            f"fit window {t[-1]:.3g} exceeds half the interior sphere radius; refine the grid"
        )
    s = u.params.s
    design = np.stack([t**s, t ** (1.0 + s)], axis=1)
    if np.linalg.cond(design) > 1e10:
        raise IllConditionedFitError("fit design matrix is numerically singular")
    vals = u.interpolate(p[None, :] - t[:, None] * nu[None, :], quotient=True)
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - vals) ** 2)))
    if full:
        return float(coef[0]), float(coef[1]), resid
    return float(coef[0])


def boundary_trace(
    u: GridField, domain: StarDomain, m: int = 128, window=(2.0, 16.0), samples: int = 12,
    modes: int | None = None,
) -> BoundaryTrace:
    """Fractional normal derivative at ``m`` equispaced boundary angles.

    With ``modes`` set, all samples are fitted at once by
    ``u / t^s ~ sum_k (alpha_k + beta_k t) F_k(theta)`` with Fourier modes
    ``F_k`` up to that order, which filters grid-scale oscillation out of the
    trace.  ``residuals`` holds the per-point RMS misfit.
    """
    if domain.dimension == 1:
        a, b = domain.bounds
        pts = np.array([[a], [b]])
        out = [frac_normal_derivative(u, domain, p, window, samples, full=True) for p in pts]
        return BoundaryTrace(pts, np.array([[-1.0], [1.0]]), np.array([o[0] for o in out]),
                             np.array([o[2] for o in out]))
    th = np.arange(m) * (2.0 * math.pi / m)
    pts = domain.boundary_point(th)
    nus = domain.outward_normal(th)
    if modes is None:
        out = [frac_normal_derivative(u, domain, p, window, samples, full=True) for p in pts]
        return BoundaryTrace(pts, nus, np.array([o[0] for o in out]), np.array([o[2] for o in out]))
    from .geometry import inner_sphere_radius

    t = _fit_times(u.h, window, samples)
    # relative slack absorbs the sampling error of the radius estimate
    if t[-1] > 0.5 * inner_sphere_radius(domain) * (1.0 + 1e-6):
        raise IllConditionedFitError("fit window exceeds half the interior sphere radius")
    s = u.params.s
    basis = [np.ones_like(th)]
    for k in range(1, modes + 1):
        basis += [np.cos(k * th), np.sin(k * th)]
    F = np.stack(basis, axis=1)  # m x nb
    nb = F.shape[1]
    sample_pts = pts[:, None, :] - t[None, :, None] * nus[:, None, :]
    vals = u.interpolate(sample_pts, quotient=True)  # m x samples
    rows = []
    for j, tj in enumerate(t):
        rows.append(np.concatenate([F * tj**s, F * tj ** (1.0 + s)], axis=1))
    design = np.stack(rows, axis=1).reshape(-1, 2 * nb)
    rhs = vals.reshape(-1)
    if np.linalg.cond(design) > 1e10:
        raise IllConditionedFitError("trace fit design matrix is numerically singular")
    coef, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    fitted = (design @ coef).reshape(vals.shape)
    resid = np.sqrt(np.mean((fitted - vals) ** 2, axis=1))
    return BoundaryTrace(pts, nus, F @ coef[:nb], resid)


def lipschitz_seminorm(trace: BoundaryTrace) -> float:
    """Largest difference quotient over all pairs of trace points."""
    pts = np.asarray(trace.points, dtype=float)
    vals = np.asarray(trace.values, dtype=float)
    if len(vals) < 2:
        raise DomainError("need at least two boundary points")
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    diff = np.abs(vals[:, None] - vals[None, :])
    off = dist > 0
    return float(np.max(np.where(off, diff / np.where(off, dist, 1.0), 0.0)))


# ---------------------------------------------------------------------------
# moving-plane fields


def antisymmetric_difference(u: GridField, plane: Hyperplane) -> GridField:
    """``v(x) = u(x) - u(x')`` at every node, ``x'`` the mirror image of ``x``."""
    x = u.coords()
    refl = reflect_point(x, plane)
    return u.with_values(u.values - u.interpolate(refl, weighted=True))


def c_mu_field(u: GridField, plane: Hyperplane, f: ReactionSpec, threshold: float | None = None) -> GridField:
    """``-(f(u) - f(u')) / (u - u')`` where ``|u - u'|`` exceeds ``threshold``, else 0."""
    x = u.coords()
    mirrored = u.interpolate(reflect_point(x, plane), weighted=True)
    diff = u.values - mirrored
    if threshold is None:
        # reflected nodes land on grid points only up to rounding, which the
        # interpolant amplifies to ~1e-12; treat such gaps as equal values
        threshold = 1e-9 * max(1.0, float(np.max(np.abs(u.values))))
    big = np.abs(diff) > threshold
    out = np.zeros_like(diff)
    out[big] = -f.difference(u.values[big], mirrored[big]) / diff[big]
    return u.with_values(out)
