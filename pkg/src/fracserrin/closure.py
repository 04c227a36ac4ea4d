"""Boundary-layer closures for the collocation operator.

Near the boundary the solution behaves like ``d^s`` and a piecewise linear or
bilinear interpolant of nodal values is inconsistent there.  Within a band
of nodes next to the boundary the interpolant is replaced by ``omega * w``,
where ``omega`` is a weight vanishing like ``d^s`` and ``w`` interpolates
``u / omega``.  The routines here return the resulting corrections to the
translation-invariant operator, in units where the grid spacing is one.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.special import roots_jacobi

__all__ = ["closed_matrix_1d", "BandCorrection", "band_correction_2d", "CLOSURE_NODES", "BAND_WIDTH"]

CLOSURE_NODES = 16
BAND_WIDTH = 6
# cell pairs closer than this (Chebyshev distance in cells) get the refined rule
NEAR_CELLS = 4


@lru_cache(maxsize=None)
def _gauss_legendre01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _gauss_jacobi01(order: int, alpha: float, beta: float):
    """Nodes and weights on ``[0, 1]`` for the weight ``(1 - x)^alpha x^beta``."""
    x, w = roots_jacobi(order, alpha, beta)
    x, w = 0.5 * (x + 1.0), w * 0.5 ** (1.0 + alpha + beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


# ---------------------------------------------------------------------------
# one dimension: weights (x / x_j)^s at both ends of an interval


def _closure_basis(s: float, m: int, j: int, k: int, x):
    """Smooth factor ``P`` with ``b_j = x^s P`` on cell ``[k, k+1]``."""
    if k == 0:
        if j == 1:
            return 2.0 - x
        if j == 2:
            return -(1.0 - x) / 2.0**s
        return 0.0 * x
    if k not in (j - 1, j):
        return 0.0 * x
    hat = np.maximum(0.0, 1.0 - np.abs(x - j))
    return hat / j**s if k <= m - 1 else hat / x**s


@lru_cache(maxsize=32)
def _closure_far_1d(s: float, m: int, nrows: int) -> np.ndarray:
    """Far-field weights of the weighted left columns.

    Entry ``[i - 1, j]`` integrates ``b_j(y) |i - y|^{-1-2s}`` over the cells of
    ``b_j`` not adjacent to node ``i``.  On ``[0, 1]`` the ratio ``u / x^s`` is
    extrapolated linearly from nodes 1 and 2.
    """
    order = 24
    xg, wg = _gauss_legendre01(order)
    xj, wj = _gauss_jacobi01(order, 0.0, s)
    rows = np.arange(1, nrows + 1, dtype=float)
    F = np.zeros((nrows, m + 1))
    for j in range(1, m + 1):
        cells = sorted(({0} if j <= 2 else set()) | {k for k in (j - 1, j) if k >= 1})
        for k in cells:
            if k == 0:
                x, w, val = xj, wj, _closure_basis(s, m, j, 0, xj)
            else:
                x, w = k + xg, wg
                val = x**s * _closure_basis(s, m, j, k, x)
            contrib = (w * val)[None, :] * np.abs(x[None, :] - rows[:, None]) ** (-1.0 - 2.0 * s)
            contrib[(rows == k) | (rows == k + 1)] = 0.0
            F[:, j] += contrib.sum(axis=1)
    return F


@lru_cache(maxsize=256)
def _closure_near_1d(s: float, i: int) -> tuple:
    """Weights ``(node, a)`` with near field ``sum a u_node`` at node ``i``.

    The local model is ``x^s q(x)``, ``q`` the quadratic interpolating ``u / x^s``
    at ``i - 1, i, i + 1`` (linear through nodes 1 and 2 when ``i = 1``), and
    its second difference is integrated exactly over ``|z| < 1``.
    """
    nodes = [1.0, 2.0] if i == 1 else [i - 1.0, float(i), i + 1.0]
    za, wa = _gauss_jacobi01(40, 0.0, 1.0 - 2.0 * s)
    xg, wg = np.polynomial.legendre.leggauss(40)
    xc, wc = _gauss_jacobi01(40, s, 0.0)
    out = []
    for a in nodes:
        others = [b for b in nodes if b != a]

        def lag(x, a=a, others=others):
            return np.prod([(x - b) / (a - b) for b in others], axis=0)

        def g(x, lag=lag):
            return np.maximum(x, 0.0) ** s * lag(x)

        if i >= 2:
            val = np.sum(wa * (2 * g(i) - g(i + za) - g(i - za)) / za**2)
        else:
            z = 0.5 * za
            val = np.sum(wa * 0.5 ** (2 - 2 * s) * (2 * g(1.0) - g(1 + z) - g(1 - z)) / z**2)
            z = 0.75 + 0.25 * xg
            val += np.sum(0.25 * wg * (2 * g(1.0) - g(1 + z)) * z ** (-1 - 2 * s))
            # on [1/2, 1] the point 1 - z approaches the endpoint: weight (1 - z)^s
            z = 0.5 + 0.5 * xc
            val -= np.sum(wc * 0.5 ** (1 + s) * lag(1 - z) * z ** (-1 - 2 * s))
        out.append((int(a), float(val) / a**s))
    return tuple(out)


def closed_matrix_1d(n: int, s: float, kernel: np.ndarray, kmax: int, diag: float) -> np.ndarray:
    """Dense unit-spacing 1D matrix with the weighted closure at both ends."""
    idx = np.arange(n)
    A = -kernel[idx[None, :] - idx[:, None] + kmax]
    A[idx, idx] = diag
    m = min(CLOSURE_NODES, (n - 2) // 2)
    near = 1.0 / (2.0 - 2.0 * s)
    F = _closure_far_1d(s, m, n)
    for j in range(1, m + 1):
        col = -F[:, j].copy()
        col[j - 1] += 1.0 / s
        for i in (j - 1, j + 1):
            if m < i <= n:
                col[i - 1] -= near
        A[:, j - 1] = col
        A[::-1, n - j] = col
    for i in range(1, m + 1):
        for jj, v in ((i, 2 * near), (i - 1, -near), (i + 1, -near)):
            if m < jj <= n:
                A[i - 1, jj - 1] -= v
        for a, v in _closure_near_1d(s, i):
            A[i - 1, a - 1] += v
        A[n - i, :] = A[i - 1, ::-1]
    return A


# ---------------------------------------------------------------------------
# two dimensions: weight (radial gap)_+^s in a band of cells


class _Geometry:
    """Radial gap of a star domain in grid-index coordinates (spacing one)."""

    def __init__(self, domain, origin, h: float, s: float):
        self.domain = domain
        self.origin = np.asarray(origin, dtype=float)
        self.h = float(h)
        self.s = s

    def gap(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return -self.domain.radial_gap(self.origin + self.h * y) / self.h

    def omega(self, y) -> np.ndarray:
        return np.maximum(self.gap(y), 0.0) ** self.s

    def crossing(self, p, d, lo, hi, iters: int = 60) -> np.ndarray:
        """Root of the gap on ``p + r d`` for ``r`` in ``[lo, hi]``; assumes a sign change."""
        lo = np.broadcast_to(np.asarray(lo, dtype=float), p.shape[:-1]).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), p.shape[:-1]).copy()
        glo = self.gap(p + lo[..., None] * d)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            gm = self.gap(p + mid[..., None] * d)
            same = np.sign(gm) == np.sign(glo)
            lo = np.where(same, mid, lo)
            glo = np.where(same, gm, glo)
            hi = np.where(same, hi, mid)
        return 0.5 * (lo + hi)


def _edge_roots(geo: _Geometry, a, b, samples: int = 17) -> list[float]:
    """Parameters in ``(0, 1)`` where the gap changes sign on the segment ``a -> b``."""
    t = np.linspace(0.0, 1.0, samples)
    g = geo.gap(a[None, :] + t[:, None] * (b - a)[None, :])
    roots = []
    for k in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]:
        r = geo.crossing(a[None, :], (b - a)[None, :], t[k], t[k + 1])[0]
        roots.append(float(r))
    return roots


def _uncut_rule(geo: _Geometry, corner, size: float, order: int):
    x, w = _gauss_legendre01(order)
    X, Y = np.meshgrid(corner[0] + size * x, corner[1] + size * x, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    wts = np.outer(w, w).ravel() * size * size
    return pts, wts * geo.omega(pts)


def _cut_rule(geo: _Geometry, corner, size: float, n_outer: int, n_inner: int):
    """Points and ``omega``-weighted weights for ``int_square omega F``.

    The inner integration runs along the axis on which the gap varies most,
    ending at the boundary with a Gauss-Jacobi rule carrying the ``dist^s``
    factor; the outer one is split where the boundary meets the square's edges.
    """
    s = geo.s
    c = np.asarray(corner, dtype=float)
    mid = c + 0.5 * size
    eps = 1e-3 * size
    grad = np.array([
        geo.gap(mid + [eps, 0.0]) - geo.gap(mid - [eps, 0.0]),
        geo.gap(mid + [0.0, eps]) - geo.gap(mid - [0.0, eps]),
    ])
    inner = int(np.argmax(np.abs(grad)))
    outer = 1 - inner
    e_in = np.eye(2)[inner]
    e_out = np.eye(2)[outer]
    brk = {0.0, 1.0}
    for v in (0.0, 1.0):
        a = c + v * size * e_in
        brk.update(_edge_roots(geo, a, a + size * e_out))
    brk = sorted(brk)
    xo, wo = _gauss_legendre01(n_outer)
    xg, wg = _gauss_legendre01(n_inner)
    xj, wj = _gauss_jacobi01(n_inner, s, 0.0)  # weight (1 - x)^s
    pts_all, wts_all = [], []
    for t0, t1 in zip(brk[:-1], brk[1:]):
        if t1 - t0 < 1e-14:
            continue
        t = (t0 + (t1 - t0) * xo) * size
        wt = (t1 - t0) * wo * size
        base = c[None, :] + t[:, None] * e_out[None, :]
        g0 = geo.gap(base)
        g1 = geo.gap(base + size * e_in)
        full = (g0 >= 0) & (g1 >= 0)
        part = (g0 >= 0) != (g1 >= 0)
        if np.any(full):
            b = base[full]
            p = b[:, None, :] + (size * xg)[None, :, None] * e_in[None, None, :]
            wts = wt[full][:, None] * (size * wg)[None, :] * geo.omega(p)
            pts_all.append(p.reshape(-1, 2))
            wts_all.append(wts.ravel())
        if np.any(part):
            b = base[part]
            vstar = geo.crossing(b, np.broadcast_to(e_in, b.shape), 0.0, size)
            inside_low = g0[part] >= 0
            # length of the inside piece, and the direction from the crossing into it
            length = np.where(inside_low, vstar, size - vstar)
            sgn = np.where(inside_low, -1.0, 1.0)
            v = vstar[:, None] + sgn[:, None] * length[:, None] * (1.0 - xj)[None, :]
            p = b[:, None, :] + v[..., None] * e_in[None, None, :]
            dist = np.abs(v - vstar[:, None])
            ratio = np.maximum(geo.gap(p), 0.0) / np.maximum(dist, 1e-300)
            wts = wt[part][:, None] * wj[None, :] * length[:, None] ** (1.0 + s) * ratio**s
            pts_all.append(p.reshape(-1, 2))
            wts_all.append(wts.ravel())
    if not pts_all:
        return np.zeros((0, 2)), np.zeros(0)
    return np.concatenate(pts_all), np.concatenate(wts_all)


def _square_is_cut(geo: _Geometry, corner, size: float, samples: int = 5) -> bool:
    t = np.linspace(0.0, size, samples)
    X, Y = np.meshgrid(corner[0] + t, corner[1] + t, indexing="ij")
    return bool(np.min(geo.gap(np.stack([X, Y], axis=-1))) < 0.0)


def _cell_model_rule(geo: _Geometry, cell, sub: int, order: int, n_outer: int, n_inner: int):
    """``omega``-weighted rule on a unit cell, split into ``sub x sub`` squares."""
    size = 1.0 / sub
    pts, wts = [], []
    for a in range(sub):
        for b in range(sub):
            corner = (cell[0] + a * size, cell[1] + b * size)
            if _square_is_cut(geo, corner, size):
                p, w = _cut_rule(geo, corner, size, n_outer, n_inner)
            else:
                p, w = _uncut_rule(geo, corner, size, order)
            pts.append(p)
            wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def _plain_rule(cell, sub: int, order: int):
    x, w = _gauss_legendre01(order)
    size = 1.0 / sub
    t = (np.arange(sub)[:, None] + x[None, :]).ravel() * size
    wt = np.tile(w, sub) * size
    X, Y = np.meshgrid(cell[0] + t, cell[1] + t, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1), np.outer(wt, wt).ravel()


def _bilinear(cell, pts) -> np.ndarray:
    """Values of the four corner hats of ``cell`` at ``pts``; corners ordered 00, 10, 01, 11."""
    fx = pts[:, 0] - cell[0]
    fy = pts[:, 1] - cell[1]
    return np.stack([(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy], axis=1)


class BandCorrection:
    """Unit-spacing correction ``far[:, band] + local`` to the plain 2D operator."""

    def __init__(self, band: np.ndarray, far: np.ndarray, local):
        self.band = band
        self.far = far
        self.local = local

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.far @ u[self.band] + self.local @ u

    def add_to(self, dense: np.ndarray, scale: float) -> None:
        dense[:, self.band] += scale * self.far
        dense += scale * self.local.toarray()


def _ghost_extrapolation(mask, ghosts, node_id, radius: int = 2):
    """Rows ``{interior id: coeff}`` reproducing linear functions at each ghost node."""
    n1, n2 = mask.shape
    out = {}
    for g in ghosts:
        for r in (radius, radius + 1, radius + 2):
            lo1, hi1 = max(g[0] - r, 0), min(g[0] + r, n1 - 1)
            lo2, hi2 = max(g[1] - r, 0), min(g[1] + r, n2 - 1)
            sub = np.argwhere(mask[lo1:hi1 + 1, lo2:hi2 + 1]) + [lo1, lo2]
            if len(sub) >= 3:
                d = sub - np.asarray(g)
                M = np.column_stack([np.ones(len(d)), d])
                if np.linalg.matrix_rank(M) == 3:
                    coef = np.linalg.pinv(M)[0]
                    out[g] = {node_id[tuple(q)]: float(c) for q, c in zip(sub, coef)}
                    break
        else:
            raise ValueError(f"cannot extrapolate to ghost node {g}")
    return out


_STENCIL = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]


def _stencil_lagrange(z: np.ndarray) -> np.ndarray:
    """Local quadratic from the 3x3 stencil, as weights on the nine nodes (``z`` shape (..., 2))."""
    z1, z2 = z[..., 0], z[..., 1]
    L = {
        (0, 0): 1.0 - z1**2 - z2**2,
        (1, 0): 0.5 * z1 + 0.5 * z1**2,
        (-1, 0): -0.5 * z1 + 0.5 * z1**2,
        (0, 1): 0.5 * z2 + 0.5 * z2**2,
        (0, -1): -0.5 * z2 + 0.5 * z2**2,
        (1, 1): 0.25 * z1 * z2,
        (-1, -1): 0.25 * z1 * z2,
        (1, -1): -0.25 * z1 * z2,
        (-1, 1): -0.25 * z1 * z2,
    }
    return np.stack([L[o] * np.ones_like(z1) for o in _STENCIL], axis=-1)


def _near_model(geo: _Geometry, centers: np.ndarray, n_theta: int = 8, panels: int = 4):
    """``int_0^pi int_0^1 (2u(x) - u(x + r e) - u(x - r e)) r^{-1-2s} dr dtheta``
    for ``u = omega q``, returned as weights on the nine stencil values of ``q``.
    """
    s = geo.s
    xt, wt = _gauss_legendre01(n_theta)
    th = ((np.arange(panels)[:, None] + xt[None, :]).ravel()) * math.pi / panels
    wth = np.tile(wt, panels) * math.pi / panels
    d = np.stack([np.cos(th), np.sin(th)], axis=1)  # (T, 2)
    P = centers[:, None, :]  # (R, 1, 2)
    R, T = len(centers), len(th)
    # crossings on each side within [0, 1]
    rstar = {}
    for sgn in (1.0, -1.0):
        dd = np.broadcast_to(sgn * d[None], (R, T, 2))
        pp = np.broadcast_to(P, (R, T, 2))
        g1 = geo.gap(pp + dd)
        rs = np.full((R, T), np.inf)
        hit = g1 < 0
        if np.any(hit):
            rs[hit] = geo.crossing(pp[hit], dd[hit], 0.0, 1.0)
        rstar[sgn] = rs
    r_s = 0.5 * np.minimum(1.0, np.minimum(rstar[1.0], rstar[-1.0]))
    om0 = geo.omega(centers)  # (R,)
    L0 = _stencil_lagrange(np.zeros((1, 2)))[0]  # (9,)
    out = np.zeros((R, 9))
    # part A: [0, r_s] against r^{1-2s}, second difference over r^2
    xa, wa = _gauss_jacobi01(8, 0.0, 1.0 - 2.0 * s)
    r = r_s[..., None] * xa  # (R, T, A)
    z = r[..., None] * d[None, :, None, :]  # (R, T, A, 2)
    up = geo.omega(P[:, :, None, :] + z)[..., None] * _stencil_lagrange(z)
    um = geo.omega(P[:, :, None, :] - z)[..., None] * _stencil_lagrange(-z)
    D = (2.0 * om0[:, None, None, None] * L0 - up - um) / (r**2)[..., None]
    wA = (r_s ** (2.0 - 2.0 * s))[..., None] * wa
    out += np.einsum("rta,rtak,t->rk", wA, D, wth)
    # part B: constant term analytically, one-sided integrals numerically
    const = (r_s ** (-2.0 * s) - 1.0) / (2.0 * s)
    out += 2.0 * om0[:, None] * L0[None, :] * (const @ wth)[:, None]
    xe, we = _gauss_legendre01(6)
    te = (np.arange(6)[:, None] + xe[None, :]).ravel() / 6.0
    wte = np.tile(we, 6) / 6.0
    xj, wj = _gauss_jacobi01(8, s, 0.0)
    for sgn in (1.0, -1.0):
        rs = rstar[sgn]
        crossing = np.isfinite(rs)
        r_end = np.where(crossing, 0.5 * rs, 1.0)
        T_len = np.log(np.maximum(r_end / r_s, 1.0))
        rr = r_s[..., None] * np.exp(T_len[..., None] * te)  # (R, T, E)
        ww = T_len[..., None] * wte * rr ** (-2.0 * s)
        z = sgn * rr[..., None] * d[None, :, None, :]
        val = geo.omega(P[:, :, None, :] + z)[..., None] * _stencil_lagrange(z)
        out -= np.einsum("rte,rtek,t->rk", ww, val, wth)
        if np.any(crossing):
            rc = np.where(crossing, rs, 1.0)
            half = 0.5 * rc
            rr = rc[..., None] - half[..., None] * (1.0 - xj)  # from rc/2 to rc
            dist = rc[..., None] - rr
            z = sgn * rr[..., None] * d[None, :, None, :]
            ratio = np.maximum(geo.gap(P[:, :, None, :] + z), 0.0) / np.maximum(dist, 1e-300)
            ww = (half ** (1.0 + s))[..., None] * wj * ratio**s * rr ** (-1.0 - 2.0 * s)
            ww = np.where(crossing[..., None], ww, 0.0)
            val = _stencil_lagrange(z)
            out -= np.einsum("rte,rtek,t->rk", ww, val, wth)
    return out


def _adjacent_rays(geo: _Geometry, center, quadrant, weighted: bool, n_theta: int = 8, n_r: int = 8):
    """``int`` over the quadrant cell minus the unit disc of ``u r^{-1-2s}``, as weights
    on the cell's four corners (ordered 00, 10, 01, 11 relative to the cell)."""
    s = geo.s
    sx, sy = quadrant
    base = math.atan2(sy, sx) - math.pi / 4.0
    xt, wt = _gauss_legendre01(n_theta)
    out = np.zeros(4)
    xg, wg = _gauss_legendre01(n_r)
    xj, wj = _gauss_jacobi01(n_r, s, 0.0)
    cell = (center[0] + min(sx, 0), center[1] + min(sy, 0))
    for p in range(2):
        th = base + (p + xt) * math.pi / 4.0
        wth = wt * math.pi / 4.0
        d = np.stack([np.cos(th), np.sin(th)], axis=1)
        Rmax = 1.0 / np.maximum(np.abs(d[:, 0]), np.abs(d[:, 1]))
        if not weighted:
            r = 1.0 + (Rmax - 1.0)[:, None] * xg
            w = (Rmax - 1.0)[:, None] * wg * r ** (-1.0 - 2.0 * s)
            pts = center + r[..., None] * d[:, None, :]
            phi = _bilinear(cell, pts.reshape(-1, 2)).reshape(len(th), n_r, 4)
            out += np.einsum("te,tek,t->k", w, phi, wth)
            continue
        P = np.broadcast_to(np.asarray(center, dtype=float), d.shape)
        g1 = geo.gap(P + d)
        gR = geo.gap(P + Rmax[:, None] * d)
        full = (g1 >= 0) & (gR >= 0)
        part = (g1 >= 0) & (gR < 0)
        if np.any(full):
            dd, RR = d[full], Rmax[full]
            r = 1.0 + (RR - 1.0)[:, None] * xg
            pts = center + r[..., None] * dd[:, None, :]
            w = (RR - 1.0)[:, None] * wg * r ** (-1.0 - 2.0 * s) * geo.omega(pts)
            phi = _bilinear(cell, pts.reshape(-1, 2)).reshape(len(dd), n_r, 4)
            out += np.einsum("te,tek,t->k", w, phi, wth[full])
        if np.any(part):
            dd = d[part]
            rc = geo.crossing(P[part], dd, 1.0, Rmax[part])
            length = rc - 1.0
            r = rc[:, None] - length[:, None] * (1.0 - xj)
            pts = center + r[..., None] * dd[:, None, :]
            ratio = np.maximum(geo.gap(pts), 0.0) / np.maximum(rc[:, None] - r, 1e-300)
            w = length[:, None] ** (1.0 + s) * wj * ratio**s * r ** (-1.0 - 2.0 * s)
            phi = _bilinear(cell, pts.reshape(-1, 2)).reshape(len(dd), n_r, 4)
            out += np.einsum("te,tek,t->k", w, phi, wth[part])
    return out


def band_correction_2d(mask: np.ndarray, origin, h: float, domain, s: float,
                       width: int = BAND_WIDTH) -> BandCorrection:
    """Corrections that switch the band next to the boundary to the weighted basis.

    Returned in units of ``c_{n,s} h^{-2s}``; rows and columns follow the
    row-major order of the interior nodes.
    """
    geo = _Geometry(domain, origin, h, s)
    n1, n2 = mask.shape
    index = np.argwhere(mask)
    size = len(index)
    node_id = {tuple(p): k for k, p in enumerate(index)}
    omega_nodes = geo.omega(index.astype(float))
    in_band = geo.gap(index.astype(float)) < width
    band = np.nonzero(in_band)[0]
    band_pos = {int(b): k for k, b in enumerate(band)}

    # weighted cells: every interior corner in the band, at least one interior corner
    weighted, ghosts = [], set()
    for k1 in range(n1 - 1):
        for k2 in range(n2 - 1):
            corners = [(k1, k2), (k1 + 1, k2), (k1, k2 + 1), (k1 + 1, k2 + 1)]
            ids = [node_id.get(c) for c in corners]
            if all(i is None for i in ids):
                continue
            if any(i is not None and not in_band[i] for i in ids):
                continue
            weighted.append((k1, k2))
            ghosts.update(c for c, i in zip(corners, ids) if i is None)
    extrap = _ghost_extrapolation(mask, sorted(ghosts), node_id)

    def w_to_u(node) -> dict:
        """``w`` at a grid node as a combination of interior ``u`` values."""
        i = node_id.get(tuple(node))
        if i is not None:
            return {i: 1.0 / omega_nodes[i]}
        return {j: c / omega_nodes[j] for j, c in extrap[tuple(node)].items()}

    def cell_columns(cell):
        """Model corner -> band column map (4 x nb sparse rows) and plain corner ids."""
        rows = []
        plain = []
        for c in ((0, 0), (1, 0), (0, 1), (1, 1)):
            node = (cell[0] + c[0], cell[1] + c[1])
            rows.append(w_to_u(node))
            plain.append(node_id.get(node))
        return rows, plain

    nb = len(band)
    rows_f = index.astype(float)

    # far field of every weighted cell: a coarse rule for all rows, replaced by
    # a refined rule for rows within NEAR_CELLS cells and dropped for adjacent rows
    pts_all, trip_r, trip_c, trip_v = [], [], [], []
    npts = 0
    near_jobs = []
    for cell in weighted:
        cm, cp = cell_columns(cell)
        cols = sorted({band_pos[j] for dct in cm for j in dct} | {band_pos[j] for j in cp if j is not None})
        cpos = {c: k for k, c in enumerate(cols)}
        M = np.zeros((4, len(cols)))
        Pm = np.zeros((4, len(cols)))
        for k, dct in enumerate(cm):
            for j, v in dct.items():
                M[k, cpos[band_pos[j]]] += v
            if cp[k] is not None:
                Pm[k, cpos[band_pos[cp[k]]]] += 1.0
        pts_m, w_m = _cell_model_rule(geo, cell, 1, 3, 4, 5)
        pts_p, w_p = _plain_rule(cell, 1, 3)
        pts = np.concatenate([pts_m, pts_p])
        B = np.concatenate([(w_m[:, None] * _bilinear(cell, pts_m)) @ M,
                            -(w_p[:, None] * _bilinear(cell, pts_p)) @ Pm])
        rr, cc = np.nonzero(B)
        trip_r.append(rr + npts)
        trip_c.append(np.asarray(cols)[cc])
        trip_v.append(B[rr, cc])
        pts_all.append(pts)
        npts += len(pts)
        near_jobs.append((cell, cols, M, Pm, pts, B))
    far = np.zeros((size, nb))
    if near_jobs:
        pts_all = np.concatenate(pts_all)
        coef = sparse.csc_matrix(
            (np.concatenate(trip_v), (np.concatenate(trip_r), np.concatenate(trip_c))), shape=(npts, nb)
        )
        for start in range(0, size, 256):
            Kc = _kernel(rows_f[start:start + 256], pts_all, s)
            far[start:start + 256] = -(coef.T @ Kc.T).T
    for cell, cols, M, Pm, pts, B in near_jobs:
        lo = np.maximum(np.asarray(cell) - NEAR_CELLS + 1, 0)
        hi = np.asarray(cell) + NEAR_CELLS + 1
        sel = np.nonzero(np.all((index >= lo) & (index <= hi), axis=1))[0]
        if len(sel) == 0:
            continue
        rsel = rows_f[sel]
        dx = np.maximum(np.maximum(cell[0] - rsel[:, 0], rsel[:, 0] - cell[0] - 1.0), 0.0)
        dy = np.maximum(np.maximum(cell[1] - rsel[:, 1], rsel[:, 1] - cell[1] - 1.0), 0.0)
        dist = np.maximum(dx, dy)
        sel, dist = sel[dist < NEAR_CELLS], dist[dist < NEAR_CELLS]
        if len(sel) == 0:
            continue
        block = _kernel(rows_f[sel], pts, s) @ B
        fine = dist >= 1
        if np.any(fine):
            fm, fw = _cell_model_rule(geo, cell, 4, 3, 3, 4)
            pp, pw = _plain_rule(cell, 4, 3)
            Bf = np.concatenate([(fw[:, None] * _bilinear(cell, fm)) @ M,
                                 -(pw[:, None] * _bilinear(cell, pp)) @ Pm])
            block[fine] -= _kernel(rows_f[sel[fine]], np.concatenate([fm, pp]), s) @ Bf
        far[np.ix_(sel, cols)] += block

    # local replacement for band rows: near disc and the four adjacent cells
    weighted_set = set(weighted)
    near = math.pi / (2.0 * (2.0 - 2.0 * s))
    li, lj, lv = [], [], []

    def add(i, dct, scale):
        for j, v in dct.items():
            li.append(i)
            lj.append(j)
            lv.append(scale * v)

    centers = rows_f[band]
    N = _near_model(geo, centers)
    for r, i in enumerate(band):
        p = tuple(index[i])
        # drop the finite-difference near field of the plain operator
        add(i, {i: -4.0 * near}, 1.0)
        for o in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            j = node_id.get((p[0] + o[0], p[1] + o[1]))
            if j is not None:
                add(i, {j: near}, 1.0)
        for k, o in enumerate(_STENCIL):
            add(i, w_to_u((p[0] + o[0], p[1] + o[1])), N[r, k])
        for q in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            cell = (p[0] + min(q[0], 0), p[1] + min(q[1], 0))
            if cell not in weighted_set:
                continue
            cm, cp = cell_columns(cell)
            wm = _adjacent_rays(geo, rows_f[i], q, True)
            wp = _adjacent_rays(geo, rows_f[i], q, False)
            for k in range(4):
                add(i, cm[k], -wm[k])
                if cp[k] is not None:
                    add(i, {cp[k]: 1.0}, wp[k])
    local = sparse.csr_matrix((lv, (li, lj)), shape=(size, size))
    return BandCorrection(band, far, local)


def _kernel(rows: np.ndarray, pts: np.ndarray, s: float) -> np.ndarray:
    d0 = rows[:, 0][:, None] - pts[:, 0][None, :]
    d1 = rows[:, 1][:, None] - pts[:, 1][None, :]
    return (d0 * d0 + d1 * d1) ** (-1.0 - s)
