"""Closed-form fractional Laplacians of torsion functions and the odd barrier.

Everything here is exact up to floating point; the quadrature module is the
independent check.  Points are 1-d arrays of length ``n`` (scalars are
accepted when ``n == 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError
from .specfun import FracParams, gauss_2f1, lemma23_funcs

__all__ = [
    "Ball",
    "ExtendedValue",
    "FINITE",
    "MINUS_INFINITY",
    "PLUS_INFINITY",
    "BarrierConfig",
    "SPHERE_RTOL",
    "torsion",
    "frac_lap_torsion",
    "frac_lap_harmonic_torsion",
    "check_harmonic_homogeneous",
    "barrier",
    "frac_lap_barrier",
    "pluto_lhs",
    "tilde_ball",
    "midpoint_ball",
]

SPHERE_RTOL = 1e-12

FINITE = "finite"
MINUS_INFINITY = "minus_infinity"
PLUS_INFINITY = "plus_infinity"


def _point(x, n: int | None = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DomainError(f"expected a single point, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise DomainError(f"point has dimension {x.shape[0]}, expected {n}")
    return x


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, x) -> bool:
        return float(np.linalg.norm(_point(x, self.dim) - self.center)) < self.radius


@dataclass(frozen=True)
class ExtendedValue:
    """A real number or one of the two infinities."""

    tag: str
    value: float = math.nan

    @classmethod
    def finite(cls, value: float) -> "ExtendedValue":
        return cls(FINITE, float(value))

    @property
    def is_finite(self) -> bool:
        return self.tag == FINITE

    def __float__(self) -> float:
        if self.tag == MINUS_INFINITY:
            return -math.inf
        if self.tag == PLUS_INFINITY:
            return math.inf
        return self.value


_NEG_INF = ExtendedValue(MINUS_INFINITY)
_POS_INF = ExtendedValue(PLUS_INFINITY)


def _check_dim(ball: Ball, params: FracParams) -> None:
    if ball.dim != params.n:
        raise DomainError(f"ball lives in R^{ball.dim} but params.n = {params.n}")


def torsion(ball: Ball, params: FracParams, x) -> float | np.ndarray:
    """``gamma_ns * (rho^2 - |x - x0|^2)_+^s``.

    ``x`` may be a single point or an array of points with trailing axis ``n``.
    """
    _check_dim(ball, params)
    x = np.asarray(x, dtype=float)
    if params.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    r2 = np.sum((x - ball.center) ** 2, axis=-1)
    out = params.gamma_ns * np.maximum(ball.radius**2 - r2, 0.0) ** params.s
    return float(out) if np.ndim(out) == 0 else out


def _sphere_position(ball: Ball, x: np.ndarray) -> tuple[float, int]:
    """Return ``|x - x0| / rho`` and -1/0/+1 for inside/on/outside."""
    dist = float(np.linalg.norm(x - ball.center))
    if abs(dist - ball.radius) < SPHERE_RTOL * ball.radius:
        return dist / ball.radius, 0
    return dist / ball.radius, (-1 if dist < ball.radius else 1)


def _exterior_profile(params: FracParams, ell: int, ynorm: float) -> float:
    # -a_{n+2l,s} |y|^{-n-2s-2l} 2F1((n+2s)/2+l, s+1; (n+2s)/2+1+l; |y|^-2),
    # Euler-transformed so that the (1-tau)^{-s} blow-up is an explicit factor
    n, s = params.n, params.s
    lifted = params.shifted(2 * ell) if ell else params
    tau = ynorm**-2
    hyp = gauss_2f1(1.0, n / 2.0 + ell, (n + 2.0 * s) / 2.0 + 1.0 + ell, tau)
    return -lifted.a_ns * ynorm ** (-n - 2.0 * s - 2.0 * ell) * (1.0 - tau) ** (-s) * hyp


def frac_lap_torsion(ball: Ball, params: FracParams, x) -> ExtendedValue:
    """Fractional Laplacian of the torsion function of ``ball`` at ``x``.

    Equal to 1 inside, minus infinity on the sphere and given by a
    hypergeometric profile in the normalised offset outside.
    """
    _check_dim(ball, params)
    x = _point(x, params.n)
    ynorm, where = _sphere_position(ball, x)
    if where < 0:
        return ExtendedValue.finite(1.0)
    if where == 0:
        return _NEG_INF
    return ExtendedValue.finite(_exterior_profile(params, 0, ynorm))


def frac_lap_harmonic_torsion(
    ball: Ball,
    params: FracParams,
    degree: int,
    p: Callable[[np.ndarray], float],
    x,
    check: bool = False,
) -> ExtendedValue:
    """Fractional Laplacian of ``p(x - x0) * psi_B(x)``.

    ``p`` must be a homogeneous harmonic polynomial of degree ``degree``; it is
    evaluated at the offset from the ball centre.  With ``check=True`` a
    randomised harmonicity/homogeneity test is run first.
    """
    _check_dim(ball, params)
    if degree < 0 or int(degree) != degree:
        raise DomainError(f"degree must be a non-negative integer, got {degree}")
    if check and not check_harmonic_homogeneous(p, params.n, degree):
        raise DomainError("p failed the harmonic homogeneous polynomial spot-check")
    x = _point(x, params.n)
    ratio = params.gamma_ns / params.shifted(2 * degree).gamma_ns if degree else 1.0
    pval = float(p(x - ball.center))
    ynorm, where = _sphere_position(ball, x)
    if where < 0:
        return ExtendedValue.finite(ratio * pval)
    if where == 0:
        if pval == 0.0:
            return ExtendedValue.finite(0.0)
        return _NEG_INF if pval > 0 else _POS_INF
    return ExtendedValue.finite(ratio * pval * _exterior_profile(params, degree, ynorm))


def check_harmonic_homogeneous(
    p: Callable[[np.ndarray], float], n: int, degree: int, samples: int = 8, seed: int = 0
) -> bool:
    """Randomised spot-check of ``p(lam x) = lam^l p(x)`` and ``Laplacian p = 0``."""
    rng = np.random.default_rng(seed)
    h = 1e-3
    for _ in range(samples):
        x = rng.uniform(-1.0, 1.0, n)
        scale = max(1.0, abs(p(x)))
        lam = rng.uniform(0.5, 2.0)
        if abs(p(lam * x) - lam**degree * p(x)) > 1e-9 * scale * lam**degree:
            return False
        lap = sum(
            p(x + h * e) - 2.0 * p(x) + p(x - h * e) for e in np.eye(n)
        ) / h**2
        if abs(lap) > 1e-4 * scale * max(1, degree) ** 2:
            return False
    return True


@dataclass(frozen=True)
class BarrierConfig:
    """Ball ``B_rho(a)`` with ``a_1 > 0`` and its mirror image across ``x_1 = 0``."""

    a: np.ndarray
    rho: float
    params: FracParams
    a_star: np.ndarray = field(init=False)

    def __post_init__(self):
        a = _point(self.a, self.params.n).copy()
        if not a[0] > 0:
            raise DomainError(f"first coordinate of a must be positive, got {a[0]}")
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        a.setflags(write=False)
        star = a.copy()
        star[0] = -a[0]
        star.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "a_star", star)

    @property
    def ball(self) -> Ball:
        return Ball(self.a, self.rho)

    @property
    def mirror_ball(self) -> Ball:
        return Ball(self.a_star, self.rho)


def barrier(cfg: BarrierConfig, x) -> float | np.ndarray:
    """``x_1 * (psi_{B_rho(a)}(x) + psi_{B_rho(a*)}(x))``; vectorised over points."""
    p = cfg.params
    x = np.asarray(x, dtype=float)
    if p.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    val = x[..., 0] * (torsion(cfg.ball, p, x) + torsion(cfg.mirror_ball, p, x))
    return float(val) if np.ndim(val) == 0 else val


def frac_lap_barrier(cfg: BarrierConfig, x) -> ExtendedValue:
    """Piecewise closed form of the fractional Laplacian of the barrier in ``B_rho(a)``.

    Raises
    ------
    DomainError
        If ``x`` is not in the open ball ``B_rho(a)``.
    """
    p = cfg.params
    n, s = p.n, p.s
    x = _point(x, n)
    if not cfg.ball.contains(x):
        raise DomainError("frac_lap_barrier is only available inside B_rho(a)")
    ynorm, where = _sphere_position(cfg.mirror_ball, x)
    if where < 0:
        return ExtendedValue.finite(2.0 * (n + 2.0 * s) / n * x[0])
    if where == 0:
        return _NEG_INF
    vals = lemma23_funcs(p, ynorm**-2)
    a1 = cfg.a[0]
    return ExtendedValue.finite((n + 2.0 * s) / n * vals.f * x[0] + 2.0 * s / n * vals.g * a1)


def pluto_lhs(s: float, t: float) -> float:
    """``2 (1-t)^s - (1-2t)^s`` for ``0 <= t < 1/2``."""
    if not (0.0 <= t < 0.5):
        raise DomainError(f"t={t} must lie in [0, 1/2)")
    return 2.0 * (1.0 - t) ** s - (1.0 - 2.0 * t) ** s


def midpoint_ball(a, rho: float) -> Ball:
    """``B_{sqrt(rho^2 - a_1^2)}((a + a*)/2)`` for any ``0 <= |a_1| < rho``.

    With ``a_1 = 0`` the ball and its mirror image coincide and the result is
    ``B_rho(a)`` itself.
    """
    a = _point(a)
    a1 = abs(a[0])
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    if a1 >= rho:
        raise DomainError(f"|a_1|={a1} must be smaller than rho={rho}")
    center = a.copy()
    center[0] = 0.0
    return Ball(center, math.sqrt(rho**2 - a1**2))


def tilde_ball(cfg: BarrierConfig) -> Ball:
    """Ball centred at the midpoint of ``a`` and ``a*`` with radius ``sqrt(rho^2 - a_1^2)``."""
    return midpoint_ball(cfg.a, cfg.rho)
