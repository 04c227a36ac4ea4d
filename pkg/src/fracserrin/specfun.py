"""Gamma, Gauss hypergeometric 2F1 and the fractional constants.

All routines are real-valued and scalar; they are pure functions and can be
called from any number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple


from .errors import DivergenceError, DomainError, NonConvergenceError, PoleError

__all__ = [
    "gamma",
    "rgamma",
    "gauss_2f1",
    "digamma",
    "FracParams",
    "derive_constants",
    "unit_ball_volume",
    "Lemma23Values",
    "lemma23_funcs",
]

# Lanczos approximation, g = 607/128, 15 terms (Godfrey's coefficients).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

SERIES_MAX_TERMS = 100_000
SERIES_REL_EPS = 1e-16


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def _lanczos(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    # split the power to avoid overflow for large x
    half = t ** ((x + 0.5) / 2.0)
    return _SQRT_2PI * half * (half * math.exp(-t)) * acc


def gamma(x: float) -> float:
    """Euler's Gamma function for real ``x``.

    Raises
    ------
    PoleError
        If ``x`` is zero or a negative integer.
    """
    x = float(x)
    if _is_nonpositive_integer(x):
        raise PoleError(f"gamma has a pole at {x}")
    if x == math.floor(x) and x <= 171:
        return float(math.prod(range(1, int(x))))
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _lanczos(1.0 - x))
    return _lanczos(x)


def rgamma(x: float) -> float:
    """Reciprocal Gamma function; zero at the poles of Gamma."""
    if _is_nonpositive_integer(float(x)):
        return 0.0
    return 1.0 / gamma(x)


def _series_2f1(a: float, b: float, c: float, z: float) -> float:
    term = 1.0
    total = 1.0
    small = 0
    for k in range(SERIES_MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) < SERIES_REL_EPS * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise NonConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) series did not settle in {SERIES_MAX_TERMS} terms"
    )


def digamma(x: float) -> float:
    """Logarithmic derivative of Gamma for real ``x`` off the poles."""
    x = float(x)
    if _is_nonpositive_integer(x):
        raise PoleError(f"digamma has a pole at {x}")
    acc = 0.0
    if x < 0.5:
        # reflection: psi(1 - x) - psi(x) = pi cot(pi x)
        acc -= math.pi / math.tan(math.pi * x)
        x = 1.0 - x
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    # asymptotic series with Bernoulli numbers B_2 .. B_14
    tail = inv2 * (1 / 12 - inv2 * (1 / 120 - inv2 * (1 / 252 - inv2 * (
        1 / 240 - inv2 * (1 / 132 - inv2 * (691 / 32760 - inv2 / 12))))))
    return acc + math.log(x) - 0.5 / x - tail


def _log_case_2f1(a: float, b: float, m: int, w: float) -> float:
    # 2F1(a, b; a+b+m; 1-w) for integer m >= 0: the connection formula's
    # degenerate limit, a finite sum plus a log-weighted series in w
    c = a + b + m
    gc = gamma(c)
    finite = 0.0
    if m > 0:
        term = 1.0
        for k in range(m):
            finite += term * w**k
            if k < m - 1:
                term *= (a + k) * (b + k) / ((k + 1.0) * (1.0 - m + k))
        finite *= gamma(m) * gc * rgamma(a + m) * rgamma(b + m)
    pref = (-1.0) ** m * gc * rgamma(a) * rgamma(b)
    if pref == 0.0:
        return finite
    logw = math.log(w)
    coef = 1.0 / math.factorial(m)
    total = 0.0
    small = 0
    for k in range(SERIES_MAX_TERMS):
        psi = digamma(k + 1.0) + digamma(k + m + 1.0) - digamma(a + k + m) - digamma(b + k + m)
        term = coef * w**k * (logw - psi)
        total += term
        if abs(term) < SERIES_REL_EPS * max(abs(total), 1e-300):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        coef *= (a + m + k) * (b + m + k) / ((k + 1.0) * (k + m + 1.0))
    else:
        raise NonConvergenceError(f"2F1 logarithmic series did not settle (a={a}, b={b}, m={m})")
    return finite - pref * w**m * total


def gauss_2f1(a: float, b: float, c: float, tau: float) -> float:
    """Gauss hypergeometric function ``2F1(a, b; c; tau)`` for ``0 <= tau <= 1``.

    The power series is summed directly for ``tau <= 1/2``.  Above that the
    connection formula to ``1 - tau`` is used; when ``c - a - b`` is an integer
    (where that formula degenerates) its logarithmic limit is summed instead.  At ``tau = 1`` Gauss's summation theorem
    is applied.

    Raises
    ------
    DomainError
        ``tau`` outside ``[0, 1]`` or ``c`` not positive.
    DivergenceError
        ``tau == 1`` with ``c - a - b <= 0``.
    """
    a, b, c, tau = float(a), float(b), float(c), float(tau)
    if not (0.0 <= tau <= 1.0):
        raise DomainError(f"tau={tau} outside [0, 1]")
    if not c > 0:
        raise DomainError(f"c={c} must be positive")
    if tau == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    terminating = _is_nonpositive_integer(a) or _is_nonpositive_integer(b)
    cab = c - a - b
    if tau == 1.0:
        if cab <= 0:
            raise DivergenceError(f"2F1 diverges at 1 since c-a-b={cab} <= 0")
        return gamma(c) * gamma(cab) * rgamma(c - a) * rgamma(c - b)
    if terminating or tau <= 0.5:
        return _series_2f1(a, b, c, tau)
    w = 1.0 - tau
    if cab == math.floor(cab):
        if cab >= 0:
            return _log_case_2f1(a, b, int(cab), w)
        # Euler's transformation turns c-a-b into a positive integer
        return w**cab * _log_case_2f1(c - a, c - b, int(-cab), w)
    first = gamma(c) * gamma(cab) * rgamma(c - a) * rgamma(c - b)
    second = gamma(c) * gamma(-cab) * rgamma(a) * rgamma(b)
    out = 0.0
    if first != 0.0:
        out += first * _series_2f1(a, b, 1.0 - cab, w)
    if second != 0.0:
        out += second * w**cab * _series_2f1(c - a, c - b, 1.0 + cab, w)
    return out


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class FracParams:
    """Dimension, order and the derived constants of the fractional Laplacian.

    ``gamma_ns`` normalises the torsion function of the unit ball,
    ``a_ns`` is the prefactor of its exterior fractional Laplacian,
    ``kappa_ns`` is the Faber-Krahn constant and ``c_ns`` the normalisation
    of the singular integral.  Build instances with :func:`derive_constants`.
    """

    n: int
    s: float
    gamma_ns: float
    a_ns: float
    kappa_ns: float
    c_ns: float

    def shifted(self, dn: int) -> "FracParams":
        """Constants for the same order in dimension ``n + dn``."""
        return derive_constants(self.n + dn, self.s)

    def to_dict(self) -> dict:
        return {"n": self.n, "s": self.s}


def _check_ns(n: int, s: float) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"dimension n={n} must be a positive integer")
    if not (0.0 < s < 1.0):
        raise DomainError(f"order s={s} must lie in (0, 1)")


@lru_cache(maxsize=256)
def derive_constants(n: int, s: float) -> FracParams:
    """Populate all constants for ``(n, s)``.

    Examples
    --------
    >>> p = derive_constants(1, 0.5)
    >>> round(p.gamma_ns, 12), round(p.a_ns, 12)
    (1.0, 0.5)
    """
    _check_ns(n, s)
    n = int(n)
    s = float(s)
    half = n / 2.0
    gamma_ns = 4.0**-s * gamma(half) / (gamma(half + s) * gamma(1.0 + s))
    a_ns = s * gamma(half) / (gamma(half + s + 1.0) * gamma(1.0 - s))
    ball = unit_ball_volume(n)
    kappa_ns = (
        n
        / 2.0 ** (1.0 - 2.0 * s)
        * ball ** (1.0 + 2.0 * s / n)
        * (1.0 - s)
        * math.pi ** (-half)
        * gamma(half + s)
        / gamma(2.0 + s)
    )
    c_ns = s * 4.0**s * gamma(half + s) / (math.pi**half * gamma(1.0 - s))
    return FracParams(n=n, s=s, gamma_ns=gamma_ns, a_ns=a_ns, kappa_ns=kappa_ns, c_ns=c_ns)


class Lemma23Values(NamedTuple):
    K: float
    F: float
    f: float
    g: float


def lemma23_funcs(params: FracParams, tau: float) -> Lemma23Values:
    """Evaluate ``K``, ``F`` and the two sign-controlled combinations at ``tau``.

    ``K = a (1-tau)^(-s) tau^((n+2s)/2)``, ``F = 2F1(1, n/2; (n+2s)/2+1; tau)``,
    ``f = 1 - K (F - 1)`` and ``g = K ((n+2s)/(2s) - F) - 1``.
    """
    if not (0.0 < tau < 1.0):
        raise DomainError(f"tau={tau} must lie in the open interval (0, 1)")
    n, s = params.n, params.s
    K = params.a_ns * (1.0 - tau) ** (-s) * tau ** ((n + 2.0 * s) / 2.0)
    F = gauss_2f1(1.0, n / 2.0, (n + 2.0 * s) / 2.0 + 1.0, tau)
    f = 1.0 - K * (F - 1.0)
    g = K * ((n + 2.0 * s) / (2.0 * s) - F) - 1.0
    return Lemma23Values(K, F, f, g)
