import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fracserrin.closedform import Ball, frac_lap_torsion, torsion
from fracserrin.errors import DomainError, SingularityError
from fracserrin.quadrature import (
    BOUNDARY_SINGULAR,
    Field,
    frac_lap_numeric,
    indicator_field,
    torsion_field,
    weighted_L1_norm,
    zero_field,
)
from fracserrin.specfun import derive_constants

P1 = derive_constants(1, 0.5)
P2 = derive_constants(2, 0.5)


def gaussian(n, width=1.0):
    return Field(lambda p: np.exp(-np.sum(p * p, axis=-1) / width**2), n, decay=50.0)


def test_zero_field():
    assert frac_lap_numeric(zero_field(1), P1, [0.3]) == 0.0
    assert weighted_L1_norm(zero_field(2), P2) == 0.0


def test_unit_ball_centre_half_order():
    fld = torsion_field(Ball([0.0], 1.0), P1)
    assert frac_lap_numeric(fld, P1, [0.0], tol=1e-9) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_interior_identity_two_dims(s):
    p = derive_constants(2, s)
    fld = torsion_field(Ball([0.0, 0.0], 1.0), p)
    assert frac_lap_numeric(fld, p, [0.3, -0.5], tol=1e-6) == pytest.approx(1.0, abs=1e-4)


def test_exterior_matches_closed_form():
    ball = Ball([0.0], 1.0)
    fld = torsion_field(ball, P1)
    ref = float(frac_lap_torsion(ball, P1, [2.0]))
    assert frac_lap_numeric(fld, P1, [2.0], tol=1e-10) == pytest.approx(ref, rel=1e-7)


def test_sphere_point_is_singular():
    fld = torsion_field(Ball([0.0, 0.0], 1.0), P2)
    with pytest.raises(SingularityError):
        frac_lap_numeric(fld, P2, [0.6, 0.8])
    with pytest.raises(SingularityError):
        frac_lap_numeric(torsion_field(Ball([0.0], 1.0), P1), P1, [1.0 - 5e-11])


def test_gaussian_against_fourier_oracle_1d():
    # (-Delta)^s e^{-x^2} = (1/pi) int_0^inf k^{2s} sqrt(pi) e^{-k^2/4} cos(kx) dk
    s = 0.5
    x = 0.7
    ref = quad(lambda k: k ** (2 * s) * math.sqrt(math.pi) * math.exp(-k * k / 4) * math.cos(k * x),
               0, 60, limit=200)[0] / math.pi
    assert frac_lap_numeric(gaussian(1), derive_constants(1, s), [x], tol=1e-9) == pytest.approx(ref, rel=1e-7)


def test_gaussian_2d_at_origin():
    # radial Fourier oracle: (1/2pi) int_0^inf k^{2s} pi e^{-k^2/4} k dk at x = 0
    s = 0.25
    ref = quad(lambda k: k ** (2 * s) * math.pi * math.exp(-k * k / 4) * k, 0, 60)[0] / (2 * math.pi)
    assert frac_lap_numeric(gaussian(2), derive_constants(2, s), [0.0, 0.0], tol=1e-8) == pytest.approx(ref, rel=1e-6)


def test_weighted_norm_indicator():
    fld = indicator_field(Ball([0.0], 1.0))
    assert weighted_L1_norm(fld, P1, tol=1e-10) == pytest.approx(math.pi / 2, abs=1e-8)


def test_weighted_norm_torsion_against_adaptive():
    fld = torsion_field(Ball([0.0], 1.0), P1)
    ref = quad(lambda x: math.sqrt(1 - x * x) / (1 + x * x), -1, 1, epsabs=1e-12)[0]
    assert weighted_L1_norm(fld, P1, tol=1e-9) == pytest.approx(ref, abs=1e-8)


def test_parameter_checks():
    with pytest.raises(DomainError):
        frac_lap_numeric(zero_field(1), P1, [0.0], tol=0.0)
    with pytest.raises(DomainError):
        frac_lap_numeric(zero_field(2), P1, [0.0])
    with pytest.raises(DomainError):
        Field(lambda p: p, 3)


def test_field_support_clipping():
    fld = Field(lambda p: np.ones(p.shape[:-1]), 2, support_radius=1.0, smoothness_hint=BOUNDARY_SINGULAR)
    assert np.allclose(fld(np.array([[0.5, 0.0], [1.5, 0.0]])), [1.0, 0.0])


@settings(max_examples=6, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-3.0, 3.0))
def test_linearity(alpha, beta):
    tol = 1e-8
    f, g = gaussian(1), gaussian(1, 0.7)
    x = [0.4]
    lhs = frac_lap_numeric(f.combine(alpha, g, beta), P1, x, tol)
    rhs = alpha * frac_lap_numeric(f, P1, x, tol) + beta * frac_lap_numeric(g, P1, x, tol)
    assert abs(lhs - rhs) <= 3 * tol * (1 + abs(alpha) + abs(beta))


@settings(max_examples=5, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(0.0, 2 * math.pi))
def test_translation_rotation_invariance(tx, ty, angle):
    tol = 1e-7
    p = derive_constants(2, 0.5)
    fld = Field(lambda q: np.exp(-q[..., 0] ** 2 - 2.0 * q[..., 1] ** 2), 2, decay=50.0)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    shift = np.array([tx, ty])
    x = np.array([0.3, 0.2])
    base = frac_lap_numeric(fld, p, x, tol)
    moved = frac_lap_numeric(fld.transformed(shift, rot), p, rot @ x + shift, tol)
    assert abs(base - moved) <= 3 * tol


@pytest.mark.parametrize("rho", [0.5, 2.0])
def test_scaling_law(rho):
    tol = 1e-9
    s = 0.75
    p = derive_constants(1, s)
    fld = gaussian(1)
    x = 0.6
    scaled = frac_lap_numeric(fld.transformed(scale=rho), p, [x], tol)
    assert scaled == pytest.approx(rho ** (-2 * s) * frac_lap_numeric(fld, p, [x / rho], tol), abs=3 * tol)


def test_halving_tol_does_not_worsen():
    ball = Ball([0.0], 1.0)
    fld = torsion_field(ball, derive_constants(1, 0.25))
    p = derive_constants(1, 0.25)
    errs = [abs(frac_lap_numeric(fld, p, [0.5], tol) - 1.0) for tol in (1e-5, 5e-6, 2.5e-6)]
    for a, b in zip(errs, errs[1:]):
        assert b <= max(a, 1e-9)


def test_deterministic_repeat():
    fld = torsion_field(Ball([0.0, 0.0], 1.0), P2)
    a = frac_lap_numeric(fld, P2, [0.2, 0.1], 1e-6)
    b = frac_lap_numeric(fld, P2, [0.2, 0.1], 1e-6)
    assert a == b


def test_torsion_field_matches_profile():
    ball = Ball([0.5, 0.0], 2.0)
    p = derive_constants(2, 0.25)
    pts = np.array([[0.0, 0.0], [3.0, 0.0]])
    assert np.allclose(torsion_field(ball, p)(pts), torsion(ball, p, pts))
