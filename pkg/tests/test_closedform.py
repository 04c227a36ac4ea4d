import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracserrin.closedform import (
    MINUS_INFINITY,
    PLUS_INFINITY,
    Ball,
    BarrierConfig,
    barrier,
    check_harmonic_homogeneous,
    frac_lap_barrier,
    frac_lap_harmonic_torsion,
    frac_lap_torsion,
    midpoint_ball,
    pluto_lhs,
    tilde_ball,
    torsion,
)
from fracserrin.errors import DomainError
from fracserrin.quadrature import barrier_field, frac_lap_numeric, harmonic_torsion_field
from fracserrin.specfun import derive_constants

P1 = derive_constants(1, 0.5)


def test_torsion_profile_values():
    assert torsion(Ball([0.0], 1.0), P1, 0.0) == pytest.approx(1.0)
    assert torsion(Ball([0.0], 1.0), P1, 1.5) == 0.0
    p = derive_constants(2, 0.25)
    x = np.array([[0.3, 0.4], [2.0, 0.0]])
    out = torsion(Ball([0.0, 0.0], 1.0), p, x)
    assert out[0] == pytest.approx(p.gamma_ns * 0.75**0.25)
    assert out[1] == 0.0


def test_torsion_dimension_mismatch():
    with pytest.raises(DomainError):
        torsion(Ball([0.0, 0.0], 1.0), P1, [0.0, 0.0])


def test_interior_value_is_one():
    assert float(frac_lap_torsion(Ball([0.0, 0.0], 2.0), derive_constants(2, 0.3), [0.5, -1.0])) == 1.0


@pytest.mark.parametrize("x", [1.1, 1.5, 2.0, 5.0, -3.0])
def test_exterior_half_order_analytic(x):
    # for s = 1/2, n = 1 the exterior value is 1 - |x| / sqrt(x^2 - 1)
    ref = 1.0 - abs(x) / math.sqrt(x * x - 1.0)
    assert float(frac_lap_torsion(Ball([0.0], 1.0), P1, [x])) == pytest.approx(ref, rel=1e-13)


def test_sphere_is_minus_infinity():
    val = frac_lap_torsion(Ball([0.0, 0.0], 1.0), derive_constants(2, 0.5), [0.6, 0.8])
    assert val.tag == MINUS_INFINITY
    assert float(val) == -math.inf


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(1.01, 6.0), st.floats(0.5, 3.0))
def test_exterior_negative_and_scaling(s, r, rho):
    # exterior value is negative; the ball radius enters only through |x|/rho
    p = derive_constants(2, s)
    v1 = float(frac_lap_torsion(Ball([0.0, 0.0], 1.0), p, [r, 0.0]))
    v2 = float(frac_lap_torsion(Ball([1.0, 1.0], rho), p, [1.0, 1.0 + rho * r]))
    assert v1 < 0.0
    assert v2 == pytest.approx(v1, rel=1e-12)


def test_harmonic_degree_one_against_oracle():
    p = derive_constants(1, 0.5)
    ball = Ball([0.0], 1.0)
    lin = lambda z: float(np.atleast_1d(z)[0])  # noqa: E731
    fld = harmonic_torsion_field(ball, p, lambda z: z[..., 0])
    for x in (0.3, 1.7):
        closed = float(frac_lap_harmonic_torsion(ball, p, 1, lin, [x], check=True))
        assert frac_lap_numeric(fld, p, [x], tol=1e-9) == pytest.approx(closed, rel=1e-6, abs=1e-8)


def test_harmonic_sphere_signs():
    p = derive_constants(2, 0.5)
    ball = Ball([0.0, 0.0], 1.0)
    lin = lambda z: float(z[0])  # noqa: E731
    assert frac_lap_harmonic_torsion(ball, p, 1, lin, [1.0, 0.0]).tag == MINUS_INFINITY
    assert frac_lap_harmonic_torsion(ball, p, 1, lin, [-1.0, 0.0]).tag == PLUS_INFINITY
    assert float(frac_lap_harmonic_torsion(ball, p, 1, lin, [0.0, 1.0])) == 0.0


def test_harmonic_check_rejects_non_harmonic():
    assert check_harmonic_homogeneous(lambda z: z[0] * z[1], 2, 2)
    assert not check_harmonic_homogeneous(lambda z: z[0] ** 2 + z[1] ** 2, 2, 2)
    with pytest.raises(DomainError):
        frac_lap_harmonic_torsion(Ball([0.0, 0.0], 1.0), derive_constants(2, 0.5), 2,
                                  lambda z: z[0] ** 2, [0.1, 0.1], check=True)


def test_barrier_config_validation():
    with pytest.raises(DomainError):
        BarrierConfig([-0.1, 0.0], 1.0, derive_constants(2, 0.5))
    with pytest.raises(DomainError):
        BarrierConfig([0.1, 0.0], 0.0, derive_constants(2, 0.5))
    cfg = BarrierConfig([0.3, 0.2], 1.0, derive_constants(2, 0.5))
    assert np.allclose(cfg.a_star, [-0.3, 0.2])


def test_barrier_is_odd_in_first_coordinate():
    cfg = BarrierConfig([0.25, 0.0], 1.0, derive_constants(2, 0.5))
    x = np.array([0.4, 0.3])
    assert barrier(cfg, x) == pytest.approx(-barrier(cfg, x * [-1.0, 1.0]))


def test_barrier_overlap_equality():
    p = derive_constants(2, 0.75)
    cfg = BarrierConfig([0.25, 0.0], 1.0, p)
    x = [0.3, 0.1]
    assert float(frac_lap_barrier(cfg, x)) == pytest.approx(2 * (2 + 1.5) / 2 * 0.3, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([0.25, 0.5, 0.75]), st.floats(0.05, 0.45), st.floats(0.0, 1.0),
       st.floats(-1.0, 1.0))
def test_barrier_inequality_in_annulus(s, ratio, u, w):
    p = derive_constants(2, s)
    cfg = BarrierConfig([ratio, 0.0], 1.0, p)
    x = np.array([ratio + u * (1.0 - ratio), w * math.sqrt(max(1.0 - (u * (1 - ratio)) ** 2, 0.0))])
    if not cfg.ball.contains(x) or cfg.mirror_ball.contains(x) or x[0] <= 0:
        return
    val = frac_lap_barrier(cfg, x)
    if val.is_finite:
        assert val.value <= (2 + 2 * s) / 2 * x[0] + 1e-9


def test_barrier_closed_form_against_oracle():
    p = derive_constants(1, 0.5)
    cfg = BarrierConfig([0.25], 1.0, p)
    fld = barrier_field(cfg)
    for x in (0.5, 1.1):
        closed = float(frac_lap_barrier(cfg, [x]))
        assert frac_lap_numeric(fld, p, [x], tol=1e-8) == pytest.approx(closed, rel=1e-5, abs=1e-7)


def test_barrier_outside_ball_rejected():
    cfg = BarrierConfig([0.25], 1.0, P1)
    with pytest.raises(DomainError):
        frac_lap_barrier(cfg, [-0.9])


@given(st.sampled_from([0.25, 0.5, 0.75]), st.floats(0.0, 0.4999))
def test_pluto_at_least_one(s, t):
    assert pluto_lhs(s, t) >= 1.0 - 1e-12


def test_pluto_domain():
    with pytest.raises(DomainError):
        pluto_lhs(0.5, 0.5)


def test_midpoint_ball():
    b = midpoint_ball([0.6, 0.2], 1.0)
    assert np.allclose(b.center, [0.0, 0.2])
    assert b.radius == pytest.approx(0.8)
    assert midpoint_ball([0.0, 0.0], 1.0).radius == 1.0
    with pytest.raises(DomainError):
        midpoint_ball([1.0, 0.0], 1.0)
    cfg = BarrierConfig([0.3], 1.0, P1)
    assert tilde_ball(cfg).radius == pytest.approx(math.sqrt(0.91))
