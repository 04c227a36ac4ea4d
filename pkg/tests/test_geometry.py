import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracserrin.errors import DomainError
from fracserrin.geometry import (
    ORTHOGONALITY,
    TANGENCY,
    Hyperplane,
    R_param,
    StarDomain,
    containment_violation,
    critical_value,
    diameter,
    inner_sphere_radius,
    reflect_point,
    rho_deficit,
    symmetric_difference_gridcount,
    symmetric_difference_measure,
)
from fracserrin.specfun import derive_constants

ELL = StarDomain.ellipse(1.1, 1.0)
TRIFOIL = StarDomain.polar(1.0, (0.0, 0.0, 0.08))


def test_json_round_trip_is_exact():
    for dom in (ELL, TRIFOIL, StarDomain.interval(-0.3, 1.7), StarDomain.ball([0.1, 0.2], 0.7),
                StarDomain.polar(1.0, (0.0, 0.1 / 3.0), (0.0, 0.0, math.pi / 100), center=(0.1, 0.0))):
        back = StarDomain.from_json(dom.to_json())
        assert back.to_json() == dom.to_json()
        assert json.loads(back.to_json()) == json.loads(dom.to_json())


def test_invalid_domains():
    with pytest.raises(DomainError):
        StarDomain.interval(1.0, 0.0)
    with pytest.raises(DomainError):
        StarDomain.ellipse(-1.0, 1.0)
    with pytest.raises(DomainError):
        StarDomain.polar(1.0, (0.0, 1.5))


def test_rho_deficit_ball_and_ellipse():
    assert rho_deficit(StarDomain.ball([0.3, -0.2], 0.8)).rho == pytest.approx(0.0, abs=1e-9)
    res = rho_deficit(StarDomain.ellipse(1.1, 1.0))
    assert res.rho == pytest.approx(0.1, abs=1e-8)
    assert np.allclose(res.center, 0.0, atol=1e-6)
    assert res.rho_i == pytest.approx(1.0, abs=1e-8) and res.rho_e == pytest.approx(1.1, abs=1e-8)
    assert rho_deficit(StarDomain.interval(0.0, 3.0)).rho == 0.0


def test_rho_deficit_translation_invariant():
    a = rho_deficit(TRIFOIL).rho
    b = rho_deficit(TRIFOIL.translated([0.37, -1.2])).rho
    assert b == pytest.approx(a, abs=1e-8)
    assert a <= diameter(TRIFOIL)


def test_diameter():
    assert diameter(StarDomain.ball([0.0, 0.0], 0.7)) == pytest.approx(1.4, rel=1e-8)
    assert diameter(StarDomain.interval(-0.5, 2.0)) == pytest.approx(2.5)
    assert diameter(StarDomain.ellipse(1.3, 0.6)) == pytest.approx(2.6, rel=1e-8)


def test_inner_sphere_radius():
    assert inner_sphere_radius(StarDomain.ball([1.0, 0.0], 0.4)) == pytest.approx(0.4, rel=1e-6)
    assert inner_sphere_radius(StarDomain.ellipse(1.25, 1.0)) == pytest.approx(1.0 / 1.25, rel=1e-6)
    assert inner_sphere_radius(StarDomain.interval(0.0, 3.0)) == pytest.approx(1.5)
    r = inner_sphere_radius(TRIFOIL)
    assert r <= rho_deficit(TRIFOIL).rho_i + 1e-12


def test_R_param():
    p = derive_constants(1, 0.5)
    wide = StarDomain.interval(-10.0, 10.0)
    assert R_param(wide, p, 0.0) == pytest.approx(10.0)
    assert R_param(wide, p, 1.0) == pytest.approx(8 / (3 * math.pi) / 2, rel=1e-12)
    vals = [R_param(ELL, derive_constants(2, 0.5), lip) for lip in (0.0, 0.1, 1.0, 10.0, 100.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        R_param(ELL, p, -1.0)


def test_reflection():
    plane = Hyperplane([1.0, 0.0], 0.0)
    assert np.allclose(reflect_point([3.0, 1.0], plane), [-3.0, 1.0])
    tilted = Hyperplane([1.0, 2.0], 0.3)
    on = 0.3 * tilted.direction + np.array([-2.0, 1.0]) * 0.7
    assert np.allclose(reflect_point(on, tilted), on)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 2 * math.pi), st.floats(-2, 2))
def test_reflection_is_involution(x, y, angle, mu):
    plane = Hyperplane([math.cos(angle), math.sin(angle)], mu)
    p = np.array([x, y])
    assert np.allclose(reflect_point(reflect_point(p, plane), plane), p, atol=1e-12)


def test_hyperplane_normalises():
    assert np.allclose(Hyperplane([3.0, 4.0], 0.0).direction, [0.6, 0.8])


def test_critical_value_ball():
    dom = StarDomain.ball([0.4, -0.3], 1.0)
    e = np.array([1.0, 1.0]) / math.sqrt(2)
    res = critical_value(dom, e)
    assert res.lambda_ == pytest.approx(dom.center @ e, abs=1e-6)
    assert res.lambda_ <= res.Lambda


def test_critical_value_symmetric_ellipse():
    res = critical_value(ELL, [1.0, 0.0])
    assert res.lambda_ == pytest.approx(0.0, abs=1e-6)
    assert res.both_sided


def test_critical_value_diagonal_ellipse():
    res = critical_value(ELL, [1.0, 1.0])
    assert res.contact_case == ORTHOGONALITY
    assert res.lambda_ == pytest.approx(0.0999, abs=2e-3)


def test_critical_value_trifoil_brute_force():
    res = critical_value(TRIFOIL, [1.0, 0.0])
    assert res.contact_case == TANGENCY
    # brute-force scan of the containment predicate on a fine mu grid
    mus = np.linspace(0.0, 0.2, 401)
    ok = [containment_violation(TRIFOIL, Hyperplane([1.0, 0.0], m)).tangency <= 1e-9 for m in mus]
    first = mus[np.argmax(ok)]
    assert abs(res.lambda_ - first) <= 0.2 / 400 + 1e-8


def test_critical_value_equivariance():
    shift = np.array([0.25, -0.6])
    e = np.array([0.6, 0.8])
    a = critical_value(TRIFOIL, e).lambda_
    b = critical_value(TRIFOIL.translated(shift), e).lambda_
    assert b - a == pytest.approx(shift @ e, abs=1e-6)


def test_predicate_brackets_critical_value():
    e = np.array([1.0, 1.0]) / math.sqrt(2)
    res = critical_value(TRIFOIL, e)
    delta = 1e-6 * diameter(TRIFOIL)
    above = containment_violation(TRIFOIL, Hyperplane(e, res.lambda_ + delta))
    below = containment_violation(TRIFOIL, Hyperplane(e, res.lambda_ - delta))
    tol = 0.5e-8 * diameter(TRIFOIL)
    assert above.tangency <= tol and above.orthogonality >= -1e-12
    assert below.tangency > tol or below.orthogonality < -1e-12


def test_critical_value_interval():
    res = critical_value(StarDomain.interval(-1.0, 3.0), [1.0])
    assert res.lambda_ == pytest.approx(1.0)


def test_symmetric_difference():
    plane = Hyperplane([1.0, 0.0], 0.0)
    assert symmetric_difference_measure(ELL, plane) == pytest.approx(0.0, abs=1e-12)
    assert symmetric_difference_measure(StarDomain.ball([0.0, 0.0], 1.0),
                                        Hyperplane([0.6, 0.8], 0.0)) == pytest.approx(0.0, abs=1e-12)
    e = np.array([1.0, 1.0])
    vals = []
    for eps in (0.01, 0.02, 0.04):
        dom = StarDomain.ellipse(1.0 + eps, 1.0)
        vals.append(symmetric_difference_measure(dom, critical_value(dom, e).plane))
    assert vals[0] < vals[1] < vals[2]


def test_symmetric_difference_against_grid_count():
    plane = critical_value(TRIFOIL, [1.0, 0.0]).plane
    exact = symmetric_difference_measure(TRIFOIL, plane)
    counted = symmetric_difference_gridcount(TRIFOIL, plane, 1600)
    assert counted == pytest.approx(exact, rel=2e-2)


def test_symmetric_difference_interval():
    dom = StarDomain.interval(0.0, 2.0)
    assert symmetric_difference_measure(dom, Hyperplane([1.0], 1.0)) == 0.0
    assert symmetric_difference_measure(dom, Hyperplane([1.0], 1.5)) == pytest.approx(2.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(1.0, 1.5), st.floats(0.5, 1.0))
def test_ellipse_radii_property(a, b):
    dom = StarDomain.ellipse(a, b)
    r = inner_sphere_radius(dom)
    assert r == pytest.approx(b * b / a, rel=1e-5)
    assert r <= b + 1e-12
    assert diameter(dom) == pytest.approx(2 * a, rel=1e-8)
