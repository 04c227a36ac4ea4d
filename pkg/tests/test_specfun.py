import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fracserrin.errors import DomainError, PoleError
from fracserrin.specfun import (
    derive_constants,
    digamma,
    gamma,
    gauss_2f1,
    lemma23_funcs,
    rgamma,
    unit_ball_volume,
)

orders = st.floats(0.05, 0.95)


@given(st.floats(0.01, 60.0))
def test_gamma_matches_stdlib(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)


@given(st.floats(-8.9, -0.1).filter(lambda x: abs(x - round(x)) > 1e-3))
def test_gamma_reflection_negative(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-11)


def test_gamma_poles():
    for x in (0.0, -1.0, -4.0):
        with pytest.raises(PoleError):
            gamma(x)
        assert rgamma(x) == 0.0


@settings(max_examples=60)
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.5, 4.0), st.floats(0.0, 0.95))
def test_hyp2f1_against_scipy(a, b, c, tau):
    ref = special.hyp2f1(a, b, c, tau)
    assert gauss_2f1(a, b, c, tau) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_hyp2f1_near_one_and_at_one():
    # c - a - b > 0: finite value at 1 from the Gauss summation formula
    a, b, c = 1.0, 0.5, 2.5
    ref = math.gamma(c) * math.gamma(c - a - b) / (math.gamma(c - a) * math.gamma(c - b))
    assert gauss_2f1(a, b, c, 1.0) == pytest.approx(ref, rel=1e-12)
    assert gauss_2f1(a, b, c, 0.999999) == pytest.approx(special.hyp2f1(a, b, c, 0.999999), rel=1e-8)


def test_hyp2f1_trivial():
    assert gauss_2f1(1.0, 2.0, 3.0, 0.0) == 1.0
    assert gauss_2f1(0.0, 2.0, 3.0, 0.7) == 1.0


def test_hyp2f1_divergent_at_one():
    with pytest.raises(Exception):
        gauss_2f1(1.0, 1.0, 1.5, 1.0)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_constants_at_half():
    p = derive_constants(1, 0.5)
    assert abs(p.gamma_ns - 1.0) < 1e-12
    assert abs(p.a_ns - 0.5) < 1e-12
    assert abs(p.kappa_ns - 8.0 / (3.0 * math.pi)) < 1e-12
    assert p.c_ns == pytest.approx(1.0 / math.pi, rel=1e-13)


def test_c_ns_against_scipy_gamma():
    for n in (1, 2, 3):
        for s in (0.25, 0.5, 0.75):
            ref = s * 4**s * special.gamma(n / 2 + s) / (math.pi ** (n / 2) * special.gamma(1 - s))
            assert derive_constants(n, s).c_ns == pytest.approx(ref, rel=1e-13)


@given(st.integers(1, 6), orders)
def test_gamma_ns_dimension_recursion(n, s):
    p, q = derive_constants(n, s), derive_constants(n + 2, s)
    # gamma_{n+2,s} / gamma_{n,s} = (n/2) / (n/2 + s)
    assert q.gamma_ns / p.gamma_ns == pytest.approx((n / 2) / (n / 2 + s), rel=1e-12)


@given(st.integers(1, 6), orders)
def test_torsion_constant_normalises_unit_ball(n, s):
    # gamma_{n,s} = Gamma(n/2) / (4^s Gamma(n/2 + s) Gamma(1 + s))
    ref = special.gamma(n / 2) / (4**s * special.gamma(n / 2 + s) * special.gamma(1 + s))
    assert derive_constants(n, s).gamma_ns == pytest.approx(ref, rel=1e-12)


def test_invalid_parameters():
    for n, s in ((0, 0.5), (1, 0.0), (1, 1.0), (1.5, 0.5)):
        with pytest.raises(DomainError):
            derive_constants(n, s)
    with pytest.raises(DomainError):
        lemma23_funcs(derive_constants(1, 0.5), 1.0)


@settings(max_examples=200)
@given(st.integers(1, 3), orders, st.floats(1e-6, 1 - 1e-6))
def test_lemma_signs_property(n, s, tau):
    v = lemma23_funcs(derive_constants(n, s), tau)
    assert v.f <= 1.0 + 1e-12
    assert v.g <= 1e-12


def test_lemma_funcs_consistency():
    p = derive_constants(2, 0.25)
    tau = 0.4
    v = lemma23_funcs(p, tau)
    K = p.a_ns * (1 - tau) ** -0.25 * tau ** 1.25
    assert v.K == pytest.approx(K, rel=1e-14)
    assert v.F == pytest.approx(special.hyp2f1(1, 1, 2.25, tau), rel=1e-12)
    assert v.f == pytest.approx(1 - K * (v.F - 1), rel=1e-14)
    assert np.isfinite(v.g)


def test_gamma_reference_values():
    assert gamma(1.0) == 1.0
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma(2.5) == pytest.approx(1.5 * 0.5 * math.sqrt(math.pi), rel=1e-14)


def test_hyp2f1_reference_values():
    assert gauss_2f1(1.0, 1.0, 2.5, 0.0) == 1.0
    assert gauss_2f1(1.0, 1.0, 2.5, 1.0) == pytest.approx(3.0, rel=1e-13)
    # direct series summed to a negligible tail
    terms, t = [], 1.0
    for k in range(200):
        terms.append(t)
        t *= (1 + k) * (0.5 + k) / ((2 + k) * (1 + k)) * 0.5
    ref = math.fsum(terms)
    assert gauss_2f1(1.0, 0.5, 2.0, 0.5) == pytest.approx(ref, rel=1e-14)


@pytest.mark.parametrize("a,b,c", [(1, 1, 2), (1, 2, 3), (2, 2, 3), (1, 0.5, 2.5), (1.5, 1, 2.5)])
def test_hyp2f1_integer_gap_near_one(a, b, c):
    for tau in (0.6, 0.9, 0.99, 0.999999):
        assert gauss_2f1(a, b, c, tau) == pytest.approx(special.hyp2f1(a, b, c, tau), rel=1e-12)


def test_digamma_against_scipy():
    for x in (1e-3, 0.3, 1.0, 2.5, 9.99, 10.0, 50.0, -0.5, -2.7):
        assert digamma(x) == pytest.approx(special.digamma(x), rel=1e-13, abs=1e-14)
    with pytest.raises(PoleError):
        digamma(-2.0)


def test_gamma_three_dims_half():
    assert derive_constants(3, 0.5).gamma_ns == pytest.approx(0.5, rel=1e-13)


def test_lemma_funcs_limits_and_reference():
    p = derive_constants(1, 0.5)
    v = lemma23_funcs(p, 1e-12)
    assert v.K == pytest.approx(0.0, abs=1e-11) and v.F == pytest.approx(1.0)
    assert v.f == pytest.approx(1.0) and v.g == pytest.approx(-1.0)
    v = lemma23_funcs(p, 0.5)
    K = 0.5 * 0.5**-0.5 * 0.5
    F = special.hyp2f1(1.0, 0.5, 2.0, 0.5)
    assert v.K == pytest.approx(K, rel=1e-14)
    assert v.f == pytest.approx(1 - K * (F - 1), rel=1e-13)
    assert v.g == pytest.approx(K * (2.0 - F) - 1, rel=1e-13)
