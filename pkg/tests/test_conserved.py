import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastslow_epi import (
    EventSpec, ModelParams, gamma_invariant, integrate, pi1_inverse, pi1_map, s_nullcline,
    vector_field, w_infinity,
)
from fastslow_epi.errors import DomainError, ParameterError
from oracles import bisect

# 40-digit bisection (mpmath), frozen
PI1_R2_S09 = 0.24081303002691028757
PI1_INV_R2_P025 = 0.87821560431308483849


def test_gamma_examples():
    p = ModelParams(260, 17)
    assert gamma_invariant(p, 1.0, 0.0) == -260.0
    assert gamma_invariant(p, 0.4, 0.1) - gamma_invariant(p, 0.4, 0.3) == pytest.approx(260 * 0.2, rel=1e-14)
    with pytest.raises(DomainError):
        gamma_invariant(p, 0.0, 0.1)


def test_pi1_frozen_value():
    p = ModelParams(2, 1)
    assert pi1_map(p, 0.9) == pytest.approx(PI1_R2_S09, rel=1e-12)
    g0 = gamma_invariant(p, 0.9, 0.0)
    assert pi1_map(p, 0.9) == pytest.approx(bisect(lambda s: math.log(s) - 2 * s - g0, 1e-9, 0.5), rel=1e-12)


def test_pi1_residual_with_positive_i0():
    p = ModelParams(260, 17)
    s = pi1_map(p, 0.9, 1e-6)
    assert abs(gamma_invariant(p, s, 0.0) - gamma_invariant(p, 0.9, 1e-6)) < 1e-10


def test_pi1_near_turning_point():
    p = ModelParams(2, 1)
    assert pi1_map(p, 0.5 + 1e-9) == pytest.approx(0.5, abs=1e-8)
    with pytest.raises(DomainError):
        pi1_map(p, 0.5)


def test_pi1_inverse_frozen_and_round_trip():
    p = ModelParams(2, 1)
    assert pi1_inverse(p, 0.25) == pytest.approx(PI1_INV_R2_P025, rel=1e-12)
    for p0 in (0.1, 0.3, 0.45):
        assert pi1_map(p, pi1_inverse(p, p0), 0.0) == pytest.approx(p0, abs=1e-10)
    assert pi1_inverse(p, 0.5 - 1e-9) == pytest.approx(0.5, abs=1e-8)
    with pytest.raises(DomainError):
        pi1_inverse(p, 0.6)


def test_pi1_inverse_can_exceed_one():
    p = ModelParams(2, 1)
    x = pi1_inverse(p, 0.01)
    assert x > 1.0
    assert x - 0.01 + 0.5 * math.log(0.01 / x) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.05, 20.0), st.floats(0.001, 0.999), st.floats(0.0, 1e-3))
def test_pi1_brackets_turning_point_and_is_decreasing(r0, frac, i0):
    p = ModelParams(r0, 1.0)
    s0 = 1 / r0 + frac * (1 - 1 / r0)
    s_inf = pi1_map(p, s0, i0)
    assert s_inf < 1 / r0 < s0
    s1 = min(s0 + 1e-3, 1.0)
    if s1 > s0:
        assert pi1_map(p, s1, i0) < s_inf


def test_w_infinity_examples(pertussis):
    assert w_infinity(pertussis.replace(nu=0.0), 0.9, 1e-6, 0.05) == 0.05
    assert w_infinity(pertussis, 0.9, 1e-6, 0.0) == 0.0
    assert w_infinity(pertussis, 0.9, 1e-6, 0.05) < 0.05


def test_w_infinity_matches_layer_integration():
    p = ModelParams(260, 17, kappa=0.1, nu=5, xi=0.0125)
    s0, i0, w0 = 0.5, 1e-6, 0.3
    tr = integrate("SIRWS", p, (s0, i0, w0), layer=True, events=[EventSpec.i_crossing(1e-12, -1, True)])
    w_end = tr.final.w
    assert w_end == pytest.approx(w_infinity(p, s0, i0, w0), rel=1e-4)


def test_layer_orbit_lands_on_pi1():
    p = ModelParams(260, 17)
    for s0 in (0.3, 0.6, 0.9):
        tr = integrate("SIR", p, (s0, 1e-6), layer=True, events=[EventSpec.i_crossing(1e-12, -1, True)])
        assert tr.final.s == pytest.approx(pi1_map(p, s0, 1e-6), abs=1e-6)


def test_s_nullclines():
    p = ModelParams(2, 1, xi=1, epsilon=1e-3)
    assert s_nullcline("SIR", p, 1.0) == 0.0
    assert s_nullcline("SIR", p, 0.5) == pytest.approx(5e-4, rel=1e-15)
    assert vector_field("SIR", "fast", p, (0.4, s_nullcline("SIR", p, 0.4)))[0] == pytest.approx(0, abs=1e-18)
    q = ModelParams(2, 1, delta=0.3, epsilon=1e-2)
    assert s_nullcline("SIRS", q, 1.0) == 0.0
    assert vector_field("SIRS", "fast", q, (0.4, s_nullcline("SIRS", q, 0.4)))[0] == pytest.approx(0, abs=1e-18)
    with pytest.raises(ParameterError):
        s_nullcline("SIRWS", ModelParams(2, 1), 0.5)
    with pytest.raises(DomainError):
        s_nullcline("SIR", p, 0.0)
