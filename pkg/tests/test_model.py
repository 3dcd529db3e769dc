import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastslow_epi import (
    LogState, ModelKind, ModelParams, SystemState, TimeFrame, endemic_equilibrium, jacobian, layer_field,
    log_field, reduced_field, vector_field,
)
from fastslow_epi.errors import DomainError, NoEndemicEquilibriumError, ParameterError


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(beta=0.0, gamma=1.0)
    with pytest.raises(ParameterError):
        ModelParams(beta=1.0, gamma=1.0, xi=-1e-3)
    with pytest.raises(ParameterError):
        ModelParams(beta=1.0, gamma=math.inf)
    with pytest.raises(ParameterError):
        ModelParams(beta=1.0, gamma=1.0, epsilon=0.0)
    assert ModelParams(beta=3, gamma=2).r0 == 1.5


def test_unused_params_rejected_per_kind():
    with pytest.raises(ParameterError, match="kappa"):
        ModelParams(2, 1, kappa=0.1).validate_for("SIR")
    with pytest.raises(ParameterError, match="xi"):
        ModelParams(2, 1, xi=0.1).validate_for("SIRS")
    with pytest.raises(ParameterError, match="delta"):
        ModelParams(2, 1, delta=0.1).validate_for("SIRWS")
    with pytest.raises(ParameterError):
        ModelKind.parse("SEIR")


def test_state_invariants():
    SystemState(0.5, 0.5).check("SIR")
    with pytest.raises(DomainError):
        SystemState(0.6, 0.5).check("SIR")
    with pytest.raises(DomainError):
        SystemState(0.5, -0.1).check("SIR")
    with pytest.raises(DomainError):
        SystemState(0.5, 0.1).check("SIRWS")


def test_disease_free_point_is_equilibrium(sir_p):
    assert np.array_equal(vector_field("SIR", "fast", sir_p, SystemState(1.0, 0.0)), [0.0, 0.0])


def test_sir_equilibrium_residual(sir_p):
    eq = endemic_equilibrium("SIR", sir_p)
    assert eq.s == pytest.approx(0.5005, abs=1e-15)
    assert eq.i == pytest.approx(1e-3 * (1 - 0.5005) / (2 * 0.5005), rel=1e-14)
    assert np.max(np.abs(vector_field("SIR", "fast", sir_p, eq))) < 1e-14


def test_sir_equilibrium_eps_limit():
    p = ModelParams(2, 1, xi=1, epsilon=1e-12)
    eq = endemic_equilibrium("SIR", p)
    assert eq.s == pytest.approx(0.5, abs=1e-11)
    assert eq.i < 1e-11


def test_sirs_equilibrium():
    p = ModelParams(3, 1, delta=0.5, epsilon=0.01)
    eq = endemic_equilibrium("SIRS", p)
    assert eq.s == pytest.approx(1 / 3, abs=1e-15)
    assert np.max(np.abs(vector_field("SIRS", "fast", p, eq))) < 1e-15


def test_sirws_equilibrium_residual(pertussis):
    eq = endemic_equilibrium("SIRWS", pertussis)
    assert np.max(np.abs(vector_field("SIRWS", "fast", pertussis, eq))) < 1e-12
    assert min(eq.s, eq.i, eq.w) > 0 and eq.s + eq.i + eq.w < 1


def test_no_endemic_equilibrium():
    with pytest.raises(NoEndemicEquilibriumError):
        endemic_equilibrium("SIR", ModelParams(1, 2, xi=1))


def test_frame_consistency_sirws(pertussis):
    p = pertussis.replace(epsilon=0.01)
    x = SystemState(0.5, 0.1, 0.2)
    fast = vector_field("SIRWS", TimeFrame.FAST, p, x)
    slow = vector_field("SIRWS", TimeFrame.SLOW, p, x)
    assert np.allclose(fast, p.epsilon * slow, rtol=1e-15, atol=0)


def test_layer_field_examples():
    p = ModelParams(2, 1)
    assert np.array_equal(layer_field("SIR", p, (0.3, 0.0)), [0.0, 0.0])
    assert np.allclose(layer_field("SIR", p, (0.5, 0.1)), [-0.1, 0.0], atol=1e-17)
    q = ModelParams(260, 17, kappa=0.1, xi=0.01)
    assert layer_field("SIRWS", q, (0.3, 0.1, 0.2))[2] == 0.0


def test_sirws_reduces_to_sir():
    p = ModelParams(2, 1, xi=0.5, epsilon=0.1)
    a = vector_field("SIR", "fast", p, (0.4, 0.2))
    b = vector_field("SIRWS", "fast", p, (0.4, 0.2, 0.0))
    assert np.array_equal(a, b[:2])


def test_reduced_field_examples(pertussis):
    assert reduced_field("SIR", ModelParams(2, 1, xi=1), (1.0, 0.0))[0] == 0.0
    assert np.array_equal(reduced_field("SIRWS", pertussis, (1.0, 0.0, 0.0)), [0.0, 0.0])
    assert np.allclose(reduced_field("SIRWS", pertussis, (0.2, 0.0, 0.3)), [0.07, 0.03625], atol=1e-15)
    assert reduced_field("SIRS", ModelParams(2, 1, delta=0.3), (0.5, 0.0))[0] == pytest.approx(0.15)
    with pytest.raises(DomainError):
        reduced_field("SIR", ModelParams(2, 1, xi=1), (0.5, 0.1))


def test_log_field_chain_rule(pertussis):
    x = LogState(0.3, math.log(1e-6), 0.2)
    lf = log_field(pertussis, x)
    vf = vector_field("SIRWS", "fast", pertussis, x.to_state())
    assert math.exp(x.v) * lf[1] == pytest.approx(vf[1], rel=1e-14)
    assert lf[0] == pytest.approx(vf[0], rel=1e-14)
    assert lf[2] == pytest.approx(vf[2], rel=1e-14)


def test_log_field_sign_change(pertussis):
    s_star = (pertussis.gamma + pertussis.epsilon * pertussis.xi) / pertussis.beta
    assert log_field(pertussis, LogState(s_star * (1 - 1e-9), -10.0, 0.1))[1] < 0
    assert log_field(pertussis, LogState(s_star * (1 + 1e-9), -10.0, 0.1))[1] > 0


@given(st.floats(0.01, 0.9), st.floats(-30.0, -1e-3), st.floats(0.0, 0.05))
def test_log_state_round_trip(s, v, w):
    x = LogState(s, v, w)
    y = LogState.from_state(x.to_state())
    assert y.s == s and y.w == w
    assert y.v == pytest.approx(v, rel=1e-14, abs=1e-15)


def test_sir_jacobian_at_disease_free(sir_p):
    J = jacobian("SIR", "fast", sir_p, (1.0, 0.0))
    eps, xi, b, g = sir_p.epsilon, sir_p.xi, sir_p.beta, sir_p.gamma
    assert J[1, 0] == 0.0
    assert np.allclose(np.diag(J), [-eps * xi, b - g - eps * xi], rtol=1e-15)


def _fd_jacobian(kind, p, x, h=1e-6):
    x = np.asarray(x, float)
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((vector_field(kind, "fast", p, x + e) - vector_field(kind, "fast", p, x - e)) / (2 * h))
    return np.column_stack(cols)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.6), st.floats(0.01, 0.2), st.floats(1e-3, 0.15), st.floats(0.05, 1.0))
def test_jacobian_matches_finite_differences(s, i, w, eps):
    p = ModelParams(260, 17, xi=0.0125, kappa=0.1, nu=5, epsilon=eps)
    x = (s, i, w)
    J = jacobian("SIRWS", "fast", p, x)
    assert np.max(np.abs(J - _fd_jacobian("SIRWS", p, x))) < 1e-6
    assert np.allclose(J, eps * jacobian("SIRWS", "slow", p, x), rtol=1e-14, atol=0)
    q = ModelParams(2, 1, xi=1, epsilon=eps)
    assert np.max(np.abs(jacobian("SIR", "fast", q, (s, i)) - _fd_jacobian("SIR", q, (s, i)))) < 1e-6
