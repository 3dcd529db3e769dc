import math

import numpy as np
import pytest

from fastslow_epi import (
    EventSpec, IntegratorConfig, ModelParams, attractor_classify, endemic_equilibrium, equilibrium_spectrum,
    hopf_scan, integrate, jacobian, lyapunov_l1,
)
from fastslow_epi.bifurcation import AttractorTag, default_initial_conditions
from fastslow_epi.errors import DomainError


@pytest.fixture(scope="module")
def whs():
    return ModelParams(260, 17, xi=0.01, kappa=0.1, nu=5, epsilon=1.0)


@pytest.fixture(scope="module")
def nu_hopf(whs):
    return hopf_scan("SIRWS", whs, "nu", (0.5, 200), 64)


def test_sir_spectrum_stable_spiral(sir_p):
    ev = equilibrium_spectrum("SIR", sir_p)
    assert np.all(ev.real < 0) and abs(ev[0].imag) > 0
    J = jacobian("SIR", "fast", sir_p, endemic_equilibrium("SIR", sir_p))
    assert abs(ev.sum() - np.trace(J)) < 1e-12
    assert abs(ev.prod() - np.linalg.det(J)) < 1e-12


def test_sirws_spectrum_matches_eigvals(whs):
    ev = equilibrium_spectrum("SIRWS", whs)
    ref = np.linalg.eigvals(jacobian("SIRWS", "fast", whs, endemic_equilibrium("SIRWS", whs)))
    ref = ref[np.lexsort((-ref.imag, -ref.real))]
    assert np.allclose(ev, ref, rtol=1e-9, atol=1e-12)
    assert np.all(np.diff(ev.real) <= 0)


def test_unstable_between_hopf_points(whs):
    ev = equilibrium_spectrum("SIRWS", whs.replace(nu=8.0))
    assert ev[0].real > 0 and ev[0].imag != 0


def test_two_hopf_points_in_nu(nu_hopf):
    pts = nu_hopf.hopf_points
    assert len(pts) == 2 and not nu_hopf.undecided
    assert pts[0].param_value < pts[1].param_value
    assert pts[0].direction == 1 and pts[1].direction == -1
    for h in pts:
        assert abs(h.eigenvalue.real) < 1e-8 and h.eigenvalue.imag > 0


def test_doubling_steps_keeps_points(whs, nu_hopf):
    finer = hopf_scan("SIRWS", whs, "nu", (0.5, 200), 128).hopf_points
    assert len(finer) == 2
    for a, b in zip(nu_hopf.hopf_points, finer):
        assert a.param_value == pytest.approx(b.param_value, rel=1e-8)


def test_scan_validation(whs):
    with pytest.raises(DomainError):
        hopf_scan("SIRWS", whs, "nu", (0.5, 200), 8)
    with pytest.raises(DomainError):
        hopf_scan("SIRWS", whs, "nu", (5, 1), 32)


def test_h1_small_eps(whs, nu_hopf):
    h1 = hopf_scan("SIRWS", whs.replace(epsilon=0.05), "nu", (0.5, 200), 64).hopf_points[0]
    assert h1.param_value < nu_hopf.hopf_points[0].param_value
    assert abs(h1.param_value - 1.32) < 0.5


def test_beta_scan(whs):
    pts = hopf_scan("SIRWS", whs.replace(nu=6.0), "beta", (17.01, 2000), 64).hopf_points
    assert len(pts) == 2
    assert 17 < pts[0].param_value < pts[1].param_value


def test_node_to_spiral_transition_not_flagged():
    # stable node, then spiral, then node again: no sign change anywhere
    p = ModelParams(2, 1, xi=1, epsilon=1.0)
    scan = hopf_scan("SIR", p, "beta", (1.5, 40.0), 32)
    assert np.isnan(scan.re[0]) and np.isnan(scan.re[-1])
    assert np.all(scan.re[~np.isnan(scan.re)] < 0)
    assert not scan.points and not scan.undecided


def test_attractor_sir_point(sir_p):
    lab = attractor_classify("SIR", sir_p, horizon=2e4)
    assert lab.tag is AttractorTag.POINT
    other = attractor_classify("SIR", ModelParams(5, 1, xi=0.3, epsilon=0.01),
                               [(0.2, 0.01), (0.9, 1e-4), (0.5, 0.3)], horizon=2e4)
    assert other.tag is AttractorTag.POINT


def test_attractor_cycle_and_point(whs, nu_hopf):
    h1, h2 = (h.param_value for h in nu_hopf.hopf_points)
    mid = attractor_classify("SIRWS", whs.replace(nu=0.5 * (h1 + h2)))
    assert mid.tag is AttractorTag.CYCLE
    assert all(e.amplitude > 1e-3 and math.isfinite(e.period) for e in mid.evidence)
    low = attractor_classify("SIRWS", whs.replace(nu=0.9 * h1))
    assert low.tag is AttractorTag.POINT


def test_point_agrees_with_spectrum(whs):
    for nu in (1.0, 1.5, 5.0, 10.0):
        q = whs.replace(nu=nu)
        stable = equilibrium_spectrum("SIRWS", q)[0].real < 0
        near = default_initial_conditions("SIRWS", q)[0]
        lab = attractor_classify("SIRWS", q, [near, near])
        assert (lab.tag is AttractorTag.POINT) == stable


def test_attractor_failures_are_undecided(whs):
    lab = attractor_classify("SIRWS", whs, config=IntegratorConfig(max_steps=10))
    assert lab.tag is AttractorTag.UNDECIDED
    assert "integration failed" in lab.evidence[0].note
    with pytest.raises(DomainError):
        attractor_classify("SIRWS", whs, [(0.5, 0.01, 0.1)])


def test_lyapunov_values(sir_p):
    eq = endemic_equilibrium("SIR", sir_p)
    assert lyapunov_l1(sir_p, eq.s, eq.i) == 0.0
    assert lyapunov_l1(sir_p, 1.1 * eq.s, eq.i) > 0
    assert lyapunov_l1(sir_p, 0.3, 1e-300, log_i=math.log(1e-300)) == pytest.approx(
        lyapunov_l1(sir_p, 0.3, 0.0, log_i=-690.7755278982137), rel=1e-12)
    with pytest.raises(DomainError):
        lyapunov_l1(sir_p, 0.0, 0.1)
    with pytest.raises(DomainError):
        lyapunov_l1(sir_p, 0.3, 0.0)


def test_lyapunov_decreases_along_trajectory(sir_p):
    tr = integrate("SIR", sir_p, (0.9, 1e-4), config=IntegratorConfig(horizon=5e3),
                   events=[EventSpec.s_crossing(0.2, 0)])
    L = np.array([lyapunov_l1(sir_p, s, i, li) for (s, i), li in zip(tr.states, tr.log_i)])
    assert np.max(np.diff(L)) <= 1e-8
    assert L[-1] < L[0]
