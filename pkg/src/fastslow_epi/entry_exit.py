"""Exit points and exit times near the turning point S = 1/R0.

For SIR and SIRS the exit point of a trajectory that entered the attracting
part of I = 0 at P is the root greater than P of::

    F(x) = x - P + (1 - 1/R0) ln((1 - x) / (1 - P))

For SIRWS the slow flow on I = 0 is linear and solved in closed form; the
exit time T is the positive zero of the accumulated attraction
int_0^T (R0 S(tau) - 1) dtau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .conserved import _other_root, _phi
from .errors import DomainError, NoExitError, ParameterError, PreconditionError
from .model import ModelParams, SystemState

EXIT_TIME_CAP = 1e4
_MACHINE = np.finfo(float).eps


@dataclass(frozen=True)
class EntryExitSolution:
    entry: SystemState
    exit: SystemState
    residual: float
    exit_time: float | None = None


@dataclass(frozen=True)
class SlowFlowCoefficients:
    """S(tau) = 1 + (c + b tau) exp(-a tau) on the SIRWS critical manifold."""

    a: float
    b: float
    c: float

    @classmethod
    def from_entry(cls, p: ModelParams, s_inf: float, w_inf: float) -> "SlowFlowCoefficients":
        _check_feasible(s_inf, w_inf)
        a = 2.0 * p.kappa + p.xi
        if not a > 0.0:
            raise ParameterError("slow flow needs 2 kappa + xi > 0")
        return cls(a, 2.0 * p.kappa * (s_inf + w_inf - 1.0), s_inf - 1.0)


def _check_feasible(s_inf, w_inf):
    if s_inf < 0.0 or w_inf < 0.0 or s_inf + w_inf > 1.0 or s_inf >= 1.0:
        raise DomainError(f"infeasible entry point (S, W) = ({s_inf!r}, {w_inf!r})")


# -- SIR / SIRS --------------------------------------------------------------

def exit_function(p: ModelParams, p0: float, x: float) -> float:
    return x - p0 + (1.0 - 1.0 / p.r0) * (math.log1p(-x) - math.log1p(-p0))


def sir_exit_point(p: ModelParams, p0: float) -> float:
    """Exit point S1 in (1/R0, 1) for an orbit that entered I = 0 at p0 < 1/R0."""
    p.require_endemic()
    turn = 1.0 / p.r0
    if not 0.0 < p0 < turn:
        raise DomainError(f"sir_exit_point needs 0 < p0 < 1/R0 = {turn:.17g}, got {p0!r}")
    # with 1 - x = (1 - 1/R0) e^t, F / (1 - 1/R0) = phi(t) - phi(t0)
    c = 1.0 - turn
    t0 = math.log1p(-p0) - math.log(c)
    t = _other_root(_phi(t0), -1, "sir_exit_point")
    return turn - c * math.expm1(t)


def sir_exit_solution(p: ModelParams, p0: float) -> EntryExitSolution:
    s1 = sir_exit_point(p, p0)
    return EntryExitSolution(SystemState(p0, 0.0), SystemState(s1, 0.0), exit_function(p, p0, s1))


def generic_entry_exit(f, g, y0: float, y_max: float, n_samples: int = 65) -> float:
    """Exit value p0(y0) > 0 solving int_{y0}^{p0} f(y)/g(y) dy = 0.

    ``f`` and ``g`` are the layer functions evaluated on the critical
    manifold. Requires g > 0 on [y0, y_max] and sign(f(y)) = sign(y).
    """
    if not y0 < 0.0 < y_max:
        raise PreconditionError(f"need y0 < 0 < y_max, got y0={y0!r}, y_max={y_max!r}")
    for y in np.linspace(y0, y_max, n_samples):
        gy = g(y)
        if not gy > 0.0:
            raise PreconditionError(f"g(0, y, 0) = {gy!r} is not positive at y = {y!r}")
        fy = f(y)
        if y != 0.0 and np.sign(fy) != np.sign(y):
            raise PreconditionError(f"sign of f(0, y, 0) = {fy!r} differs from sign of y = {y!r}")

    ratio = lambda y: f(y) / g(y)
    attraction, _ = quad(ratio, y0, 0.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    H = lambda q: quad(ratio, 0.0, q, epsabs=1e-13, epsrel=1e-12, limit=200)[0] + attraction
    if H(y_max) < 0.0:
        raise NoExitError("attraction is not compensated before y_max", y0=y0, y_max=y_max)
    return brentq(H, 0.0, y_max, xtol=1e-14, rtol=1e-13)


# -- SIRWS -------------------------------------------------------------------

def slow_flow_solution(p: ModelParams, s_inf: float, w_inf: float, tau):
    """Closed-form (S, W)(tau) on I = 0 starting from (s_inf, w_inf)."""
    co = SlowFlowCoefficients.from_entry(p, s_inf, w_inf)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise DomainError("tau must be >= 0")
    decay = np.exp(-co.a * tau)
    # 1 + c e^{-a tau} rearranged so tau = 0 returns s_inf exactly
    s = s_inf * decay - np.expm1(-co.a * tau) + co.b * tau * decay
    w = (w_inf - co.b * tau) * decay
    if s.ndim == 0:
        return float(s), float(w)
    return s, w


def accumulated_attraction(p: ModelParams, s_inf: float, w_inf: float, t: float) -> float:
    """int_0^t (R0 S(tau) - 1) dtau in closed form."""
    co = SlowFlowCoefficients.from_entry(p, s_inf, w_inf)
    a, b, c, r0 = co.a, co.b, co.c, p.r0
    at = a * t
    return (r0 / a**2) * (-(a * c + b) * math.expm1(-at) - a * b * t * math.exp(-at)) + (r0 - 1.0) * t


def _bracket_positive_zero(fn, cap, what):
    t = _MACHINE
    v = fn(t)
    while v < 0.0:
        if t > cap:
            raise NoExitError(f"{what}: no sign change before tau = {cap:g}", last_value=v)
        t *= 2.0
        v = fn(t)
    return (t / 2.0 if t > _MACHINE else 0.0), t


def exit_time(p: ModelParams, s_inf: float, w_inf: float, cap: float = EXIT_TIME_CAP) -> float:
    """Strictly positive root T_E of the closed-form exit-time equation."""
    _check_entry(p, s_inf, w_inf)
    fn = lambda t: accumulated_attraction(p, s_inf, w_inf, t)
    a, b = _bracket_positive_zero(fn, cap, "exit_time")
    return brentq(fn, a, b, xtol=1e-300, rtol=1e-13, maxiter=500)


def exit_time_quadrature(p: ModelParams, s_inf: float, w_inf: float, cap: float = EXIT_TIME_CAP) -> float:
    """Same root as :func:`exit_time`, with the integral done by adaptive quadrature."""
    _check_entry(p, s_inf, w_inf)
    r0 = p.r0
    integrand = lambda t: r0 * slow_flow_solution(p, s_inf, w_inf, t)[0] - 1.0
    fn = lambda t: quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    a, b = _bracket_positive_zero(fn, cap, "exit_time_quadrature")
    return brentq(fn, a, b, xtol=1e-300, rtol=1e-13, maxiter=500)


def _check_entry(p, s_inf, w_inf):
    p.require_endemic()
    _check_feasible(s_inf, w_inf)
    if not s_inf < 1.0 / p.r0:
        raise DomainError(f"entry S = {s_inf!r} is not on the attracting side S < 1/R0 = {1.0 / p.r0:.17g}")


def sirws_exit_point(p: ModelParams, s_inf: float, w_inf: float, cap: float = EXIT_TIME_CAP) -> EntryExitSolution:
    t_e = exit_time(p, s_inf, w_inf, cap)
    s, w = slow_flow_solution(p, s_inf, w_inf, t_e)
    return EntryExitSolution(
        entry=SystemState(s_inf, 0.0, w_inf),
        exit=SystemState(s, 0.0, w),
        residual=accumulated_attraction(p, s_inf, w_inf, t_e),
        exit_time=t_e,
    )
