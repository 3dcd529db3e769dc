"""Layer-flow constant of motion and the maps it induces on the critical manifold."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, ParameterError
from .model import ModelKind, ModelParams, s_nullcline_sir, s_nullcline_sirs

ROOT_RTOL = 1e-12


def _root(f, a, b, what, rtol=ROOT_RTOL, xtol=1e-300):
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(f"{what}: root not bracketed", a=a, b=b, fa=fa, fb=fb)
    return brentq(f, a, b, xtol=xtol, rtol=rtol, maxiter=500)


def gamma_invariant(p: ModelParams, s: float, i: float) -> float:
    """Gamma(S, I) = gamma ln S - beta (S + I)."""
    if not s > 0.0:
        raise DomainError(f"Gamma needs S > 0, got {s!r}")
    if i < 0.0:
        raise DomainError(f"Gamma needs I >= 0, got {i!r}")
    return p.gamma * math.log(s) - p.beta * (s + i)


def _phi(u: float) -> float:
    """u - expm1(u), summed as a series near 0 where the difference cancels."""
    if abs(u) < 0.1:
        term, acc = -u * u / 2.0, 0.0
        k = 2
        while True:
            acc += term
            k += 1
            term *= u / k
            if abs(term) <= 1e-17 * abs(acc):
                return acc
    return u - math.expm1(u)


def _other_root(level: float, side: int, what: str) -> float:
    """Root of _phi(u) = level <= 0 with sign(u) = side.

    _phi is concave with maximum 0 at u = 0, so each side holds one root.
    Pi1, its inverse and the SIR exit map all reduce to this problem once
    S is written as (1/R0) e^u or 1 - S as (1 - 1/R0) e^u.
    """
    if level > 0.0:
        raise DomainError(f"{what}: level {level!r} above the maximum")
    if level == 0.0:
        return 0.0
    f = lambda u: _phi(u) - level
    far = float(side)
    while f(far) > 0.0:
        far *= 2.0
        if abs(far) > 7.0e2:
            raise BracketError(f"{what}: root beyond the float range", level=level)
    a, b = (far, 0.0) if side < 0 else (0.0, far)
    return _root(f, a, b, what, rtol=4 * np.finfo(float).eps, xtol=1e-300)


def pi1_map(p: ModelParams, s0: float, i0: float = 0.0) -> float:
    """Landing point S_inf < 1/R0 of the layer orbit through (s0, i0).

    Solves Gamma(S, 0) = Gamma(s0, i0) on (0, 1/R0).
    """
    p.require_endemic()
    turn = 1.0 / p.r0
    if not s0 > turn:
        raise DomainError(f"pi1_map needs s0 > 1/R0 = {turn:.17g}, got {s0!r}")
    if i0 < 0.0:
        raise DomainError(f"pi1_map needs i0 >= 0, got {i0!r}")
    # Gamma(S, I) = gamma (phi(u) - r0 I) + const with S = e^u / r0
    u0 = math.log(p.r0 * s0)
    u = _other_root(_phi(u0) - p.r0 * i0, -1, "pi1_map")
    return turn * math.exp(u)


def pi1_inverse(p: ModelParams, p0: float) -> float:
    """The point x > 1/R0 on the same Gamma level as (p0, 0).

    Root of G(x) = x - p0 + (1/R0) ln(p0/x) greater than p0. The root can
    exceed 1 when p0 is small; it is returned as is.
    """
    p.require_endemic()
    turn = 1.0 / p.r0
    if not 0.0 < p0 < turn:
        raise DomainError(f"pi1_inverse needs 0 < p0 < 1/R0 = {turn:.17g}, got {p0!r}")
    u = _other_root(_phi(math.log(p.r0 * p0)), 1, "pi1_inverse")
    return turn * math.exp(u)


def w_infinity(p: ModelParams, s0: float, i0: float, w0: float, s_inf: float | None = None) -> float:
    """W at the end of a layer orbit: w0 exp(-nu R0 (s0 + i0 - S_inf))."""
    if w0 < 0.0:
        raise DomainError(f"w0 must be >= 0, got {w0!r}")
    if s_inf is None:
        s_inf = pi1_map(p, s0, i0)
    return w0 * math.exp(-p.nu * p.r0 * (s0 + i0 - s_inf))


def s_nullcline(kind, p: ModelParams, s: float) -> float:
    kind = ModelKind.parse(kind)
    if not s > 0.0:
        raise DomainError(f"nullcline needs S > 0, got {s!r}")
    if kind is ModelKind.SIR:
        return s_nullcline_sir(p.validate_for(kind), s)
    if kind is ModelKind.SIRS:
        return s_nullcline_sirs(p.validate_for(kind), s)
    raise ParameterError("the S-nullcline is a surface for SIRWS; not supported")
