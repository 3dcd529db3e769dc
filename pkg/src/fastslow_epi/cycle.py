"""Singular-cycle search for SIRWS on the critical manifold.

A section J1 = {S = s0, I = 0, w in (w_lo, w_hi)} is pushed through the fast
map (landing point and W decay) and then along the slow flow until the exit
time. A singular cycle is a w with image (s0, w).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .conserved import gamma_invariant, pi1_map, w_infinity
from .entry_exit import accumulated_attraction, exit_time, slow_flow_solution
from .errors import BracketError, DomainError, PreconditionError
from .model import ModelKind, ModelParams

W_TOL = 1e-12
XI_TOL = 1e-13
G_TOL = 1e-10  # |g| at a bracket end this small counts as a root


class J3Position(enum.Enum):
    LEFT = "LEFT"
    CROSSING = "CROSSING"
    RIGHT = "RIGHT"


@dataclass(frozen=True)
class SectionJ1:
    s0: float
    w_lo: float
    w_hi: float

    def __post_init__(self):
        if not 0.0 < self.s0 < 1.0:
            raise DomainError(f"s0 must lie in (0, 1), got {self.s0!r}")
        if not 0.0 < self.w_lo < self.w_hi < 1.0 - self.s0:
            raise DomainError(f"w range ({self.w_lo!r}, {self.w_hi!r}) not inside (0, 1 - s0)")

    @classmethod
    def full(cls, s0: float, margin: float = 1e-3) -> "SectionJ1":
        span = 1.0 - s0
        return cls(s0, margin * span, (1.0 - margin) * span)


@dataclass(frozen=True)
class MapImage:
    s_exit: float
    w_exit: float
    s_inf: float
    w_inf: float
    exit_time: float
    fast_residual: float
    slow_residual: float


def _check(p):
    p.validate_for(ModelKind.SIRWS)
    p.require_endemic()


def candidate_map(p: ModelParams, s0: float, w: float) -> MapImage:
    """Fast map from (s0, 0, w) followed by the slow flow up to the exit time."""
    _check(p)
    if not 1.0 / p.r0 < s0 < 1.0:
        raise DomainError(f"s0 must lie in (1/R0, 1), got {s0!r}")
    if not 0.0 < w < 1.0 - s0:
        raise DomainError(f"w must lie in (0, 1 - s0), got {w!r}")
    s_inf = pi1_map(p, s0, 0.0)
    w_inf = w_infinity(p, s0, 0.0, w, s_inf)
    t_e = exit_time(p, s_inf, w_inf)
    s1, w1 = slow_flow_solution(p, s_inf, w_inf, t_e)
    return MapImage(s1, w1, s_inf, w_inf, t_e,
                    gamma_invariant(p, s_inf, 0.0) - gamma_invariant(p, s0, 0.0),
                    accumulated_attraction(p, s_inf, w_inf, t_e))


@dataclass(frozen=True)
class J3Classification:
    position: J3Position
    w: np.ndarray
    s_exit: np.ndarray
    w_exit: np.ndarray


def classify_j3(p: ModelParams, j1: SectionJ1, grid_n: int = 32) -> J3Classification:
    if grid_n < 8:
        raise DomainError("grid_n must be >= 8")
    ws = np.linspace(j1.w_lo, j1.w_hi, grid_n)
    imgs = [candidate_map(p, j1.s0, w) for w in ws]
    s_exit = np.array([m.s_exit for m in imgs])
    w_exit = np.array([m.w_exit for m in imgs])
    d = s_exit - j1.s0
    if np.all(d > 0.0):
        pos = J3Position.RIGHT
    elif np.all(d < 0.0):
        pos = J3Position.LEFT
    else:
        pos = J3Position.CROSSING
    return J3Classification(pos, ws, s_exit, w_exit)


def default_section(p: ModelParams, margin: float = 1e-3, grid_n: int = 64) -> SectionJ1:
    """Section through the s0 whose mid-range image returns to S = s0.

    s0 is the root of s_exit(s0, (1 - s0)/2) - s0, found by a sign-change scan
    over (1/R0, 1) followed by Brent refinement.
    """
    _check(p)
    turn = 1.0 / p.r0

    def d(s0):
        return candidate_map(p, s0, 0.5 * (1.0 - s0)).s_exit - s0

    grid = turn + (1.0 - turn) * np.linspace(0.0, 1.0, grid_n + 2)[1:-1]
    vals = [d(s) for s in grid]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            return SectionJ1.full(float(a), margin)
        if fa * fb < 0.0:
            return SectionJ1.full(brentq(d, a, b, xtol=1e-14, rtol=1e-13), margin)
    raise BracketError("no s0 with a returning mid-range image", r0=p.r0)


@dataclass(frozen=True)
class CycleSearchResult:
    xi_star: float
    w_star: float
    s0: float
    residuals: tuple
    end_positions: tuple
    crossing_interval: tuple
    fast_span: float
    slow_duration: float


def w_bar(p: ModelParams, j1: SectionJ1) -> float | None:
    """w in the section whose image has S = s0, or None if J3 misses J1."""
    d = lambda w: candidate_map(p, j1.s0, w).s_exit - j1.s0
    a, b = d(j1.w_lo), d(j1.w_hi)
    if a == 0.0:
        return j1.w_lo
    if b == 0.0:
        return j1.w_hi
    if a * b > 0.0:
        return None
    return brentq(d, j1.w_lo, j1.w_hi, xtol=W_TOL, rtol=4 * np.finfo(float).eps)


def _result(p, j1, xi, w, ends, interval):
    q = p.replace(xi=xi)
    img = candidate_map(q, j1.s0, w)
    return CycleSearchResult(xi, w, j1.s0, (abs(img.s_exit - j1.s0), abs(img.w_exit - w)), ends, interval,
                             j1.s0 - img.s_inf, img.exit_time)


def find_singular_cycle(p: ModelParams, j1: SectionJ1, xi_bracket: tuple) -> CycleSearchResult:
    """Search xi in the bracket for a w with candidate_map(s0, w) = (s0, w)."""
    _check(p)
    x1, x2 = map(float, xi_bracket)
    if not 0.0 < x1 < x2:
        raise DomainError(f"xi bracket must satisfy 0 < xi1 < xi2, got {xi_bracket!r}")
    c1 = classify_j3(p.replace(xi=x1), j1).position
    c2 = classify_j3(p.replace(xi=x2), j1).position
    ends = (c1, c2)
    if c1 is c2 and c1 is not J3Position.CROSSING:
        raise PreconditionError(f"J3 lies {c1.value} of J1 at both bracket ends")

    def d(xi, w):
        return candidate_map(p.replace(xi=xi), j1.s0, w).s_exit - j1.s0

    # xi-interval on which J3 meets J1, bounded by where either section end returns exactly
    def edge(w, default):
        fa, fb = d(x1, w), d(x2, w)
        if fa * fb < 0.0:
            return brentq(lambda xi: d(xi, w), x1, x2, xtol=XI_TOL, rtol=4 * np.finfo(float).eps)
        return default

    lo = x1 if c1 is J3Position.CROSSING else None
    hi = x2 if c2 is J3Position.CROSSING else None
    e_lo, e_hi = edge(j1.w_lo, None), edge(j1.w_hi, None)
    cands = sorted(e for e in (e_lo, e_hi) if e is not None)
    if lo is None:
        lo = cands[0] if cands else None
    if hi is None:
        hi = cands[-1] if cands else None
    if lo is None or hi is None:
        raise BracketError("could not locate the xi interval where J3 meets J1", xi_bracket=xi_bracket)

    def g(xi):
        wb = w_bar(p.replace(xi=xi), j1)
        if wb is None:
            # rounding at an interval edge: snap to the nearer section end
            da = abs(d(xi, j1.w_lo))
            wb = j1.w_lo if da <= abs(d(xi, j1.w_hi)) else j1.w_hi
        return wb - candidate_map(p.replace(xi=xi), j1.s0, wb).w_exit, wb

    interval = (lo, hi)
    glo, wlo = g(lo)
    if abs(glo) <= G_TOL:
        return _result(p, j1, lo, wlo, ends, interval)
    ghi, whi = g(hi)
    if abs(ghi) <= G_TOL:
        return _result(p, j1, hi, whi, ends, interval)
    if glo * ghi > 0.0:
        raise BracketError("g(xi) keeps one sign on the crossing interval", interval=interval, g=(glo, ghi))
    xi_star = brentq(lambda xi: g(xi)[0], lo, hi, xtol=XI_TOL, rtol=4 * np.finfo(float).eps)
    return _result(p, j1, xi_star, g(xi_star)[1], ends, interval)


def w_derivative(p: ModelParams, s0: float, w: float, h: float = 1e-6) -> float:
    """Central difference of w_exit with respect to w."""
    return (candidate_map(p, s0, w + h).w_exit - candidate_map(p, s0, w - h).w_exit) / (2.0 * h)
