"""Equilibrium spectra, Hopf scans, attractor labels and the L1 Lyapunov function."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, FastSlowError, NoEndemicEquilibriumError, ParameterError
from .model import ModelKind, ModelParams, SystemState, TimeFrame, endemic_equilibrium, jacobian
from .orbit import EventSpec, IntegratorConfig, integrate

AMP_TOL = 1e-4
HOPF_RE_TOL = 1e-8
_PARAMS = ("beta", "gamma", "xi", "kappa", "nu", "delta", "epsilon")


def equilibrium_spectrum(kind, p: ModelParams, frame=TimeFrame.FAST) -> np.ndarray:
    """Eigenvalues of the Jacobian at the endemic equilibrium, by real part descending."""
    kind = ModelKind.parse(kind)
    x = endemic_equilibrium(kind, p)
    J = jacobian(kind, frame, p, x)
    if kind.dim == 2:
        tr = J[0, 0] + J[1, 1]
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        disc = complex(tr * tr - 4.0 * det)
        root = disc**0.5
        ev = np.array([(tr + root) / 2.0, (tr - root) / 2.0])
    else:
        tr = np.trace(J)
        minors = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
                  + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
                  + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        det = np.linalg.det(J)
        # np.roots works on the companion matrix
        ev = np.roots([1.0, -tr, minors, -det]).astype(complex)
    order = np.lexsort((-ev.imag, -ev.real))
    return ev[order]


def _leading_pair(ev, rel=1e-12):
    cx = [z for z in ev if abs(z.imag) > rel * max(1.0, abs(z))]
    if not cx:
        return None
    return max(cx, key=lambda z: (z.real, z.imag))


class HopfFlag(enum.Enum):
    OK = "OK"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class HopfPoint:
    param_name: str
    param_value: float
    eigenvalue: complex
    direction: int  # sign of d Re(lambda) / d param
    flag: HopfFlag = HopfFlag.OK
    bracket: tuple = ()


@dataclass
class HopfScan:
    param_name: str
    grid: np.ndarray
    re: np.ndarray
    im: np.ndarray
    points: list = field(default_factory=list)

    @property
    def hopf_points(self) -> list:
        return [h for h in self.points if h.flag is HopfFlag.OK]

    @property
    def undecided(self) -> list:
        return [h for h in self.points if h.flag is HopfFlag.UNDECIDED]


def _scan_grid(lo, hi, steps, spacing):
    if spacing == "auto":
        spacing = "geometric" if lo > 0.0 and hi / lo > 10.0 else "linear"
    if spacing == "geometric":
        if lo <= 0.0:
            raise DomainError("geometric grid needs a positive lower end")
        return np.geomspace(lo, hi, steps)
    if spacing == "linear":
        return np.linspace(lo, hi, steps)
    raise ParameterError(f"unknown grid spacing {spacing!r}")


_ABSENT = np.array([])  # no endemic equilibrium at this parameter value


def _spectrum_at(kind, p, name, value):
    try:
        return equilibrium_spectrum(kind, p.replace(**{name: value}))
    except NoEndemicEquilibriumError:
        return _ABSENT
    except FastSlowError:
        return None


def _pair_at(kind, p, name, value):
    ev = _spectrum_at(kind, p, name, value)
    return None if ev is None else _leading_pair(ev)


def hopf_scan(kind, p: ModelParams, param_name: str, param_range, steps: int = 64,
              spacing: str = "auto") -> HopfScan:
    """Locate sign changes of the leading complex pair's real part along one parameter."""
    kind = ModelKind.parse(kind)
    if param_name not in _PARAMS:
        raise ParameterError(f"unknown parameter {param_name!r}")
    if steps < 16:
        raise DomainError("steps must be >= 16")
    lo, hi = map(float, param_range)
    if not lo < hi:
        raise DomainError("empty parameter range")
    grid = _scan_grid(lo, hi, steps, spacing)
    spectra = [_spectrum_at(kind, p, param_name, v) for v in grid]
    pairs = [None if ev is None else _leading_pair(ev) for ev in spectra]
    re = np.array([z.real if z is not None else np.nan for z in pairs])
    im = np.array([abs(z.imag) if z is not None else np.nan for z in pairs])
    scan = HopfScan(param_name, grid, re, im)

    for k in range(steps - 1):
        a, b = grid[k], grid[k + 1]
        ra, rb = re[k], re[k + 1]
        if np.isnan(ra) or np.isnan(rb):
            if np.isnan(ra) and np.isnan(rb):
                continue
            # the pair turns real inside the bracket; harmless only if no eigenvalue
            # on the real side disagrees in sign with the complex side
            r_cx = rb if np.isnan(ra) else ra
            ev_real = spectra[k] if np.isnan(ra) else spectra[k + 1]
            if ev_real is _ABSENT:
                continue
            if ev_real is None or np.any(np.sign(ev_real.real) != np.sign(r_cx)):
                scan.points.append(HopfPoint(param_name, math.nan, complex(math.nan), 0,
                                             HopfFlag.UNDECIDED, (a, b)))
            continue
        if ra == 0.0 or ra * rb >= 0.0:
            if ra == 0.0:
                z = pairs[k]
                scan.points.append(HopfPoint(param_name, a, z, int(np.sign(rb)), HopfFlag.OK, (a, b)))
            continue
        scan.points.append(_refine_hopf(kind, p, param_name, a, b, ra, rb))
    return scan


def _refine_hopf(kind, p, name, a, b, ra, rb):
    def f(v):
        z = _pair_at(kind, p, name, v)
        if z is None:
            raise _PairLost(v)
        return z.real

    try:
        v = brentq(f, a, b, xtol=1e-14 * max(1.0, abs(a)), rtol=4 * np.finfo(float).eps, maxiter=200)
    except _PairLost:
        return HopfPoint(name, math.nan, complex(math.nan), 0, HopfFlag.UNDECIDED, (a, b))
    z = _pair_at(kind, p, name, v)
    flag = HopfFlag.OK if abs(z.real) < HOPF_RE_TOL else HopfFlag.UNDECIDED
    return HopfPoint(name, v, complex(z.real, abs(z.imag)), int(np.sign(rb - ra)), flag, (a, b))


class _PairLost(Exception):
    pass


class AttractorTag(enum.Enum):
    POINT = "POINT"
    CYCLE = "CYCLE"
    BISTABLE = "BISTABLE"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class OrbitEvidence:
    initial: SystemState
    tag: AttractorTag
    amplitude: float
    period: float
    n_peaks: int
    note: str = ""


@dataclass(frozen=True)
class AttractorLabel:
    tag: AttractorTag
    evidence: tuple


def default_initial_conditions(kind, p: ModelParams, offset: float = 1e-2) -> list:
    """One state 1% off the equilibrium and one far away with I = 1e-3."""
    kind = ModelKind.parse(kind)
    eq = endemic_equilibrium(kind, p)
    near = SystemState(eq.s * (1.0 + offset), eq.i, eq.w)
    w_far = None if kind.dim == 2 else 0.5 * (1.0 - 0.9 - 1e-3)
    return [near, SystemState(0.9, 1e-3, w_far)]


def _classify_one(kind, p, x0, horizon, transient_fraction, amp_tol, config):
    s_peak = (p.gamma + p.epsilon * p.xi) / p.beta
    ev_max = EventSpec.s_crossing(s_peak, -1)
    ev_min = EventSpec.s_crossing(s_peak, +1)
    cfg = config or IntegratorConfig()
    cfg = IntegratorConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.log_switch_threshold, horizon,
                           cfg.max_steps, cfg.event_tol)
    try:
        tr = integrate(kind, p, x0, TimeFrame.FAST, cfg, [ev_max, ev_min])
    except FastSlowError as exc:
        return OrbitEvidence(x0, AttractorTag.UNDECIDED, math.nan, math.nan, 0, f"integration failed: {exc}")

    t_cut = tr.times[0] + transient_fraction * horizon
    t_mid = 0.5 * (t_cut + tr.times[-1])
    keep = tr.times >= t_cut
    i_post = tr.states[keep, 1]
    peaks = [e for e in tr.events if e.spec == ev_max and e.time >= t_cut]
    troughs = [e for e in tr.events if e.spec == ev_min and e.time >= t_cut]
    if not len(i_post):
        return OrbitEvidence(x0, AttractorTag.UNDECIDED, math.nan, math.nan, 0, "empty post-transient window")

    def amp(lo, hi):
        his = [e.state.i for e in peaks if lo <= e.time < hi]
        los = [e.state.i for e in troughs if lo <= e.time < hi]
        sel = (tr.times >= lo) & (tr.times < hi)
        vals = np.concatenate([tr.states[sel, 1], his, los])
        return float(vals.max() - vals.min()) if len(vals) else 0.0

    total = amp(t_cut, math.inf)
    if total < amp_tol:
        return OrbitEvidence(x0, AttractorTag.POINT, total, math.nan, len(peaks))
    first, second = amp(t_cut, t_mid), amp(t_mid, math.inf)
    n1 = sum(e.time < t_mid for e in peaks)
    n2 = len(peaks) - n1
    period = float(np.mean(np.diff([e.time for e in peaks]))) if len(peaks) >= 2 else math.nan
    stable = min(first, second) > amp_tol and abs(first - second) <= 0.05 * max(first, second)
    if stable and n1 >= 2 and n2 >= 2 and math.isfinite(period) and period < (tr.times[-1] - t_cut) / 2.0:
        return OrbitEvidence(x0, AttractorTag.CYCLE, total, period, len(peaks))
    return OrbitEvidence(x0, AttractorTag.UNDECIDED, total, period, len(peaks),
                         f"amplitude {first:.3g} then {second:.3g}")


def attractor_classify(kind, p: ModelParams, initial_conditions: Sequence | None = None,
                       horizon: float = 2000.0, transient_fraction: float = 0.5,
                       amp_tol: float = AMP_TOL, config: IntegratorConfig | None = None) -> AttractorLabel:
    """Label the long-run behaviour from several starts by post-transient I amplitude."""
    kind = ModelKind.parse(kind)
    if initial_conditions is None:
        initial_conditions = default_initial_conditions(kind, p)
    ics = [x if isinstance(x, SystemState) else SystemState.from_array(x) for x in initial_conditions]
    if len(ics) < 2:
        raise DomainError("attractor_classify needs at least two initial conditions")
    if not 0.0 < transient_fraction < 1.0:
        raise DomainError("transient_fraction must lie in (0, 1)")
    ev = tuple(_classify_one(kind, p, x, horizon, transient_fraction, amp_tol, config) for x in ics)
    tags = {e.tag for e in ev}
    if AttractorTag.UNDECIDED in tags:
        tag = AttractorTag.UNDECIDED
    elif tags == {AttractorTag.POINT}:
        tag = AttractorTag.POINT
    elif tags == {AttractorTag.CYCLE}:
        tag = AttractorTag.CYCLE
    else:
        tag = AttractorTag.BISTABLE
    return AttractorLabel(tag, ev)


def lyapunov_l1(p: ModelParams, s: float, i: float, log_i: float | None = None) -> float:
    """L1 = S + I - S_E ln S - I_E ln I - C_E for SIR, zero at the equilibrium.

    Pass ``log_i`` when I is too small to hold in a float.
    """
    if not s > 0.0:
        raise DomainError(f"L1 needs S > 0, got {s!r}")
    if log_i is None:
        if not i > 0.0:
            raise DomainError(f"L1 needs I > 0, got {i!r}")
        log_i = math.log(i)
    elif i < 0.0:
        raise DomainError(f"L1 needs I >= 0, got {i!r}")
    eq = endemic_equilibrium(ModelKind.SIR, p)
    se, ie = eq.s, eq.i
    # grouped so each bracket vanishes at the equilibrium
    return (s - se - se * math.log(s / se)) + (i - ie - ie * (log_i - math.log(ie)))
