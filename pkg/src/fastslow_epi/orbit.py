"""Orbit engine: adaptive integration, sections, return maps and singular orbits."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from . import _kernels as K
from .conserved import pi1_map
from .entry_exit import sir_exit_point
from .errors import ConvergenceError, DomainError, ParameterError, StiffnessError
from .model import ModelKind, ModelParams, SystemState, TimeFrame


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control for :func:`integrate`.

    ``log_switch_threshold=None`` resolves to min(eps**2, 1e-2), or 1e-8 for
    layer runs where eps plays no role. ``horizon`` is measured in the
    frame being integrated.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    log_switch_threshold: float | None = None
    horizon: float = 1e6
    max_steps: int = 5_000_000
    event_tol: float = 1e-12

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ParameterError("tolerances must be > 0")
        if not self.max_step > 0.0:
            raise ParameterError("max_step must be > 0")
        if self.log_switch_threshold is not None and not 0.0 < self.log_switch_threshold < 1.0:
            raise ParameterError("log_switch_threshold must lie in (0, 1)")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ParameterError("horizon must be finite and > 0")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be >= 1")
        if not self.event_tol > 0.0:
            raise ParameterError("event_tol must be > 0")

    def resolved_log_threshold(self, p: ModelParams, layer: bool) -> float:
        if self.log_switch_threshold is not None:
            return self.log_switch_threshold
        if layer:
            return 1e-8
        return min(p.epsilon**2, 1e-2)


class EventKind(enum.Enum):
    I_CROSSING = "i-crossing"
    S_CROSSING = "s-crossing"
    NULLCLINE = "nullcline-crossing"
    TUBE_EXIT = "tube-exit"


_KERNEL_TYPE = {
    EventKind.I_CROSSING: K.EV_I_LEVEL,
    EventKind.S_CROSSING: K.EV_S_LEVEL,
    EventKind.NULLCLINE: K.EV_S_NULLCLINE,
    EventKind.TUBE_EXIT: K.EV_I_LEVEL,
}


@dataclass(frozen=True)
class EventSpec:
    """A section crossing. ``direction`` is +1 (upward), -1 (downward) or 0 (both)."""

    kind: EventKind
    level: float = 0.0
    direction: int = 0
    terminal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        if self.direction not in (-1, 0, 1):
            raise ParameterError(f"direction must be -1, 0 or 1, got {self.direction!r}")
        if self.kind in (EventKind.I_CROSSING, EventKind.S_CROSSING, EventKind.TUBE_EXIT):
            if not 0.0 <= self.level <= 1.0:
                raise ParameterError(f"event level {self.level!r} outside [0, 1]")
        if self.kind is EventKind.TUBE_EXIT and (self.level <= 0.0 or self.direction != 1):
            raise ParameterError("tube exit needs a positive width and upward direction")

    @classmethod
    def i_crossing(cls, level, direction=0, terminal=False):
        return cls(EventKind.I_CROSSING, level, direction, terminal)

    @classmethod
    def s_crossing(cls, level, direction=0, terminal=False):
        return cls(EventKind.S_CROSSING, level, direction, terminal)

    @classmethod
    def nullcline(cls, direction=0, terminal=False):
        return cls(EventKind.NULLCLINE, 0.0, direction, terminal)

    @classmethod
    def tube_exit(cls, width, terminal=True):
        return cls(EventKind.TUBE_EXIT, width, 1, terminal)


@dataclass(frozen=True)
class Event:
    time: float
    state: SystemState
    spec: EventSpec


@dataclass
class Trajectory:
    kind: ModelKind
    frame: TimeFrame
    times: np.ndarray
    states: np.ndarray  # rows (S, I[, W])
    log_i: np.ndarray
    events: list = field(default_factory=list)
    status: str = "horizon"
    n_accepted: int = 0
    n_rejected: int = 0

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> SystemState:
        return SystemState.from_array(self.states[k])

    @property
    def final(self) -> SystemState:
        return self.state(-1)

    def events_of(self, spec: EventSpec) -> list:
        return [e for e in self.events if e.spec == spec]


_STATUS = {K.STATUS_HORIZON: "horizon", K.STATUS_TERMINAL: "terminal"}


def integrate(kind, p: ModelParams, x0, frame=TimeFrame.FAST, config: IntegratorConfig | None = None,
              events: Sequence[EventSpec] = (), layer: bool = False, t0: float = 0.0) -> Trajectory:
    """Integrate one trajectory with Dormand-Prince 5(4) and PI step control.

    With ``layer=True`` the eps = 0 fast system is integrated. Event times
    are located to ``config.event_tol``; an event that never fires is simply
    absent from ``Trajectory.events``.
    """
    kind = ModelKind.parse(kind)
    frame = TimeFrame.parse(frame)
    p.validate_for(kind)
    cfg = config or IntegratorConfig()
    if layer and frame is TimeFrame.SLOW:
        raise ParameterError("the layer system has no slow frame")
    if not isinstance(x0, SystemState):
        x0 = SystemState.from_array(x0)
    x0.check(kind)
    events = list(events)

    vec = p.vector(layer=layer)
    s0, i0, w0 = x0.s, x0.i, (x0.w if x0.w is not None else 0.0)
    fs, fi, fw = K.rhs(vec, 1.0, False, s0, i0, w0)
    if fs == 0.0 and fi == 0.0 and fw == 0.0:
        # equilibrium: nothing can change, including event functions
        row = x0.as_array()[None, :]
        return Trajectory(kind, frame, np.array([t0]), row,
                          np.array([math.log(i0) if i0 > 0 else -math.inf]))

    scale = 1.0 / p.epsilon if frame is TimeFrame.SLOW else 1.0
    thr = cfg.resolved_log_threshold(p, layer)
    ev_type = np.array([_KERNEL_TYPE[e.kind] for e in events], dtype=np.int64)
    ev_level = np.array([e.level for e in events], dtype=float)
    ev_dir = np.array([e.direction for e in events], dtype=np.int64)
    ev_term = np.array([1 if e.terminal else 0 for e in events], dtype=np.int64)

    # pick the first step in the fast frame so both frames take the same steps
    logc = 0.0 < i0 < thr
    xi0 = math.log(i0) if logc else i0
    gs, gx, gw = K.rhs(vec, 1.0, logc, s0, xi0, w0)
    h0 = K._initial_step(vec, 1.0, logc, kind.dim, s0, xi0, w0, gs, gx, gw, cfg.rel_tol, cfg.abs_tol)
    h0 /= scale

    status, n_acc, n_rej, T, Y, TE, YE, IE, h = K.integrate_kernel(
        vec, scale, kind.dim, s0, i0, w0, t0, t0 + cfg.horizon, cfg.rel_tol, cfg.abs_tol,
        cfg.max_step, h0, thr, ev_type, ev_level, ev_dir, ev_term, cfg.max_steps, cfg.event_tol)

    if status == K.STATUS_STIFF:
        raise StiffnessError("step size underflow", t=float(T[-1]), state=Y[-1, :kind.dim].tolist(),
                             step=float(h), accepted=int(n_acc), rejected=int(n_rej))
    if status == K.STATUS_MAX_STEPS:
        raise ConvergenceError("step budget exhausted before the horizon", t=float(T[-1]),
                               max_steps=cfg.max_steps)

    dim = kind.dim
    evs = [Event(float(TE[k]), SystemState.from_array(YE[k, :dim]), events[int(IE[k])])
           for k in range(len(TE))]
    return Trajectory(kind, frame, T, Y[:, :dim].copy(), Y[:, 3].copy(), evs,
                      _STATUS[int(status)], int(n_acc), int(n_rej))


@dataclass(frozen=True)
class ReturnPoint:
    state: SystemState
    time: float


def poincare_return(kind, p: ModelParams, section: EventSpec, x0, config: IntegratorConfig | None = None,
                    frame=TimeFrame.FAST) -> ReturnPoint | None:
    """First crossing of ``section`` after leaving x0; None if it never comes back."""
    term = EventSpec(section.kind, section.level, section.direction, terminal=True)
    traj = integrate(kind, p, x0, frame, config, [term])
    if not traj.events:
        return None
    ev = traj.events[0]
    return ReturnPoint(ev.state, ev.time)


def peak_sequences(p: ModelParams, s0: float, n: int):
    """Iterate S_{k+1} = Pi2(Pi1(S_k)); returns (S_0..S_n, P_0..P_{n-1})."""
    if n < 1:
        raise DomainError("n must be >= 1")
    p.require_endemic()
    if not 1.0 / p.r0 < s0 < 1.0:
        raise DomainError(f"s0 must lie in (1/R0, 1), got {s0!r}")
    S = np.empty(n + 1)
    P = np.empty(n)
    S[0] = s0
    for k in range(n):
        P[k] = pi1_map(p, S[k], 0.0)
        S[k + 1] = sir_exit_point(p, P[k])
    return S, P


@dataclass(frozen=True)
class Segment:
    kind: str  # "fast" or "slow"
    start: SystemState
    end: SystemState
    points: np.ndarray
    duration: float | None = None  # slow time, slow segments only


def _fast_points(p, s_top, s_land, n):
    s = np.linspace(s_top, s_land, n)
    i = s_top - s + (p.gamma / p.beta) * np.log(s / s_top)
    i[0] = i[-1] = 0.0
    return np.column_stack([s, np.maximum(i, 0.0)])


def singular_orbit(p: ModelParams, s0: float, n_loops: int, kind=ModelKind.SIR, n_points: int = 400):
    """Fast heteroclinics on Gamma levels alternating with slow drifts on I = 0."""
    kind = ModelKind.parse(kind)
    if kind is ModelKind.SIRWS:
        raise ParameterError("singular_orbit covers SIR and SIRS; use the cycle module for SIRWS")
    p.validate_for(kind)
    if n_loops < 0:
        raise DomainError("n_loops must be >= 0")
    rate = p.xi if kind is ModelKind.SIR else p.delta
    if n_loops > 0 and not rate > 0.0:
        raise ParameterError("slow segments need a positive slow rate")
    S, P = peak_sequences(p, s0, max(n_loops, 0) + 1)
    segs = []
    for k in range(n_loops + 1):
        segs.append(Segment("fast", SystemState(S[k], 0.0), SystemState(P[k], 0.0),
                            _fast_points(p, S[k], P[k], n_points)))
        if k == n_loops:
            break
        line = np.column_stack([np.linspace(P[k], S[k + 1], n_points), np.zeros(n_points)])
        dur = math.log((1.0 - P[k]) / (1.0 - S[k + 1])) / rate
        segs.append(Segment("slow", SystemState(P[k], 0.0), SystemState(S[k + 1], 0.0), line, dur))
    return segs


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point clouds."""
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])
