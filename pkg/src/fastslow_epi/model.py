"""Fast-slow SIR, SIRS and SIRWS vector fields.

All three models share one fast-time expression once R (= 1 - S - I [- W])
is eliminated::

    S' = -beta S I + eps (2 kappa W + xi (1 - S) + delta (1 - S - I))
    I' = I (beta S - gamma - eps xi)
    W' = -nu beta I W + eps (2 kappa (1 - S - I - W) - 2 kappa W - xi W)

Parameters that a model does not use must be zero, which makes the shared
expression reduce to each model exactly. The slow frame is the fast field
divided by eps.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DomainError, NoEndemicEquilibriumError, ParameterError


class ModelKind(enum.Enum):
    SIR = "SIR"
    SIRS = "SIRS"
    SIRWS = "SIRWS"

    @property
    def dim(self) -> int:
        return 3 if self is ModelKind.SIRWS else 2

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterError(f"unknown model kind {value!r}; expected one of SIR, SIRS, SIRWS") from None


class TimeFrame(enum.Enum):
    FAST = "fast"
    SLOW = "slow"

    @classmethod
    def parse(cls, value) -> "TimeFrame":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ParameterError(f"unknown time frame {value!r}") from None


# parameters each model must leave at zero
_UNUSED = {
    ModelKind.SIR: ("kappa", "nu", "delta"),
    ModelKind.SIRS: ("xi", "kappa", "nu"),
    ModelKind.SIRWS: ("delta",),
}


@dataclass(frozen=True)
class ModelParams:
    """Rate constants shared by the three models.

    Rates are per unit slow time; ``epsilon`` is the time-scale ratio.
    """

    beta: float
    gamma: float
    xi: float = 0.0
    kappa: float = 0.0
    nu: float = 0.0
    delta: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or isinstance(v, bool):
                raise ParameterError(f"{f.name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ParameterError(f"{f.name} must be finite, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        for name in ("beta", "gamma", "epsilon"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("xi", "kappa", "nu", "delta"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def r0(self) -> float:
        return self.beta / self.gamma

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    def validate_for(self, kind) -> "ModelParams":
        kind = ModelKind.parse(kind)
        bad = [n for n in _UNUSED[kind] if getattr(self, n) != 0.0]
        if bad:
            raise ParameterError(f"{kind.value} requires {', '.join(bad)} = 0")
        return self

    def require_endemic(self):
        if not self.r0 > 1.0:
            raise NoEndemicEquilibriumError(f"R0 = {self.r0:g} <= 1: no endemic regime")

    def vector(self, layer: bool = False) -> np.ndarray:
        return np.array([self.beta, self.gamma, self.xi, self.kappa, self.nu, self.delta,
                         0.0 if layer else self.epsilon])


@dataclass(frozen=True)
class SystemState:
    """Compartment fractions; ``w`` is None for the two-dimensional models."""

    s: float
    i: float
    w: float | None = None

    def as_array(self) -> np.ndarray:
        if self.w is None:
            return np.array([self.s, self.i])
        return np.array([self.s, self.i, self.w])

    @classmethod
    def from_array(cls, x) -> "SystemState":
        x = np.asarray(x, dtype=float)
        if x.shape == (2,):
            return cls(float(x[0]), float(x[1]))
        if x.shape == (3,):
            return cls(float(x[0]), float(x[1]), float(x[2]))
        raise DomainError(f"state must have 2 or 3 components, got shape {x.shape}")

    def check(self, kind=None, tol: float = 0.0) -> "SystemState":
        if kind is not None:
            kind = ModelKind.parse(kind)
            if (kind.dim == 3) != (self.w is not None):
                raise DomainError(f"{kind.value} state must have {kind.dim} components")
        comps = [c for c in (self.s, self.i, self.w) if c is not None]
        if any(not math.isfinite(c) for c in comps):
            raise DomainError(f"non-finite state {self}")
        if min(comps) < -tol:
            raise DomainError(f"negative compartment in {self}")
        if sum(comps) > 1.0 + tol:
            raise DomainError(f"compartments sum to {sum(comps):.17g} > 1 in {self}")
        return self


@dataclass(frozen=True)
class LogState:
    """SIRWS state with the infected fraction stored as v = ln I."""

    s: float
    v: float
    w: float

    @classmethod
    def from_state(cls, x: SystemState) -> "LogState":
        if x.w is None:
            raise DomainError("LogState is defined for SIRWS states only")
        if not x.i > 0.0:
            raise DomainError("log chart needs I > 0")
        return cls(x.s, math.log(x.i), x.w)

    def to_state(self) -> SystemState:
        return SystemState(self.s, math.exp(self.v), self.w)


def _as_state(x) -> SystemState:
    if isinstance(x, SystemState):
        return x
    return SystemState.from_array(x)


def _unpack(kind, x):
    x = _as_state(x).check(kind)
    return x.s, x.i, (x.w if x.w is not None else 0.0)


def vector_field(kind, frame, p: ModelParams, x) -> np.ndarray:
    kind = ModelKind.parse(kind)
    frame = TimeFrame.parse(frame)
    p.validate_for(kind)
    s, i, w = _unpack(kind, x)
    out = np.array(_kernels.rhs(p.vector(), 1.0, False, s, i, w))[: kind.dim]
    if frame is TimeFrame.SLOW:
        out = out / p.epsilon
    return out


def layer_field(kind, p: ModelParams, x) -> np.ndarray:
    """Fast-frame field at eps = 0."""
    kind = ModelKind.parse(kind)
    p.validate_for(kind)
    s, i, w = _unpack(kind, x)
    return np.array(_kernels.rhs(p.vector(layer=True), 1.0, False, s, i, w))[: kind.dim]


def reduced_field(kind, p: ModelParams, x) -> np.ndarray:
    """Slow flow on the critical manifold I = 0.

    Returns dS/dtau for SIR and SIRS, and (dS/dtau, dW/dtau) for SIRWS.
    """
    kind = ModelKind.parse(kind)
    p.validate_for(kind)
    x = _as_state(x).check(kind)
    if x.i != 0.0:
        raise DomainError(f"reduced flow is defined on I = 0, got I = {x.i!r}")
    if kind is ModelKind.SIR:
        return np.array([p.xi * (1.0 - x.s)])
    if kind is ModelKind.SIRS:
        return np.array([p.delta * (1.0 - x.s)])
    k = p.kappa
    return np.array([2.0 * k * x.w + p.xi * (1.0 - x.s),
                     2.0 * k * (1.0 - x.s) - (4.0 * k + p.xi) * x.w])


def log_field(p: ModelParams, x: LogState) -> np.ndarray:
    """SIRWS fast-frame field in (S, v = ln I, W)."""
    p.validate_for(ModelKind.SIRWS)
    return np.array(_kernels.rhs(p.vector(), 1.0, True, x.s, x.v, x.w))


def jacobian(kind, frame, p: ModelParams, x) -> np.ndarray:
    kind = ModelKind.parse(kind)
    frame = TimeFrame.parse(frame)
    p.validate_for(kind)
    s, i, w = _unpack(kind, x)
    b, g, xi, k, nu, d, e = p.vector()
    J = np.array([
        [-b * i - e * xi - e * d, -b * s - e * d, 2.0 * e * k],
        [b * i, b * s - g - e * xi, 0.0],
        [-2.0 * e * k, -nu * b * w - 2.0 * e * k, -nu * b * i - e * (4.0 * k + xi)],
    ])[: kind.dim, : kind.dim]
    if frame is TimeFrame.SLOW:
        J = J / p.epsilon
    return J


def s_nullcline_sir(p: ModelParams, s):
    return p.epsilon * p.xi * (1.0 - s) / (p.beta * s)


def s_nullcline_sirs(p: ModelParams, s):
    return p.epsilon * p.delta * (1.0 - s) / (p.beta * s + p.epsilon * p.delta)


def _sirws_seed(p: ModelParams) -> np.ndarray:
    s = (p.gamma + p.epsilon * p.xi) / p.beta
    i = s_nullcline_sir(p, s)
    if i <= 0.0:
        i = 1e-6 * (1.0 - s)
    denom = p.nu * p.beta * i + p.epsilon * (4.0 * p.kappa + p.xi)
    w = 2.0 * p.kappa * p.epsilon * (1.0 - s - i) / denom if denom > 0.0 else 0.0
    return np.array([s, i, w])


def endemic_equilibrium(kind, p: ModelParams, tol: float = 1e-12, max_iter: int = 100) -> SystemState:
    kind = ModelKind.parse(kind)
    p.validate_for(kind)
    p.require_endemic()
    if kind is ModelKind.SIR:
        s = 1.0 / p.r0 + p.epsilon * p.xi / p.beta
        if s >= 1.0:
            raise NoEndemicEquilibriumError(f"S_E = {s:g} >= 1: demographic loss removes the endemic state")
        return SystemState(s, s_nullcline_sir(p, s))
    if kind is ModelKind.SIRS:
        s = 1.0 / p.r0
        return SystemState(s, s_nullcline_sirs(p, s))

    x = _sirws_seed(p)
    if x[0] >= 1.0:
        raise NoEndemicEquilibriumError("S_E >= 1 for these parameters")
    fast = TimeFrame.FAST

    def residual(y):
        return np.array(_kernels.rhs(p.vector(), 1.0, False, y[0], y[1], y[2]))

    r = residual(x)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        J = jacobian(kind, fast, p, SystemState(*x))
        step = np.linalg.solve(J, -r)
        lam = 1.0
        # damped update that keeps the iterate strictly inside the simplex
        while True:
            y = x + lam * step
            if y.min() > 0.0 and y.sum() < 1.0:
                ry = residual(y)
                if np.max(np.abs(ry)) < np.max(np.abs(r)) or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-12:
                raise ConvergenceError("Newton step left the simplex",
                                       residual=float(np.max(np.abs(r))), state=x.tolist())
        x, r = y, ry
    else:
        raise ConvergenceError("Newton iteration for the SIRWS equilibrium did not converge",
                               residual=float(np.max(np.abs(r))), state=x.tolist())
    if np.max(np.abs(r)) >= tol:
        raise ConvergenceError("Newton iteration for the SIRWS equilibrium did not converge",
                               residual=float(np.max(np.abs(r))), state=x.tolist())
    return SystemState(float(x[0]), float(x[1]), float(x[2]))
