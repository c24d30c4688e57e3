"""Fixed-step one-step integrators and the discrete Lagrange-d'Alembert baseline."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class StepperKind(enum.Enum):
    EULER = "euler"
    RK4 = "rk4"
    DLA = "dla"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown stepper {value!r}; choose from {[k.value for k in cls]}") from None


class IntegrationError(RuntimeError):
    """Non-finite state encountered; ``record`` holds the samples up to the failure."""

    def __init__(self, message, step=None, record=None):
        super().__init__(message)
        self.step = step
        self.record = record


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray
    channels: dict = field(default_factory=dict)
    layout: Optional[object] = None
    failed: bool = False
    message: str = ""
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def channel(self, name):
        return self.channels[name]

    def get(self, name):
        """A state component (block or label) over the whole record."""
        if self.layout is None:
            raise KeyError(name)
        if name in self.layout.names:
            return self.states[:, self.layout.slice(name)]
        labels = self.layout.component_labels()
        if name in labels:
            return self.states[:, labels.index(name)]
        raise KeyError(f"{name!r} is neither a block nor a component label")


def _check_dt(dt):
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"step size must be finite and positive, got {dt}")


def euler_step(f, x, dt):
    return x + dt * f(x)


def rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPS = {StepperKind.EULER: euler_step, StepperKind.RK4: rk4_step}


def step(kind, f, x, dt):
    kind = StepperKind.parse(kind)
    if kind not in _STEPS:
        raise ValueError("the DLA scheme advances pairs of configurations; use dla_step")
    _check_dt(dt)
    out = _STEPS[kind](f, np.asarray(x, dtype=float), dt)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state after one step", step=0)
    return out


def _sample_indices(N, stride):
    idx = list(range(0, N + 1, stride))
    if idx[-1] != N:
        idx.append(N)
    return idx


def integrate(kind, f, x0, dt, T, observers=None, stride=1, layout=None, raise_on_failure=True):
    """Integrate ``x' = f(x)`` with ``N = round(T/dt)`` fixed steps.

    ``observers`` maps channel names to ``obs(t, x) -> float``; they are
    evaluated at every sampled step (every ``stride`` steps plus the last).
    On a non-finite state an :class:`IntegrationError` carrying the partial
    record is raised, or the partial record is returned with ``failed`` set
    when ``raise_on_failure`` is false.
    """
    kind = StepperKind.parse(kind)
    stepper = _STEPS.get(kind)
    if stepper is None:
        raise ValueError("use integrate_dla for the discrete Lagrange-d'Alembert scheme")
    _check_dt(dt)
    if not T >= 0:
        raise ValueError(f"horizon must be nonnegative, got {T}")
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    N = int(round(T / dt))
    observers = dict(observers or {})
    x = np.array(x0, dtype=float)
    idx = _sample_indices(N, stride)
    times = np.array(idx, dtype=float) * dt
    states = np.empty((len(idx), x.size))
    chans = {name: np.empty(len(idx)) for name in observers}

    def record(j, t, x):
        states[j] = x
        for name, obs in observers.items():
            chans[name][j] = obs(t, x)

    record(0, 0.0, x)
    j = 1
    for i in range(1, N + 1):
        x = stepper(f, x, dt)
        if not np.all(np.isfinite(x)):
            rec = TrajectoryRecord(times[:j], states[:j], {k: v[:j] for k, v in chans.items()}, layout,
                                   failed=True, message=f"non-finite state at step {i} (t={i * dt:g})")
            if raise_on_failure:
                raise IntegrationError(rec.message, step=i, record=rec)
            return rec
        if j < len(idx) and idx[j] == i:
            record(j, times[j], x)
            j += 1
    return TrajectoryRecord(times, states, chans, layout)


# --------------------------------------------------------------------------
# discrete Lagrange-d'Alembert scheme for the nonholonomic oscillator


@dataclass(frozen=True)
class DlaState:
    """Two consecutive configurations ``q_i, q_{i+1}`` of the oscillator and the step ``h``."""

    q_prev: np.ndarray
    q_curr: np.ndarray
    h: float

    def __post_init__(self):
        _check_dt(self.h)
        object.__setattr__(self, "q_prev", np.asarray(self.q_prev, dtype=float).reshape(3))
        object.__setattr__(self, "q_curr", np.asarray(self.q_curr, dtype=float).reshape(3))

    @property
    def momentum(self):
        return (self.q_curr - self.q_prev) / self.h

    @property
    def residual(self):
        """Discrete constraint ``x_{i+1} - x_i + y_i (z_{i+1} - z_i)``."""
        a, b = self.q_prev, self.q_curr
        return b[0] - a[0] + a[1] * (b[2] - a[2])


def dla_multiplier(q0, q1, h):
    h2 = h * h
    x0, _, z0 = q0
    x1, y1, z1 = q1
    return ((1 - h2) * x1 - x0 + y1 * ((1 - h2) * z1 - z0)) / (h2 * (1 + y1 * y1))


def dla_step(state: DlaState) -> DlaState:
    q0, q1, h = state.q_prev, state.q_curr, state.h
    lam = dla_multiplier(q0, q1, h)
    q2 = 2 * q1 - q0 - h * h * q1 - h * h * lam * np.array([1.0, 0.0, q1[1]])
    return DlaState(q1, q2, h)


def integrate_dla(q0, q1, h, T, observers=None, stride=1, layout=None):
    """Run the DLA scheme from ``(q_0, q_1)``.

    Sample ``i`` holds ``(q_i, p_i)`` with ``p_i = (q_i - q_{i-1})/h``; at
    ``i = 0`` the momentum ``(q_1 - q_0)/h`` is used.  The discrete constraint
    residual of every step is kept in ``extras['step_residual']``.
    """
    _check_dt(h)
    N = int(round(T / h))
    observers = dict(observers or {})
    idx = _sample_indices(N, stride)
    times = np.array(idx, dtype=float) * h
    states = np.empty((len(idx), 6))
    chans = {name: np.empty(len(idx)) for name in observers}
    residual = np.empty(N)
    hh = h * h
    qa = np.array(q0, dtype=float)
    qb = np.array(q1, dtype=float)

    def record(j, t, q, p):
        states[j, :3] = q
        states[j, 3:] = p
        for name, obs in observers.items():
            chans[name][j] = obs(t, states[j])

    record(0, 0.0, qa, (qb - qa) / h)
    j = 1
    for i in range(1, N + 1):
        # advance to (q_i, q_{i+1}); qb is q_i
        residual[i - 1] = qb[0] - qa[0] + qa[1] * (qb[2] - qa[2])
        if j < len(idx) and idx[j] == i:
            record(j, times[j], qb, (qb - qa) / h)
            j += 1
        if i == N:
            break
        lam = dla_multiplier(qa, qb, h)
        qc = 2 * qb - qa - hh * qb
        qc[0] -= hh * lam
        qc[2] -= hh * lam * qb[1]
        qa, qb = qb, qc
    rec = TrajectoryRecord(times, states, chans, layout, extras={"step_residual": residual})
    if not np.all(np.isfinite(states)):
        rec.failed = True
        rec.message = "non-finite state in DLA run"
    return rec
