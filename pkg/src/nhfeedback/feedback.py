"""Lyapunov-based feedback stabilization of first-integral level sets.

Given a vector field ``X`` with first integrals ``F_i``, the function

    V = sum_i (k_i/2) (F_i - c_i)^2 + sum_R (k0/4) ||R^T R - I||^2

is nonnegative and vanishes exactly on the chosen level set (with every
embedded matrix block orthogonal).  The modified field ``X - A grad V``
coincides with ``X`` on that set and pulls nearby states back towards it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geom import ChartLayout


@dataclass(frozen=True)
class IntegralSpec:
    name: str
    value: Callable
    gradient: Callable
    target: float = 0.0
    gain: float = 1.0

    def __post_init__(self):
        if not self.gain >= 0:
            raise ValueError(f"gain for {self.name!r} must be nonnegative, got {self.gain}")


@dataclass(frozen=True)
class ManifoldPenalty:
    """``(gain/4) ||R^T R - I||^2`` for the square matrix block ``block``."""

    block: str
    gain: float = 1.0

    def __post_init__(self):
        if not self.gain >= 0:
            raise ValueError(f"manifold gain must be nonnegative, got {self.gain}")


@dataclass(frozen=True)
class LyapunovSpec:
    layout: ChartLayout
    integrals: tuple = ()
    penalties: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "integrals", tuple(self.integrals))
        object.__setattr__(self, "penalties", tuple(self.penalties))
        for pen in self.penalties:
            shape = self.layout.block(pen.block).shape
            if len(shape) != 2 or shape[0] != shape[1]:
                raise ValueError(f"penalty block {pen.block!r} is not a square matrix")

    def deviations(self, state):
        return {F.name: F.value(state) - F.target for F in self.integrals}


def _defect_matrix(R):
    return R.T @ R - np.eye(R.shape[0])


def lyapunov_value(spec: LyapunovSpec, state) -> float:
    state = np.asarray(state, dtype=float)
    V = 0.0
    for F in spec.integrals:
        V += 0.5 * F.gain * (F.value(state) - F.target) ** 2
    for pen in spec.penalties:
        D = _defect_matrix(spec.layout.get(state, pen.block))
        V += 0.25 * pen.gain * np.sum(D * D)
    return float(V)


def lyapunov_gradient(spec: LyapunovSpec, state) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    grad = np.zeros(spec.layout.size)
    for F in spec.integrals:
        dev = F.value(state) - F.target
        if F.gain and dev:
            grad += F.gain * dev * np.asarray(F.gradient(state), dtype=float)
    for pen in spec.penalties:
        R = spec.layout.get(state, pen.block)
        grad[spec.layout.slice(pen.block)] += pen.gain * (R @ _defect_matrix(R)).ravel()
    return grad


@dataclass(frozen=True)
class FeedbackField:
    """``X - A grad V``; ``gain_matrix`` defaults to the identity."""

    base: Callable
    lyapunov: LyapunovSpec
    gain_matrix: Optional[np.ndarray] = None
    layout: ChartLayout = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layout", self.lyapunov.layout)
        if self.gain_matrix is not None:
            A = np.asarray(self.gain_matrix, dtype=float)
            n = self.layout.size
            if A.shape != (n, n):
                raise ValueError(f"gain matrix must be {n}x{n}, got {A.shape}")
            if np.linalg.eigvalsh(A + A.T).min() <= 0:
                raise ValueError("gain matrix must have a positive definite symmetric part")
            object.__setattr__(self, "gain_matrix", A)

    def __call__(self, state):
        g = lyapunov_gradient(self.lyapunov, state)
        if self.gain_matrix is not None:
            g = self.gain_matrix @ g
        return self.base(state) - g

    @property
    def integrals(self):
        return getattr(self.base, "integrals", ())


def feedback_field(ff: FeedbackField) -> Callable:
    return ff.__call__


def gradient_check(F, gradF, state, step=1e-5) -> float:
    """Worst componentwise error of ``gradF`` against central differences.

    Errors are scaled by the largest finite-difference component, floored so
    that a vanishing gradient is compared on the scale of ``F`` itself.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(state, dtype=float)
    g = np.asarray(gradF(x), dtype=float)
    fd = np.empty_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        fd[i] = (F(xp) - F(xm)) / (2 * step)
    scale = max(np.abs(fd).max(initial=0.0), 1e-4 * (1.0 + abs(F(x))))
    return float(np.abs(g - fd).max(initial=0.0) / scale)
