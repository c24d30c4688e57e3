"""Chaplygin sleigh: a planar body on a knife edge offset by ``a`` from the centre of mass.

Reduced momenta ``Pi = (Pi_theta, Pi_x, Pi_y)`` in the body frame.  The group
element is carried either as angle coordinates ``(theta, x, y)`` or with the
rotation embedded as a 2x2 matrix ``R`` (which then needs a defect penalty).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..extension import (CanonicalSetup, ConstraintFrame, ExtendedField, FirstIntegral, LiePoissonSetup,
                         SE2Angle, SE2Matrix, se2_structure)
from ..geom import SO2_GENERATOR, rot2
from .base import SystemCatalogEntry, require_positive


@dataclass(frozen=True)
class SleighParams:
    m: float = 1.0
    I: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        require_positive(m=self.m, I=self.I, a=self.a)

    @property
    def locked_inertia(self):
        m, I, a = self.m, self.I, self.a
        return np.array([[I + m * a * a, 0, m * a], [0, m, 0], [m * a, 0, m]])

    @property
    def e(self):
        m, I, a = self.m, self.I, self.a
        return np.array([m * a, 0.0, -(I + m * a * a)]) / math.sqrt(m * I * (I + m * a * a))


def reduced_rate(params: SleighParams, Pi):
    """Momentum part of the extended sleigh equations."""
    m, a = params.m, params.a
    Ia = params.I + m * a * a
    Pt, Px, Py = Pi
    return np.array([-Px * Py / m, Pt * Py / Ia, -a * Px * Py / Ia])


def sleigh_entry(params: SleighParams | None = None, chart="angle", initial_pi=(1.0, 1.0, 0.5)) -> SystemCatalogEntry:
    params = params or SleighParams()
    m, I, a = params.m, params.I, params.a
    Ia = I + m * a * a
    e = params.e
    Il = params.locked_inertia
    Ilinv = np.linalg.inv(Il)
    Ie = Il @ e
    if chart == "angle":
        group = SE2Angle()
    elif chart in ("embedded", "embedded-so2", "matrix"):
        group = SE2Matrix()
    else:
        raise ValueError(f"unknown chart {chart!r}; use 'angle' or 'embedded'")
    setup = LiePoissonSetup(se2_structure(), Il, e[None, :], group=group, labels=("Pi_theta", "Pi_x", "Pi_y"))
    layout = setup.bundle.layout
    ng = layout.size - 3  # group coordinates come first

    def xi_of(Pi):
        return Pi[0] / Ia, Pi[1] / m

    if chart == "angle":
        def rate(x):
            Pi = x[3:]
            wt, vx = xi_of(Pi)
            out = np.empty(6)
            out[0] = wt
            out[1] = math.cos(x[0]) * vx
            out[2] = math.sin(x[0]) * vx
            out[3:] = reduced_rate(params, Pi)
            return out
        x0 = np.concatenate([np.zeros(3), initial_pi])
        penalties = ()
    else:
        def rate(x):
            R = x[:4].reshape(2, 2)
            Pi = x[6:]
            wt, vx = xi_of(Pi)
            out = np.empty(9)
            out[:4] = (wt * R @ SO2_GENERATOR).ravel()
            out[4:6] = R[:, 0] * vx
            out[6:] = reduced_rate(params, Pi)
            return out
        x0 = np.concatenate([np.eye(2).ravel(), np.zeros(2), initial_pi])
        penalties = ("R",)

    def embed(g):
        out = np.zeros(layout.size)
        out[ng:] = g
        return out

    integrals = {
        "h": FirstIntegral("h", lambda x: 0.5 * x[ng:] @ Ilinv @ x[ng:], lambda x: embed(Ilinv @ x[ng:])),
        "htilde": FirstIntegral(
            "htilde",
            lambda x: x[ng] ** 2 / (2 * Ia) + x[ng + 1] ** 2 / (2 * m),
            lambda x: embed(np.array([x[ng] / Ia, x[ng + 1] / m, 0.0])),
        ),
        "J": FirstIntegral("J", lambda x: x[ng:] @ e, lambda x: embed(e)),
    }
    field = ExtendedField(layout, rate, tuple(integrals.values()), tuple(penalties))

    def sampler(rng, on_constraint=False):
        if chart == "angle":
            g = np.concatenate([rng.uniform(-math.pi, math.pi, 1), rng.uniform(-2, 2, 2)])
        else:
            g = np.concatenate([(rot2(rng.uniform(-math.pi, math.pi)) + 0.05 * rng.standard_normal((2, 2))).ravel(),
                                rng.uniform(-2, 2, 2)])
        Pi = rng.standard_normal(3)
        if on_constraint:
            Pi = Pi - (Pi @ e) * Ie
        return np.concatenate([g, Pi])

    return SystemCatalogEntry(
        name="chaplygin-sleigh",
        params=params,
        layout=layout,
        initial_state=x0,
        fields={"extended": field},
        integrals=integrals,
        controlled={"extended": ("J", "energy")},
        default_gains={"J": 10.0, "h": 10.0, "htilde": 10.0, "R": 10.0},
        energy_names={"original": "h", "extended": "htilde"},
        energy_mode="extended",
        penalties=penalties,
        setup=setup,
        constrained_rate=setup.bundle.constrained_rate,
        sampler=sampler,
        default_horizon=10.0,
        description=f"Chaplygin sleigh ({'angle' if chart == 'angle' else 'embedded SO(2)'} chart)",
    )


# --------------------------------------------------------------------------
# unreduced description on T*SE(2), used to check that extension commutes with reduction


def unreduced_setup(params: SleighParams) -> CanonicalSetup:
    """The sleigh on ``T*SE(2)`` with ``q = (theta, x, y)`` and spatial momenta."""
    m, I, a = params.m, params.I, params.a
    Ia = I + m * a * a
    n = math.sqrt(m * I * Ia)

    def u(q):
        return np.array([1.0, a * math.sin(q[0]), -a * math.cos(q[0])])

    def mass_inv(q):
        v = u(q)
        return np.outer(v, v) / I + np.diag([0.0, 1 / m, 1 / m])

    def mass_inv_grad(q):
        v = u(q)
        dv = np.array([0.0, a * math.cos(q[0]), a * math.sin(q[0])])
        out = np.zeros((3, 3, 3))
        out[0] = (np.outer(dv, v) + np.outer(v, dv)) / I
        return out

    def frame(q):
        c, s = math.cos(q[0]), math.sin(q[0])
        return np.array([[m * a, Ia * s, -Ia * c]]) / n

    def frame_jac(q):
        c, s = math.cos(q[0]), math.sin(q[0])
        out = np.zeros((1, 3, 3))
        out[0, :, 0] = np.array([0.0, Ia * c, Ia * s]) / n
        return out

    return CanonicalSetup(3, mass=lambda q: np.linalg.inv(mass_inv(q)), frame=ConstraintFrame(frame, frame_jac),
                          mass_inv=mass_inv, mass_inv_grad=mass_inv_grad, labels=("theta", "x", "y"),
                          sample_box=(-math.pi, math.pi))


def body_momentum(q, p):
    """Left-trivialized momentum ``Pi`` of a covector ``p`` at ``q = (theta, x, y)``."""
    c, s = math.cos(q[0]), math.sin(q[0])
    return np.array([p[0], c * p[1] + s * p[2], -s * p[1] + c * p[2]])


def push_to_reduced(q, p, qdot, pdot):
    """Time derivative of ``(q, Pi(q, p))`` along ``(qdot, pdot)``."""
    c, s = math.cos(q[0]), math.sin(q[0])
    Pidot = body_momentum(q, pdot)
    Pidot[1] += qdot[0] * (-s * p[1] + c * p[2])
    Pidot[2] += qdot[0] * (-c * p[1] - s * p[2])
    return np.concatenate([qdot, Pidot])
