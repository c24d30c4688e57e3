"""Heisenberg system: free particle in R^3 with the unnormalized constraint

    J1 = p . (-y, x, 1) = p_z - y p_x + x p_y = 0.

The multiplier vanishes identically, so the constrained flow is free motion
``q' = p, p' = 0``.  It preserves ``H``, ``J1`` and the vertical angular
momentum ``J2 = x p_y - y p_x`` on the whole phase space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..extension import CanonicalSetup, ConstraintFrame, ExtendedField, FirstIntegral
from .base import SystemCatalogEntry


@dataclass(frozen=True)
class HeisenbergParams:
    pass


def heisenberg_frame(q):
    return np.array([[-q[1], q[0], 1.0]])


def heisenberg_frame_jacobian(q):
    out = np.zeros((1, 3, 3))
    out[0, 0, 1] = -1.0
    out[0, 1, 0] = 1.0
    return out


def heisenberg_setup() -> CanonicalSetup:
    return CanonicalSetup(
        3, mass=lambda q: np.eye(3), mass_inv=lambda q: np.eye(3),
        frame=ConstraintFrame(heisenberg_frame, heisenberg_frame_jacobian, orthonormal=False),
        labels=("x", "y", "z"))


def heisenberg_entry(params: HeisenbergParams | None = None, initial_state=(1.0, 0.0, 0.0, 0.5, 1.0, -1.0)) -> SystemCatalogEntry:
    setup = heisenberg_setup()
    layout = setup.bundle.layout
    x0 = np.asarray(initial_state, dtype=float)

    def rate(s):
        return np.concatenate([s[3:], np.zeros(3)])

    integrals = {
        "H": FirstIntegral("H", lambda s: 0.5 * s[3:] @ s[3:], lambda s: np.concatenate([np.zeros(3), s[3:]])),
        "J1": FirstIntegral(
            "J1", lambda s: s[5] - s[1] * s[3] + s[0] * s[4],
            lambda s: np.array([s[4], -s[3], 0.0, -s[1], s[0], 1.0])),
        "J2": FirstIntegral(
            "J2", lambda s: s[0] * s[4] - s[1] * s[3],
            lambda s: np.array([s[4], -s[3], 0.0, -s[1], s[0], 0.0])),
    }
    field = ExtendedField(layout, rate, tuple(integrals.values()))

    def exact(t):
        t = np.asarray(t, dtype=float)[..., None]
        return x0[:3] + t * x0[3:]

    def sampler(rng, on_constraint=False):
        s = np.concatenate([rng.uniform(-2, 2, 3), rng.standard_normal(3)])
        if on_constraint:
            s[5] = s[1] * s[3] - s[0] * s[4]
        return s

    def check_targets(targets):
        if abs(targets.get("J1", 0.0)) > 1e-12:
            raise ValueError("the J1 target must be 0 (the constraint level)")

    return SystemCatalogEntry(
        name="heisenberg",
        params=params or HeisenbergParams(),
        layout=layout,
        initial_state=x0,
        fields={"extended": field},
        integrals=integrals,
        controlled={"extended": ("energy", "J1", "J2")},
        default_gains={"H": 1.0, "J1": 1.0, "J2": 1.0},
        energy_names={"original": "H", "extended": "H"},
        energy_mode="original",
        setup=setup,
        constrained_rate=setup.bundle.constrained_rate,
        exact=exact,
        exact_block="q",
        sampler=sampler,
        target_check=check_targets,
        default_horizon=10.0,
        description="Heisenberg system (free flow, unnormalized constraint)",
    )
