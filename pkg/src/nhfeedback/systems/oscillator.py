"""Nonholonomic oscillator: ``H = |p|^2/2 + |q|^2/2`` on ``T*R^3`` with ``x' + y z' = 0``.

Constraint momentum ``J = (p_x + y p_z)/sqrt(1 + y^2)``.  On the constraint
set the ``y`` motion decouples into a harmonic oscillator, so
``H_y = (p_y^2 + y^2)/2`` is conserved there (but not off it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..extension import CanonicalSetup, ConstraintFrame, ExtendedField, FirstIntegral
from .base import PoincareEvent, SystemCatalogEntry


@dataclass(frozen=True)
class OscillatorParams:
    pass


def oscillator_frame(q):
    y = q[1]
    return np.array([[1.0, 0.0, y]]) / math.sqrt(1 + y * y)


def oscillator_frame_jacobian(q):
    y = q[1]
    out = np.zeros((1, 3, 3))
    out[0, :, 1] = np.array([-y, 0.0, 1.0]) / (1 + y * y) ** 1.5
    return out


def oscillator_setup() -> CanonicalSetup:
    return CanonicalSetup(
        3, mass=lambda q: np.eye(3), mass_inv=lambda q: np.eye(3),
        frame=ConstraintFrame(oscillator_frame, oscillator_frame_jacobian),
        potential=lambda q: 0.5 * q @ q, potential_grad=lambda q: np.array(q, dtype=float),
        labels=("x", "y", "z"), sample_box=(-2.0, 2.0))


def oscillator_rate(s):
    x, y, z, px, py, pz = s
    w = 1 + y * y
    r = math.sqrt(w)
    a = (px + y * pz) / w          # J / sqrt(1 + y^2)
    lam = (x + y * z) / r - (pz - y * px) * py / (w * r)
    f = lam / r
    out = np.empty(6)
    out[0] = px - a
    out[1] = py
    out[2] = pz - a * y
    out[3] = -x + f
    out[4] = -y + a * (pz - y * px) / w
    out[5] = -z + f * y
    return out


def oscillator_entry(params: OscillatorParams | None = None, initial_state=(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)) -> SystemCatalogEntry:
    setup = oscillator_setup()
    layout = setup.bundle.layout
    x0 = np.asarray(initial_state, dtype=float)

    def J(s):
        return (s[3] + s[1] * s[5]) / math.sqrt(1 + s[1] ** 2)

    def J_grad(s):
        x, y, z, px, py, pz = s
        w = 1 + y * y
        r = math.sqrt(w)
        return np.array([0.0, (pz - y * px) / (w * r), 0.0, 1 / r, 0.0, y / r])

    def H(s):
        return 0.5 * (s @ s)

    def Ht(s):
        return 0.5 * (s @ s) - 0.5 * J(s) ** 2

    def Ht_grad(s):
        return s - J(s) * J_grad(s)

    integrals = {
        "H": FirstIntegral("H", H, lambda s: np.array(s, dtype=float)),
        "Htilde": FirstIntegral("Htilde", Ht, Ht_grad),
        "J": FirstIntegral("J", J, J_grad),
        "Hy": FirstIntegral("Hy", lambda s: 0.5 * (s[4] ** 2 + s[1] ** 2),
                            lambda s: np.array([0.0, s[1], 0.0, 0.0, s[4], 0.0]), True),
    }
    field = ExtendedField(layout, oscillator_rate, tuple(integrals.values()))

    def sampler(rng, on_constraint=False):
        s = np.concatenate([rng.uniform(-2, 2, 3), rng.standard_normal(3)])
        return setup.bundle.project(s) if on_constraint else s

    return SystemCatalogEntry(
        name="oscillator",
        params=params or OscillatorParams(),
        layout=layout,
        initial_state=x0,
        fields={"extended": field},
        integrals=integrals,
        controlled={"extended": ("energy", "Hy", "J")},
        default_gains={"Htilde": 500.0, "H": 500.0, "Hy": 300.0, "J": 300.0},
        energy_names={"original": "H", "extended": "Htilde"},
        energy_mode="extended",
        monitors=("H",),
        setup=setup,
        constrained_rate=setup.bundle.constrained_rate,
        sampler=sampler,
        event=PoincareEvent("y", 1, (("x", "z"), ("z", "p_z"))),
        dla=True,
        default_horizon=200.0,
        description="nonholonomic oscillator",
    )
