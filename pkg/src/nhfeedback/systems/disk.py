"""Vertical rolling disk.

Group ``SE(2) x S^1`` in angle coordinates ``(theta, x, y, psi)`` (heading,
contact point, rolling angle) with body momenta ``Pi = (Pi_theta, Pi_x, Pi_y, Pi_psi)``.
Rolling without slipping means ``Pi_y = 0`` and ``I Pi_x - m R Pi_psi = 0``.

Two fields are provided: the extended field and a further-modified one in
which the momentum equations reduce to ``Pi' = 0``.  Both agree with the
rolling dynamics on the constraint set; the modified field has every momentum
component as a first integral, which makes the feedback error dynamics linear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..extension import ExtendedField, FirstIntegral, LiePoissonSetup, SE2Angle, se2_structure
from .base import SystemCatalogEntry, require_positive

PI_LABELS = ("Pi_theta", "Pi_x", "Pi_y", "Pi_psi")


@dataclass(frozen=True)
class DiskParams:
    m: float = 1.0
    I: float = 1.0
    J: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        require_positive(m=self.m, I=self.I, J=self.J, R=self.R)

    @property
    def locked_inertia(self):
        return np.diag([self.J, self.m, self.m, self.I])

    @property
    def frame(self):
        m, I, R = self.m, self.I, self.R
        return np.array([[0.0, 0.0, 1.0, 0.0],
                         [0.0, I, 0.0, -m * R]]) / np.array([[math.sqrt(m)], [math.sqrt(m * I * (I + m * R * R))]])

    def on_constraint(self, Pi, tol=1e-12):
        Pi = np.asarray(Pi, dtype=float)
        scale = 1.0 + np.abs(Pi).max()
        return abs(Pi[2]) <= tol * scale and abs(self.I * Pi[1] - self.m * self.R * Pi[3]) <= tol * scale * max(self.I, self.m * self.R)


def disk_entry(params: DiskParams | None = None, initial_pi=(1.0, 1.0, 0.0, 1.0)) -> SystemCatalogEntry:
    params = params or DiskParams()
    m, I, J, R = params.m, params.I, params.J, params.R
    IR = I + m * R * R
    E = params.frame
    Il = params.locked_inertia
    Ilinv = np.linalg.inv(Il)
    Eflat = E @ Il
    setup = LiePoissonSetup(se2_structure(extra=1), Il, E, group=SE2Angle(("psi",)), labels=PI_LABELS)
    layout = setup.bundle.layout
    k1 = 1.0 / (J * math.sqrt(m))
    k2 = -I / (J * math.sqrt(m * I * IR))

    def reconstruct(x, out):
        Pt, Px, Py, Pp = x[4:]
        s = (R * Px + Pp) / IR
        out[0] = Pt / J
        out[1] = math.cos(x[0]) * R * s
        out[2] = math.sin(x[0]) * R * s
        out[3] = s

    def rate(x):
        Pt, Px, Py, Pp = x[4:]
        out = np.empty(8)
        reconstruct(x, out)
        # body velocity: turning rate, forward speed R psi', no sideways motion
        wt, vx = out[0], R * out[3]
        lam = np.array([k1 * Pt * Px, k2 * Pt * Py])
        ad = np.array([-Py * vx, Py * wt, -Px * wt, 0.0])
        out[4:] = ad + lam @ Eflat
        return out

    def modified(x):
        out = np.zeros(8)
        reconstruct(x, out)
        return out

    def embed(g):
        out = np.zeros(8)
        out[4:] = g
        return out

    def component(i):
        unit = embed(np.eye(4)[i])
        return FirstIntegral(PI_LABELS[i], lambda x: x[4 + i], lambda x: unit)

    integrals = {
        "h": FirstIntegral("h", lambda x: 0.5 * x[4:] @ Ilinv @ x[4:], lambda x: embed(Ilinv @ x[4:])),
        "htilde": FirstIntegral(
            "htilde",
            lambda x: x[4] ** 2 / (2 * J) + (R * x[5] + x[7]) ** 2 / (2 * IR),
            lambda x: embed(np.array([x[4] / J, R * (R * x[5] + x[7]) / IR, 0.0, (R * x[5] + x[7]) / IR])),
        ),
        "J1": FirstIntegral("J1", lambda x: E[0] @ x[4:], lambda x: embed(E[0])),
        "J2": FirstIntegral("J2", lambda x: E[1] @ x[4:], lambda x: embed(E[1])),
    }
    for i in range(4):
        integrals[PI_LABELS[i]] = component(i)
    ext = ExtendedField(layout, rate, tuple(integrals[k] for k in ("htilde", "h", "J1", "J2")))
    mod = ExtendedField(layout, modified, tuple(integrals[k] for k in PI_LABELS))

    def check_targets(targets):
        Pi0 = [targets.get(k) for k in PI_LABELS]
        if None in Pi0:
            return
        if not params.on_constraint(Pi0, tol=1e-9):
            raise ValueError(
                f"momentum target {Pi0} is not on the rolling constraint set "
                "(need Pi_y = 0 and I Pi_x - m R Pi_psi = 0)")

    def sampler(rng, on_constraint=False):
        g = np.concatenate([rng.uniform(-math.pi, math.pi, 1), rng.uniform(-2, 2, 2),
                            rng.uniform(-math.pi, math.pi, 1)])
        Pi = rng.standard_normal(4)
        if on_constraint:
            Pi = Pi - (E @ Pi) @ Eflat
        return np.concatenate([g, Pi])

    x0 = np.concatenate([np.zeros(4), initial_pi])
    return SystemCatalogEntry(
        name="vertical-disk",
        params=params,
        layout=layout,
        initial_state=x0,
        fields={"modified": mod, "extended": ext},
        integrals=integrals,
        controlled={"modified": PI_LABELS, "extended": ("J1", "J2", "energy")},
        default_gains={k: 1.0 for k in PI_LABELS + ("J1", "J2", "h", "htilde")},
        energy_names={"original": "h", "extended": "htilde"},
        energy_mode="extended",
        default_variant="modified",
        setup=setup,
        constrained_rate=setup.bundle.constrained_rate,
        sampler=sampler,
        target_check=check_targets,
        default_horizon=10.0,
        description="vertical disk rolling without slipping",
    )
