"""Roller racer: two planar bodies joined at a rotary joint, each on a pair of wheels.

Configuration ``SE(2) x S^1``: the group part ``(theta, x, y)`` locates the
first body, the shape ``phi`` is the joint angle.  The reduced phase space is
``se(2)* x T*S^1`` with state ``(theta, x, y, Pi_theta, Pi_x, Pi_y, phi, p_phi)``;
the field comes from the general bundle engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..extension import BundleSetup, ConstraintFrame, SE2Angle, extended_field_bundle, se2_structure
from .base import SystemCatalogEntry, rename_integral, require_positive


@dataclass(frozen=True)
class RacerParams:
    m: float = 1.0
    I1: float = 1.0
    I2: float = 1.0
    d1: float = 1.0
    d2: float = 1.0

    def __post_init__(self):
        require_positive(m=self.m, I1=self.I1, I2=self.I2)
        if not np.isfinite(self.d1) or not np.isfinite(self.d2) or self.d2 == 0:
            raise ValueError("joint offsets must be finite with d2 != 0")

    @property
    def mass(self):
        m, I1, I2 = self.m, self.I1, self.I2
        return np.array([[I1 + I2, 0, 0, I2], [0, m, 0, 0], [0, 0, m, 0], [I2, 0, 0, I2]], dtype=float)


def _e1_parts(params, phi):
    m, I1, I2, d1, d2 = params.m, params.I1, params.I2, params.d1, params.d2
    c, s = math.cos(phi), math.sin(phi)
    u = np.array([d1 * c / I1, -s / m, 0.0, -d1 * c / I1 + d2 / I2])
    du = np.array([-d1 * s / I1, -c / m, 0.0, d1 * s / I1])
    n = math.sqrt(s * s / m + d1 * d1 * c * c / I1 + d2 * d2 / I2)
    dn = s * c * (1 / m - d1 * d1 / I1) / n
    return u, du, n, dn


def racer_frame(params: RacerParams, phi):
    u, _, n, _ = _e1_parts(params, phi)
    return np.stack([u / n, np.array([0.0, 0.0, 1.0, 0.0]) / math.sqrt(params.m)])


def racer_frame_jacobian(params: RacerParams, phi):
    u, du, n, dn = _e1_parts(params, phi)
    out = np.zeros((2, 4, 1))
    out[0, :, 0] = du / n - u * dn / (n * n)
    return out


def extended_energy(params: RacerParams, Pi, phi, p_phi):
    """Extended reduced energy written out in coordinates."""
    m, I1, I2, d1, d2 = params.m, params.I1, params.I2, params.d1, params.d2
    c, s = math.cos(phi), math.sin(phi)
    num = d1 * c / I1 * Pi[0] - s / m * Pi[1] + (-d1 * c / I1 + d2 / I2) * p_phi
    den = s * s / m + d1 * d1 * c * c / I1 + d2 * d2 / I2
    return Pi[1] ** 2 / (2 * m) + (Pi[0] - p_phi) ** 2 / (2 * I1) + p_phi ** 2 / (2 * I2) - num * num / (2 * den)


def racer_setup(params: RacerParams) -> BundleSetup:
    M = params.mass
    Minv = np.linalg.inv(M)
    return BundleSetup(
        structure=se2_structure(), shape_dim=1, mass=lambda x: M, mass_inv=lambda x: Minv,
        frame=ConstraintFrame(lambda x: racer_frame(params, x[0]), lambda x: racer_frame_jacobian(params, x[0])),
        group=SE2Angle(), names=("Pi", "phi", "p_phi"), shape_labels=("phi",),
        algebra_labels=("Pi_theta", "Pi_x", "Pi_y"), sample_box=(-math.pi, math.pi))


def racer_entry(params: RacerParams | None = None, phi0=0.5, pi_theta0=1.0, p_phi0=0.0) -> SystemCatalogEntry:
    params = params or RacerParams()
    setup = racer_setup(params)
    field = extended_field_bundle(setup)
    layout = setup.layout
    engine = {F.name: F for F in field.integrals}
    integrals = {
        "htilde": rename_integral(engine["Htilde"], "htilde"),
        "h": rename_integral(engine["H"], "h"),
        "J1": engine["J1"],
        "J2": engine["J2"],
    }
    # solve J1 = 0 for Pi_x (needs sin(phi0) != 0)
    u, _, _, _ = _e1_parts(params, phi0)
    if abs(u[1]) < 1e-12:
        raise ValueError("initial joint angle leaves Pi_x undetermined by the constraint")
    pi_x0 = -(u[0] * pi_theta0 + u[3] * p_phi0) / u[1]
    x0 = setup.join(np.zeros(3), [pi_theta0, pi_x0, 0.0], [phi0], [p_phi0])

    def sampler(rng, on_constraint=False):
        x = setup.join(np.concatenate([rng.uniform(-math.pi, math.pi, 1), rng.uniform(-2, 2, 2)]),
                       rng.standard_normal(3), rng.uniform(-math.pi, math.pi, 1), rng.standard_normal(1))
        return setup.project(x) if on_constraint else x

    return SystemCatalogEntry(
        name="roller-racer",
        params=params,
        layout=layout,
        initial_state=x0,
        fields={"extended": field},
        integrals=integrals,
        controlled={"extended": ("J1", "J2", "energy")},
        default_gains={"J1": 10.0, "J2": 10.0, "h": 10.0, "htilde": 10.0},
        energy_names={"original": "h", "extended": "htilde"},
        energy_mode="extended",
        setup=setup,
        constrained_rate=setup.constrained_rate,
        sampler=sampler,
        default_horizon=10.0,
        description="roller racer (bundle SE(2) x S^1)",
    )
