"""Suslov problem: a rigid body whose angular velocity is constrained by ``<a, Omega> = 0``.

State: ``R`` (row-major 3x3, body to space) and the body angular momentum ``Pi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..extension import ExtendedField, FirstIntegral, LiePoissonSetup, SO3Matrix, so3_structure
from ..geom import hat, random_rotation
from .base import SystemCatalogEntry


@dataclass(frozen=True)
class SuslovParams:
    inertia: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 1.0), (0.0, 1.0, 2.0))
    a: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        II = np.asarray(self.inertia, dtype=float)
        if II.shape != (3, 3) or not np.allclose(II, II.T) or np.linalg.eigvalsh(II).min() <= 0:
            raise ValueError("inertia must be a symmetric positive definite 3x3 matrix")
        if np.linalg.norm(self.a) == 0:
            raise ValueError("constraint vector a must be nonzero")

    @property
    def I(self):
        return np.asarray(self.inertia, dtype=float)

    @property
    def e(self):
        """Constraint direction normalized so that ``e . I e = 1``."""
        a = np.asarray(self.a, dtype=float)
        Ia = np.linalg.solve(self.I, a)
        return Ia / np.sqrt(a @ Ia)


DEFAULT_INITIAL_PI = (0.0, 1.0, 1.0)


def exact_momentum(t):
    """Closed-form solution from ``Pi = (0, 1, 1)`` for the default parameters."""
    t = np.asarray(t, dtype=float)
    sech = 1.0 / np.cosh(t)
    return np.stack([-np.tanh(t), sech, sech], axis=-1)


def suslov_entry(params: SuslovParams | None = None, initial_pi=DEFAULT_INITIAL_PI) -> SystemCatalogEntry:
    params = params or SuslovParams()
    II = params.I
    Iinv = np.linalg.inv(II)
    e = params.e
    Ie = II @ e
    setup = LiePoissonSetup(so3_structure(), II, e[None, :], group=SO3Matrix())
    layout = setup.bundle.layout

    def rate(x):
        R = x[:9].reshape(3, 3)
        Pi = x[9:]
        Om = Iinv @ Pi
        Omt = Om - (Pi @ e) * e
        lam = -e @ np.cross(Pi, Om)
        out = np.empty(12)
        out[:9] = (R @ hat(Omt)).ravel()
        out[9:] = np.cross(Pi, Omt) + lam * Ie
        return out

    def constrained(x):
        R = x[:9].reshape(3, 3)
        Pi = x[9:]
        Om = Iinv @ Pi
        lam = -e @ np.cross(Pi, Om)
        return np.concatenate([(R @ hat(Om)).ravel(), np.cross(Pi, Om) + lam * Ie])

    def grad_pi(g):
        out = np.zeros(12)
        out[9:] = g
        return out

    integrals = {
        "h": FirstIntegral("h", lambda x: 0.5 * x[9:] @ Iinv @ x[9:], lambda x: grad_pi(Iinv @ x[9:])),
        "htilde": FirstIntegral(
            "htilde",
            lambda x: 0.5 * x[9:] @ Iinv @ x[9:] - 0.5 * (x[9:] @ e) ** 2,
            lambda x: grad_pi(Iinv @ x[9:] - (x[9:] @ e) * e),
        ),
        "J": FirstIntegral("J", lambda x: x[9:] @ e, lambda x: grad_pi(e)),
    }
    field = ExtendedField(layout, rate, tuple(integrals.values()), ("R",))
    x0 = np.concatenate([np.eye(3).ravel(), np.asarray(initial_pi, dtype=float)])
    is_default = np.allclose(II, SuslovParams().I) and np.allclose(params.a, SuslovParams().a) \
        and np.allclose(initial_pi, DEFAULT_INITIAL_PI)

    def sampler(rng, on_constraint=False):
        R = random_rotation(rng) + 0.05 * rng.standard_normal((3, 3))
        Pi = rng.standard_normal(3)
        if on_constraint:
            Pi = Pi - (Pi @ e) * Ie
        return np.concatenate([R.ravel(), Pi])

    return SystemCatalogEntry(
        name="suslov",
        params=params,
        layout=layout,
        initial_state=x0,
        fields={"extended": field},
        integrals=integrals,
        controlled={"extended": ("J", "energy")},
        default_gains={"J": 100.0, "h": 100.0, "htilde": 100.0, "R": 100.0},
        energy_names={"original": "h", "extended": "htilde"},
        energy_mode="original",
        penalties=("R",),
        setup=setup,
        constrained_rate=constrained,
        exact=exact_momentum if is_default else None,
        exact_block="Pi" if is_default else None,
        sampler=sampler,
        default_horizon=10.0,
        description="rigid body with a linear constraint on the angular velocity",
    )
