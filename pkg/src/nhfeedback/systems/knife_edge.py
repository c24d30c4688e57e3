"""Knife edge sliding on an inclined plane.

Configuration ``q = (x, y, phi)``: ``x`` points down the slope, ``phi`` is the
blade heading.  The blade cannot move sideways: ``p_x sin(phi) - p_y cos(phi) = 0``
and the heading is unforced, so ``p_phi`` is conserved on the constraint set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from ..extension import CanonicalSetup, ConstraintFrame, ExtendedField, FirstIntegral
from .base import SystemCatalogEntry, require_positive


@dataclass(frozen=True)
class KnifeEdgeParams:
    m: float = 1.0
    J: float = 1.0
    g: float = 1.0
    alpha: float = math.pi / 6

    def __post_init__(self):
        require_positive(m=self.m, J=self.J, g=self.g)
        if not 0 < self.alpha < math.pi / 2:
            raise ValueError(f"incline angle must lie in (0, pi/2), got {self.alpha}")


@numba.njit(cache=True)
def _knife_rate(x, m, J, gs):
    # gs = m g sin(alpha)
    c = math.cos(x[2])
    s = math.sin(x[2])
    px, py, pf = x[3], x[4], x[5]
    w = px * c + py * s
    u = px * s - py * c
    lam = (-gs * s - pf * w / J) / math.sqrt(m)
    f = lam * math.sqrt(m)
    out = np.empty(6)
    out[0] = w * c / m
    out[1] = w * s / m
    out[2] = pf / J
    out[3] = gs + f * s
    out[4] = -f * c
    out[5] = w * u / m
    return out


@numba.njit(cache=True)
def _rk4_run(x0, m, J, gs, dt, n_steps, every):
    n_out = n_steps // every + 1
    out = np.empty((n_out, 6))
    x = x0.copy()
    out[0] = x
    k = 1
    for i in range(1, n_steps + 1):
        k1 = _knife_rate(x, m, J, gs)
        k2 = _knife_rate(x + 0.5 * dt * k1, m, J, gs)
        k3 = _knife_rate(x + 0.5 * dt * k2, m, J, gs)
        k4 = _knife_rate(x + dt * k3, m, J, gs)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if i % every == 0:
            out[k] = x
            k += 1
    return out


def reference_trajectory(params: KnifeEdgeParams, x0, T, dt=1e-5, sample_dt=1e-3):
    """High-accuracy RK4 run of the extended field, sampled every ``sample_dt``.

    Returns ``(times, states)``.
    """
    every = int(round(sample_dt / dt))
    if abs(every * dt - sample_dt) > 1e-12 * sample_dt:
        raise ValueError("sample_dt must be an integer multiple of dt")
    n_steps = int(round(T / sample_dt)) * every
    gs = params.m * params.g * math.sin(params.alpha)
    states = _rk4_run(np.asarray(x0, dtype=float), params.m, params.J, gs, dt, n_steps, every)
    return np.arange(len(states)) * sample_dt, states


@lru_cache(maxsize=4)
def _cached_reference(params, x0, T, dt, sample_dt):
    return reference_trajectory(params, np.array(x0), T, dt, sample_dt)


def cached_reference(params, x0, T, dt=1e-5, sample_dt=1e-3):
    t, s = _cached_reference(params, tuple(float(v) for v in x0), float(T), float(dt), float(sample_dt))
    return t, s


def exact_solution(params: KnifeEdgeParams, x0):
    """Closed-form motion from rest (``p_x = p_y = 0``, ``phi = 0``) with spin ``p_phi``.

    The heading turns uniformly, ``phi = w t`` with ``w = p_phi / J``, and the
    speed along the blade is ``v = (g sin(alpha)/w) sin(w t)``.  Returns
    ``None`` when the start is not of that form.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0[2] != 0 or x0[3] != 0 or x0[4] != 0 or x0[5] == 0:
        return None
    w = x0[5] / params.J
    a = params.g * math.sin(params.alpha)

    def sol(t):
        t = np.asarray(t, dtype=float)
        v = a / w * np.sin(w * t)
        out = np.empty(t.shape + (6,))
        out[..., 0] = x0[0] + a / (4 * w * w) * (1 - np.cos(2 * w * t))
        out[..., 1] = x0[1] + a / (2 * w) * (t - np.sin(2 * w * t) / (2 * w))
        out[..., 2] = w * t
        out[..., 3] = params.m * v * np.cos(w * t)
        out[..., 4] = params.m * v * np.sin(w * t)
        out[..., 5] = x0[5]
        return out

    return sol


def knife_edge_setup(params: KnifeEdgeParams) -> CanonicalSetup:
    m, J = params.m, params.J
    gs = m * params.g * math.sin(params.alpha)
    rm = math.sqrt(m)

    def frame(q):
        return np.array([[math.sin(q[2]), -math.cos(q[2]), 0.0]]) / rm

    def frame_jac(q):
        out = np.zeros((1, 3, 3))
        out[0, :2, 2] = np.array([math.cos(q[2]), math.sin(q[2])]) / rm
        return out

    return CanonicalSetup(
        3, mass=lambda q: np.diag([m, m, J]), mass_inv=lambda q: np.diag([1 / m, 1 / m, 1 / J]),
        frame=ConstraintFrame(frame, frame_jac), potential=lambda q: -gs * q[0],
        potential_grad=lambda q: np.array([-gs, 0.0, 0.0]), labels=("x", "y", "phi"),
        sample_box=(-math.pi, math.pi))


def knife_edge_entry(params: KnifeEdgeParams | None = None, initial_state=None) -> SystemCatalogEntry:
    params = params or KnifeEdgeParams()
    m, J = params.m, params.J
    gs = m * params.g * math.sin(params.alpha)
    rm = math.sqrt(m)
    setup = knife_edge_setup(params)
    layout = setup.bundle.layout
    x0 = np.array([0, 0, 0, 0, 0, 0.5]) if initial_state is None else np.asarray(initial_state, dtype=float)

    def rate(x):
        return _knife_rate(x, m, J, gs)

    def parts(x):
        c, s = math.cos(x[2]), math.sin(x[2])
        return c, s, x[3] * c + x[4] * s, x[3] * s - x[4] * c

    def H(x):
        return (x[3] ** 2 + x[4] ** 2) / (2 * m) + x[5] ** 2 / (2 * J) - gs * x[0]

    def H_grad(x):
        return np.array([-gs, 0, 0, x[3] / m, x[4] / m, x[5] / J])

    def Ht(x):
        c, s, w, u = parts(x)
        return w * w / (2 * m) + x[5] ** 2 / (2 * J) - gs * x[0]

    def Ht_grad(x):
        c, s, w, u = parts(x)
        return np.array([-gs, 0, -w * u / m, w * c / m, w * s / m, x[5] / J])

    def J1(x):
        return parts(x)[3] / rm

    def J1_grad(x):
        c, s, w, u = parts(x)
        return np.array([0, 0, w, s, -c, 0]) / rm

    integrals = {
        "H": FirstIntegral("H", H, H_grad),
        "Htilde": FirstIntegral("Htilde", Ht, Ht_grad),
        "J1": FirstIntegral("J1", J1, J1_grad),
        "J2": FirstIntegral("J2", lambda x: x[5], lambda x: np.array([0, 0, 0, 0, 0, 1.0]), True),
    }
    field = ExtendedField(layout, rate, tuple(integrals.values()))
    sol = exact_solution(params, x0)

    def sampler(rng, on_constraint=False):
        x = np.concatenate([rng.uniform(-2, 2, 2), rng.uniform(-math.pi, math.pi, 1), rng.standard_normal(3)])
        if on_constraint:
            return setup.bundle.project(x)
        return x

    return SystemCatalogEntry(
        name="knife-edge",
        params=params,
        layout=layout,
        initial_state=x0,
        fields={"extended": field},
        integrals=integrals,
        controlled={"extended": ("J1", "J2", "energy")},
        default_gains={"J1": 1000.0, "J2": 1000.0, "H": 1000.0, "Htilde": 1000.0},
        energy_names={"original": "H", "extended": "Htilde"},
        energy_mode="original",
        setup=setup,
        constrained_rate=setup.bundle.constrained_rate,
        exact=(lambda t: sol(t)[..., :3]) if sol is not None else None,
        exact_block="q" if sol is not None else None,
        sampler=sampler,
        default_horizon=200.0,
        description="knife edge on an inclined plane",
    )
