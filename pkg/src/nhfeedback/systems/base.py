"""Shared catalog-entry type for the example systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..extension import FirstIntegral
from ..feedback import FeedbackField, IntegralSpec, LyapunovSpec, ManifoldPenalty
from ..geom import ChartLayout


@dataclass(frozen=True)
class PoincareEvent:
    """Upward crossings of ``coordinate = 0``; ``planes`` lists the recorded pairs."""

    coordinate: str
    direction: int = 1
    planes: tuple = ()


@dataclass(frozen=True)
class SystemCatalogEntry:
    """Everything needed to run one example system.

    ``fields`` maps variant names to vector fields; ``controlled`` maps each
    variant to the integrals stabilized by feedback, where the token
    ``"energy"`` stands for the original or extended energy depending on the
    energy mode.  ``exact(t)`` returns the values of block ``exact_block``
    along a known solution from ``initial_state``.
    """

    name: str
    params: object
    layout: ChartLayout
    initial_state: np.ndarray
    fields: dict
    integrals: dict
    controlled: dict
    default_gains: dict
    energy_names: dict = field(default_factory=dict)
    energy_mode: str = "extended"
    penalties: tuple = ()
    monitors: tuple = ()
    default_variant: str = "extended"
    setup: object = None
    constrained_rate: Optional[Callable] = None
    exact: Optional[Callable] = None
    exact_block: Optional[str] = None
    sampler: Optional[Callable] = None
    event: Optional[PoincareEvent] = None
    dla: bool = False
    target_check: Optional[Callable] = None
    default_horizon: float = 10.0
    default_dt: float = 1e-3
    description: str = ""

    @property
    def field(self):
        return self.fields[self.default_variant]

    def integral(self, name) -> FirstIntegral:
        try:
            return self.integrals[name]
        except KeyError:
            raise KeyError(f"{self.name} has no integral {name!r}; have {sorted(self.integrals)}") from None

    def energy_name(self, mode=None):
        mode = mode or self.energy_mode
        if mode not in self.energy_names:
            raise ValueError(f"energy mode {mode!r} not available for {self.name}; have {sorted(self.energy_names)}")
        return self.energy_names[mode]

    def controlled_names(self, variant=None, energy=None):
        names = self.controlled[variant or self.default_variant]
        return tuple(self.energy_name(energy) if n == "energy" else n for n in names)

    def lyapunov(self, x0=None, gains=None, targets=None, variant=None, energy=None) -> LyapunovSpec:
        """Lyapunov function for the controlled integrals of ``variant``.

        Targets default to the integral values at ``x0`` (the initial state
        when omitted); gains default to ``default_gains``.
        """
        x0 = self.initial_state if x0 is None else np.asarray(x0, dtype=float)
        gains = {**self.default_gains, **(gains or {})}
        targets = dict(targets or {})
        specs = []
        for name in self.controlled_names(variant, energy):
            F = self.integral(name)
            c = targets.pop(name, None)
            c = float(F.value(x0)) if c is None else float(c)
            specs.append(IntegralSpec(name, F.value, F.gradient, c, float(gains.get(name, 0.0))))
        if targets:
            raise ValueError(f"targets given for integrals not under feedback: {sorted(targets)}")
        if self.target_check is not None:
            self.target_check({s.name: s.target for s in specs})
        pens = tuple(ManifoldPenalty(b, float(gains.get(b, 0.0))) for b in self.penalties)
        return LyapunovSpec(self.layout, tuple(specs), pens)

    def feedback(self, variant=None, gain_matrix=None, **kwargs) -> FeedbackField:
        base = self.fields[variant or self.default_variant]
        return FeedbackField(base, self.lyapunov(variant=variant, **kwargs), gain_matrix)

    def sample(self, rng, on_constraint=False):
        if self.sampler is None:
            raise NotImplementedError(f"{self.name} has no state sampler")
        return self.sampler(rng, on_constraint)


def rename_integral(F: FirstIntegral, name, on_constraint_only=None) -> FirstIntegral:
    flag = F.on_constraint_only if on_constraint_only is None else on_constraint_only
    return FirstIntegral(name, F.value, F.gradient, flag)


def require_positive(**values):
    for k, v in values.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be positive, got {v}")
