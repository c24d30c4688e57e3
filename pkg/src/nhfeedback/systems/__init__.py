"""Catalog of example nonholonomic systems, addressable by name."""
from __future__ import annotations

import dataclasses

import numpy as np

from .base import PoincareEvent, SystemCatalogEntry
from .disk import DiskParams, disk_entry
from .heisenberg import HeisenbergParams, heisenberg_entry
from .knife_edge import KnifeEdgeParams, knife_edge_entry
from .oscillator import OscillatorParams, oscillator_entry
from .racer import RacerParams, racer_entry
from .sleigh import SleighParams, sleigh_entry
from .suslov import SuslovParams, suslov_entry

# name -> (factory, params class, accepts a chart argument)
CATALOG = {
    "suslov": (suslov_entry, SuslovParams, False),
    "knife-edge": (knife_edge_entry, KnifeEdgeParams, False),
    "chaplygin-sleigh": (sleigh_entry, SleighParams, True),
    "vertical-disk": (disk_entry, DiskParams, False),
    "roller-racer": (racer_entry, RacerParams, False),
    "heisenberg": (heisenberg_entry, HeisenbergParams, False),
    "oscillator": (oscillator_entry, OscillatorParams, False),
}


def system_names():
    return tuple(CATALOG)


def coerce_params(cls, overrides):
    """Build a params dataclass from ``overrides`` (numbers or sequences, keyed by field name)."""
    if isinstance(overrides, cls):
        return overrides
    defaults = cls()
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name not in (overrides or {}):
            continue
        val = overrides[f.name]
        default = getattr(defaults, f.name)
        if isinstance(default, tuple):
            arr = np.asarray(val, dtype=float).reshape(np.shape(default))
            kw[f.name] = tuple(map(tuple, arr)) if arr.ndim == 2 else tuple(arr.tolist())
        else:
            kw[f.name] = float(val)
    unknown = set(overrides or {}) - {f.name for f in dataclasses.fields(cls)}
    if unknown:
        raise ValueError(f"unknown parameters for {cls.__name__}: {sorted(unknown)}")
    return cls(**kw)


def make_entry(name, params=None, chart=None) -> SystemCatalogEntry:
    try:
        factory, cls, has_chart = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown system {name!r}; choose from {list(CATALOG)}") from None
    p = coerce_params(cls, params or {})
    if chart is not None and chart != "angle" and not has_chart:
        raise ValueError(f"{name} has no chart option")
    return factory(p, chart=chart) if has_chart and chart else factory(p)


__all__ = [
    "CATALOG", "PoincareEvent", "SystemCatalogEntry", "make_entry", "system_names", "coerce_params",
    "SuslovParams", "KnifeEdgeParams", "SleighParams", "DiskParams", "RacerParams", "HeisenbergParams",
    "OscillatorParams", "suslov_entry", "knife_edge_entry", "sleigh_entry", "disk_entry", "racer_entry",
    "heisenberg_entry", "oscillator_entry",
]
