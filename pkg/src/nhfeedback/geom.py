"""Small fixed-dimension geometry kernel shared by every other module.

Matrices living inside a flat phase-state vector are always stored row-major.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np


def hat(omega):
    """Skew matrix with ``hat(w) @ v == np.cross(w, v)``."""
    w1, w2, w3 = omega
    return np.array([[0.0, -w3, w2],
                     [w3, 0.0, -w1],
                     [-w2, w1, 0.0]])


def vee(W):
    """Inverse of :func:`hat` (reads the skew part only)."""
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


# generator of so(2): d/dtheta of the planar rotation at theta = 0
SO2_GENERATOR = np.array([[0.0, -1.0], [1.0, 0.0]])


def rot2(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def orthogonality_defect(R):
    """Trace norm of ``R^T R - I``; works on a stack of square matrices."""
    R = np.asarray(R, dtype=float)
    n = R.shape[-1]
    A = np.swapaxes(R, -1, -2) @ R - np.eye(n)
    return np.sqrt(np.sum(A * A, axis=(-2, -1)))


def rotation_about(axis, angle):
    """Rodrigues rotation matrix, used mostly for tests and samplers."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = hat(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * K @ K


def random_rotation(rng):
    # QR of a Gaussian matrix, sign-fixed so det = +1
    Q, Rr = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(Rr))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


@dataclass(frozen=True)
class Block:
    name: str
    shape: tuple
    labels: tuple = ()

    @property
    def size(self):
        return prod(self.shape)


@dataclass(frozen=True)
class ChartLayout:
    """Named blocks partitioning a flat phase-state vector.

    Offsets are assigned in order, so the blocks tile the vector exactly.
    Scalar blocks may carry per-component labels (used for CSV channel names).
    """

    blocks: tuple
    _offsets: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, Block) else Block(b[0], tuple(b[1]), tuple(b[2]) if len(b) > 2 else ())
                       for b in self.blocks)
        names = [b.name for b in blocks]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate block names in layout: {names}")
        offsets, pos = {}, 0
        for b in blocks:
            offsets[b.name] = (pos, pos + b.size)
            pos += b.size
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "_offsets", offsets)

    @property
    def size(self):
        return sum(b.size for b in self.blocks)

    @property
    def names(self):
        return [b.name for b in self.blocks]

    def block(self, name):
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(f"no block {name!r} in layout {self.names}")

    def slice(self, name):
        start, stop = self._offsets[name]
        return slice(start, stop)

    def get(self, x, name):
        """View of block ``name`` in ``x`` (last axis), reshaped to the block shape."""
        b = self.block(name)
        x = np.asarray(x)
        return x[..., self.slice(name)].reshape(x.shape[:-1] + b.shape)

    def pack(self, **values):
        missing = set(self.names) - set(values)
        if missing:
            raise ValueError(f"missing blocks: {sorted(missing)}")
        out = np.empty(self.size)
        for b in self.blocks:
            v = np.asarray(values[b.name], dtype=float)
            if v.size != b.size:
                raise ValueError(f"block {b.name!r} expects {b.size} entries, got {v.size}")
            out[self.slice(b.name)] = v.ravel()
        return out

    def check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.size:
            raise ValueError(f"state has length {x.shape[-1]}, layout {self.names} needs {self.size}")
        if not np.all(np.isfinite(x)):
            raise ValueError("state contains non-finite entries")
        return x

    def component_labels(self):
        """One label per scalar entry: ``<block><i>`` or the block's own labels."""
        labels = []
        for b in self.blocks:
            if b.labels:
                labels.extend(b.labels)
            elif b.size == 1:
                labels.append(b.name)
            else:
                labels.extend(f"{b.name}{i + 1}" for i in range(b.size))
        return labels

    def describe(self):
        return ", ".join(f"{b.name}:{'x'.join(map(str, b.shape))}" for b in self.blocks)
