"""Extension of nonholonomic Hamiltonian systems to the full phase space.

Given a Hamiltonian ``H`` and a constraint frame ``e_1..e_K`` the extended
system replaces ``H`` by ``Ht = H - 1/2 sum_ij J_i C_ij J_j`` (``J_i`` the
constraint momenta, ``C_ij`` the inverse Gram matrix, identity for an
orthonormal frame) and adds the gyroscopic force ``sum_i lt_i e_i^flat`` with
``lt_i = sum_l {Ht, J_l} C_li``.  The result is an unconstrained vector field
which agrees with the constrained one on the constraint set and has ``Ht``
and every ``J_i`` as first integrals (and ``H`` too when the frame is
orthonormal).

One engine covers the three settings used in practice.  A phase point is
``(g, mu, x, p)``: ``g`` a group element carried in some chart, ``mu`` in the
dual of the Lie algebra, ``(x, p)`` in a cotangent bundle.  The Poisson bracket
on ``(mu, x, p)`` is the minus Lie-Poisson bracket plus the canonical one::

    {F, G} = -<mu, [dF/dmu, dG/dmu]> + dF/dx . dG/dp - dG/dx . dF/dp

* :class:`CanonicalSetup`   -- no group, ``T*Q`` only.
* :class:`LiePoissonSetup`  -- group only, constant frame in the Lie algebra.
* :class:`BundleSetup`      -- trivial principal bundle ``G x X``.

Lie algebras are given by structure constants ``c[a, b, k]`` with
``[xi, eta]_k = c[a, b, k] xi_a eta_b``.  Frame Jacobians are
``De[i, a, b] = d e_i^a / d x^b`` and the Jacobi-Lie bracket of vector fields
is ``[X, Y] = DY X - DX Y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geom import SO2_GENERATOR, Block, ChartLayout, hat


class DegenerateFrameError(ValueError):
    """The Gram matrix of the constraint frame is singular."""


class FrameError(ValueError):
    """Frame or mass data fail the orthonormality / definiteness checks."""


# --------------------------------------------------------------------------
# Lie algebras and group charts


def so3_structure():
    c = np.zeros((3, 3, 3))
    for a, b, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[a, b, k] = 1.0
        c[b, a, k] = -1.0
    return c


def se2_structure(extra=0):
    """se(2) in the order (theta, x, y), optionally plus ``extra`` abelian directions."""
    n = 3 + extra
    c = np.zeros((n, n, n))
    # [xi, eta]_x = xi_y eta_th - xi_th eta_y ; [xi, eta]_y = xi_th eta_x - xi_x eta_th
    c[2, 0, 1], c[0, 2, 1] = 1.0, -1.0
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    return c


def lie_bracket(structure, xi, eta):
    return np.einsum("abk,a,b->k", structure, xi, eta)


def ad_star(structure, xi, mu):
    """``ad*_xi mu`` defined by ``<ad*_xi mu, eta> = <mu, [xi, eta]>``."""
    return np.einsum("abk,a,k->b", structure, xi, mu)


class SO3Matrix:
    """SO(3) embedded as a row-major 3x3 block ``R``; ``R' = R hat(xi)``."""

    blocks = (Block("R", (3, 3)),)
    matrix_blocks = ("R",)
    algebra_dim = 3

    def velocity(self, g, xi):
        return (g.reshape(3, 3) @ hat(xi)).ravel()


class SE2Angle:
    """SE(2) (times an optional torus) in angle coordinates ``(theta, x, y, ...)``."""

    matrix_blocks = ()

    def __init__(self, extra_labels=()):
        self.extra_labels = tuple(extra_labels)
        self.algebra_dim = 3 + len(self.extra_labels)
        self.blocks = (Block("q", (self.algebra_dim,), ("theta", "x", "y") + self.extra_labels),)

    def velocity(self, g, xi):
        c, s = np.cos(g[0]), np.sin(g[0])
        out = np.empty(self.algebra_dim)
        out[0] = xi[0]
        out[1] = c * xi[1] - s * xi[2]
        out[2] = s * xi[1] + c * xi[2]
        out[3:] = xi[3:]
        return out


class SE2Matrix:
    """SE(2) with the rotation factor embedded as a row-major 2x2 block ``R``."""

    blocks = (Block("R", (2, 2)), Block("xy", (2,), ("x", "y")))
    matrix_blocks = ("R",)
    algebra_dim = 3

    def velocity(self, g, xi):
        R = g[:4].reshape(2, 2)
        return np.concatenate([(xi[0] * R @ SO2_GENERATOR).ravel(), R @ xi[1:3]])


# --------------------------------------------------------------------------
# setups


@dataclass(frozen=True)
class ConstraintFrame:
    """Constraint vector fields over the shape coordinates.

    ``vectors(x)`` returns a ``(K, n)`` array whose rows are the ``e_i``,
    ``jacobians(x)`` a ``(K, n, d)`` array (``None`` for a constant frame).
    Flats are ``e_i^flat = m(x) e_i`` and are computed from the mass tensor.
    """

    vectors: Callable
    jacobians: Optional[Callable] = None
    orthonormal: bool = True


@dataclass(frozen=True)
class FirstIntegral:
    """A conserved quantity together with its gradient on the full state.

    ``on_constraint_only`` marks quantities that are conserved on the
    constraint set but not on the whole phase space.
    """

    name: str
    value: Callable
    gradient: Callable
    on_constraint_only: bool = False


@dataclass(frozen=True)
class BundleSetup:
    """Reduced data on ``g* x T*X`` (the general engine).

    ``mass(x)`` is the reduced mass tensor on ``(mu, p)``; ``mass_inv_grad(x)``
    returns ``d(m^-1)/dx`` with shape ``(d, n, n)`` and may be omitted when the
    tensor is constant.  Validation samples ``n_samples`` shape points
    uniformly in ``sample_box``.
    """

    structure: np.ndarray
    shape_dim: int
    mass: Callable
    frame: ConstraintFrame
    mass_inv: Optional[Callable] = None
    mass_inv_grad: Optional[Callable] = None
    potential: Optional[Callable] = None
    potential_grad: Optional[Callable] = None
    group: Optional[object] = None
    names: tuple = ("Pi", "x", "p")
    shape_labels: tuple = ()
    algebra_labels: tuple = ()
    sample_box: tuple = (-1.0, 1.0)
    n_samples: int = 32
    validate: bool = True
    layout: ChartLayout = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        structure = np.asarray(self.structure, dtype=float)
        object.__setattr__(self, "structure", structure)
        ng, d = self.algebra_dim, self.shape_dim
        if self.group is not None and self.group.algebra_dim != ng:
            raise ValueError("group chart and structure constants disagree on the algebra dimension")
        blocks = list(self.group.blocks) if self.group is not None else []
        if ng:
            blocks.append(Block(self.names[0], (ng,), tuple(self.algebra_labels)))
        if d:
            labels = tuple(self.shape_labels)
            blocks.append(Block(self.names[1], (d,), labels))
            blocks.append(Block(self.names[2], (d,), tuple("p_" + s for s in labels)))
        object.__setattr__(self, "layout", ChartLayout(tuple(blocks)))
        if self.validate:
            self.check_frame()

    @property
    def algebra_dim(self):
        return self.structure.shape[0]

    @property
    def momentum_dim(self):
        return self.algebra_dim + self.shape_dim

    def sample_shapes(self, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        if self.shape_dim == 0:
            return [np.zeros(0)]
        lo, hi = self.sample_box
        return list(rng.uniform(lo, hi, size=(self.n_samples, self.shape_dim)))

    def check_frame(self, samples=None, tol=1e-10):
        """Check SPD mass and orthonormality (or SPD Gram matrix) at sample points."""
        samples = self.sample_shapes() if samples is None else samples
        for x in samples:
            M = np.asarray(self.mass(x), dtype=float)
            if not np.allclose(M, M.T, atol=1e-12) or np.linalg.eigvalsh(M).min() <= 0:
                raise FrameError(f"mass tensor not symmetric positive definite at x={x}")
            E = np.atleast_2d(self.frame.vectors(x))
            G = E @ M @ E.T
            if self.frame.orthonormal:
                err = np.abs(G - np.eye(len(E))).max()
                if err > tol:
                    raise FrameError(f"frame not orthonormal at x={x} (max Gram error {err:.3g})")
            elif np.linalg.eigvalsh(0.5 * (G + G.T)).min() <= 0:
                raise FrameError(f"Gram matrix not positive definite at x={x}")

    # ---- state splitting ------------------------------------------------

    def split(self, state):
        state = np.asarray(state, dtype=float)
        ng, d = self.algebra_dim, self.shape_dim
        lay = self.layout
        g = np.concatenate([state[lay.slice(b.name)] for b in self.group.blocks]) if self.group else np.zeros(0)
        mu = state[lay.slice(self.names[0])] if ng else np.zeros(0)
        x = state[lay.slice(self.names[1])] if d else np.zeros(0)
        p = state[lay.slice(self.names[2])] if d else np.zeros(0)
        return g, mu, x, p

    def join(self, g, mu, x, p):
        return np.concatenate([np.asarray(v, dtype=float).ravel() for v in (g, mu, x, p)])

    # ---- pointwise quantities ------------------------------------------

    def evaluate(self, state):
        """All partials needed by the extended and constrained fields at ``state``."""
        g, mu, x, p = self.split(state)
        ng = self.algebra_dim
        z = np.concatenate([mu, p])
        n, d = z.size, self.shape_dim
        E = np.atleast_2d(np.asarray(self.frame.vectors(x), dtype=float))
        K = E.shape[0]
        M = np.asarray(self.mass(x), dtype=float)
        Minv = np.asarray(self.mass_inv(x), dtype=float) if self.mass_inv else np.linalg.inv(M)
        DE = np.asarray(self.frame.jacobians(x), dtype=float) if (self.frame.jacobians and d) else np.zeros((K, n, d))
        dMinv = np.asarray(self.mass_inv_grad(x), dtype=float) if (self.mass_inv_grad and d) else None
        V = float(self.potential(x)) if self.potential else 0.0
        dV = np.asarray(self.potential_grad(x), dtype=float) if self.potential_grad else np.zeros(d)

        J = E @ z
        J_x = np.einsum("knd,n->kd", DE, z)
        H_z = Minv @ z
        H_x = dV.copy()
        if dMinv is not None:
            H_x += 0.5 * np.einsum("i,dij,j->d", z, dMinv, z)

        if self.frame.orthonormal:
            Cinv = np.eye(K)
            dCinv = None
        else:
            C = E @ M @ E.T
            if abs(np.linalg.det(C)) < 1e-14 * max(1.0, np.abs(C).max()) ** K:
                raise DegenerateFrameError(f"constraint Gram matrix is singular at x={x}")
            Cinv = np.linalg.inv(C)
            dCinv = None
            if d:
                MdE = np.einsum("ij,kjd->kid", M, DE)
                # dC[d,k,l] = De_k[:,d].M e_l + e_k.dM[d] e_l + e_k.M De_l[:,d]
                dC = np.einsum("knd,ln->dkl", DE, E @ M) + np.einsum("kn,lnd->dkl", E, MdE)
                if dMinv is not None:
                    dM = -np.einsum("ij,djk,kl->dil", M, dMinv, M)
                    dC += np.einsum("kn,dnm,lm->dkl", E, dM, E)
                dCinv = -np.einsum("ij,djk,kl->dil", Cinv, dC, Cinv)

        c = Cinv @ J
        Ht_z = H_z - E.T @ c
        Ht_x = H_x - J_x.T @ c
        if dCinv is not None:
            Ht_x -= 0.5 * np.einsum("k,dkl,l->d", J, dCinv, J)
        H = 0.5 * z @ H_z + V
        Ht = H - 0.5 * J @ c
        return _Point(g=g, mu=mu, x=x, p=p, z=z, ng=ng, E=E, M=M, Eflat=E @ M, J=J, J_x=J_x,
                      Cinv=Cinv, H=H, H_z=H_z, H_x=H_x, Ht=Ht, Ht_z=Ht_z, Ht_x=Ht_x)

    def bracket(self, mu, Fz, Fx, Gz, Gx):
        """Poisson bracket of two functions given their momentum and shape partials."""
        ng = self.algebra_dim
        val = -np.einsum("abk,a,b,k->", self.structure, Fz[:ng], Gz[:ng], mu) if ng else 0.0
        if self.shape_dim:
            val += Fx @ Gz[ng:] - Gx @ Fz[ng:]
        return float(val)

    def _bracket_with_constraints(self, pt, Fz, Fx):
        """``{F, J_i}`` for every constraint momentum ``J_i``."""
        ng = pt.ng
        out = np.zeros(len(pt.J))
        if ng:
            out -= np.einsum("abk,a,ib,k->i", self.structure, Fz[:ng], pt.E[:, :ng], pt.mu)
        if self.shape_dim:
            out += pt.E[:, ng:] @ Fx - pt.J_x @ Fz[ng:]
        return out

    def _constraint_brackets(self, pt):
        """Matrix ``B[j, i] = {J_j, J_i}``."""
        ng = pt.ng
        B = np.zeros((len(pt.J), len(pt.J)))
        if ng:
            B -= np.einsum("abk,ja,ib,k->ji", self.structure, pt.E[:, :ng], pt.E[:, :ng], pt.mu)
        if self.shape_dim:
            B += pt.J_x @ pt.E[:, ng:].T - pt.E[:, ng:] @ pt.J_x.T
        return B

    def multipliers(self, pt):
        """Original multipliers ``lambda_i = sum_l {H, J_l} C_li``."""
        return pt.Cinv @ self._bracket_with_constraints(pt, pt.H_z, pt.H_x)

    def multipliers_tilde(self, pt):
        if self.frame.orthonormal:
            # {Ht, J_i} = {H, J_i} - sum_j J_j {J_j, J_i}
            return self._bracket_with_constraints(pt, pt.H_z, pt.H_x) - pt.J @ self._constraint_brackets(pt)
        return pt.Cinv @ self._bracket_with_constraints(pt, pt.Ht_z, pt.Ht_x)

    def _rate(self, pt, dz, dx, lam):
        ng = pt.ng
        parts = []
        if self.group is not None:
            parts.append(self.group.velocity(pt.g, dz[:ng]))
        force = pt.Eflat.T @ lam
        if ng:
            parts.append(ad_star(self.structure, dz[:ng], pt.mu) + force[:ng])
        if self.shape_dim:
            parts.append(dz[ng:])
            parts.append(-dx + force[ng:])
        return np.concatenate(parts)

    def extended_rate(self, state):
        pt = self.evaluate(state)
        return self._rate(pt, pt.Ht_z, pt.Ht_x, self.multipliers_tilde(pt))

    def constrained_rate(self, state):
        """Original nonholonomic equations (``H`` and ``lambda``) evaluated at ``state``."""
        pt = self.evaluate(state)
        return self._rate(pt, pt.H_z, pt.H_x, self.multipliers(pt))

    def project(self, state):
        """Move the momenta onto the constraint set along the flats (keeps ``g`` and ``x``)."""
        pt = self.evaluate(state)
        z = pt.z - pt.Eflat.T @ (pt.Cinv @ pt.J)
        return self.join(pt.g, z[:pt.ng], pt.x, z[pt.ng:])

    def full_gradient(self, dz, dx):
        """Embed momentum/shape partials into a gradient over the whole state."""
        lay, ng = self.layout, self.algebra_dim
        out = np.zeros(lay.size)
        if ng:
            out[lay.slice(self.names[0])] = dz[:ng]
        if self.shape_dim:
            out[lay.slice(self.names[1])] = dx
            out[lay.slice(self.names[2])] = dz[ng:]
        return out

    def integrals(self):
        """First integrals of the extended field on the whole phase space.

        ``H = Htilde + J^T C^{-1} J / 2`` is one of them only when ``C`` is
        constant, which the orthonormal frames guarantee.
        """
        out = [
            FirstIntegral("Htilde", lambda s: self.evaluate(s).Ht,
                          lambda s: (lambda pt: self.full_gradient(pt.Ht_z, pt.Ht_x))(self.evaluate(s))),
        ]
        if self.frame.orthonormal:
            out.append(FirstIntegral("H", lambda s: self.evaluate(s).H,
                                     lambda s: (lambda pt: self.full_gradient(pt.H_z, pt.H_x))(self.evaluate(s))))
        K = np.atleast_2d(self.frame.vectors(self.sample_shapes()[0])).shape[0]
        for i in range(K):
            name = "J" if K == 1 else f"J{i + 1}"
            out.append(FirstIntegral(name, _momentum_value(self, i), _momentum_gradient(self, i)))
        return tuple(out)


def _momentum_value(setup, i):
    return lambda s: setup.evaluate(s).J[i]


def _momentum_gradient(setup, i):
    def grad(s):
        pt = setup.evaluate(s)
        return setup.full_gradient(pt.E[i], pt.J_x[i])
    return grad


@dataclass
class _Point:
    g: np.ndarray
    mu: np.ndarray
    x: np.ndarray
    p: np.ndarray
    z: np.ndarray
    ng: int
    E: np.ndarray
    M: np.ndarray
    Eflat: np.ndarray
    J: np.ndarray
    J_x: np.ndarray
    Cinv: np.ndarray
    H: float
    H_z: np.ndarray
    H_x: np.ndarray
    Ht: float
    Ht_z: np.ndarray
    Ht_x: np.ndarray


@dataclass(frozen=True)
class CanonicalSetup:
    """Mechanical system on ``T*Q`` with ``H = 1/2 <p, m(q)^-1 p> + V(q)``."""

    dim: int
    mass: Callable
    frame: ConstraintFrame
    mass_inv: Optional[Callable] = None
    mass_inv_grad: Optional[Callable] = None
    potential: Optional[Callable] = None
    potential_grad: Optional[Callable] = None
    labels: tuple = ()
    sample_box: tuple = (-1.0, 1.0)
    validate: bool = True
    bundle: BundleSetup = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bundle", BundleSetup(
            structure=np.zeros((0, 0, 0)), shape_dim=self.dim, mass=self.mass, frame=self.frame,
            mass_inv=self.mass_inv, mass_inv_grad=self.mass_inv_grad, potential=self.potential,
            potential_grad=self.potential_grad, names=("Pi", "q", "p"), shape_labels=self.labels,
            sample_box=self.sample_box, validate=self.validate))


@dataclass(frozen=True)
class LiePoissonSetup:
    """Left-invariant system on a Lie group with ``h(mu) = 1/2 <mu, I^-1 mu>``.

    ``elements`` holds the constraint directions ``e_i`` in the Lie algebra,
    orthonormal for the locked inertia ``inertia`` unless ``orthonormal`` is
    false.
    """

    structure: np.ndarray
    inertia: np.ndarray
    elements: np.ndarray
    group: Optional[object] = None
    orthonormal: bool = True
    labels: tuple = ()
    validate: bool = True
    bundle: BundleSetup = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        inertia_inv = np.linalg.inv(inertia)
        elements = np.atleast_2d(np.asarray(self.elements, dtype=float))
        object.__setattr__(self, "bundle", BundleSetup(
            structure=self.structure, shape_dim=0, mass=lambda x: inertia, mass_inv=lambda x: inertia_inv,
            frame=ConstraintFrame(lambda x: elements, orthonormal=self.orthonormal), group=self.group,
            algebra_labels=self.labels, validate=self.validate))

    @property
    def flats(self):
        return np.atleast_2d(self.elements) @ np.asarray(self.inertia)


def as_bundle(setup):
    return setup if isinstance(setup, BundleSetup) else setup.bundle


# --------------------------------------------------------------------------
# public operations


@dataclass(frozen=True)
class ExtendedField:
    """Evaluatable vector field on a flat state plus the integrals it conserves."""

    layout: ChartLayout
    rate: Callable
    integrals: tuple = ()
    matrix_blocks: tuple = ()

    def __call__(self, state):
        return self.rate(state)

    def integral(self, name):
        for F in self.integrals:
            if F.name == name:
                return F
        raise KeyError(f"no integral {name!r}; have {[F.name for F in self.integrals]}")


def constraint_momenta(setup, state):
    b = as_bundle(setup)
    b.layout.check(state)
    return b.evaluate(state).J


def hamiltonian(setup, state):
    return as_bundle(setup).evaluate(state).H


def extended_hamiltonian(setup, state):
    """``Ht = H - 1/2 sum J_i C_ij J_j`` (``C`` identity for orthonormal frames)."""
    b = as_bundle(setup)
    b.layout.check(state)
    return b.evaluate(state).Ht


def multipliers_tilde(setup, state):
    b = as_bundle(setup)
    b.layout.check(state)
    return b.multipliers_tilde(b.evaluate(state))


def general_multipliers(setup, state):
    """``lambda_i = sum_l {H, J_l} C_li`` for a frame that need not be orthonormal."""
    b = as_bundle(setup)
    b.layout.check(state)
    pt = b.evaluate(state)
    if b.frame.orthonormal:
        E = pt.E
        C = E @ pt.M @ E.T
        if abs(np.linalg.det(C)) < 1e-14:
            raise DegenerateFrameError("constraint Gram matrix is singular")
        pt.Cinv = np.linalg.inv(C)
    return b.multipliers(pt)


def _extended_field(b):
    return ExtendedField(layout=b.layout, rate=b.extended_rate, integrals=b.integrals(),
                         matrix_blocks=tuple(b.group.matrix_blocks) if b.group is not None else ())


def extended_field_canonical(setup: CanonicalSetup) -> ExtendedField:
    return _extended_field(as_bundle(setup))


def extended_field_lie_poisson(setup: LiePoissonSetup) -> ExtendedField:
    return _extended_field(as_bundle(setup))


def extended_field_bundle(setup: BundleSetup) -> ExtendedField:
    return _extended_field(setup)


def constrained_field(setup):
    return as_bundle(setup).constrained_rate


def project_to_constraint(setup, state):
    return as_bundle(setup).project(state)
