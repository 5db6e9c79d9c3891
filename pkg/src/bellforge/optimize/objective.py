"""Heralded amplitudes of a scheme as a differentiable function of mesh angles.

Only the output amplitudes carrying the herald pattern are needed: the
unnormalized conditional vector ``z`` over the 2-photon logical basis.
Its squared norm is the herald probability and ``|<target|z>|^2`` its
overlap with the Bell target.  For two-stage schemes ``z`` is the vector
after both heralds, so ``|z|^2 = p1 * p2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..fock import Occupation, enumerate_basis
from ..interferometer import Circuit, ParameterLayout, mesh_jacobian, mesh_unitary, unpack_parameters, pack_parameters
from ..schemes import SchemeSpec
from ..simulate import amplitude_block, target_on

P_FLOOR = 1e-12
P_ZERO = 1e-300
FD_STEP = 1e-6


def _embed(scheme: SchemeSpec, logical: Occupation, aux: Occupation) -> Occupation:
    occ = [0] * scheme.n_modes
    for m, n in zip(sorted(scheme.logical_modes), logical):
        occ[m] = n
    for m, n in zip(scheme.aux_modes, aux):
        occ[m] = n
    return tuple(occ)


@dataclass(frozen=True)
class Metrics:
    probability: float
    overlap: float
    stage_probabilities: tuple[float, ...]

    @property
    def fidelity(self) -> float | None:
        if self.probability <= 0.0:
            return None
        return min(1.0, self.overlap / self.probability)


class SchemeObjective:
    """Maps a flat parameter vector (all meshes concatenated) to heralded amplitudes."""

    def __init__(self, scheme: SchemeSpec, layouts: Sequence[ParameterLayout] | None = None):
        self.scheme = scheme
        if layouts is None:
            layouts = [ParameterLayout.clements(scheme.n_modes)] * scheme.n_meshes
        if len(layouts) != scheme.n_meshes:
            raise ValueError(f"{scheme.name} needs {scheme.n_meshes} mesh layouts")
        for lay in layouts:
            if lay.n_modes != scheme.n_modes:
                raise ValueError(f"{lay.n_modes}-mode layout for a {scheme.n_modes}-mode scheme")
        self.layouts = tuple(layouts)
        self.offsets = tuple(np.cumsum([0] + [lay.size for lay in layouts]))
        self.size = int(self.offsets[-1])

        target = target_on(scheme)
        self.logical_basis = enumerate_basis(2, 4)
        self.target = target.amplitudes.copy()
        d1 = scheme.herald_pattern
        self.outputs1 = [_embed(scheme, t, d1) for t in self.logical_basis]
        self.input1 = [tuple(scheme.input_occupation)]
        if scheme.second_stage is not None:
            st = scheme.second_stage
            fresh = tuple(1 if m == st.fresh_mode else 0 for m in scheme.aux_modes)
            self.inputs2 = [_embed(scheme, t, fresh) for t in self.logical_basis]
            self.outputs2 = [_embed(scheme, t, st.herald_pattern) for t in self.logical_basis]

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"parameter vector of length {x.size}, expected {self.size}")
        return [x[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def circuits(self, x: np.ndarray) -> list[Circuit]:
        return [unpack_parameters(xi, lay) for xi, lay in zip(self.split(x), self.layouts)]

    def pack(self, circuits: Sequence[Circuit]) -> np.ndarray:
        if len(circuits) != len(self.layouts):
            raise ValueError(f"expected {len(self.layouts)} circuits")
        for c, lay in zip(circuits, self.layouts):
            if c.layout != lay.pairs:
                raise ValueError("circuit gate layout differs from the objective layout")
        return np.concatenate([pack_parameters(c) for c in circuits])

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([lay.random(rng) for lay in self.layouts])

    def gate_angles(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        parts = self.split(x)
        theta = np.concatenate([p[lay.theta_slice()] for p, lay in zip(parts, self.layouts)])
        phi = np.concatenate([p[lay.phi_slice()] for p, lay in zip(parts, self.layouts)])
        return theta, phi

    def angle_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Positions of every theta and every gate phi in the flat vector."""
        th, ph = [], []
        for off, lay in zip(self.offsets[:-1], self.layouts):
            idx = np.arange(lay.size) + off
            th.append(idx[lay.theta_slice()])
            ph.append(idx[lay.phi_slice()])
        return np.concatenate(th), np.concatenate(ph)

    def amplitudes(self, x: np.ndarray, jacobian: bool = False):
        """Return ``(z, dz, stage_probabilities)``; ``dz[t, k] = dz_t/dx_k`` or ``None``."""
        parts = self.split(x)
        if jacobian:
            u1, du1 = mesh_jacobian(parts[0], self.layouts[0])
        else:
            u1, du1 = mesh_unitary(parts[0], self.layouts[0]), None
        c1, dc1 = amplitude_block(u1, self.input1, self.outputs1, jacobian)
        y = c1[:, 0]
        p1 = float(np.vdot(y, y).real)
        dy = None
        if jacobian:
            dy = np.einsum("tij,kij->tk", dc1[:, 0], du1)
        if self.scheme.second_stage is None:
            return y, dy, (p1,)

        if jacobian:
            u2, du2 = mesh_jacobian(parts[1], self.layouts[1])
        else:
            u2, du2 = mesh_unitary(parts[1], self.layouts[1]), None
        c2, dc2 = amplitude_block(u2, self.inputs2, self.outputs2, jacobian)
        z = c2 @ y
        p = float(np.vdot(z, z).real)
        stage = (p1, p / p1 if p1 > 0 else 0.0)
        if not jacobian:
            return z, None, stage
        dz1 = c2 @ dy
        dz2 = np.einsum("tsij,s,kij->tk", dc2, y, du2)
        return z, np.concatenate([dz1, dz2], axis=1), stage

    def metrics(self, x: np.ndarray) -> Metrics:
        z, _, stage = self.amplitudes(x)
        p = float(np.vdot(z, z).real)
        q = abs(np.vdot(self.target, z)) ** 2
        return Metrics(p, q, stage)

    def byproduct(self, x: np.ndarray, jacobian: bool = False):
        """Component of ``z`` orthogonal to the target, with its Jacobian."""
        z, dz, _ = self.amplitudes(x, jacobian)
        proj = np.outer(self.target, self.target.conj())
        r = z - proj @ z
        return r, (None if dz is None else dz - proj @ dz)


def sparsity_penalty(theta: np.ndarray, phi: np.ndarray) -> float:
    return float(np.sum(np.sin(2 * theta) ** 2) + np.sum(np.sin(2 * phi) ** 2))


def _first_term(p: float, q: float, mu: float) -> float:
    if p < P_ZERO:
        return 0.0
    return -(max(p, P_FLOOR) ** (mu - 1.0)) * q


def cost(x: np.ndarray, objective: SchemeObjective, mu: float, eps: float) -> float:
    """-p^mu F + eps * sum_j (sin^2 2theta_j + sin^2 2phi_j).

    ``p^mu F`` is evaluated as ``p^(mu-1) |<target|z>|^2`` with p floored at
    1e-12, which stays finite where the herald pattern never fires.
    """
    z, _, _ = objective.amplitudes(x)
    p = float(np.vdot(z, z).real)
    q = abs(np.vdot(objective.target, z)) ** 2
    theta, phi = objective.gate_angles(x)
    return _first_term(p, q, mu) + eps * sparsity_penalty(theta, phi)


def cost_and_gradient(
    x: np.ndarray, objective: SchemeObjective, mu: float, eps: float
) -> tuple[float, np.ndarray]:
    """Cost and its analytic gradient (permanent-minor chain rule)."""
    z, dz, _ = objective.amplitudes(x, jacobian=True)
    p = float(np.vdot(z, z).real)
    ov = np.vdot(objective.target, z)
    q = abs(ov) ** 2
    theta, phi = objective.gate_angles(x)
    f = _first_term(p, q, mu) + eps * sparsity_penalty(theta, phi)

    grad = np.zeros(objective.size)
    if p >= P_ZERO:
        dp = 2.0 * np.real(z.conj() @ dz)
        dq = 2.0 * np.real(np.conj(ov) * (objective.target.conj() @ dz))
        pf = max(p, P_FLOOR)
        grad -= pf ** (mu - 1.0) * dq
        if p >= P_FLOOR:
            grad -= (mu - 1.0) * pf ** (mu - 2.0) * q * dp
    th_idx, ph_idx = objective.angle_index()
    grad[th_idx] += eps * 2.0 * np.sin(4.0 * x[th_idx])
    grad[ph_idx] += eps * 2.0 * np.sin(4.0 * x[ph_idx])
    return f, grad


def finite_difference_gradient(fun, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        g[k] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g


def gradient(
    x: np.ndarray, objective: SchemeObjective, mu: float, eps: float, mode: str = "finite-difference"
) -> np.ndarray:
    """Gradient of :func:`cost`; central differences (h = 1e-6) or analytic."""
    if mode in ("analytic", "exact"):
        return cost_and_gradient(x, objective, mu, eps)[1]
    if mode in ("finite-difference", "fd"):
        return finite_difference_gradient(lambda v: cost(v, objective, mu, eps), x)
    raise ValueError(f"unknown gradient mode {mode!r}")
