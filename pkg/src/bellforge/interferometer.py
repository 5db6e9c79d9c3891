"""Beam-splitter meshes and their transfer matrices.

Each gate acts on neighbouring modes ``(m, m+1)`` with

    T(theta, phi) = [[e^{i phi} sin(theta),  cos(theta)],
                     [e^{i phi} cos(theta), -sin(theta)]]

and the mesh realizes ``U = D . T_Q ... T_1`` (first gate acts first),
where ``D`` is a diagonal layer of output phases.  The phase on the last
mode is a gauge choice and is held at zero by the parameter layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

HALF_PI = math.pi / 2


def wrap_phase(phi: float) -> float:
    """Map an angle into [-pi, pi)."""
    return (phi + math.pi) % (2 * math.pi) - math.pi


def bs_matrix(theta: float, phi: float) -> np.ndarray:
    """2x2 beam-splitter block; transmissivity is cos(theta)^2."""
    phi = wrap_phase(phi)
    s, c = math.sin(theta), math.cos(theta)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([[e * s, c], [e * c, -s]], dtype=complex)


def _bs_derivatives(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    s, c = math.sin(theta), math.cos(theta)
    e = complex(math.cos(phi), math.sin(phi))
    d_theta = np.array([[e * c, -s], [-e * s, -c]], dtype=complex)
    d_phi = np.array([[1j * e * s, 0], [1j * e * c, 0]], dtype=complex)
    return d_theta, d_phi


@dataclass(frozen=True)
class Gate:
    modes: tuple[int, int]
    theta: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        m, n = (int(x) for x in self.modes)
        if n != m + 1 or m < 0:
            raise ValueError(f"gate modes must be adjacent (m, m+1), got {self.modes}")
        object.__setattr__(self, "modes", (m, n))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def transmissivity(self) -> float:
        return math.cos(self.theta) ** 2

    def matrix(self) -> np.ndarray:
        return bs_matrix(self.theta, self.phi)


@dataclass(frozen=True)
class Circuit:
    n_modes: int
    gates: tuple[Gate, ...] = ()
    output_phases: tuple[float, ...] = field(default=())
    label: str | None = None

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be positive, got {self.n_modes}")
        gates = tuple(g if isinstance(g, Gate) else Gate(**g) for g in self.gates)
        for g in gates:
            if g.modes[1] >= self.n_modes:
                raise ValueError(f"gate on modes {g.modes} outside a {self.n_modes}-mode circuit")
        phases = tuple(float(a) for a in self.output_phases) or (0.0,) * self.n_modes
        if len(phases) != self.n_modes:
            raise ValueError(f"{len(phases)} output phases for {self.n_modes} modes")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "output_phases", phases)

    @property
    def layout(self) -> tuple[tuple[int, int], ...]:
        return tuple(g.modes for g in self.gates)

    def unitary(self) -> np.ndarray:
        return compose(self)

    def to_dict(self) -> dict:
        out = {
            "n_modes": self.n_modes,
            "gates": [{"modes": list(g.modes), "theta": g.theta, "phi": g.phi} for g in self.gates],
            "output_phases": list(self.output_phases),
        }
        if self.label is not None:
            out["label"] = self.label
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        try:
            n_modes = int(data["n_modes"])
            gates = tuple(
                Gate(tuple(g["modes"]), float(g["theta"]), float(g.get("phi", 0.0)))
                for g in data.get("gates", [])
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed circuit description: {exc!r}") from exc
        return cls(n_modes, gates, tuple(data.get("output_phases", ())), data.get("label"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Circuit":
        return cls.from_dict(json.loads(Path(path).read_text()))


def clements_layout(n_modes: int) -> list[tuple[int, int]]:
    """Rectangular mesh: N layers alternating even and odd neighbour pairs."""
    if n_modes < 2:
        raise ValueError("a mesh needs at least two modes")
    pairs = []
    for layer in range(n_modes):
        start = layer % 2
        pairs.extend((m, m + 1) for m in range(start, n_modes - 1, 2))
    return pairs


def identity_circuit(n_modes: int, layout: Sequence[tuple[int, int]] | None = None) -> Circuit:
    """All-identity mesh: every gate at theta = pi/2, phi = 0.

    Note that theta = pi/2 gives diag(1, -1), so a column of gates flips
    signs; output phases undo that so the transfer matrix is exactly I.
    """
    layout = clements_layout(n_modes) if layout is None else list(layout)
    gates = tuple(Gate(p, HALF_PI, 0.0) for p in layout)
    signs = np.ones(n_modes)
    for m, n in layout:
        signs[n] *= -1
    phases = tuple(0.0 if s > 0 else math.pi for s in signs)
    return Circuit(n_modes, gates, phases, label="identity")


def compose(circuit: Circuit) -> np.ndarray:
    """Transfer matrix U = D . T_Q ... T_1."""
    u = np.eye(circuit.n_modes, dtype=complex)
    for g in circuit.gates:
        m, n = g.modes
        if n >= circuit.n_modes:
            raise ValueError(f"gate on modes {g.modes} outside the circuit")
        u[[m, n], :] = g.matrix() @ u[[m, n], :]
    return np.exp(1j * np.asarray(circuit.output_phases))[:, None] * u


def unitarity_defect(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True)
class ParameterLayout:
    """Flat-vector layout ``[theta_1, phi_1, ..., theta_Q, phi_Q, alpha_1, ..., alpha_{N-1}]``."""

    n_modes: int
    pairs: tuple[tuple[int, int], ...]

    @classmethod
    def clements(cls, n_modes: int) -> "ParameterLayout":
        return cls(n_modes, tuple(clements_layout(n_modes)))

    @classmethod
    def of(cls, circuit: Circuit) -> "ParameterLayout":
        return cls(circuit.n_modes, circuit.layout)

    @property
    def n_gates(self) -> int:
        return len(self.pairs)

    @property
    def size(self) -> int:
        return 2 * self.n_gates + self.n_modes - 1

    def theta_slice(self) -> slice:
        return slice(0, 2 * self.n_gates, 2)

    def phi_slice(self) -> slice:
        return slice(1, 2 * self.n_gates, 2)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        x = np.empty(self.size)
        x[self.theta_slice()] = rng.uniform(0.0, HALF_PI, self.n_gates)
        x[self.phi_slice()] = rng.uniform(-math.pi, math.pi, self.n_gates)
        x[2 * self.n_gates:] = rng.uniform(-math.pi, math.pi, self.n_modes - 1)
        return x


def pack_parameters(circuit: Circuit) -> np.ndarray:
    """Flatten a circuit; the last output phase is removed as a global phase."""
    gauge = circuit.output_phases[-1]
    x = [v for g in circuit.gates for v in (g.theta, g.phi)]
    x.extend(a - gauge for a in circuit.output_phases[:-1])
    return np.array(x, dtype=float)


def unpack_parameters(x, layout: ParameterLayout, label: str | None = None) -> Circuit:
    x = np.asarray(x, dtype=float)
    if x.shape != (layout.size,):
        raise ValueError(f"parameter vector of length {x.size}, layout expects {layout.size}")
    q = layout.n_gates
    gates = tuple(Gate(p, x[2 * k], x[2 * k + 1]) for k, p in enumerate(layout.pairs))
    phases = tuple(x[2 * q:]) + (0.0,)
    return Circuit(layout.n_modes, gates, phases, label)


def mesh_unitary(x: np.ndarray, layout: ParameterLayout) -> np.ndarray:
    return compose(unpack_parameters(x, layout))


def mesh_jacobian(x: np.ndarray, layout: ParameterLayout) -> tuple[np.ndarray, np.ndarray]:
    """Transfer matrix and its derivatives, ``dU[k] = dU/dx_k``.

    Returns ``(U, dU)`` with ``dU`` of shape ``(layout.size, N, N)``.
    """
    x = np.asarray(x, dtype=float)
    n, q = layout.n_modes, layout.n_gates
    blocks = [bs_matrix(x[2 * k], x[2 * k + 1]) for k in range(q)]

    # prefix[k] = T_k ... T_1 (prefix[0] = I)
    prefix = [np.eye(n, dtype=complex)]
    for (m, m1), blk in zip(layout.pairs, blocks):
        nxt = prefix[-1].copy()
        nxt[[m, m1], :] = blk @ nxt[[m, m1], :]
        prefix.append(nxt)
    v = prefix[-1]
    phases = np.exp(1j * np.append(x[2 * q:], 0.0))
    u = phases[:, None] * v

    du = np.zeros((layout.size, n, n), dtype=complex)
    # suffix = D T_Q ... T_{k+1}, built from the left
    suffix = np.diag(phases)
    for k in range(q - 1, -1, -1):
        m, m1 = layout.pairs[k]
        d_theta, d_phi = _bs_derivatives(x[2 * k], x[2 * k + 1])
        right = prefix[k][[m, m1], :]
        left = suffix[:, [m, m1]]
        du[2 * k] = left @ (d_theta @ right)
        du[2 * k + 1] = left @ (d_phi @ right)
        suffix = suffix.copy()
        suffix[:, [m, m1]] = left @ blocks[k]
    for i in range(n - 1):
        du[2 * q + i, i, :] = 1j * u[i, :]
    return u, du


def nearest_trivial_theta(theta: float) -> float:
    return round(theta / HALF_PI) * HALF_PI


def is_trivial_theta(theta: float, tol: float) -> bool:
    return abs(theta - nearest_trivial_theta(theta)) <= tol


def is_zero_phase(phi: float, tol: float) -> bool:
    return abs(wrap_phase(phi)) <= tol


@dataclass(frozen=True)
class PruneSummary:
    """What survives pruning.

    ``transmissivities`` lists cos^2(theta) for each non-trivial splitter
    in gate order; ``phase_shifts`` counts gate phases that are not zero.
    """

    n_beam_splitters: int
    transmissivities: tuple[float, ...]
    phase_shifts: int
    output_phase_shifts: int
    n_crossings: int
    n_identities: int

    def to_dict(self) -> dict:
        return {
            "beam_splitters": self.n_beam_splitters,
            "transmissivities": list(self.transmissivities),
            "phase_shifts": self.phase_shifts,
            "output_phase_shifts": self.output_phase_shifts,
            "crossings": self.n_crossings,
            "identities": self.n_identities,
        }


def prune_trivial(circuit: Circuit, tol: float = 1e-9) -> tuple[Circuit, PruneSummary]:
    """Snap near-trivial gates to exact crossings or identities.

    A gate is trivial when theta is within ``tol`` of a multiple of pi/2
    and phi is within ``tol`` of zero.  Trivial gates stay in the gate list
    with exact angles, since a crossing still permutes modes.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    gates = []
    taus = []
    n_phase = n_cross = n_ident = 0
    for g in circuit.gates:
        theta_trivial = is_trivial_theta(g.theta, tol)
        phi_zero = is_zero_phase(g.phi, tol)
        theta = nearest_trivial_theta(g.theta) if theta_trivial else g.theta
        phi = 0.0 if phi_zero else g.phi
        if theta_trivial and phi_zero:
            if round(theta / HALF_PI) % 2 == 0:
                n_cross += 1
            else:
                n_ident += 1
        if not theta_trivial:
            taus.append(math.cos(g.theta) ** 2)
        if not phi_zero:
            n_phase += 1
        gates.append(Gate(g.modes, theta, phi))
    out_shift = sum(
        1 for a in circuit.output_phases if not is_zero_phase(a - circuit.output_phases[-1], tol)
    )
    summary = PruneSummary(len(taus), tuple(taus), n_phase, out_shift, n_cross, n_ident)
    return Circuit(circuit.n_modes, tuple(gates), circuit.output_phases, circuit.label), summary


def canonicalize(circuit: Circuit) -> Circuit:
    """Same transfer matrix (up to a global phase) with every theta in [0, pi/2].

    Uses T(theta + pi) = -T(theta) and
    T(pi - theta, phi) = diag(1, -1) T(theta, phi) diag(1, -1);
    stray per-mode phases are pushed forward through later gates, where
    T(theta, phi) diag(a, b) = b T(theta, phi + arg(a/b)), and finally
    into the output phase layer.
    """
    carry = np.ones(circuit.n_modes, dtype=complex)
    gates = []
    for g in circuit.gates:
        m, n = g.modes
        a, b = carry[m], carry[n]
        phi = g.phi + float(np.angle(a / b))
        out = b
        k, theta = divmod(g.theta, math.pi)
        if int(k) % 2:
            out = -out
        out_m = out_n = out
        if theta > HALF_PI:
            theta = math.pi - theta
            phi += math.pi
            out_m, out_n = -out, out
        carry[m], carry[n] = out_m, out_n
        gates.append(Gate((m, n), theta, wrap_phase(phi)))
    phases = np.angle(np.exp(1j * np.asarray(circuit.output_phases)) * carry)
    phases = [wrap_phase(a - phases[-1]) for a in phases]
    return Circuit(circuit.n_modes, tuple(gates), tuple(phases), circuit.label)
