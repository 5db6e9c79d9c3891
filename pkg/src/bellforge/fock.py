"""Occupation bases and dense Fock-state vectors.

A state carries its mode labels so that states living on different mode
sets can be tensored together and projected on a subset of modes.  Labels
are 0-based integers; printing code converts to 1-based where needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Occupation = tuple[int, ...]

NORM_TOL = 1e-12


@lru_cache(maxsize=None)
def enumerate_basis(n_photons: int, n_modes: int) -> tuple[Occupation, ...]:
    """All occupation vectors with ``n_photons`` spread over ``n_modes``.

    Vectors come out lexicographically decreasing, so ``(M, 0, ..., 0)`` is
    first and ``(0, ..., 0, M)`` is last.
    """
    if n_photons < 0 or n_modes < 1:
        raise ValueError(f"need M >= 0 and N >= 1, got M={n_photons}, N={n_modes}")
    if n_modes == 1:
        return ((n_photons,),)
    out: list[Occupation] = []
    for first in range(n_photons, -1, -1):
        for rest in enumerate_basis(n_photons - first, n_modes - 1):
            out.append((first,) + rest)
    return tuple(out)


def basis_size(n_photons: int, n_modes: int) -> int:
    return math.comb(n_photons + n_modes - 1, n_photons)


@lru_cache(maxsize=None)
def basis_index(n_photons: int, n_modes: int) -> dict[Occupation, int]:
    return {occ: k for k, occ in enumerate(enumerate_basis(n_photons, n_modes))}


def parse_occupation(text: str) -> Occupation:
    """Parse digit-per-mode notation such as ``"1111 0"`` or ``"10,1"``."""
    digits = [ch for ch in text if not ch.isspace() and ch not in ",|"]
    if not digits or not all(ch.isdigit() for ch in digits):
        raise ValueError(f"bad occupation string {text!r}")
    return tuple(int(ch) for ch in digits)


def format_occupation(occ: Sequence[int]) -> str:
    if all(0 <= n <= 9 for n in occ):
        return "".join(str(n) for n in occ)
    return ",".join(str(n) for n in occ)


@dataclass(frozen=True, eq=False)
class FockState:
    """Dense amplitude vector over the canonical ``(M, N)`` occupation basis.

    Attributes:
        n_photons: total photon number M.
        amplitudes: complex vector of length ``binomial(M+N-1, M)``.
        modes: mode labels, one per position in each occupation vector.
    """

    n_photons: int
    amplitudes: np.ndarray
    modes: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        modes = tuple(int(m) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"repeated mode labels {modes}")
        if not modes:
            raise ValueError("a state needs at least one mode")
        object.__setattr__(self, "modes", modes)
        expected = basis_size(self.n_photons, len(modes))
        if amps.size != expected:
            raise ValueError(
                f"{amps.size} amplitudes given, basis for M={self.n_photons}, "
                f"N={len(modes)} has {expected}"
            )

    @classmethod
    def from_dict(
        cls,
        terms: dict[Occupation, complex] | Iterable[tuple[Occupation, complex]],
        modes: Sequence[int] | None = None,
        normalize: bool = False,
    ) -> "FockState":
        items = list(terms.items()) if isinstance(terms, dict) else list(terms)
        if not items:
            raise ValueError("cannot infer a basis from an empty term list")
        n_modes = len(items[0][0])
        n_photons = sum(items[0][0])
        index = basis_index(n_photons, n_modes)
        amps = np.zeros(len(index), dtype=complex)
        for occ, amp in items:
            occ = tuple(occ)
            if len(occ) != n_modes or sum(occ) != n_photons:
                raise ValueError(f"term {occ} does not match M={n_photons}, N={n_modes}")
            amps[index[occ]] += amp
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n_photons, amps, tuple(modes) if modes is not None else tuple(range(n_modes)))

    @classmethod
    def basis_state(cls, occ: Sequence[int], modes: Sequence[int] | None = None) -> "FockState":
        return cls.from_dict({tuple(occ): 1.0}, modes=modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def basis(self) -> tuple[Occupation, ...]:
        return enumerate_basis(self.n_photons, self.n_modes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockState":
        nrm = self.norm()
        if nrm == 0.0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return FockState(self.n_photons, self.amplitudes / nrm, self.modes)

    def amplitude(self, occ: Sequence[int]) -> complex:
        occ = tuple(occ)
        if sum(occ) != self.n_photons or len(occ) != self.n_modes:
            return 0j
        return complex(self.amplitudes[basis_index(self.n_photons, self.n_modes)[occ]])

    def terms(self, tol: float = 0.0) -> list[tuple[Occupation, complex]]:
        """Non-negligible ``(occupation, amplitude)`` pairs in basis order."""
        return [
            (occ, complex(a)) for occ, a in zip(self.basis, self.amplitudes) if abs(a) > tol
        ]

    def __repr__(self) -> str:
        body = " + ".join(f"({a:.4g})|{format_occupation(o)}>" for o, a in self.terms(1e-12))
        return f"FockState(M={self.n_photons}, modes={self.modes}: {body or '0'})"


def inner_product(a: FockState, b: FockState) -> complex:
    """Return <a|b>."""
    if a.modes != b.modes or a.n_photons != b.n_photons:
        raise ValueError(
            f"basis mismatch: (M={a.n_photons}, modes={a.modes}) vs (M={b.n_photons}, modes={b.modes})"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a: FockState, b: FockState) -> FockState:
    """Product state on the union of both mode sets, labels sorted ascending."""
    if set(a.modes) & set(b.modes):
        raise ValueError(f"overlapping modes {sorted(set(a.modes) & set(b.modes))}")
    modes = tuple(sorted(a.modes + b.modes))
    pos_a = [modes.index(m) for m in a.modes]
    pos_b = [modes.index(m) for m in b.modes]
    n_photons = a.n_photons + b.n_photons
    index = basis_index(n_photons, len(modes))
    amps = np.zeros(len(index), dtype=complex)
    for occ_a, amp_a in a.terms():
        for occ_b, amp_b in b.terms():
            occ = [0] * len(modes)
            for p, n in zip(pos_a, occ_a):
                occ[p] = n
            for p, n in zip(pos_b, occ_b):
                occ[p] = n
            amps[index[tuple(occ)]] += amp_a * amp_b
    return FockState(n_photons, amps, modes)


@dataclass(frozen=True)
class Projection:
    """Outcome of projecting some modes onto a fixed occupation pattern.

    ``unnormalized`` is the conditional vector <d|psi> on the kept modes,
    ``state`` its normalized version (``None`` when the probability is 0).
    """

    unnormalized: FockState | None
    state: FockState | None
    probability: float

    @property
    def empty(self) -> bool:
        return self.state is None


def partial_project(
    state: FockState, aux_modes: Sequence[int], pattern: Sequence[int]
) -> Projection:
    """Project ``aux_modes`` (mode labels) of ``state`` onto ``pattern``."""
    aux_modes = tuple(aux_modes)
    pattern = tuple(int(n) for n in pattern)
    if len(aux_modes) != len(pattern):
        raise ValueError(f"pattern {pattern} does not match aux modes {aux_modes}")
    missing = set(aux_modes) - set(state.modes)
    if missing:
        raise ValueError(f"aux modes {sorted(missing)} not in state modes {state.modes}")
    if len(set(aux_modes)) != len(aux_modes):
        raise ValueError(f"repeated aux modes {aux_modes}")
    if any(n < 0 for n in pattern):
        raise ValueError(f"negative counts in pattern {pattern}")
    kept = tuple(m for m in state.modes if m not in aux_modes)
    if not kept:
        raise ValueError("projection must leave at least one mode")
    remaining = state.n_photons - sum(pattern)
    if remaining < 0:
        return Projection(None, None, 0.0)

    aux_pos = [state.modes.index(m) for m in aux_modes]
    kept_pos = [state.modes.index(m) for m in kept]
    index = basis_index(remaining, len(kept))
    amps = np.zeros(len(index), dtype=complex)
    for occ, amp in zip(state.basis, state.amplitudes):
        if all(occ[p] == n for p, n in zip(aux_pos, pattern)):
            amps[index[tuple(occ[p] for p in kept_pos)]] = amp
    chi = FockState(remaining, amps, kept)
    prob = float(np.vdot(amps, amps).real)
    if prob == 0.0:
        return Projection(chi, None, 0.0)
    return Projection(chi, FockState(remaining, amps / math.sqrt(prob), kept), prob)


BELL_KINDS = ("phi+", "phi-", "psi+", "psi-")

_BELL_ALIASES = {
    "phi+": "phi+", "Φ+": "phi+", "Φ⁺": "phi+", "phi_plus": "phi+",
    "phi-": "phi-", "Φ-": "phi-", "Φ⁻": "phi-", "phi_minus": "phi-",
    "psi+": "psi+", "Ψ+": "psi+", "Ψ⁺": "psi+", "psi_plus": "psi+",
    "psi-": "psi-", "Ψ-": "psi-", "Ψ⁻": "psi-", "psi_minus": "psi-",
}


def _dual_rail_x1(occ: Occupation) -> Occupation:
    return (occ[1], occ[0]) + occ[2:]


def _dual_rail_z1(occ: Occupation) -> int:
    # logical |1> of qubit 1 is the photon in the second rail
    return -1 if occ[1] == 1 else 1


def bell_target(kind: str = "phi+") -> FockState:
    """Dual-rail Bell state on modes (q1a, q1b, q2a, q2b).

    ``phi+`` is (|1010> + |0101>)/sqrt(2); the others follow from Pauli Z
    and X acting on the first qubit: phi- = Z1 phi+, psi+ = X1 phi+,
    psi- = X1 Z1 phi+.
    """
    key = _BELL_ALIASES.get(kind, _BELL_ALIASES.get(kind.lower()))
    if key is None:
        raise ValueError(f"unknown Bell state {kind!r}; choose from {BELL_KINDS}")
    terms = {(1, 0, 1, 0): 1 / math.sqrt(2), (0, 1, 0, 1): 1 / math.sqrt(2)}
    if key in ("phi-", "psi-"):
        terms = {occ: _dual_rail_z1(occ) * a for occ, a in terms.items()}
    if key in ("psi+", "psi-"):
        terms = {_dual_rail_x1(occ): a for occ, a in terms.items()}
    return FockState.from_dict(terms)


def write_fixture(state: FockState, path: str | Path, tol: float = 0.0) -> None:
    """Write ``occupation TAB re TAB im`` lines for nonzero amplitudes."""
    lines = [
        f"{format_occupation(occ)}\t{amp.real!r}\t{amp.imag!r}" for occ, amp in state.terms(tol)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_fixture(path: str | Path, modes: Sequence[int] | None = None) -> FockState:
    terms = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        occ = tuple(int(x) for x in parts[0].split(",")) if "," in parts[0] else parse_occupation(parts[0])
        terms.append((occ, complex(float(parts[1]), float(parts[2]))))
    return FockState.from_dict(terms, modes=modes)
