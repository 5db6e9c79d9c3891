"""Evolving Fock states through meshes and heralding on auxiliary modes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import (
    FockState,
    Occupation,
    enumerate_basis,
    format_occupation,
    inner_product,
    partial_project,
    tensor,
)
from .interferometer import Circuit, compose, unitarity_defect
from .permanent import (
    batch_permanent,
    batch_permanent_minors,
    expand_occupation,
    occupation_factorial,
)
from .schemes import SchemeSpec

UNITARITY_TOL = 1e-8


def amplitude_block(
    u: np.ndarray,
    inputs: Sequence[Occupation],
    outputs: Sequence[Occupation],
    jacobian: bool = False,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Transition amplitudes ``C[t, s] = <outputs[t]| U |inputs[s]>``.

    With ``jacobian=True`` also returns ``dC[t, s, i, j] = dC[t, s]/dU[i, j]``
    (amplitudes are holomorphic in U), assembled from permanent minors.
    """
    u = np.asarray(u, dtype=complex)
    n_modes = u.shape[0]
    n_photons = sum(inputs[0])
    if any(sum(s) != n_photons for s in inputs) or any(sum(t) != n_photons for t in outputs):
        raise ValueError("all occupations in a block must carry the same photon number")
    rows = np.array([expand_occupation(t) for t in outputs], dtype=int).reshape(len(outputs), n_photons)
    cols = np.array([expand_occupation(s) for s in inputs], dtype=int).reshape(len(inputs), n_photons)
    norm = np.sqrt(
        np.outer(
            [occupation_factorial(t) for t in outputs], [occupation_factorial(s) for s in inputs]
        )
    )
    sub = u[rows[:, None, :, None], cols[None, :, None, :]]
    amps = batch_permanent(sub) / norm
    if not jacobian:
        return amps, None
    d_amps = np.zeros((len(outputs), len(inputs), n_modes, n_modes), dtype=complex)
    if n_photons == 0:
        return amps, d_amps
    minors = batch_permanent_minors(sub) / norm[:, :, None, None]
    k_idx, s_idx, a_idx, b_idx = np.meshgrid(
        np.arange(len(outputs)), np.arange(len(inputs)),
        np.arange(n_photons), np.arange(n_photons), indexing="ij",
    )
    np.add.at(
        d_amps,
        (k_idx, s_idx, rows[k_idx, a_idx], cols[s_idx, b_idx]),
        minors,
    )
    return amps, d_amps


def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"transfer matrix must be square, got {u.shape}")
    defect = unitarity_defect(u)
    if defect > UNITARITY_TOL:
        raise ValueError(f"transfer matrix is not unitary (defect {defect:.3g})")
    return u


def evolve(u, input_occupation: Sequence[int]) -> FockState:
    """Output state for a single input occupation over the full basis."""
    u = _check_unitary(u)
    s = tuple(int(n) for n in input_occupation)
    if len(s) != u.shape[0]:
        raise ValueError(f"input {s} does not match a {u.shape[0]}-mode transfer matrix")
    if min(s) < 0:
        raise ValueError("negative photon count")
    outputs = enumerate_basis(sum(s), len(s))
    amps, _ = amplitude_block(u, [s], outputs)
    return FockState(sum(s), amps[:, 0], tuple(range(len(s))))


def evolve_state(u, state: FockState) -> FockState:
    """Linear extension of :func:`evolve` to superpositions."""
    u = _check_unitary(u)
    if state.n_modes != u.shape[0]:
        raise ValueError(f"{state.n_modes}-mode state vs {u.shape[0]}-mode transfer matrix")
    basis = state.basis
    amps, _ = amplitude_block(u, basis, basis)
    return FockState(state.n_photons, amps @ state.amplitudes, state.modes)


def aux_patterns(n_photons: int, n_aux: int) -> list[Occupation]:
    """Every aux occupation with at most ``n_photons`` photons."""
    out: list[Occupation] = []
    for k in range(n_photons + 1):
        out.extend(enumerate_basis(k, n_aux))
    return out


def target_on(scheme: SchemeSpec) -> FockState:
    t = scheme.target
    return FockState(t.n_photons, t.amplitudes, tuple(sorted(scheme.logical_modes)))


@dataclass(frozen=True)
class HeraldedOutcome:
    """One aux detection pattern and what it leaves in the logical modes.

    ``fidelity`` is ``None`` when the pattern never occurs.  ``overlap`` is
    |<chi_d|target>|^2 for the unnormalized conditional vector and
    ``byproduct_weight`` is the norm^2 of its component orthogonal to the
    target (both zero when the pattern carries no target photons).
    """

    aux_pattern: Occupation
    probability: float
    conditional_state: FockState | None
    fidelity: float | None
    overlap: float = 0.0
    byproduct_weight: float = 0.0


def _outcome(state: FockState, scheme: SchemeSpec, pattern: Occupation, target: FockState) -> HeraldedOutcome:
    proj = partial_project(state, scheme.aux_modes, pattern)
    if proj.empty:
        return HeraldedOutcome(pattern, 0.0, None, None)
    chi = proj.unnormalized
    if chi.n_photons != target.n_photons:
        return HeraldedOutcome(pattern, proj.probability, proj.state, 0.0, 0.0, proj.probability)
    ov = inner_product(target, chi)
    residual = chi.amplitudes - ov * target.amplitudes
    overlap = abs(ov) ** 2
    return HeraldedOutcome(
        pattern,
        proj.probability,
        proj.state,
        min(1.0, overlap / proj.probability),
        overlap,
        float(np.vdot(residual, residual).real),
    )


@dataclass(frozen=True)
class HeraldResult:
    designated: HeraldedOutcome
    table: tuple[HeraldedOutcome, ...]

    @property
    def probability(self) -> float:
        return self.designated.probability

    @property
    def fidelity(self) -> float | None:
        return self.designated.fidelity

    def total_probability(self) -> float:
        return math.fsum(o.probability for o in self.table)


def herald(output: FockState, scheme: SchemeSpec, pattern: Sequence[int] | None = None) -> HeraldResult:
    """Heralding statistics of ``output`` for the scheme's aux modes.

    ``pattern`` defaults to the scheme's (first-stage) herald pattern.
    """
    if output.n_modes != scheme.n_modes:
        raise ValueError(f"{output.n_modes}-mode state for a {scheme.n_modes}-mode scheme")
    pattern = tuple(scheme.herald_pattern if pattern is None else pattern)
    target = target_on(scheme)
    table = tuple(
        _outcome(output, scheme, d, target)
        for d in aux_patterns(output.n_photons, len(scheme.aux_modes))
    )
    designated = next((o for o in table if o.aux_pattern == pattern), None)
    if designated is None:
        designated = HeraldedOutcome(pattern, 0.0, None, None)
    return HeraldResult(designated, table)


@dataclass(frozen=True)
class TwoStageResult:
    stage1: HeraldResult
    stage2: HeraldResult | None
    intermediate: FockState
    output: FockState | None

    @property
    def p1(self) -> float:
        return self.stage1.probability

    @property
    def p2(self) -> float:
        return 0.0 if self.stage2 is None else self.stage2.probability

    @property
    def probability(self) -> float:
        return self.p1 * self.p2

    @property
    def final_state(self) -> FockState | None:
        return None if self.stage2 is None else self.stage2.designated.conditional_state

    @property
    def fidelity(self) -> float | None:
        return None if self.stage2 is None else self.stage2.fidelity


def run_two_stage(v1: Circuit | np.ndarray, v2: Circuit | np.ndarray, scheme: SchemeSpec) -> TwoStageResult:
    """Herald stage one, add a fresh photon, evolve through stage two, herald again."""
    if scheme.second_stage is None:
        raise ValueError(f"scheme {scheme.name!r} is not two-stage")
    u1 = compose(v1) if isinstance(v1, Circuit) else np.asarray(v1)
    u2 = compose(v2) if isinstance(v2, Circuit) else np.asarray(v2)
    intermediate = evolve(u1, scheme.input_occupation)
    stage1 = herald(intermediate, scheme)
    chi1 = stage1.designated.conditional_state
    if chi1 is None:
        return TwoStageResult(stage1, None, intermediate, None)
    st = scheme.second_stage
    fresh = FockState.basis_state((1,), modes=(st.fresh_mode,))
    others = [m for m in scheme.aux_modes if m != st.fresh_mode]
    stage2_in = chi1
    if others:
        stage2_in = tensor(stage2_in, FockState.basis_state((0,) * len(others), modes=others))
    stage2_in = tensor(stage2_in, fresh)
    output = evolve_state(u2, stage2_in)
    stage2 = herald(output, scheme, st.herald_pattern)
    return TwoStageResult(stage1, stage2, intermediate, output)


def simulate_scheme(circuits: Sequence[Circuit], scheme: SchemeSpec):
    """Single-stage schemes give a :class:`HeraldResult`, two-stage a :class:`TwoStageResult`."""
    if scheme.two_stage:
        if len(circuits) != 2:
            raise ValueError("two-stage scheme needs two circuits")
        return run_two_stage(circuits[0], circuits[1], scheme)
    if len(circuits) != 1:
        raise ValueError(f"{scheme.name} scheme needs exactly one circuit")
    if circuits[0].n_modes != scheme.n_modes:
        raise ValueError(f"{circuits[0].n_modes}-mode circuit for a {scheme.n_modes}-mode scheme")
    return herald(evolve(compose(circuits[0]), scheme.input_occupation), scheme)


def align_global_phase(state: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rotate ``state`` so its phase matches ``reference`` on the reference's largest component."""
    state = np.asarray(state, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    k = int(np.argmax(np.abs(reference)))
    if abs(reference[k]) == 0 or abs(state[k]) == 0:
        return state
    return state * (reference[k] / abs(reference[k])) / (state[k] / abs(state[k]))


def amplitude_rows(state: FockState | None, tol: float = 1e-14) -> list[dict]:
    if state is None:
        return []
    return [
        {"occupation": format_occupation(occ), "re": amp.real, "im": amp.imag}
        for occ, amp in state.terms(tol)
    ]


def residual_report(output: FockState, scheme: SchemeSpec, pattern: Sequence[int] | None = None) -> dict:
    """Per-outcome probabilities and conditional amplitudes, JSON-ready."""
    res = herald(output, scheme, pattern)
    rows = []
    for o in res.table:
        rows.append(
            {
                "pattern": format_occupation(o.aux_pattern),
                "probability": o.probability,
                "conditional_amplitudes": amplitude_rows(o.conditional_state),
            }
        )
    d = res.designated
    return {
        "success_probability": d.probability,
        "fidelity": d.fidelity,
        "byproduct_weight": d.byproduct_weight,
        "outcome_table": [{"pattern": r["pattern"], "probability": r["probability"]} for r in rows],
        "conditional_amplitudes": amplitude_rows(d.conditional_state),
        "outcomes": rows,
    }


def outcome_probabilities(result: HeraldResult) -> dict[Occupation, float]:
    return {o.aux_pattern: o.probability for o in result.table}
