"""Multistart search, polishing and certification of scheme circuits."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..interferometer import (
    Circuit,
    ParameterLayout,
    PruneSummary,
    canonicalize,
    mesh_jacobian,
    prune_trivial,
    unpack_parameters,
)
from ..schemes import DEFAULT_EPS, DEFAULT_MU, SchemeSpec
from ..simulate import amplitude_rows, simulate_scheme
from .lbfgs import LBFGSOptions, lbfgs_minimize
from .manifold import ascend, sparsify
from .objective import SchemeObjective, cost, cost_and_gradient, finite_difference_gradient

CONVERGED_FIDELITY = 0.99
POLISH_TOL = 1e-10
CERTIFY_TOL = 1e-8
PURITY_TOL = 1e-10
PRUNE_TOL = 1e-9
# probabilities closer than this count as equal when ranking restarts
P_BUCKET = 1e-9
TRACE_HEADER = ("restart", "iteration", "cost", "infidelity", "probability")
GRADIENT_MODES = ("analytic", "finite-difference")


@dataclass(frozen=True)
class OptimizerConfig:
    mu: float = DEFAULT_MU["six-mode"]
    eps: float = DEFAULT_EPS
    restarts: int = 20
    seed: int = 42
    max_iterations: int = 5000
    gradient_mode: str = "analytic"
    gtol: float = 1e-9
    ftol: float = 1e-12
    polish: bool = True
    workers: int | None = None  # None reads BELLFORGE_THREADS

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.eps >= 0:
            raise ValueError("eps must be non-negative")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def for_scheme(cls, scheme: SchemeSpec, **overrides) -> "OptimizerConfig":
        """Defaults with the scheme's mu; ``None`` overrides are ignored."""
        kw = {"mu": DEFAULT_MU[scheme.name]}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def lbfgs_options(self) -> LBFGSOptions:
        return LBFGSOptions(gtol=self.gtol, ftol=self.ftol, max_iterations=self.max_iterations)


@dataclass
class CertificationReport:
    """Metrics recomputed by the simulator, independent of the optimizer."""

    scheme: SchemeSpec
    circuits: tuple[Circuit, ...]
    success_probability: float
    fidelity: float | None
    byproduct_weight: float
    stage_probabilities: tuple[float, ...]
    outcome_table: list[dict]
    conditional_amplitudes: list[dict]
    prune: tuple[PruneSummary, ...]
    certified: bool

    @property
    def n_beam_splitters(self) -> int:
        return sum(s.n_beam_splitters for s in self.prune)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.to_config(),
            "success_probability": self.success_probability,
            "fidelity": self.fidelity,
            "infidelity": None if self.fidelity is None else 1.0 - self.fidelity,
            "byproduct_weight": self.byproduct_weight,
            "stage_probabilities": list(self.stage_probabilities),
            "certified": self.certified,
            "fidelity_threshold": 1.0 - CERTIFY_TOL,
            "purity_threshold": PURITY_TOL,
            "n_beam_splitters": self.n_beam_splitters,
            "prune": [s.to_dict() for s in self.prune],
            "outcome_table": self.outcome_table,
            "conditional_amplitudes": self.conditional_amplitudes,
            "circuits": [c.to_dict() for c in self.circuits],
        }


def _table(result, stage: int) -> list[dict]:
    return [
        {
            "stage": stage,
            "pattern": "".join(str(n) for n in o.aux_pattern),
            "probability": o.probability,
            "fidelity": o.fidelity,
        }
        for o in result.table
    ]


def certify(circuits: Sequence[Circuit], scheme: SchemeSpec) -> CertificationReport:
    """Recompute p, F and the outcome table by direct simulation.

    Certified means F >= 1 - 1e-8 and the heralded pattern carries less
    than 1e-10 of non-target weight.  For two-stage schemes the weight is
    scaled by p1 so it is a joint probability like p.
    """
    circuits = tuple(circuits)
    res = simulate_scheme(circuits, scheme)
    prune = tuple(prune_trivial(c, PRUNE_TOL)[1] for c in circuits)
    if scheme.two_stage:
        table = _table(res.stage1, 1)
        if res.stage2 is None:
            weight, final, stages = 0.0, None, (res.p1, 0.0)
        else:
            table += _table(res.stage2, 2)
            weight = res.p1 * res.stage2.designated.byproduct_weight
            final = res.final_state
            stages = (res.p1, res.p2)
        p, fid = res.probability, res.fidelity
    else:
        table = _table(res, 1)
        d = res.designated
        p, fid, weight, final, stages = d.probability, d.fidelity, d.byproduct_weight, d.conditional_state, (d.probability,)
    ok = fid is not None and p > 0 and fid >= 1.0 - CERTIFY_TOL and weight < PURITY_TOL
    return CertificationReport(
        scheme, circuits, p, fid, weight, stages, table, amplitude_rows(final), prune, ok
    )


@dataclass
class PolishResult:
    circuits: tuple[Circuit, ...]
    probability: float
    fidelity: float | None
    success: bool
    message: str = ""


def _objective_for(circuits: Sequence[Circuit], scheme: SchemeSpec) -> SchemeObjective:
    return SchemeObjective(scheme, [ParameterLayout.of(c) for c in circuits])


def polish(circuits: Sequence[Circuit], scheme: SchemeSpec) -> PolishResult:
    """Drive a near-target circuit onto exact fidelity and strip trivial angles.

    The byproduct is projected to zero, the probability is re-maximized on
    the exact-fidelity set, angles are frozen at trivial values where that
    costs no probability, and gates are canonicalized and pruned.  When the
    result misses F >= 1 - 1e-10 the input circuits come back unchanged
    with ``success=False``.
    """
    circuits = tuple(circuits)
    ob = _objective_for(circuits, scheme)
    x = ob.pack(circuits)
    m = ob.metrics(x)
    original = PolishResult(circuits, m.probability, m.fidelity, False)
    if m.fidelity is None or m.fidelity <= CONVERGED_FIDELITY:
        original.message = "input fidelity not above 0.99"
        return original
    asc = ascend(ob, x)
    if not asc.feasible:
        original.message = f"projection stalled at residual {asc.residual:.3g}"
        return original
    xs, _, _ = sparsify(ob, asc.x, asc.probability)
    out = tuple(prune_trivial(canonicalize(c), PRUNE_TOL)[0] for c in ob.circuits(xs))
    rep = certify(out, scheme)
    if rep.fidelity is None or rep.fidelity < 1.0 - POLISH_TOL:
        original.message = f"polished fidelity {rep.fidelity}"
        return original
    return PolishResult(out, rep.success_probability, rep.fidelity, True)


@dataclass
class RestartRecord:
    restart: int
    status: str
    iterations: int
    cost: float
    probability: float
    fidelity: float | None
    polished: bool
    circuits: tuple[Circuit, ...]
    report: CertificationReport
    trace: list[tuple[int, int, float, float, float]] = field(default_factory=list)

    @property
    def n_beam_splitters(self) -> int:
        return self.report.n_beam_splitters


@dataclass
class OptimizationResult:
    scheme: SchemeSpec
    config: OptimizerConfig
    best: RestartRecord
    restarts: list[RestartRecord]

    @property
    def circuits(self) -> tuple[Circuit, ...]:
        return self.best.circuits

    @property
    def report(self) -> CertificationReport:
        return self.best.report

    @property
    def probability(self) -> float:
        return self.report.success_probability

    @property
    def fidelity(self) -> float | None:
        return self.report.fidelity

    @property
    def stage_probabilities(self) -> tuple[float, ...]:
        return self.report.stage_probabilities

    @property
    def cost(self) -> float:
        return self.best.cost

    @property
    def converged(self) -> bool:
        return any(r.fidelity is not None and r.fidelity > CONVERGED_FIDELITY for r in self.restarts)

    @property
    def trace(self) -> list[tuple[int, int, float, float, float]]:
        return [row for r in self.restarts for row in r.trace]

    def write_trace(self, path: str | Path) -> None:
        write_trace(self.trace, path)


def write_trace(rows, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r, it, f, infid, p in rows:
            w.writerow([r, it, repr(float(f)), repr(float(infid)), repr(float(p))])


def read_trace(path: str | Path) -> list[tuple[int, int, float, float, float]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header")
        return [(int(a), int(b), float(c), float(d), float(e)) for a, b, c, d, e in reader]


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([seed, restart])


def run_restart(scheme: SchemeSpec, config: OptimizerConfig, restart: int) -> RestartRecord:
    """One seeded penalty-phase run followed by polishing."""
    ob = SchemeObjective(scheme)
    x0 = ob.random(restart_rng(config.seed, restart))
    mu, eps = config.mu, config.eps
    if config.gradient_mode == "analytic":
        fun_grad = lambda x: cost_and_gradient(x, ob, mu, eps)  # noqa: E731
    else:
        def fun_grad(x):
            f = lambda v: cost(v, ob, mu, eps)  # noqa: E731
            return f(x), finite_difference_gradient(f, x)

    def record(it, x, f):
        m = ob.metrics(x)
        infid = 1.0 if m.fidelity is None else 1.0 - m.fidelity
        return (restart, it, f, infid, m.probability)

    res = lbfgs_minimize(fun_grad, x0, config.lbfgs_options(), callback=record)
    circuits = tuple(ob.circuits(res.x))
    polished = False
    if config.polish:
        pol = polish(circuits, scheme)
        if pol.success:
            circuits, polished = pol.circuits, True
    rep = certify(circuits, scheme)
    return RestartRecord(
        restart, res.status, res.iterations, res.f, rep.success_probability, rep.fidelity,
        polished, circuits, rep, list(res.extra_trace),
    )


def rank_key(r: RestartRecord) -> tuple:
    """Certified fidelity first, then probability, then fewer splitters, then earlier restart."""
    f = -1.0 if r.fidelity is None else r.fidelity
    fkey = 1.0 if f >= 1.0 - CERTIFY_TOL else f
    return (fkey, round(r.probability / P_BUCKET), -r.n_beam_splitters, -r.restart)


def worker_count(config: OptimizerConfig) -> int:
    n = config.workers
    if n is None:
        n = int(os.environ.get("BELLFORGE_THREADS", "1") or 1)
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, min(n, config.restarts))


def _run(args):
    return run_restart(*args)


def multistart(scheme: SchemeSpec, config: OptimizerConfig | None = None) -> OptimizationResult:
    """Independent seeded restarts, merged by :func:`rank_key`.

    Restart ``k`` draws from ``default_rng([seed, k])`` so results do not
    depend on the worker count.
    """
    config = config or OptimizerConfig.for_scheme(scheme)
    jobs = [(scheme, config, k) for k in range(config.restarts)]
    n = worker_count(config)
    if n == 1:
        records = [_run(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            records = list(pool.map(_run, jobs))
    best = max(records, key=rank_key)
    return OptimizationResult(scheme, config, best, records)


def fit_unitary(target: np.ndarray, rng: np.random.Generator | None = None, restarts: int = 5) -> tuple[Circuit, float]:
    """Least-squares fit of a Clements mesh to ``target``; returns the circuit and max entry error."""
    target = np.asarray(target, dtype=complex)
    n = target.shape[0]
    layout = ParameterLayout.clements(n)
    rng = rng or np.random.default_rng(0)
    # the pinned last output phase is absorbed by fitting up to a global phase
    def fun_grad(x):
        u, du = mesh_jacobian(x[:-1], layout)
        g = np.exp(1j * x[-1])
        r = g * u - target
        f = float(np.vdot(r, r).real)
        grad = np.empty(x.size)
        grad[:-1] = 2.0 * np.real(np.einsum("ij,kij->k", r.conj(), g * du))
        grad[-1] = 2.0 * np.real(np.vdot(r, 1j * g * u))
        return f, grad

    best = None
    for _ in range(restarts):
        x0 = np.concatenate([layout.random(rng), [rng.uniform(-math.pi, math.pi)]])
        res = lbfgs_minimize(fun_grad, x0, LBFGSOptions(gtol=1e-14, ftol=0.0, max_iterations=3000))
        if best is None or res.f < best.f:
            best = res
        if best.f < 1e-20:
            break
    x = best.x
    circ = unpack_parameters(x[:-1], layout)
    circ = replace(circ, output_phases=tuple(a + x[-1] for a in circ.output_phases))
    err = float(np.max(np.abs(circ.unitary() - target)))
    return circ, err


__all__ = [
    "CertificationReport",
    "OptimizationResult",
    "OptimizerConfig",
    "PolishResult",
    "RestartRecord",
    "certify",
    "fit_unitary",
    "multistart",
    "polish",
    "rank_key",
    "read_trace",
    "run_restart",
    "write_trace",
]
