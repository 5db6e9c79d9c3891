"""Working on the set of parameters whose heralded state is exactly the target.

That set is the zero set of the byproduct vector ``r(x)`` (the part of the
heralded conditional vector orthogonal to the target).  Points are pulled
onto it by Gauss-Newton steps and the herald probability is then increased
by gradient steps projected onto its tangent space.  Parameters can be
frozen by passing the indices that remain ``free``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..interferometer import HALF_PI, wrap_phase
from .objective import SchemeObjective

RESIDUAL_TOL = 1e-13
# residual norm accepted as on the set: byproduct weight <= 1e-18
FEASIBLE_TOL = 1e-9


def _residual(objective: SchemeObjective, x: np.ndarray, free: np.ndarray):
    r, jac = objective.byproduct(x, jacobian=True)
    return (
        np.concatenate([r.real, r.imag]),
        np.concatenate([jac.real, jac.imag])[:, free],
    )


def project(
    objective: SchemeObjective, x: np.ndarray, free: np.ndarray, max_iter: int = 30
) -> tuple[np.ndarray, float]:
    """Levenberg-Marquardt steps until the byproduct vanishes.

    Steps are only accepted when they shrink the residual; the damping
    falls towards plain Gauss-Newton as they succeed.  Returns the new
    point and the final residual norm.
    """
    x = np.array(x, dtype=float)
    r, jac = _residual(objective, x, free)
    rn = float(np.linalg.norm(r))
    damping = 1e-6
    for _ in range(max_iter):
        if rn < RESIDUAL_TOL:
            break
        jtj = jac.T @ jac
        jtr = jac.T @ r
        scale = max(float(np.max(np.diag(jtj))), 1e-300)
        accepted = False
        while damping < 1e6:
            step = np.linalg.solve(jtj + damping * scale * np.eye(len(free)), -jtr)
            trial = x.copy()
            trial[free] += step
            r_t, jac_t = _residual(objective, trial, free)
            rn_t = float(np.linalg.norm(r_t))
            if rn_t < rn:
                x, r, jac, rn = trial, r_t, jac_t, rn_t
                damping = max(damping * 0.1, 1e-15)
                accepted = True
                break
            damping *= 10.0
        if not accepted:
            break
    return x, rn


def _log_prob(objective: SchemeObjective, x: np.ndarray, free: np.ndarray):
    z, dz, _ = objective.amplitudes(x, jacobian=True)
    p = float(np.vdot(z, z).real)
    if p <= 0:
        return -math.inf, np.zeros(len(free))
    return math.log(p), (2.0 * np.real(z.conj() @ dz) / p)[free]


@dataclass
class AscentResult:
    x: np.ndarray
    probability: float
    residual: float
    iterations: int
    feasible: bool


def ascend(
    objective: SchemeObjective,
    x: np.ndarray,
    free: np.ndarray | None = None,
    max_iter: int = 400,
    tol: float = 1e-13,
) -> AscentResult:
    """Maximize the herald probability while keeping the byproduct at zero."""
    free = np.arange(objective.size) if free is None else np.asarray(free)
    x, rn = project(objective, x, free)
    if rn > FEASIBLE_TOL:
        return AscentResult(x, objective.metrics(x).probability, rn, 0, False)
    lp, g = _log_prob(objective, x, free)
    step = 1e-2
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        _, jac = _residual(objective, x, free)
        _, sv, vt = np.linalg.svd(jac, full_matrices=True)
        rank = int(np.sum(sv > 1e-8 * sv[0])) if sv.size else 0
        null = vt[rank:].T
        d = null @ (null.T @ g)
        if np.linalg.norm(d) < 1e-10:
            break
        improved = False
        while step > 1e-12:
            xt = x.copy()
            xt[free] += step * d
            xt, rnt = project(objective, xt, free)
            if rnt < FEASIBLE_TOL:
                lpt, gt = _log_prob(objective, xt, free)
                if lpt > lp:
                    gain = lpt - lp
                    x, lp, g, rn = xt, lpt, gt, rnt
                    step *= 2.0
                    improved = True
                    break
            step *= 0.25
        if not improved:
            break
        stall = stall + 1 if gain < tol else 0
        if stall >= 5:
            break
    return AscentResult(x, math.exp(lp), rn, it, True)


def snap_value(kind: str, value: float) -> float:
    if kind == "theta":
        return round(value / HALF_PI) * HALF_PI
    return 0.0


def snap_distance(kind: str, value: float) -> float:
    if kind == "theta":
        return abs(math.sin(2.0 * value))
    return abs(wrap_phase(value))


def sparsify(
    objective: SchemeObjective,
    x: np.ndarray,
    probability: float,
    p_tol: float = 1e-9,
    max_distance: float = 0.5,
    max_iter: int = 200,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Greedily freeze angles at trivial values without losing probability.

    Candidates are gate thetas (snapped to multiples of pi/2), gate phis
    and output phases (snapped to 0), tried nearest-first.  A freeze is
    kept when the point can be re-projected and re-ascended to a
    probability no lower than ``probability - p_tol``.  Returns the new
    point, the frozen-index mask and the achieved probability.
    """
    x = np.array(x, dtype=float)
    frozen = np.zeros(objective.size, dtype=bool)
    th_idx, ph_idx = objective.angle_index()
    alpha_idx = np.setdiff1d(np.arange(objective.size), np.concatenate([th_idx, ph_idx]))
    candidates = [(snap_distance("theta", x[k]), "theta", k) for k in th_idx]
    candidates += [(snap_distance("phi", x[k]), "phi", k) for k in ph_idx]
    candidates += [(snap_distance("phi", x[k]), "alpha", k) for k in alpha_idx]
    candidates.sort()
    best_p = probability
    for dist, kind, k in candidates:
        if dist > max_distance:
            continue
        trial = x.copy()
        trial[k] = snap_value(kind, trial[k])
        mask = frozen.copy()
        mask[k] = True
        free = np.flatnonzero(~mask)
        res = ascend(objective, trial, free, max_iter=max_iter)
        if res.feasible and res.probability >= best_p - p_tol:
            x, frozen = res.x, mask
            best_p = max(best_p, res.probability)
    return x, frozen, best_p
