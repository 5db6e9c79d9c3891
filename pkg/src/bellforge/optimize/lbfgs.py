"""Limited-memory BFGS with a strong-Wolfe line search.

The line search is the bracketing/zoom scheme of Nocedal & Wright
(Algorithms 3.5 and 3.6) with safeguarded cubic interpolation.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class LBFGSOptions:
    memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    gtol: float = 1e-9
    ftol: float = 1e-12
    max_iterations: int = 5000
    max_line_search: int = 40


@dataclass
class LBFGSResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    n_evaluations: int
    status: str
    trace: list[tuple[int, float]] = field(default_factory=list)
    extra_trace: list[tuple] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status in ("gtol", "ftol")


class LineSearchError(RuntimeError):
    pass


def _cubic_min(a, fa, ga, b, fb, gb) -> float | None:
    """Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb)."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    x = b - (b - a) * (gb + d2 - d1) / denom
    return x if math.isfinite(x) else None


def strong_wolfe(phi, f0: float, g0: float, step: float, opts: LBFGSOptions):
    """Find a step satisfying the strong Wolfe conditions.

    ``phi(alpha)`` returns ``(f, dphi, payload)``.  Returns the accepted
    ``(alpha, f, payload)`` or raises :class:`LineSearchError`.
    """
    c1, c2 = opts.c1, opts.c2
    a_prev, f_prev, g_prev = 0.0, f0, g0
    a = step
    evals = 0

    def zoom(lo, f_lo, g_lo, hi, f_hi, g_hi):
        nonlocal evals
        for _ in range(opts.max_line_search):
            trial = _cubic_min(lo, f_lo, g_lo, hi, f_hi, g_hi)
            left, right = min(lo, hi), max(lo, hi)
            margin = 0.1 * (right - left)
            if trial is None or not (left + margin <= trial <= right - margin):
                trial = 0.5 * (lo + hi)
            f_t, g_t, payload = phi(trial)
            evals += 1
            if f_t > f0 + c1 * trial * g0 or f_t >= f_lo:
                hi, f_hi, g_hi = trial, f_t, g_t
            else:
                if abs(g_t) <= -c2 * g0:
                    return trial, f_t, payload
                if g_t * (hi - lo) >= 0:
                    hi, f_hi, g_hi = lo, f_lo, g_lo
                lo, f_lo, g_lo = trial, f_t, g_t
            if abs(hi - lo) < 1e-16 * max(1.0, abs(lo)):
                break
        raise LineSearchError("zoom did not converge")

    for i in range(opts.max_line_search):
        f_a, g_a, payload = phi(a)
        evals += 1
        if not math.isfinite(f_a) or f_a > f0 + c1 * a * g0 or (i > 0 and f_a >= f_prev):
            if not math.isfinite(f_a):
                a = 0.5 * (a_prev + a)
                continue
            return zoom(a_prev, f_prev, g_prev, a, f_a, g_a)
        if abs(g_a) <= -c2 * g0:
            return a, f_a, payload
        if g_a >= 0:
            return zoom(a, f_a, g_a, a_prev, f_prev, g_prev)
        a_prev, f_prev, g_prev = a, f_a, g_a
        a = 2.0 * a
    raise LineSearchError("no acceptable step found")


def lbfgs_minimize(
    fun_grad: FunGrad,
    x0: np.ndarray,
    options: LBFGSOptions | None = None,
    callback: Callable[[int, np.ndarray, float], object] | None = None,
) -> LBFGSResult:
    """Minimize a smooth function given ``fun_grad(x) -> (f, g)``.

    Accepted iterates never increase f.  Stops when ``max|g| < gtol``,
    when an accepted step changes f by less than ``ftol``, or after
    ``max_iterations``.  A failed line search ends the run with status
    ``"line-search"`` and the last accepted iterate.
    """
    opts = options or LBFGSOptions()
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    n_eval = 1
    if not math.isfinite(f):
        raise ValueError("cost is not finite at the initial point")
    history: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=opts.memory)
    trace = [(0, f)]
    extras = []
    if callback is not None:
        extras.append(callback(0, x, f))
    status = "max-iterations"
    it = 0
    for it in range(1, opts.max_iterations + 1):
        if np.max(np.abs(g)) < opts.gtol:
            status = "gtol"
            it -= 1
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(history):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if history:
            s, y, _ = history[-1]
            q *= (s @ y) / (y @ y)
        for (s, y, rho), a in zip(history, reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        d = -q
        dg = float(d @ g)
        if dg >= 0:  # not a descent direction: reset memory
            history.clear()
            d = -g
            dg = float(d @ g)
        step = 1.0 if history else min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-300))

        def phi(alpha):
            xa = x + alpha * d
            fa, ga = fun_grad(xa)
            return fa, float(ga @ d), (xa, ga)

        try:
            alpha, f_new, (x_new, g_new) = strong_wolfe(phi, f, dg, step, opts)
        except LineSearchError:
            if history:
                history.clear()
                try:
                    d = -g
                    dg = float(d @ g)
                    step = min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-300))
                    alpha, f_new, (x_new, g_new) = strong_wolfe(phi, f, dg, step, opts)
                except LineSearchError:
                    status = "line-search"
                    break
            else:
                status = "line-search"
                break
        n_eval += 1
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-16 * float(np.sqrt((s @ s) * (y @ y))):
            history.append((s, y, 1.0 / sy))
        df = f - f_new
        x, f, g = x_new, f_new, g_new
        trace.append((it, f))
        if callback is not None:
            extras.append(callback(it, x, f))
        if abs(df) < opts.ftol:
            status = "ftol"
            break
    return LBFGSResult(x, f, g, it, n_eval, status, trace, extras)
