import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellforge.optimize.lbfgs import LBFGSOptions, lbfgs_minimize, strong_wolfe


def quadratic(c):
    return lambda x: (float((x - c) @ (x - c)), 2 * (x - c))


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


def test_quadratic():
    c = np.array([1.0, -2.0, 3.0, 0.5])
    res = lbfgs_minimize(quadratic(c), np.zeros(4))
    assert np.max(np.abs(res.x - c)) < 1e-8
    assert res.iterations < 50 and res.converged


def test_rosenbrock():
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]))
    assert np.max(np.abs(res.x - 1.0)) < 1e-6


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_accepted_costs_never_increase(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(6, 6))
    h = a @ a.T + 0.1 * np.eye(6)

    def f(x):
        return float(x @ h @ x + np.sum(np.cos(3 * x))), 2 * h @ x - 3 * np.sin(3 * x)

    res = lbfgs_minimize(f, rng.normal(size=6) * 3)
    values = [v for _, v in res.trace]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_iteration_cap_reports_status():
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), LBFGSOptions(max_iterations=3))
    assert res.status == "max-iterations" and res.iterations == 3 and not res.converged


def test_line_search_failure_is_reported():
    # gradient points the wrong way, so no step decreases the cost
    res = lbfgs_minimize(lambda x: (float(x @ x), -2 * x), np.ones(3))
    assert res.status == "line-search"
    assert np.array_equal(res.x, np.ones(3))


def test_nonfinite_start():
    with pytest.raises(ValueError):
        lbfgs_minimize(lambda x: (float("nan"), x), np.ones(2))


def test_strong_wolfe_conditions():
    f = lambda a: ((a - 2.0) ** 2, 2 * (a - 2.0), None)  # noqa: E731
    opts = LBFGSOptions()
    alpha, fa, _ = strong_wolfe(f, 4.0, -4.0, 1.0, opts)
    assert fa <= 4.0 + opts.c1 * alpha * -4.0
    assert abs(2 * (alpha - 2.0)) <= opts.c2 * 4.0


def test_callback_records_every_iterate():
    seen = []
    res = lbfgs_minimize(quadratic(np.ones(2)), np.zeros(2), callback=lambda it, x, f: seen.append(it))
    assert seen == list(range(res.iterations + 1))
