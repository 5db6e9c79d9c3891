import math

import numpy as np
import pytest

from bellforge.interferometer import Circuit, Gate, ParameterLayout, canonicalize
from bellforge.optimize.lbfgs import lbfgs_minimize
from bellforge.optimize.objective import (
    SchemeObjective,
    cost,
    cost_and_gradient,
    gradient,
    sparsity_penalty,
)
from bellforge.schemes import DEFAULT_MU, five_mode_scheme, six_mode_scheme, two_stage_scheme
from bellforge.simulate import simulate_scheme

BUILDERS = [six_mode_scheme, five_mode_scheme, two_stage_scheme]


def load(data_dir, name):
    from bellforge.cli import load_circuits

    return load_circuits([data_dir / name])


def gradient_agreement(scheme, n_points=50):
    """Worst |analytic - FD| relative to the gradient's largest component."""
    ob = SchemeObjective(scheme)
    mu = DEFAULT_MU[scheme.name]
    worst = 0.0
    for k in range(n_points):
        x = ob.random(np.random.default_rng([2024, k]))
        a = gradient(x, ob, mu, 1e-5, mode="analytic")
        f = gradient(x, ob, mu, 1e-5)
        worst = max(worst, float(np.max(np.abs(a - f)) / np.max(np.abs(f))))
    return worst


def test_parameter_sizes():
    assert SchemeObjective(six_mode_scheme()).size == 35
    assert SchemeObjective(five_mode_scheme()).size == 24
    assert SchemeObjective(two_stage_scheme()).size == 48


def test_trivial_angles_have_no_penalty():
    theta = np.array([0.0, math.pi / 2, math.pi, -math.pi / 2])
    assert sparsity_penalty(theta, np.zeros(4)) < 1e-30


def test_single_balanced_gate_penalty():
    ob = SchemeObjective(five_mode_scheme())
    x = ob.random(np.random.default_rng(0))
    th, ph = ob.angle_index()
    x[th] = 0.0
    x[ph] = 0.0
    base = cost(x, ob, 1e-4, 1e-5)
    x2 = x.copy()
    x2[th[-1]] = math.pi / 4  # last gate: the first term is unchanged only if its modes are idle
    first = cost(x2, ob, 1e-4, 0.0)
    assert cost(x2, ob, 1e-4, 1e-5) - first == pytest.approx(1e-5, rel=1e-12)
    assert cost(x, ob, 1e-4, 1e-5) == base


def test_cost_at_exact_solution(data_dir):
    scheme = six_mode_scheme()
    circuits = load(data_dir, "six-mode-2-27.json")
    ob = SchemeObjective(scheme, [ParameterLayout.of(c) for c in circuits])
    x = ob.pack(circuits)
    res = simulate_scheme(circuits, scheme)
    assert res.fidelity == pytest.approx(1.0, abs=1e-12)
    assert res.probability == pytest.approx(2 / 27, abs=1e-9)
    c = cost(x, ob, 1e-3, 0.0)
    assert c == pytest.approx(-(res.probability**1e-3), abs=1e-12)
    assert c == pytest.approx(-0.9974006, abs=1e-7)


def test_tiny_probability_is_finite():
    # the identity (up to rounding) never fires the herald
    from bellforge.interferometer import identity_circuit, pack_parameters

    ob = SchemeObjective(five_mode_scheme())
    x = pack_parameters(identity_circuit(5))
    f, g = cost_and_gradient(x, ob, 1e-4, 0.0)
    assert abs(f) < 1e-80 and np.all(np.isfinite(g))
    assert cost(x, ob, 1e-4, 0.0) == f


@pytest.mark.parametrize("builder", BUILDERS)
def test_analytic_gradient_matches_finite_differences(builder):
    assert gradient_agreement(builder(), n_points=10) < 1e-5


def test_cost_and_gradient_value_matches_cost():
    ob = SchemeObjective(two_stage_scheme())
    x = ob.random(np.random.default_rng(3))
    assert cost_and_gradient(x, ob, 1e-2, 1e-5)[0] == cost(x, ob, 1e-2, 1e-5)


def test_unknown_gradient_mode():
    ob = SchemeObjective(five_mode_scheme())
    with pytest.raises(ValueError):
        gradient(ob.random(np.random.default_rng(0)), ob, 1e-4, 1e-5, mode="adjoint")


def test_length_checked():
    ob = SchemeObjective(five_mode_scheme())
    with pytest.raises(ValueError):
        cost(np.zeros(10), ob, 1e-4, 1e-5)


def test_stationary_at_converged_point():
    scheme = five_mode_scheme()
    ob = SchemeObjective(scheme)
    x0 = ob.random(np.random.default_rng([42, 1]))
    res = lbfgs_minimize(lambda x: cost_and_gradient(x, ob, 1e-4, 1e-5), x0)
    assert res.converged
    g = gradient(res.x, ob, 1e-4, 1e-5)
    assert np.max(np.abs(g)) < 1e-5


def test_two_stage_probability_is_product(data_dir):
    scheme = two_stage_scheme()
    circuits = load(data_dir, "two-stage.json")
    ob = SchemeObjective(scheme)
    m = ob.metrics(ob.pack([canonicalize(c) for c in circuits]))
    res = simulate_scheme(circuits, scheme)
    assert m.probability == pytest.approx(res.p1 * res.p2, abs=1e-14)
    assert m.stage_probabilities == pytest.approx((res.p1, res.p2), abs=1e-14)


def test_custom_layout_must_match():
    with pytest.raises(ValueError):
        SchemeObjective(five_mode_scheme(), [ParameterLayout.clements(6)])
    ob = SchemeObjective(five_mode_scheme())
    with pytest.raises(ValueError):
        ob.pack([Circuit(5, (Gate((0, 1), 0.1, 0.0),))])
