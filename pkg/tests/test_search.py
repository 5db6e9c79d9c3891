import numpy as np
import pytest

from bellforge.cli import load_circuits
from bellforge.interferometer import ParameterLayout, identity_circuit, unpack_parameters
from bellforge.optimize.search import (
    TRACE_HEADER,
    OptimizerConfig,
    certify,
    multistart,
    polish,
    read_trace,
    write_trace,
)
from bellforge.schemes import five_mode_scheme, six_mode_scheme, two_stage_scheme


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(mu=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(eps=-1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(gradient_mode="adjoint")
    with pytest.raises(ValueError):
        OptimizerConfig(seed=-1)
    c = OptimizerConfig.for_scheme(two_stage_scheme(), restarts=3, eps=None)
    assert c.mu == 1e-2 and c.eps == 1e-5 and c.restarts == 3


def test_certify_five_mode_fixture(data_dir):
    rep = certify(load_circuits([data_dir / "five-mode.json"]), five_mode_scheme())
    assert rep.certified
    assert rep.success_probability == pytest.approx(1 / 9, abs=1e-9)
    assert rep.byproduct_weight < 1e-10
    assert rep.n_beam_splitters == 5
    assert sum(r["probability"] for r in rep.outcome_table) == pytest.approx(1.0, abs=1e-12)
    d = rep.to_dict()
    assert {"success_probability", "fidelity", "outcome_table", "conditional_amplitudes", "circuits"} <= set(d)


def test_certify_six_mode_fixture(data_dir):
    rep = certify(load_circuits([data_dir / "six-mode-2-27.json"]), six_mode_scheme())
    assert rep.certified
    assert rep.success_probability == pytest.approx(2 / 27, abs=1e-9)


def test_certify_two_stage_fixture(data_dir):
    rep = certify(load_circuits([data_dir / "two-stage.json"]), two_stage_scheme())
    assert rep.certified
    assert rep.stage_probabilities == pytest.approx((5 / 18, 4 / 15), abs=1e-9)
    assert rep.success_probability == pytest.approx(2 / 27, abs=1e-9)


def test_certify_random_circuit_reports_failure():
    lay = ParameterLayout.clements(5)
    c = unpack_parameters(lay.random(np.random.default_rng(0)), lay)
    rep = certify([c], five_mode_scheme())
    assert not rep.certified
    assert rep.fidelity < 1


def test_certify_identity_never_fires():
    rep = certify([identity_circuit(5)], five_mode_scheme())
    assert not rep.certified


def test_polish_is_idempotent(data_dir):
    circuits = load_circuits([data_dir / "five-mode.json"])
    res = polish(circuits, five_mode_scheme())
    assert res.success
    assert res.fidelity >= 1 - 1e-10
    assert res.probability == pytest.approx(1 / 9, abs=1e-9)
    for a, b in zip(circuits, res.circuits):
        assert np.allclose(a.unitary(), b.unitary(), atol=1e-7)


def test_polish_rejects_poor_input():
    lay = ParameterLayout.clements(5)
    c = unpack_parameters(lay.random(np.random.default_rng(0)), lay)
    res = polish([c], five_mode_scheme())
    assert not res.success and res.circuits == (c,)


def test_multistart_deterministic_and_trace(tmp_path):
    scheme = five_mode_scheme()
    cfg = OptimizerConfig.for_scheme(scheme, restarts=2, seed=7)
    a = multistart(scheme, cfg)
    b = multistart(scheme, cfg)
    assert a.trace == b.trace
    assert a.probability == b.probability
    write_trace(a.trace, tmp_path / "t.csv")
    rows = read_trace(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == ",".join(TRACE_HEADER)
    assert rows == [tuple(float(v) if i > 1 else v for i, v in enumerate(r)) for r in a.trace]
    for r in a.restarts:
        costs = [row[2] for row in r.trace]
        assert all(y <= x for x, y in zip(costs, costs[1:]))


def test_multistart_unconverged_flag():
    scheme = five_mode_scheme()
    res = multistart(scheme, OptimizerConfig.for_scheme(scheme, restarts=1, max_iterations=1))
    assert not res.converged


def test_reported_metrics_match_independent_simulation():
    scheme = five_mode_scheme()
    res = multistart(scheme, OptimizerConfig.for_scheme(scheme, restarts=2, seed=42))
    rep = certify(res.circuits, scheme)
    assert rep.success_probability == pytest.approx(res.probability, abs=1e-12)
    assert rep.fidelity == pytest.approx(res.fidelity, abs=1e-12)


def test_worker_count_does_not_change_result():
    scheme = five_mode_scheme()
    one = multistart(scheme, OptimizerConfig.for_scheme(scheme, restarts=2, seed=3, workers=1))
    two = multistart(scheme, OptimizerConfig.for_scheme(scheme, restarts=2, seed=3, workers=2))
    assert one.trace == two.trace
    assert one.best.restart == two.best.restart
