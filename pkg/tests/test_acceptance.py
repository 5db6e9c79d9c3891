"""The ten acceptance criteria, each at its stated tolerance.

Criteria 1-3 drive the ``optimize`` command end to end (20 restarts,
seed 42) and take several minutes in total.
"""

import json
import math
import time

import numpy as np
import pytest

from acceptance_log import record
from oracles import permanent_by_permutations
from bellforge.appendix import NORMALIZED, R511, R511_WEIGHT_SUM, STAGE2_SPLIT
from bellforge.cli import load_circuits, main
from bellforge.interferometer import Circuit, Gate, ParameterLayout, compose, mesh_unitary, unitarity_defect
from bellforge.optimize.objective import SchemeObjective, gradient
from bellforge.permanent import permanent_naive, permanent_ryser
from bellforge.schemes import DEFAULT_MU, five_mode_scheme, six_mode_scheme, two_stage_scheme
from bellforge.fock import partial_project
from bellforge.simulate import aux_patterns, evolve, outcome_probabilities, simulate_scheme

F_TOL = 1e-8
P_TOL = 1e-6


def run_optimize(tmp_path_factory, scheme):
    d = tmp_path_factory.mktemp(scheme)
    out, rep = d / "circuit.json", d / "report.json"
    t0 = time.perf_counter()
    code = main(["optimize", "--scheme", scheme, "--seed", "42", "--restarts", "20",
                 "--out", str(out), "--report", str(rep), "--trace", str(d / "trace.csv")])
    elapsed = time.perf_counter() - t0
    return {"code": code, "report": json.loads(rep.read_text()), "circuits": load_circuits([out]), "seconds": elapsed}


@pytest.fixture(scope="module")
def six(tmp_path_factory):
    return run_optimize(tmp_path_factory, "six-mode")


@pytest.fixture(scope="module")
def five(tmp_path_factory):
    return run_optimize(tmp_path_factory, "five-mode")


@pytest.fixture(scope="module")
def two(tmp_path_factory):
    return run_optimize(tmp_path_factory, "two-stage")


def test_criterion_1_six_mode(six):
    r = six["report"]
    f, p = r["fidelity"], r["success_probability"]
    ok = f >= 1 - F_TOL and abs(p - 2 / 27) <= P_TOL
    record(1, ok, f"six-mode F={f:.17g} p={p:.17g} (2/27={2 / 27:.17g}) "
                  f"bs={r['n_beam_splitters']} time={six['seconds']:.0f}s")
    assert f >= 1 - F_TOL
    assert abs(p - 2 / 27) <= P_TOL


def test_criterion_2_five_mode(five, six):
    r = five["report"]
    f, p = r["fidelity"], r["success_probability"]
    n5, n6 = r["n_beam_splitters"], six["report"]["n_beam_splitters"]
    ok = f >= 1 - F_TOL and abs(p - 1 / 9) <= P_TOL and n5 == n6
    record(2, ok, f"five-mode F={f:.17g} p={p:.17g} bs={n5} vs six-mode bs={n6}")
    assert f >= 1 - F_TOL
    assert abs(p - 1 / 9) <= P_TOL
    assert n5 == n6


def test_criterion_3_two_stage(two):
    r = two["report"]
    p1, p2 = r["stage_probabilities"]
    p = r["success_probability"]
    ok = abs(p1 - 5 / 18) <= P_TOL and abs(p2 - 4 / 15) <= P_TOL and abs(p - 2 / 27) <= P_TOL
    record(3, ok, f"two-stage p1={p1:.17g} p2={p2:.17g} p={p:.17g} F={r['fidelity']:.17g}")
    assert abs(p1 - 5 / 18) <= P_TOL
    assert abs(p2 - 4 / 15) <= P_TOL
    assert abs(p - 2 / 27) <= P_TOL


def test_criterion_4_byproduct_purity(six, five, two):
    weights = {}
    for name, run in (("six-mode", six), ("five-mode", five), ("two-stage", two)):
        r = run["report"]
        if r["fidelity"] is not None and r["fidelity"] > 0.99:
            weights[name] = r["byproduct_weight"]
    ok = bool(weights) and all(w < 1e-10 for w in weights.values())
    record(4, ok, "byproduct weight " + " ".join(f"{k}={v:.3g}" for k, v in weights.items()))
    assert weights
    assert all(w < 1e-10 for w in weights.values())


def test_criterion_5_hong_ou_mandel():
    u = compose(Circuit(2, (Gate((0, 1), math.pi / 4, 0.0),)))
    out = evolve(u, (1, 1))
    a11 = abs(out.amplitude((1, 1)))
    p20, p02 = abs(out.amplitude((2, 0))) ** 2, abs(out.amplitude((0, 2))) ** 2
    ok = a11 < 1e-12 and abs(p20 - 0.5) < 1e-12 and abs(p02 - 0.5) < 1e-12
    record(5, ok, f"|a11|={a11:.3g} p20={p20:.17g} p02={p02:.17g}")
    assert ok


def test_criterion_6_permanent_oracle():
    rng = np.random.default_rng(6)
    worst = 0.0
    t0 = time.perf_counter()
    for k in range(200):
        n = 1 + k % 7
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        ref = permanent_naive(a)
        worst = max(worst, abs(permanent_ryser(a) - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    # the naive reference itself is checked against an independent permutation sum
    b = rng.normal(size=(5, 5))
    assert abs(permanent_naive(b) - permanent_by_permutations(b)) < 1e-10 * abs(permanent_by_permutations(b))
    ok = worst <= 1e-10 and elapsed < 10
    record(6, ok, f"200 matrices n=1..7 max rel err={worst:.3g} time={elapsed:.2f}s")
    assert worst <= 1e-10
    assert elapsed < 10


def test_criterion_7_unitarity_and_normalization():
    rng = np.random.default_rng(7)
    worst_defect = worst_norm = worst_sum = 0.0
    for k in range(1000):
        n = 2 + k % 5
        lay = ParameterLayout.clements(n)
        u = mesh_unitary(lay.random(rng), lay)
        worst_defect = max(worst_defect, unitarity_defect(u))
        m = int(rng.integers(1, 5))
        s = [0] * n
        for j in rng.choice(n, size=min(m, n), replace=False):
            s[j] += 1
        out = evolve(u, s)
        worst_norm = max(worst_norm, abs(out.norm() - 1))
        aux = tuple(range(n - (2 if n > 3 else 1), n))
        total = sum(partial_project(out, aux, d).probability for d in aux_patterns(out.n_photons, len(aux)))
        worst_sum = max(worst_sum, abs(total - 1))
    ok = worst_defect < 1e-12 and worst_norm < 1e-10 and worst_sum < 1e-10
    record(7, ok, f"1000 meshes: defect={worst_defect:.3g} |norm-1|={worst_norm:.3g} |sum-1|={worst_sum:.3g}")
    assert ok


def test_criterion_8_appendix_fixtures(data_dir):
    sums = {name: e.weight_sum() for name, e in NORMALIZED.items()}
    sums["stage2_split"] = math.fsum(STAGE2_SPLIT)
    r511 = R511.weight_sum()
    normalized = all(abs(v - 1) <= 1e-12 for v in sums.values())
    not_normalized = abs(r511 - R511_WEIGHT_SUM) <= 1e-12 and abs(r511 - 1) > 1e-12
    # simulated stage-2 outcome distribution replaces the inconsistent table
    two = simulate_scheme(load_circuits([data_dir / "two-stage.json"]), two_stage_scheme())
    dist = {k[0]: v for k, v in outcome_probabilities(two.stage2).items()}
    emitted = ", ".join(f"P(a2={k})={v:.17g}" for k, v in sorted(dist.items()))
    ok = normalized and not_normalized and abs(sum(dist.values()) - 1) < 1e-12
    record(8, ok, "sums " + " ".join(f"{k}={v:.15g}" for k, v in sums.items())
           + f" R511={r511:.15g}; stage-2 simulated: {emitted}")
    assert ok


def test_criterion_9_gradient_check():
    worst = {}
    for builder in (six_mode_scheme, five_mode_scheme, two_stage_scheme):
        scheme = builder()
        ob = SchemeObjective(scheme)
        mu = DEFAULT_MU[scheme.name]
        w = 0.0
        for k in range(50):
            x = ob.random(np.random.default_rng([9, k]))
            a = gradient(x, ob, mu, 1e-5, mode="analytic")
            f = gradient(x, ob, mu, 1e-5)
            w = max(w, float(np.max(np.abs(a - f)) / np.max(np.abs(f))))
        worst[scheme.name] = w
    ok = all(v <= 1e-5 for v in worst.values())
    record(9, ok, "max |analytic-FD|/|FD|inf over 50 points: " + " ".join(f"{k}={v:.3g}" for k, v in worst.items()))
    assert ok


def test_criterion_10_transcribed_circuits(data_dir):
    transcribed = sorted(data_dir.glob("transcribed-*.json"))
    if not transcribed:
        record(10, None, "no transcribed figure circuits available; see the reconstruction "
                         "checks in test_appendix.py (six-mode and stage-one expansions reproduced)")
        pytest.skip("figure transcription unavailable")
