import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import permanent_by_permutations, random_unitary
from bellforge.permanent import (
    batch_permanent,
    batch_permanent_minors,
    build_submatrix,
    permanent_naive,
    permanent_ryser,
    transition_amplitude,
)


def test_known_values():
    assert permanent_ryser(np.ones((3, 3))) == pytest.approx(6)
    assert permanent_ryser(np.ones((5, 5))) == pytest.approx(120)
    assert permanent_ryser(np.array([[1, 2], [3, 4]])) == pytest.approx(10)
    assert permanent_ryser(np.eye(6)) == pytest.approx(1)
    assert permanent_ryser(np.zeros((0, 0))) == 1


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_ryser_matches_permutation_sum(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ref = permanent_by_permutations(a)
    assert abs(permanent_ryser(a) - ref) <= 1e-10 * max(1.0, abs(ref))
    assert abs(permanent_naive(a) - ref) <= 1e-10 * max(1.0, abs(ref))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_permanent_invariant_under_row_and_column_permutation(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    p, q = rng.permutation(n), rng.permutation(n)
    assert permanent_ryser(a[p][:, q]) == pytest.approx(permanent_ryser(a), rel=1e-10)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_permanent_multilinear_in_rows(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    c = rng.normal()
    b = a.copy()
    b[0] *= c
    assert permanent_ryser(b) == pytest.approx(c * permanent_ryser(a), rel=1e-9, abs=1e-12)


def test_naive_refuses_large():
    with pytest.raises(ValueError):
        permanent_naive(np.ones((9, 9)))


def test_rejects_non_square():
    with pytest.raises(ValueError):
        permanent_ryser(np.ones((2, 3)))


def test_batch_and_minors():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(7, 4, 4)) + 1j * rng.normal(size=(7, 4, 4))
    vals = batch_permanent(a)
    assert np.allclose(vals, [permanent_ryser(m) for m in a], rtol=1e-12)
    minors = batch_permanent_minors(a)
    for k in range(3):
        for i in range(4):
            for j in range(4):
                sub = np.delete(np.delete(a[k], i, 0), j, 1)
                assert minors[k, i, j] == pytest.approx(permanent_ryser(sub), rel=1e-11)


def test_submatrix_repeats_rows_and_columns():
    u = np.arange(9).reshape(3, 3)
    sub = build_submatrix(u, (2, 0, 1), (0, 1, 2))
    # rows from the output, columns from the input
    assert sub.tolist() == [[u[1, 0], u[1, 0], u[1, 2]], [u[2, 0], u[2, 0], u[2, 2]], [u[2, 0], u[2, 0], u[2, 2]]]


def test_transition_amplitude_normalization():
    rng = np.random.default_rng(5)
    u = random_unitary(3, rng)
    s = (2, 1, 0)
    from bellforge.fock import enumerate_basis

    total = sum(abs(transition_amplitude(u, s, t)) ** 2 for t in enumerate_basis(3, 3))
    assert total == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        transition_amplitude(u, s, (1, 1, 0, 0))


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_photon_number_mismatch_gives_error(seed):
    u = random_unitary(3, np.random.default_rng(seed))
    with pytest.raises(ValueError):
        transition_amplitude(u, (1, 1, 0), (1, 0, 0))
