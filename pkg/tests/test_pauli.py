import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heislab.errors import InvalidLocalityError, InvalidPauliError, NotSimultaneouslyDiagonalError, ShapeError
from heislab.pauli import (
    EigenstateLabel,
    PauliString,
    build_sb_set,
    eigenstate_vector,
    eigenvalue_gamma,
    enumerate_eb,
    gamma_matrix,
    pauli_matrix,
    solve_coefficients,
    support,
)

paulis = st.text(alphabet="IXYZ", min_size=1, max_size=5)
nontrivial = paulis.filter(lambda s: set(s) != {"I"})


def test_support_examples():
    assert support("III") == ()
    assert support("ZIX") == (0, 2)
    assert support("XIZYI") == (0, 2, 3)


def test_invalid_letters():
    with pytest.raises(InvalidPauliError):
        PauliString("XQ")


@pytest.mark.parametrize("n,k,count", [(1, 1, 3), (5, 3, 270), (2, 2, 9), (4, 2, 54)])
def test_enumerate_eb_counts(n, k, count):
    out = enumerate_eb(n, k)
    assert len(out) == count == 3**k * comb(n, k)
    assert len(set(out)) == count
    assert all(len(support(p)) == k for p in out)


def test_enumerate_eb_single_qubit_order_and_brute_force():
    assert [str(p) for p in enumerate_eb(1, 1)] == ["X", "Y", "Z"]
    brute = ["".join(w) for w in itertools.product("IXYZ", repeat=2) if "I" not in w]
    assert sorted(str(p) for p in enumerate_eb(2, 2)) == sorted(brute)


def test_enumerate_eb_rejects_bad_locality():
    with pytest.raises(InvalidLocalityError):
        enumerate_eb(2, 3)


def test_sb_examples():
    assert [str(p) for p in build_sb_set("ZIX")] == ["ZIX", "ZII", "IIX", "III"]
    assert [str(p) for p in build_sb_set("X")] == ["X", "I"]
    assert [str(p) for p in build_sb_set("XY")] == ["XY", "XI", "IY", "II"]
    with pytest.raises(InvalidPauliError):
        build_sb_set("II")


@settings(max_examples=60, deadline=None)
@given(nontrivial)
def test_sb_members_commute_with_eb(word):
    mb = pauli_matrix(word)
    for p in build_sb_set(word):
        m = pauli_matrix(p)
        assert np.allclose(m @ mb, mb @ m)


def test_gamma_example_from_worked_case():
    # |0> on qubit 1 (Z = +1) and |-> on qubit 3 (X = -1) -> bits (0, 1)
    lab = EigenstateLabel((0, 1))
    signs = [eigenvalue_gamma(p, "ZIX", lab) for p in build_sb_set("ZIX")]
    assert signs == [-1, 1, -1, 1]
    assert eigenvalue_gamma("III", "ZIX", 3) == 1
    assert eigenvalue_gamma("XY", "XY", (1, 1)) == 1


def test_gamma_rejects_non_member():
    with pytest.raises(NotSimultaneouslyDiagonalError):
        eigenvalue_gamma("YIX", "ZIX", 0)


@settings(max_examples=40, deadline=None)
@given(nontrivial.filter(lambda s: len(s) <= 4))
def test_gamma_matches_dense_eigenvectors(word):
    k = len(support(word))
    for l in range(2**k):
        v = eigenstate_vector(word, l)
        for p in build_sb_set(word):
            lhs = pauli_matrix(p) @ v
            assert np.allclose(lhs, eigenvalue_gamma(p, word, l) * v)


def test_gamma_matrix_small_cases():
    g1 = gamma_matrix("X").entries
    assert g1.tolist() == [[1, 1], [-1, 1]]  # columns (X, I)
    g2 = gamma_matrix("XY")
    loop = [[eigenvalue_gamma(p, "XY", l) for p in g2.sb] for l in range(4)]
    assert g2.entries.tolist() == loop


@pytest.mark.parametrize("k", range(1, 11))
def test_gamma_orthogonality_exact(k):
    g = gamma_matrix("X" * k).entries.astype(np.int64)
    assert np.array_equal(g @ g.T, 2**k * np.eye(2**k, dtype=np.int64))
    if k <= 8:
        assert np.linalg.cond(g.astype(float)) == pytest.approx(1.0, abs=1e-9)


def test_solve_two_term_example():
    # Xi_+ = xi_I + xi_b = 3, Xi_- = xi_I - xi_b = 1 -> (xi_b, xi_I) = (1, 2)
    c = solve_coefficients(gamma_matrix("Z"), [3.0, 1.0])
    assert np.allclose(c, [1.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_solve_round_trip(k, seed):
    rng = np.random.default_rng(seed)
    g = gamma_matrix("Y" * k)
    c = rng.normal(size=2**k)
    C = g.entries @ c
    assert np.max(np.abs(solve_coefficients(g, C) - c)) < 1e-12


def test_solve_shape_error():
    with pytest.raises(ShapeError):
        solve_coefficients(gamma_matrix("XX"), [1.0, 2.0])
