import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from parmfem.lagrange import P1Space
from parmfem.linalg import (
    EigenError,
    EigenPair,
    Factorization,
    SingularMatrixError,
    as_csr,
    dense_eigs,
    eigs_largest_real,
    lu_solve,
    refine_eigenpair,
)

from conftest import lshape, square


def test_identity_solve(rng):
    b = rng.standard_normal(7)
    assert np.array_equal(lu_solve(sp.identity(7), b), b)


def test_two_by_two():
    x = lu_solve(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0]))
    assert np.allclose(x, [1.0, 1.0], atol=1e-15)


def test_singular_duplicate_rows():
    A = sp.csr_matrix([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.0, 1.0, 4.0]])
    with pytest.raises(SingularMatrixError):
        lu_solve(A, np.ones(3))


def test_zero_row_is_singular():
    with pytest.raises(SingularMatrixError, match="zero row"):
        Factorization(sp.csr_matrix([[1.0, 0.0], [0.0, 0.0]]))


def test_csr_canonical_form():
    A = as_csr(sp.coo_matrix(([1.0, 2.0, 0.0, 3.0], ([0, 0, 1, 1], [1, 1, 0, 1])), shape=(2, 2)))
    assert A.has_sorted_indices and A.nnz == 2
    assert A[0, 1] == 3.0
    for i in range(2):
        cols = A.indices[A.indptr[i] : A.indptr[i + 1]]
        assert np.all(np.diff(cols) > 0)


@settings(max_examples=30)
@given(st.integers(5, 120), st.integers(0, 2**31))
def test_solve_recovers_x(n, seed):
    r = np.random.default_rng(seed)
    A = sp.random(n, n, density=0.1, random_state=r, format="csr") + sp.diags(4.0 + r.random(n))
    x = r.standard_normal(n)
    b = A @ x
    y = lu_solve(A, b)
    assert np.abs(y - x).max() <= 1e-9 * np.abs(x).max()
    assert np.abs(A @ y - b).max() <= 1e-10 * (abs(A).sum(axis=1).max() * np.abs(y).max() + np.abs(b).max())


def test_badly_scaled_rows_are_equilibrated(rng):
    n = 40
    A = sp.random(n, n, density=0.2, random_state=1) + sp.identity(n)
    D = sp.diags(10.0 ** rng.uniform(-8, 8, n))
    A = (D @ A).tocsr()
    x = rng.standard_normal(n)
    assert np.abs(lu_solve(A, A @ x) - x).max() < 1e-8


def test_diag_eigs():
    pairs = eigs_largest_real(sp.diags([3.0, 1.0]), sp.identity(2), 1)
    assert pairs[0].value == pytest.approx(3.0)
    assert np.allclose(pairs[0].vector, [1.0, 0.0])


def test_neumann_kernel(lmesh4):
    S = P1Space(lmesh4)
    p = eigs_largest_real(-S.stiffness, S.mass, 1, sigma=1.0)[0]
    assert abs(p.value) < 1e-10
    assert np.allclose(p.vector, 1 / np.sqrt(3.0), atol=1e-10)


def test_square_spectrum_alpha_shift():
    S = P1Space(square(16))
    pairs = eigs_largest_real(-S.stiffness + 2.7 * S.mass, S.mass, 2)
    assert pairs[0].value == pytest.approx(2.7, abs=1e-9)
    assert pairs[1].value == pytest.approx(2.7 - np.pi**2, rel=1e-2)


def test_normalization_and_sorting(lmesh4):
    S = P1Space(lmesh4)
    pairs = eigs_largest_real(-S.stiffness, S.mass, 4, sigma=1.0)
    vals = [p.value for p in pairs]
    assert vals == sorted(vals, reverse=True)
    for p in pairs:
        assert p.vector @ (S.mass @ p.vector) == pytest.approx(1.0, abs=1e-12)
        assert p.vector[np.argmax(np.abs(p.vector))] > 0
        r = -S.stiffness @ p.vector - p.value * (S.mass @ p.vector)
        assert np.abs(r).max() <= 1e-8 * abs(S.stiffness).sum(axis=1).max()


def test_deterministic_given_seed(lmesh4):
    S = P1Space(lmesh4)
    A = -S.stiffness + S.weighted_mass(np.linspace(0, 3, S.nb))
    a = eigs_largest_real(A, S.mass, 3, seed=7)
    b = eigs_largest_real(A, S.mass, 3, seed=7)
    for p, q in zip(a, b):
        assert p.value == q.value and np.array_equal(p.vector, q.vector)


@settings(max_examples=12)
@given(st.integers(3, 7), st.integers(0, 2**31), st.integers(1, 4))
def test_arnoldi_matches_dense_oracle(n, seed, k):
    S = P1Space(lshape(n) if n < 6 else square(n + 4))
    if S.nb > 200:
        return
    w = np.random.default_rng(seed).uniform(-5, 5, S.nb)
    A = -S.stiffness + S.weighted_mass(w)
    ours = eigs_largest_real(A, S.mass, k)
    ref = dense_eigs(A, S.mass, k)
    assert np.allclose([p.value for p in ours], [p.value for p in ref], atol=1e-8)


def test_eigen_error_carries_transcript():
    S = P1Space(square(12))
    A = -S.stiffness + S.weighted_mass(np.linspace(-1, 1, S.nb))
    with pytest.raises(EigenError) as info:
        eigs_largest_real(A, S.mass, 6, maxiter=1, refine=False)
    assert info.value.transcript


def test_refinement_reduces_residual(lmesh4):
    S = P1Space(lmesh4)
    A = -S.stiffness + 2.0 * S.mass
    exact = eigs_largest_real(A, S.mass, 2)[1]
    rough = EigenPair(exact.value + 1e-4, exact.vector + 1e-4 * np.sin(np.arange(S.nb)))
    better = refine_eigenpair(A, S.mass, rough)
    r0 = np.abs(A @ rough.vector - rough.value * (S.mass @ rough.vector)).max()
    r1 = np.abs(A @ better.vector - better.value * (S.mass @ better.vector)).max()
    assert r1 < 1e-6 * r0
    assert better.value == pytest.approx(exact.value, abs=1e-12)
