"""Sparse direct solves and the generalized eigenproblem A v = lambda M v.

Both are thin contracts over SuperLU and ARPACK (shift-invert mode): callers
get singularity detection, a checked residual, and deterministic, normalized
eigenvectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PIVOT_RTOL = 1e-13


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class EigenError(RuntimeError):
    def __init__(self, message: str, transcript: list[str] | None = None):
        super().__init__(message)
        self.transcript = transcript or []


def as_csr(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


class Factorization:
    """LU factors of a square sparse matrix, reusable for many right-hand sides.

    The matrix is equilibrated (rows, then columns scaled to unit max-norm)
    before factorization, so the backward error of each equation is relative
    to its own scale; this matters for bases mixing values and derivatives.
    """

    def __init__(self, A):
        self.A = as_csr(A)
        n, m = self.A.shape
        if n != m:
            raise ValueError(f"matrix must be square, got {self.A.shape}")
        absA = abs(self.A)
        rmax = absA.max(axis=1).toarray().ravel() if n else np.ones(0)
        if n and rmax.min() == 0.0:
            raise SingularMatrixError("matrix has a zero row")
        self.r = 1.0 / rmax
        cmax = (sp.diags(self.r) @ absA).max(axis=0).toarray().ravel() if n else np.ones(0)
        if n and cmax.min() == 0.0:
            raise SingularMatrixError("matrix has a zero column")
        self.c = 1.0 / cmax
        self.As = as_csr(sp.diags(self.r) @ self.A @ sp.diags(self.c))
        try:
            self._lu = spla.splu(self.As.tocsc())
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from None
        d = np.abs(self._lu.U.diagonal())
        if n and (not np.all(np.isfinite(d)) or d.min() <= PIVOT_RTOL * d.max()):
            raise SingularMatrixError(f"pivot {d.min():.3e} below threshold (max pivot {d.max():.3e})")
        self.norm_inf = spla.norm(self.A, np.inf) if n else 0.0

    def _solve(self, b):
        return self.c * self._lu.solve(self.r * b)

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x = self._solve(b)
        for _ in range(2):
            r = b - self.A @ x
            if np.abs(self.r * r).max() <= 1e-15 * (np.abs(self.r * b).max() + np.abs(x / self.c).max()):
                break
            x = x + self._solve(r)
        r = b - self.A @ x
        if np.abs(r).max() > 1e-10 * (self.norm_inf * np.abs(x).max() + np.abs(b).max()):
            raise SingularMatrixError("residual check failed; matrix is numerically singular")
        return x


def lu_solve(A, b) -> np.ndarray:
    return Factorization(A).solve(b)


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray = field(repr=False)


def _normalize(v: np.ndarray, M) -> np.ndarray:
    v = np.real(v).astype(float)
    v = v / np.sqrt(v @ (M @ v))
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def dense_eigs(A, M, k: int) -> list[EigenPair]:
    """QR-iteration reference: all eigenpairs, k with largest real part kept."""
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    w, V = la.eig(Ad, Md)
    order = np.argsort(-w.real, kind="stable")[:k]
    return [EigenPair(float(w[i].real), _normalize(V[:, i], Md)) for i in order]


def refine_eigenpair(A, M, pair: EigenPair, steps: int = 3) -> EigenPair:
    """Newton refinement of a simple real eigenpair on the bordered system

    [A - lam M, -M v; (M v0)^T, 0] [dv; dlam] = -[A v - lam M v; 0].
    """
    A, M = as_csr(A), as_csr(M)
    v, lam = pair.vector.copy(), pair.value
    w = M @ v
    best = (np.abs(A @ v - lam * (M @ v)).max(), v, lam)
    for _ in range(steps):
        r = A @ v - lam * (M @ v)
        K = sp.bmat([[A - lam * M, -(M @ v)[:, None]], [w[None, :], None]], format="csc")
        try:
            delta = Factorization(K).solve(np.concatenate([-r, [0.0]]))
        except SingularMatrixError:
            break
        v, lam = v + delta[:-1], lam + delta[-1]
        res = np.abs(A @ v - lam * (M @ v)).max()
        if res < best[0]:
            best = (res, v, lam)
        else:
            break
    return EigenPair(float(best[2]), _normalize(best[1], M))


def eigs_largest_real(A, M, k: int, sigma: float = 50.0, seed: int = 0, maxiter: int | None = None, refine: bool = True) -> list[EigenPair]:
    """The k eigenpairs of A v = lambda M v with largest real part, descending.

    Shift-invert Arnoldi about ``sigma``; sigma must lie above the spectrum.
    """
    A, M = as_csr(A), as_csr(M)
    n = A.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for dimension {n}")
    if n <= max(2 * k + 2, 20):
        pairs = dense_eigs(A, M, k)
    else:
        lu = Factorization(A - sigma * M)
        op = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
        v0 = np.random.default_rng(seed).standard_normal(n)
        ncv = min(n, max(2 * k + 1, 20))
        try:
            w, V = spla.eigs(A, k=k, M=M, sigma=sigma, OPinv=op, which="LM", v0=v0, ncv=ncv, tol=0, maxiter=maxiter or 50 * n)
        except spla.ArpackNoConvergence as exc:
            transcript = [f"converged {len(exc.eigenvalues)} of {k}"] + [f"{z:.16g}" for z in exc.eigenvalues]
            raise EigenError("Arnoldi iteration did not converge", transcript) from None
        order = np.argsort(-w.real, kind="stable")
        pairs = [EigenPair(float(w[i].real), _normalize(V[:, i], M)) for i in order]
    if refine:
        pairs = [refine_eigenpair(A, M, p) for p in pairs]
    norm_a = spla.norm(A, np.inf)
    transcript = []
    for p in pairs:
        r = np.abs(A @ p.vector - p.value * (M @ p.vector)).max()
        transcript.append(f"lambda={p.value:.16g} residual={r:.3e}")
        if r > 1e-8 * max(norm_a, 1.0) * np.abs(p.vector).max():
            raise EigenError(f"eigenpair residual {r:.3e} too large", transcript)
    return pairs
