"""Order-by-order solution of the homological equations for unstable manifolds.

At multi-index (m, n) the unknown coefficient solves

    (J - (m lambda1 + n lambda2) M) p_(m,n) = rhs_(m,n),

where J is the Jacobian at the equilibrium, M the mass matrix and the right
hand side collects the terms of the nonlinearity built from lower orders.

Pointwise products of finite element functions are formed in one of two
representations: ``nodal`` (P1 only; products of vertex values, i.e. the P1
interpolant of the product, loaded through the mass matrix) or
``quadrature`` (products at quadrature points, integrated against the basis).
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lagrange import FESpace
from .linalg import EigenPair, Factorization, SingularMatrixError
from .models import FKS, Fisher, FisherRicker, Model
from .taylor import (
    MissingCoefficient,
    Parameterization,
    cauchy_coeff,
    exp_partial,
    exp_update_1d,
    exp_update_2d,
    order_indices,
)

RESONANCE_RTOL = 1e-6


class ResonanceError(RuntimeError):
    def __init__(self, idx, shift: float, detail: str = ""):
        super().__init__(f"resonance at multi-index {idx}: shift m*l1+n*l2 = {shift:.12g} {detail}".rstrip())
        self.idx = idx
        self.shift = shift


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MANIFOLD_THREADS", "1")))
    except ValueError:
        return 1


# non-resonance -------------------------------------------------------------
@dataclass
class ResonanceReport:
    passed: bool
    min_distance: float
    index: tuple[int, int] | None
    shift: float
    eigenvalue: float
    rows: list = field(default_factory=list, repr=False)


def check_nonresonance(lambdas, spectrum, N: int, threshold: float = RESONANCE_RTOL) -> ResonanceReport:
    """Distances from m*l1 + n*l2 (2 <= m+n <= N) to a window of the spectrum."""
    lam = tuple(lambdas) + (0.0,) * (2 - len(lambdas))
    spec = np.asarray(spectrum, dtype=float)
    dim = len(lambdas)
    best = (np.inf, None, np.nan, np.nan)
    rows = []
    passed = True
    for k in range(2, N + 1):
        for m, n in order_indices(dim, k):
            shift = m * lam[0] + n * lam[1]
            d = np.abs(spec - shift)
            j = int(np.argmin(d))
            rows.append(((m, n), shift, float(spec[j]), float(d[j])))
            if d[j] < threshold * max(1.0, abs(spec[j])):
                passed = False
            if d[j] < best[0]:
                best = (float(d[j]), (m, n), shift, float(spec[j]))
    return ResonanceReport(passed, best[0], best[1], best[2], best[3], rows)


# pointwise products ----------------------------------------------------------
class SeriesState:
    """Pointwise representations of the coefficients computed so far."""

    def __init__(self, model: Model, space: FESpace, products: str | None = None):
        if products is None:
            products = "nodal" if space.tag == "P1" else "quadrature"
        if products not in ("nodal", "quadrature"):
            raise ValueError(f"unknown product representation {products!r}")
        if products == "nodal" and (space.tag != "P1" or isinstance(model, FKS)):
            raise ValueError("nodal products need a P1 space and a model without gradient terms")
        self.model, self.space, self.products = model, space, products
        self.vals: dict = {}
        self.grads: dict = {}
        self.q: dict = {}
        self.dim = 1

    def point(self, c):
        return c if self.products == "nodal" else self.space.values(c)

    def load(self, s) -> np.ndarray:
        if self.products == "nodal":
            return self.space.mass @ s
        return self.space.load(s)

    def add(self, idx, c) -> None:
        self.vals[idx] = self.point(c)
        if isinstance(self.model, FKS):
            self.grads[idx] = self.space.gradients(c)
        if isinstance(self.model, FisherRicker):
            if idx == (0, 0):
                self.q[idx] = np.exp(-self.vals[idx])
            elif self.dim == 1:
                self.q[idx] = exp_update_1d(self.vals, self.q, idx[0])
            else:
                self.q[idx] = exp_update_2d(self.vals, self.q, idx)


def _grad_cauchy(G, idx):
    m, n = idx
    total = 0.0
    for i in range(m + 1):
        for j in range(n + 1):
            if (i, j) in ((0, 0), (m, n)):
                continue
            try:
                total = total + (G[(i, j)] * G[(m - i, n - j)]).sum(-1)
            except KeyError as exc:
                raise MissingCoefficient(exc.args[0]) from None
    return total


def homological_rhs(model: Model, state: SeriesState, idx) -> np.ndarray:
    """Load vector of the terms of order idx that involve only lower orders."""
    m, n = idx
    if m + n < 2:
        raise ValueError("right-hand sides exist only for total order >= 2")
    P = state.vals
    if isinstance(model, Fisher):
        s = model.alpha * cauchy_coeff(P, P, idx, skip_ends=True)
    elif isinstance(model, FisherRicker):
        cross = cauchy_coeff(P, state.q, idx, skip_ends=True)
        s = model.alpha * (cross + P[(0, 0)] * exp_partial(P, state.q, idx))
    elif isinstance(model, FKS):
        s = model.alpha * cauchy_coeff(P, P, idx, skip_ends=True) + 0.5 * model.eps2 * _grad_cauchy(state.grads, idx)
    else:
        raise TypeError(f"no homological rule for {type(model).__name__}")
    return state.load(s)


def solve_homological(J, M, lambdas, idx, rhs) -> np.ndarray:
    """Solve (J - (m l1 + n l2) M) p = rhs; singular resolvent raises ResonanceError."""
    lam = tuple(lambdas) + (0.0,)
    shift = idx[0] * lam[0] + idx[1] * lam[1]
    try:
        return Factorization(J - shift * M).solve(rhs)
    except SingularMatrixError as exc:
        raise ResonanceError(idx, shift, f"({exc})") from None


def compute_manifold(
    model: Model,
    space: FESpace,
    c0,
    eigenpairs: list[EigenPair],
    scalings,
    N: int,
    products: str | None = None,
    spectrum=None,
) -> Parameterization:
    """Taylor coefficients of the unstable manifold through order N.

    ``eigenpairs`` are the unstable directions (one or two); ``spectrum`` is an
    optional window of eigenvalues for the non-resonance check.
    """
    model.check_space(space)
    dim = len(eigenpairs)
    if dim not in (1, 2) or len(scalings) != dim:
        raise ValueError("need one or two eigenpairs and one scaling per direction")
    lambdas = tuple(float(p.value) for p in eigenpairs)
    if min(lambdas) <= 0:
        raise ValueError(f"unstable eigenvalues must be positive, got {lambdas}")
    if spectrum is not None:
        report = check_nonresonance(lambdas, spectrum, N)
        if not report.passed:
            raise ResonanceError(report.index, report.shift, f"near eigenvalue {report.eigenvalue:.12g}")
    c0 = space.check(c0)
    J, M = model.jacobian(space, c0), space.mass
    state = SeriesState(model, space, products)
    state.dim = dim
    coeffs = {(0, 0): c0.copy()}
    state.add((0, 0), c0)
    for j, (p, s) in enumerate(zip(eigenpairs, scalings)):
        idx = (1, 0) if j == 0 else (0, 1)
        coeffs[idx] = float(s) * p.vector
    for idx in order_indices(dim, 1):
        state.add(idx, coeffs[idx])
    threads = worker_count()
    pool = ThreadPoolExecutor(threads) if threads > 1 and dim == 2 else None
    try:
        for k in range(2, N + 1):
            idxs = order_indices(dim, k)
            rhs = [homological_rhs(model, state, idx) for idx in idxs]
            if pool is None:
                sols = [solve_homological(J, M, lambdas, i, r) for i, r in zip(idxs, rhs)]
            else:
                sols = list(pool.map(lambda a: solve_homological(J, M, lambdas, *a), zip(idxs, rhs)))
            for idx, p in zip(idxs, sols):
                coeffs[idx] = p
                state.add(idx, p)
    finally:
        if pool is not None:
            pool.shutdown()
    if N < 1:
        coeffs = {(0, 0): coeffs[(0, 0)]}
    return Parameterization(
        dim, N, coeffs, tuple(float(s) for s in scalings), lambdas, model.kind, model.params(), space.tag, space.mesh.digest()
    )


def order_norms(P: Parameterization, space: FESpace) -> list[float]:
    return P.order_norms(space.l2_norm)


def write_norms_csv(norms, path) -> None:
    lines = ["order,max_l2_norm"] + [f"{k},{v:.17g}" for k, v in enumerate(norms)]
    Path(path).write_text("\n".join(lines) + "\n")


# scaling ---------------------------------------------------------------------
def _top_norms(P: Parameterization, space: FESpace) -> dict:
    return {idx: space.l2_norm(P.coeffs[idx]) for idx in order_indices(P.dim, P.order)}


def tune_scaling(
    model: Model,
    space: FESpace,
    c0,
    eigenpairs: list[EigenPair],
    N: int,
    target: float = 1e-14,
    products: str | None = None,
    max_recomputations: int = 12,
) -> tuple:
    """Eigenvector scalings putting the largest order-N coefficient norm near ``target``.

    Coefficients are homogeneous, p_(m,n)(s) = s1^m s2^n p_(m,n)(1), so one
    computation at unit scaling gives the answer in closed form; the result is
    verified and refined by bisection on log s if it falls outside
    [target/100, target*100].
    """
    dim = len(eigenpairs)
    lo, hi = target / 100.0, target * 100.0
    base = _top_norms(compute_manifold(model, space, c0, eigenpairs, (1.0,) * dim, N, products), space)
    if dim == 1:
        s = [(target / base[(N, 0)]) ** (1.0 / N)]
    else:
        s = [(target / max(base[(N, 0)], 1e-300)) ** (1.0 / N), (target / max(base[(0, N)], 1e-300)) ** (1.0 / N)]
        mixed = max(s[0] ** m * s[1] ** n * v for (m, n), v in base.items())
        t = (target / mixed) ** (1.0 / N)
        s = [t * si for si in s]

    def top(t):
        P = compute_manifold(model, space, c0, eigenpairs, [t * si for si in s], N, products)
        return max(_top_norms(P, space).values())

    # bisection on log t, bracketing target with t = exp(+-1) around the guess
    a, b = -1.0, 1.0
    best = (np.inf, tuple(s))
    x = 0.0
    for _ in range(max_recomputations):
        value = top(np.exp(x))
        err = abs(np.log(value / target))
        if err < best[0]:
            best = (err, tuple(np.exp(x) * si for si in s))
        if lo <= value <= hi:
            return best[1]
        if value > target:
            b = x
        else:
            a = x
        x = 0.5 * (a + b)
    warnings.warn(f"scaling tuning did not reach [{lo:.1e}, {hi:.1e}]; returning best effort", RuntimeWarning, stacklevel=2)
    return best[1]
