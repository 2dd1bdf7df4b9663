"""Truncated power series in one or two variables with array-valued coefficients.

Coefficients are keyed by multi-index ``(m, n)``; one-dimensional series use
``(m, 0)``.  The arithmetic here is representation agnostic: the arrays can be
nodal values, values at quadrature points or anything else that multiplies
pointwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class MissingCoefficient(KeyError):
    def __init__(self, idx):
        super().__init__(f"coefficient {idx} is not available")
        self.idx = idx


def order_indices(dim: int, k: int) -> list[tuple[int, int]]:
    """Multi-indices of total order k, lexicographic."""
    if dim == 1:
        return [(k, 0)]
    return [(m, k - m) for m in range(k + 1)]


def all_indices(dim: int, N: int) -> list[tuple[int, int]]:
    """Recursion schedule: total order ascending, then lexicographic."""
    return [idx for k in range(N + 1) for idx in order_indices(dim, k)]


class _Polynomial(dict):
    """Plain coefficient sequence: a polynomial, zero beyond its degree."""

    def __missing__(self, idx):
        if idx[1] == 0 and idx[0] >= 0:
            return 0.0
        raise KeyError(idx)


def _as_map(P) -> Mapping:
    if isinstance(P, Mapping):
        return P
    return _Polynomial({(k, 0): np.asarray(v) for k, v in enumerate(P)})


def _get(P: Mapping, idx):
    try:
        return P[idx]
    except KeyError:
        raise MissingCoefficient(idx) from None


def _norm_idx(idx) -> tuple[int, int]:
    return (int(idx), 0) if np.ndim(idx) == 0 else (int(idx[0]), int(idx[1]))


def cauchy_coeff(Pa, Pb, idx, skip_ends: bool = False):
    """Coefficient of theta^idx in the product of two series.

    With ``skip_ends`` the terms pairing the (0, 0) coefficient with the
    ``idx`` coefficient are left out, which is the part of a quadratic
    nonlinearity not involving the unknown at order idx.
    """
    Pa, Pb = _as_map(Pa), _as_map(Pb)
    m, n = _norm_idx(idx)
    total = 0.0
    for i in range(m + 1):
        for j in range(n + 1):
            if skip_ends and (i, j) in ((0, 0), (m, n)):
                continue
            total = total + _get(Pa, (i, j)) * _get(Pb, (m - i, n - j))
    return total


def _exp_sum(P: Mapping, Q: Mapping, m: int, n: int, include_top: bool):
    total = 0.0
    for i in range(m + 1):
        for j in range(n + 1):
            if (i, j) == (0, 0) or (not include_top and (i, j) == (m, n)):
                continue
            total = total + (i + j) * _get(P, (i, j)) * _get(Q, (m - i, n - j))
    return -total / (m + n)


def exp_update_1d(P, Q, n: int):
    """q_n for Q = exp(-P) from p_0..p_n and q_0..q_(n-1)."""
    if n < 1:
        raise ValueError("q_0 is initialized directly, not by recursion")
    P, Q = _as_map(P), _as_map(Q)
    q0 = _get(Q, (0, 0))
    tail = 0.0
    for j in range(n - 1):
        tail = tail + (j + 1) * _get(P, (j + 1, 0)) * _get(Q, (n - 1 - j, 0))
    return -_get(P, (n, 0)) * q0 - tail / n


def exp_update_2d(P, Q, idx):
    """q_(m,n) for Q = exp(-P); needs p up to (m, n) and all lower-order q."""
    m, n = _norm_idx(idx)
    if m + n < 1:
        raise ValueError("q_(0,0) is initialized directly, not by recursion")
    return _exp_sum(_as_map(P), _as_map(Q), m, n, include_top=True)


def exp_partial(P, Q, idx):
    """Part of q_(m,n) not involving p_(m,n): q_(m,n) = -p_(m,n) q_(0,0) + exp_partial."""
    m, n = _norm_idx(idx)
    return _exp_sum(_as_map(P), _as_map(Q), m, n, include_top=False)


@dataclass
class Parameterization:
    """Truncated chart P(theta) = sum p_(m,n) theta1^m theta2^n of an unstable manifold."""

    dim: int
    order: int
    coeffs: dict = field(repr=False)
    scalings: tuple
    lambdas: tuple
    model_kind: str = "?"
    model_params: dict = field(default_factory=dict)
    space_tag: str = "?"
    mesh_digest: str = "?"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"manifold dimension must be 1 or 2, got {self.dim}")
        missing = [i for i in all_indices(self.dim, self.order) if i not in self.coeffs]
        if missing:
            raise MissingCoefficient(missing[0])

    @property
    def nb(self) -> int:
        return len(self.coeffs[(0, 0)])

    def indices(self) -> list[tuple[int, int]]:
        return all_indices(self.dim, self.order)

    def truncate(self, N: int) -> "Parameterization":
        keep = {i: self.coeffs[i] for i in all_indices(self.dim, N)}
        return Parameterization(self.dim, N, keep, self.scalings, self.lambdas, self.model_kind, self.model_params, self.space_tag, self.mesh_digest)

    def _theta(self, theta) -> np.ndarray:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if t.shape != (self.dim,):
            raise ValueError(f"theta must have {self.dim} components, got {t.shape}")
        if np.any(np.abs(t) > 1.0):
            raise ValueError(f"theta {t} outside [-1, 1]^{self.dim}")
        return t

    def _horner(self, theta, weight) -> np.ndarray:
        t = self._theta(theta)
        N = self.order
        if self.dim == 1:
            out = np.zeros(self.nb)
            for m in range(N, -1, -1):
                out = out * t[0] + weight(m, 0) * self.coeffs[(m, 0)]
            return out
        out = np.zeros(self.nb)
        for m in range(N, -1, -1):
            inner = np.zeros(self.nb)
            for n in range(N - m, -1, -1):
                inner = inner * t[1] + weight(m, n) * self.coeffs[(m, n)]
            out = out * t[0] + inner
        return out

    def evaluate(self, theta) -> np.ndarray:
        return self._horner(theta, lambda m, n: 1.0)

    def flow_derivative(self, theta) -> np.ndarray:
        """sum (m lambda1 + n lambda2) p_(m,n) theta^(m,n), i.e. DP(theta) Lambda theta."""
        lam = tuple(self.lambdas) + (0.0,)
        return self._horner(theta, lambda m, n: m * lam[0] + n * lam[1])

    def order_norms(self, norm) -> list[float]:
        """Largest norm of the coefficients of each total order."""
        return [max(norm(self.coeffs[i]) for i in order_indices(self.dim, k)) for k in range(self.order + 1)]

    # text I/O -------------------------------------------------------------
    def save(self, path) -> None:
        head = f"{self.dim} {self.order} {self.nb} {self.model_kind} " + " ".join(f"{s:.17g}" for s in self.scalings)
        lines = [head]
        lines.append("# lambdas " + " ".join(f"{v:.17g}" for v in self.lambdas))
        lines.append("# params " + " ".join(f"{k}={v:.17g}" for k, v in self.model_params.items()))
        lines.append(f"# space {self.space_tag} {self.mesh_digest}")
        for m, n in self.indices():
            lines.append(f"{m} {n} " + " ".join(f"{v:.17g}" for v in self.coeffs[(m, n)]))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "Parameterization":
        text = Path(path).read_text().splitlines()
        head = text[0].split()
        dim, order, nb, kind = int(head[0]), int(head[1]), int(head[2]), head[3]
        scalings = tuple(float(v) for v in head[4:])
        if len(scalings) != dim:
            raise ValueError(f"{path}: expected {dim} scalings, found {len(scalings)}")
        lambdas, params, tag, digest = (), {}, "?", "?"
        coeffs = {}
        for lineno, line in enumerate(text[1:], start=2):
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "#":
                if tok[1] == "lambdas":
                    lambdas = tuple(float(v) for v in tok[2:])
                elif tok[1] == "params":
                    params = {k: float(v) for k, v in (t.split("=") for t in tok[2:])}
                elif tok[1] == "space":
                    tag, digest = tok[2], tok[3]
                continue
            vals = np.array([float(v) for v in tok[2:]])
            if len(vals) != nb:
                raise ValueError(f"{path}:{lineno}: expected {nb} values, found {len(vals)}")
            coeffs[(int(tok[0]), int(tok[1]))] = vals
        return cls(dim, order, coeffs, scalings, lambdas, kind, params, tag, digest)
