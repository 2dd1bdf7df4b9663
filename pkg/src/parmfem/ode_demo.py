"""Planar ODE a' = a + b, b' = 1 - a^2 and its one-dimensional unstable manifold.

The saddle (-1, 1) has eigenvalues 2 (eigenvector (1, 1)) and -1.  The chart
P(theta) = sum p_n theta^n solves (DF(p0) - 2n I) p_n = (0, sum_{k=1}^{n-1} a_(n-k) a_k).
Plain dense 2x2 arithmetic, independent of the finite element code path.
"""
from __future__ import annotations

import numpy as np

P0 = np.array([-1.0, 1.0])
XI = np.array([1.0, 1.0])
LAMBDA = 2.0


def vector_field(p) -> np.ndarray:
    a, b = p
    return np.array([a + b, 1.0 - a * a])


def jacobian(p) -> np.ndarray:
    return np.array([[1.0, 1.0], [-2.0 * p[0], 0.0]])


def ode_manifold(N: int, s: float = 1.0) -> np.ndarray:
    """Coefficients p_0..p_N as an (N+1, 2) array, with p_1 = s (1, 1)."""
    if N < 1 or not s > 0:
        raise ValueError("need N >= 1 and s > 0")
    p = np.zeros((N + 1, 2))
    p[0], p[1] = P0, s * XI
    A0 = jacobian(P0)
    for n in range(2, N + 1):
        a = p[1:n, 0]
        rhs = np.array([0.0, np.dot(a, a[::-1])])
        p[n] = np.linalg.solve(A0 - n * LAMBDA * np.eye(2), rhs)
    return p


def invariance_residual(p: np.ndarray) -> np.ndarray:
    """Coefficients of F(P(theta)) - lambda theta P'(theta) through order N."""
    N = len(p) - 1
    a, b = p[:, 0], p[:, 1]
    sq = np.convolve(a, a)[: N + 1]
    F = np.column_stack([a + b, -sq])
    F[0, 1] += 1.0
    return F - LAMBDA * np.arange(N + 1)[:, None] * p


def decay_fit(p: np.ndarray, start: int = 1) -> tuple[float, float]:
    """Least-squares fit ||p_n|| ~ C 10^(r n); returns (C, r)."""
    n = np.arange(start, len(p))
    y = np.log10(np.linalg.norm(p[start:], axis=1))
    r, c = np.polyfit(n, y, 1)
    return float(10.0**c), float(r)


def sample_curve(p: np.ndarray, points: int = 201) -> np.ndarray:
    """Points P(theta) for theta uniformly in [-1, 1]; shape (points, 3) with theta first."""
    theta = np.linspace(-1.0, 1.0, points)
    vals = np.array([np.polynomial.polynomial.polyval(theta, p[:, k]) for k in range(2)]).T
    return np.column_stack([theta, vals])
