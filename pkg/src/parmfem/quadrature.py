"""Quadrature rules on the reference triangle (0,0), (1,0), (0,1)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points and weights normalised to sum to one.

    Multiply the weights by the triangle area when integrating.
    """

    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,)
    degree: int

    @property
    def xy(self) -> np.ndarray:
        """Reference-triangle coordinates (lambda_1, lambda_2)."""
        return self.points[:, 1:]

    def __len__(self) -> int:
        return len(self.weights)


def monomial_integral(i: int, j: int) -> float:
    """Exact integral of x^i y^j over the reference triangle."""
    return factorial(i) * factorial(j) / factorial(i + j + 2)


def _orbit3(a: float) -> np.ndarray:
    b = 1.0 - 2.0 * a
    return np.array([[b, a, a], [a, b, a], [a, a, b]])


@lru_cache(maxsize=None)
def strang_fix_6() -> QuadratureRule:
    """Symmetric 6-point rule of degree 4.

    Tabulated values are polished by Newton's method on the moment equations so
    the rule is exact to rounding.
    """
    z = np.array([0.223381589678011, 0.445948490915965, 0.109951743655322, 0.091576213509771])
    moments = [(0, 0), (2, 0), (3, 0), (4, 0)]

    def resid(z):
        w1, a1, w2, a2 = z
        pts = np.vstack([_orbit3(a1), _orbit3(a2)])
        w = np.repeat([w1, w2], 3) / 2.0
        x, y = pts[:, 1], pts[:, 2]
        return np.array([np.dot(w, x**i * y**j) - monomial_integral(i, j) for i, j in moments])

    for _ in range(8):
        r = resid(z)
        jac = np.empty((4, 4))
        for k in range(4):
            dz = np.zeros(4)
            dz[k] = 1e-7
            jac[:, k] = (resid(z + dz) - resid(z - dz)) / 2e-7
        z = z - np.linalg.solve(jac, r)
    w1, a1, w2, a2 = z
    pts = np.vstack([_orbit3(a1), _orbit3(a2)])
    return QuadratureRule(pts, np.repeat([w1, w2], 3), 4)


@lru_cache(maxsize=None)
def collapsed_gauss(degree: int) -> QuadratureRule:
    """Conical-product (Duffy) Gauss rule, exact for total degree ``degree``."""
    k = max(1, (degree + 2) // 2)
    xi, wx = roots_legendre(k)
    t, wt = roots_jacobi(k, 1.0, 0.0)
    xi, wx = 0.5 * (xi + 1.0), 0.5 * wx
    eta, we = 0.5 * (t + 1.0), 0.25 * wt
    X = np.outer(1.0 - eta, xi)
    Y = np.repeat(eta[:, None], k, axis=1)
    W = np.outer(we, wx)
    x, y, w = X.ravel(), Y.ravel(), 2.0 * W.ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(pts, w, 2 * k - 1)


def rule(degree: int) -> QuadratureRule:
    """Default rule for a requested degree of exactness."""
    if degree <= 4:
        return strang_fix_6()
    return collapsed_gauss(degree)
