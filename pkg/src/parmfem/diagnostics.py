"""A-posteriori indicators for truncated manifold charts.

The invariance defect at theta is the weak residual of the discrete model at
P(theta) minus the mass-weighted chart derivative DP(theta) Lambda theta; its
L2 norm is taken through the mass-matrix Riesz map, sqrt(d^T M^-1 d).  The
conjugacy defect compares P(exp(Lambda T) theta) with the discrete flow of
P(theta), computed by IMEX Euler with optional Richardson extrapolation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lagrange import FESpace
from .linalg import Factorization
from .models import Model
from .taylor import Parameterization


@dataclass
class DefectReport:
    kind: str
    thetas: np.ndarray  # (K, dim)
    norms: np.ndarray  # (K,)
    meta: dict = field(default_factory=dict)

    @property
    def average(self) -> float:
        return float(np.mean(self.norms))

    @property
    def max(self) -> float:
        return float(np.max(self.norms))

    def to_csv(self, path) -> None:
        dim = self.thetas.shape[1]
        head = ",".join(f"theta{i + 1}" for i in range(dim)) + ",l2_defect"
        lines = [head]
        for t, v in zip(self.thetas, self.norms):
            lines.append(",".join(f"{x:.17g}" for x in t) + f",{v:.17g}")
        lines.append(f"# average={self.average:.17g} max={self.max:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")


def theta_grid(dim: int, points: int = 21, radius: float = 1.0) -> np.ndarray:
    """Uniform grid on [-radius, radius]^dim including the endpoints."""
    t = np.linspace(-radius, radius, points)
    return np.array(list(itertools.product(t, repeat=dim)))


def _check_grid(grid, dim: int) -> np.ndarray:
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] != dim:
        raise ValueError(f"grid points need {dim} components")
    if np.any(np.abs(grid) > 1.0):
        raise ValueError("grid point outside [-1, 1]^dim")
    return grid


class RieszNorm:
    """L2 norm of a weak residual: sqrt(d^T M^-1 d)."""

    def __init__(self, space: FESpace):
        self.lu = Factorization(space.mass)

    def __call__(self, d) -> float:
        return float(np.sqrt(max(d @ self.lu.solve(d), 0.0)))


def invariance_defect(model: Model, space: FESpace, P: Parameterization, grid=None) -> DefectReport:
    grid = _check_grid(theta_grid(P.dim) if grid is None else grid, P.dim)
    M = space.mass
    norm = RieszNorm(space)
    out = np.empty(len(grid))
    for i, t in enumerate(grid):
        d = model.residual(space, P.evaluate(t)) - M @ P.flow_derivative(t)
        out[i] = norm(d)
    return DefectReport("invariance", grid, out, {"model": model.kind, "order": P.order, "ne": space.mesh.ne, "space": space.tag})


class IMEX:
    """Implicit Euler on the linear part, explicit on the rest:
    (M - dt L) u+ = M u + dt (R(u) - L u)."""

    def __init__(self, model: Model, space: FESpace, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.model, self.space, self.dt = model, space, dt
        self.L = model.linear_operator(space)
        self.M = space.mass
        self.lu = Factorization(self.M - dt * self.L)

    def step(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        nl = self.model.residual(self.space, u) - self.L @ u
        return self.lu.solve(self.M @ u + self.dt * nl)

    def run(self, u, steps: int) -> np.ndarray:
        for _ in range(steps):
            u = self.step(u)
        return u


def imex_step(model: Model, space: FESpace, u, dt: float) -> np.ndarray:
    return IMEX(model, space, dt).step(space.check(u))


def flow(model: Model, space: FESpace, u, T: float, steps: int, levels: int = 1) -> np.ndarray:
    """Approximate time-T flow from ``levels`` IMEX runs with steps, 2*steps, ...

    The runs are combined by Richardson extrapolation for a first-order method.
    """
    if T == 0:
        return np.array(u, dtype=float)
    runs = [IMEX(model, space, T / (steps * 2**k)).run(u, steps * 2**k) for k in range(levels)]
    for j in range(1, levels):
        w = 2.0**j
        runs = [(w * runs[i + 1] - runs[i]) / (w - 1.0) for i in range(len(runs) - 1)]
    return runs[-1]


def conjugacy_defect(model: Model, space: FESpace, P: Parameterization, T: float, grid=None, steps: int = 100, levels: int = 3) -> DefectReport:
    """sup over the grid of ||P(exp(Lambda T) theta) - Phi_T(P(theta))||_L2.

    Includes the time-integration error of the IMEX flow.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    growth = np.exp(np.asarray(P.lambdas) * T)
    if grid is None:
        grid = theta_grid(P.dim, 11, radius=1.0 / growth.max())
    grid = _check_grid(grid, P.dim)
    if np.any(np.abs(grid * growth) > 1.0 + 1e-12):
        raise ValueError("exp(lambda T) theta leaves [-1, 1]^dim; shrink the grid")
    out = np.empty(len(grid))
    for i, t in enumerate(grid):
        if T == 0:
            out[i] = 0.0
            continue
        e = P.evaluate(np.clip(growth * t, -1, 1)) - flow(model, space, P.evaluate(t), T, steps, levels)
        out[i] = space.l2_norm(e)
    return DefectReport("conjugacy", grid, out, {"model": model.kind, "order": P.order, "T": T, "steps": steps, "levels": levels})


def write_vtk(space: FESpace, c, path, name: str = "u") -> None:
    """Legacy ASCII VTK unstructured grid with vertex values as POINT_DATA."""
    mesh = space.mesh
    vals = space.nodal_values(c)
    lines = ["# vtk DataFile Version 3.0", name, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.nv} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {mesh.ne} {4 * mesh.ne}")
    lines += [f"3 {a} {b} {c_}" for a, b, c_ in mesh.triangles]
    lines.append(f"CELL_TYPES {mesh.ne}")
    lines += ["5"] * mesh.ne
    lines += [f"POINT_DATA {mesh.nv}", f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines += [f"{v:.17g}" for v in vals]
    Path(path).write_text("\n".join(lines) + "\n")
