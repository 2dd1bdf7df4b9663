"""Finite element spaces on triangle meshes and the continuous P1 space.

A space evaluates coefficient vectors at its quadrature points and assembles
the integrals the models need.  Everything works through per-element arrays:

``phi``    (ne, nq, nloc)       basis values at quadrature points
``dphi``   (ne, nq, nloc, 2)    basis gradients
``wq``     (ne, nq)             quadrature weights times element area
``dofs``   (ne, nloc)           global indices of the local basis functions
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .geometry import Mesh
from .quadrature import QuadratureRule, rule


class SpaceMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FieldCoeffs:
    """Coefficient vector of a finite element function, tagged with its space."""

    values: np.ndarray
    space_tag: str
    mesh_digest: str

    def save(self, path) -> None:
        lines = [f"{self.space_tag} {len(self.values)} {self.mesh_digest}"]
        lines += [f"{v:.17g}" for v in self.values]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "FieldCoeffs":
        rows = Path(path).read_text().split()
        tag, nb, digest = rows[0], int(rows[1]), rows[2]
        values = np.array([float(v) for v in rows[3:]])
        if len(values) != nb:
            raise ValueError(f"{path}: header announces {nb} values, found {len(values)}")
        return cls(values, tag, digest)


def _finalize(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


class FESpace:
    """Shared quadrature, evaluation and assembly for element-wise bases."""

    tag = "?"
    mesh: Mesh
    rule: QuadratureRule
    nb: int
    dofs: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    wq: np.ndarray

    def check(self, c) -> np.ndarray:
        if isinstance(c, FieldCoeffs):
            if c.space_tag != self.tag:
                raise SpaceMismatch(f"field lives in {c.space_tag}, expected {self.tag}")
            c = c.values
        c = np.asarray(c, dtype=float)
        if c.ndim == 0 or c.shape[-1] != self.nb:
            raise SpaceMismatch(f"coefficient vector of length {c.shape[-1]}, space has nb={self.nb}")
        return c

    def field(self, c) -> FieldCoeffs:
        return FieldCoeffs(np.asarray(c, dtype=float), self.tag, self.mesh.digest())

    @cached_property
    def quad_xy(self) -> np.ndarray:
        """Physical quadrature points, shape (ne, nq, 2)."""
        v = self.mesh.vertices[self.mesh.triangles]  # (ne, 3, 2)
        return np.einsum("qk,ekd->eqd", self.rule.points, v)

    # evaluation ---------------------------------------------------------
    def values(self, c) -> np.ndarray:
        c = self.check(c)
        return np.einsum("eqi,ei->eq", self.phi, c[self.dofs])

    def gradients(self, c) -> np.ndarray:
        c = self.check(c)
        return np.einsum("eqid,ei->eqd", self.dphi, c[self.dofs])

    def at_quadrature(self, f) -> np.ndarray:
        """Coerce a scalar, FE coefficient vector, callable or (ne, nq) array."""
        if callable(f):
            x = self.quad_xy
            return np.broadcast_to(np.asarray(f(x[..., 0], x[..., 1]), dtype=float), self.wq.shape)
        f = np.asarray(f.values if isinstance(f, FieldCoeffs) else f, dtype=float)
        if f.ndim == 0:
            return np.full(self.wq.shape, float(f))
        if f.shape == self.wq.shape:
            return f
        return self.values(f)

    # integrals ----------------------------------------------------------
    def integrate(self, f) -> float:
        return float(np.sum(self.wq * self.at_quadrature(f)))

    def load(self, f) -> np.ndarray:
        """Vector of integrals of f * phi_i."""
        fq = self.at_quadrature(f)
        loc = np.einsum("eq,eqi->ei", self.wq * fq, self.phi)
        return np.bincount(self.dofs.ravel(), loc.ravel(), minlength=self.nb)

    def load_grad(self, g: np.ndarray) -> np.ndarray:
        """Vector of integrals of g . grad(phi_i) for g of shape (ne, nq, 2)."""
        loc = np.einsum("eq,eqd,eqid->ei", self.wq, g, self.dphi)
        return np.bincount(self.dofs.ravel(), loc.ravel(), minlength=self.nb)

    def _assemble(self, local: np.ndarray) -> sp.csr_matrix:
        nloc = self.dofs.shape[1]
        rows = np.repeat(self.dofs, nloc, axis=1).ravel()
        cols = np.tile(self.dofs, (1, nloc)).ravel()
        return _finalize(sp.coo_matrix((local.ravel(), (rows, cols)), shape=(self.nb, self.nb)))

    def weighted_mass(self, w=1.0) -> sp.csr_matrix:
        """Matrix of integrals w * phi_j * phi_i."""
        wq = self.wq * self.at_quadrature(w)
        return self._assemble(np.einsum("eq,eqi,eqj->eij", wq, self.phi, self.phi))

    def advection(self, b: np.ndarray) -> sp.csr_matrix:
        """Matrix of integrals (b . grad phi_j) phi_i for b of shape (ne, nq, 2)."""
        return self._assemble(np.einsum("eq,eqd,eqjd,eqi->eij", self.wq, b, self.dphi, self.phi))

    @cached_property
    def mass(self) -> sp.csr_matrix:
        return self.weighted_mass(1.0)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """Matrix of integrals grad phi_j . grad phi_i."""
        return self._assemble(np.einsum("eq,eqid,eqjd->eij", self.wq, self.dphi, self.dphi))

    def l2_norm(self, c) -> float:
        c = self.check(c)
        # scale first so tiny or huge coefficients neither underflow nor overflow
        scale = np.abs(c).max() if len(c) else 0.0
        if scale == 0 or not np.isfinite(scale):
            return float(scale)
        v = c / scale
        return float(scale * np.sqrt(max(v @ (self.mass @ v), 0.0)))

    def errors(self, c, u: Callable, grad_u: Callable) -> tuple[float, float]:
        """L2 and H1-seminorm errors against an exact solution."""
        x = self.quad_xy
        eu = self.values(c) - u(x[..., 0], x[..., 1])
        eg = self.gradients(c) - np.stack(grad_u(x[..., 0], x[..., 1]), axis=-1)
        return float(np.sqrt(np.sum(self.wq * eu**2))), float(np.sqrt(np.sum(self.wq * (eg**2).sum(-1))))


class P1Space(FESpace):
    """Continuous piecewise linear functions; coefficients are vertex values."""

    tag = "P1"

    def __init__(self, mesh: Mesh, degree: int = 4):
        self.mesh = mesh
        self.rule = rule(degree)
        self.nb = mesh.nv
        self.dofs = np.asarray(mesh.triangles)
        ne, nq = mesh.ne, len(self.rule)
        self.phi = np.broadcast_to(self.rule.points[None, :, :], (ne, nq, 3))
        v = mesh.vertices[mesh.triangles]
        area = mesh.areas()
        # gradient of barycentric coordinate k is the rotated opposite edge / (2 area)
        e = np.stack([v[:, 2] - v[:, 1], v[:, 0] - v[:, 2], v[:, 1] - v[:, 0]], axis=1)
        grad = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * area[:, None, None])
        self.dphi = np.broadcast_to(grad[:, None, :, :], (ne, nq, 3, 2))
        self.wq = area[:, None] * self.rule.weights[None, :]

    def interpolate(self, f: Callable) -> np.ndarray:
        x = self.mesh.vertices
        return np.asarray(f(x[:, 0], x[:, 1]), dtype=float) * np.ones(self.nb)

    def nodal_values(self, c) -> np.ndarray:
        return self.check(c)


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    return P1Space(mesh).stiffness


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    return P1Space(mesh).mass


def assemble_weighted_mass(mesh: Mesh, w) -> sp.csr_matrix:
    return P1Space(mesh).weighted_mass(w)


def assemble_load(mesh: Mesh, f) -> np.ndarray:
    return P1Space(mesh).load(f)


def l2_norm(space: FESpace, c) -> float:
    return space.l2_norm(c)
