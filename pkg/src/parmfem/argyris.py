"""C1 quintic Argyris element.

Local degrees of freedom, in order: for each vertex the value, the gradient
(d/dx, d/dy) and the second derivatives (d2/dx2, d2/dxdy, d2/dy2); then, for
each edge, the normal derivative at the edge midpoint.  Local edge ``k`` is
opposite local vertex ``k``.

Edge normals are global: for an edge from vertex ``a`` to ``b`` with ``a < b``
the normal is the unit tangent rotated clockwise.  Neighbouring elements
therefore share the edge functional exactly; the per-element sign relative to
the outward normal is kept in :class:`ArgyrisDofMap` for bookkeeping.

The physical basis on each triangle is obtained from the reference basis:
with ``psi_k = phi_hat_k o F^-1`` and ``V[i, k] = N_i(psi_k)`` the physical
functions are ``phi_i = sum_k C[i, k] psi_k`` where ``C = V^-T``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .geometry import Mesh
from .lagrange import FESpace
from .quadrature import rule

EXPONENTS = np.array([(d - j, j) for d in range(6) for j in range(d + 1)])
REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
REF_MIDPOINTS = np.array([[0.5, 0.5], [0.0, 0.5], [0.5, 0.0]])
REF_NORMALS = np.array([[1.0, 1.0], [-np.sqrt(2.0), 0.0], [0.0, -np.sqrt(2.0)]]) / np.sqrt(2.0)
# derivative multi-indices for value, gradient, Hessian (xx, xy, yy)
JET = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def monomials(xy: np.ndarray, dx: int = 0, dy: int = 0) -> np.ndarray:
    """Partial derivative d^(dx+dy)/dx^dx dy^dy of the 21 quintic monomials."""
    xy = np.atleast_2d(xy)
    i, j = EXPONENTS[:, 0], EXPONENTS[:, 1]
    ci = np.ones(21)
    cj = np.ones(21)
    for s in range(dx):
        ci = ci * (i - s)
    for s in range(dy):
        cj = cj * (j - s)
    pi = np.maximum(i - dx, 0)
    pj = np.maximum(j - dy, 0)
    return ci * cj * xy[:, :1] ** pi * xy[:, 1:] ** pj


@dataclass(frozen=True)
class ArgyrisReference:
    """Reference basis; column k of ``coeffs`` holds the monomial coefficients of phi_k."""

    coeffs: np.ndarray

    def jet(self, xy: np.ndarray, d: tuple[int, int]) -> np.ndarray:
        return monomials(xy, *d) @ self.coeffs

    def functionals(self, monomial_jets) -> np.ndarray:
        """Apply the 21 reference functionals to functions given by their jets."""
        rows = [monomial_jets(REF_VERTICES[v : v + 1], d)[0] for v in range(3) for d in JET]
        for k in range(3):
            g = np.stack([monomial_jets(REF_MIDPOINTS[k : k + 1], d)[0] for d in ((1, 0), (0, 1))])
            rows.append(REF_NORMALS[k] @ g)
        return np.array(rows)


@lru_cache(maxsize=1)
def build_reference_basis() -> ArgyrisReference:
    A = ArgyrisReference(np.eye(21)).functionals(lambda xy, d: monomials(xy, *d))
    if abs(np.linalg.det(A)) < 1e-12:
        raise RuntimeError("singular Argyris moment matrix")
    coeffs = np.linalg.solve(A, np.eye(21))
    ref = ArgyrisReference(coeffs)
    dual = ref.functionals(lambda xy, d: monomials(xy, *d) @ coeffs)
    if np.abs(dual - np.eye(21)).max() > 1e-10:
        raise RuntimeError("reference Argyris basis fails duality")
    return ref


def _hessian_transform(G: np.ndarray) -> np.ndarray:
    """Matrix mapping reference (xx, xy, yy) second derivatives to physical ones.

    ``G`` is B^-T for the affine map x = a0 + B x_hat, shape (..., 2, 2).
    """
    g00, g01, g10, g11 = G[..., 0, 0], G[..., 0, 1], G[..., 1, 0], G[..., 1, 1]
    return np.stack(
        [
            np.stack([g00 * g00, 2 * g00 * g01, g01 * g01], -1),
            np.stack([g00 * g10, g00 * g11 + g01 * g10, g01 * g11], -1),
            np.stack([g10 * g10, 2 * g10 * g11, g11 * g11], -1),
        ],
        -2,
    )


@dataclass(frozen=True)
class LocalBasis:
    """Physical basis on one or many triangles: phi_i = sum_k C[i, k] psi_k."""

    C: np.ndarray  # (..., 21, 21)
    G: np.ndarray  # (..., 2, 2) = B^-T
    origin: np.ndarray  # (..., 2)

    def jets(self, ref: ArgyrisReference, xy_hat: np.ndarray):
        """Values (.., n, 21), gradients (.., n, 21, 2), Hessians (.., n, 21, 3) at reference points."""
        v = ref.jet(xy_hat, (0, 0))
        gh = np.stack([ref.jet(xy_hat, (1, 0)), ref.jet(xy_hat, (0, 1))], -1)
        hh = np.stack([ref.jet(xy_hat, d) for d in ((2, 0), (1, 1), (0, 2))], -1)
        H = _hessian_transform(self.G)
        val = np.einsum("...ik,qk->...qi", self.C, v)
        grad = np.einsum("...ik,...ab,qkb->...qia", self.C, self.G, gh)
        hess = np.einsum("...ik,...ab,qkb->...qia", self.C, H, hh)
        return val, grad, hess


def _element_maps(vertices: np.ndarray):
    a0 = vertices[..., 0, :]
    B = np.stack([vertices[..., 1, :] - a0, vertices[..., 2, :] - a0], -1)
    G = np.swapaxes(np.linalg.inv(B), -1, -2)
    return a0, B, G


def transfer_to_element(ref: ArgyrisReference, triangle: np.ndarray, normals: np.ndarray | None = None) -> LocalBasis:
    """Physical Argyris basis on triangle(s) of shape (..., 3, 2).

    ``normals`` (..., 3, 2) fixes the direction of the midpoint normal
    derivatives; the default is the outward normal.
    """
    tri = np.asarray(triangle, dtype=float)
    a0, B, G = _element_maps(tri)
    det = np.linalg.det(B)
    if np.any(det <= 0):
        raise ValueError("triangle must be non-degenerate and counter-clockwise")
    edges = np.stack([tri[..., 2, :] - tri[..., 1, :], tri[..., 0, :] - tri[..., 2, :], tri[..., 1, :] - tri[..., 0, :]], -2)
    lengths = np.linalg.norm(edges, axis=-1)
    if np.any(2 * np.abs(det) / lengths.max(-1) ** 2 < 1e-3):
        warnings.warn("nearly degenerate triangle in Argyris transfer", RuntimeWarning, stacklevel=2)
    if normals is None:
        normals = np.stack([edges[..., 1], -edges[..., 0]], -1) / lengths[..., None]
    # reference jets of the reference basis at vertices and midpoints
    H = _hessian_transform(G)
    rows = []
    for v in range(3):
        p = REF_VERTICES[v : v + 1]
        val = ref.jet(p, (0, 0))[0]
        grad = np.stack([ref.jet(p, (1, 0))[0], ref.jet(p, (0, 1))[0]])
        hess = np.stack([ref.jet(p, d)[0] for d in ((2, 0), (1, 1), (0, 2))])
        rows.append(np.broadcast_to(val, G.shape[:-2] + (1, 21)))
        rows.append(G @ grad)
        rows.append(H @ hess)
    for k in range(3):
        p = REF_MIDPOINTS[k : k + 1]
        grad = np.stack([ref.jet(p, (1, 0))[0], ref.jet(p, (0, 1))[0]])
        rows.append(np.einsum("...a,...ab,bk->...k", normals[..., k, :], G, grad)[..., None, :])
    V = np.concatenate(rows, axis=-2)
    C = np.swapaxes(np.linalg.inv(V), -1, -2)
    return LocalBasis(C, G, a0)


@dataclass(frozen=True)
class ArgyrisDofMap:
    dofs: np.ndarray  # (ne, 21) global indices
    normals: np.ndarray  # (ned, 2) global edge normals
    signs: np.ndarray  # (ne, 3) outward . global normal
    nb: int


def build_dofmap(mesh: Mesh) -> ArgyrisDofMap:
    v = mesh.vertices
    t = v[mesh.edges[:, 1]] - v[mesh.edges[:, 0]]
    t = t / np.linalg.norm(t, axis=1)[:, None]
    normals = np.column_stack([t[:, 1], -t[:, 0]])
    tri = mesh.triangles
    vd = 6 * tri[:, :, None] + np.arange(6)[None, None, :]
    ed = 6 * mesh.nv + mesh.triangle_edges
    dofs = np.concatenate([vd.reshape(-1, 18), ed], axis=1)
    p = v[tri]
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], 1)
    outward = np.stack([e[..., 1], -e[..., 0]], -1)
    signs = np.sign(np.einsum("ekd,ekd->ek", outward, normals[mesh.triangle_edges])).astype(int)
    return ArgyrisDofMap(dofs, normals, signs, 6 * mesh.nv + mesh.ned)


class ArgyrisSpace(FESpace):
    """Global C1 Argyris space, nb = 6 nv + ned."""

    tag = "Argyris"

    def __init__(self, mesh: Mesh, degree: int = 15):
        self.mesh = mesh
        self.rule = rule(degree)
        self.dofmap = build_dofmap(mesh)
        self.nb = self.dofmap.nb
        self.dofs = self.dofmap.dofs
        self.ref = build_reference_basis()
        self.local = transfer_to_element(self.ref, mesh.vertices[mesh.triangles], self.dofmap.normals[mesh.triangle_edges])
        self.phi, self.dphi, self.d2phi = self.local.jets(self.ref, self.rule.xy)
        self.wq = mesh.areas()[:, None] * self.rule.weights[None, :]

    @cached_property
    def lap(self) -> np.ndarray:
        return self.d2phi[..., 0] + self.d2phi[..., 2]

    def hessians(self, c) -> np.ndarray:
        c = self.check(c)
        return np.einsum("eqik,ei->eqk", self.d2phi, c[self.dofs])

    def laplacians(self, c) -> np.ndarray:
        c = self.check(c)
        return np.einsum("eqi,ei->eq", self.lap, c[self.dofs])

    @cached_property
    def biharmonic(self) -> sp.csr_matrix:
        """Matrix of integrals lap(phi_j) lap(phi_i)."""
        return self._assemble(np.einsum("eq,eqi,eqj->eij", self.wq, self.lap, self.lap))

    def load_laplacian(self, g: np.ndarray) -> np.ndarray:
        loc = np.einsum("eq,eq,eqi->ei", self.wq, g, self.lap)
        return np.bincount(self.dofs.ravel(), loc.ravel(), minlength=self.nb)

    def interpolate(self, jet: Callable) -> np.ndarray:
        """Interpolant of f given ``jet(x, y) -> (f, fx, fy, fxx, fxy, fyy)``."""
        m = self.mesh
        c = np.zeros(self.nb)
        x = m.vertices
        J = np.array([np.broadcast_to(np.asarray(j, dtype=float), (m.nv,)) for j in jet(x[:, 0], x[:, 1])])
        c[: 6 * m.nv] = J.T.ravel()
        mid = 0.5 * (x[m.edges[:, 0]] + x[m.edges[:, 1]])
        Jm = jet(mid[:, 0], mid[:, 1])
        gx = np.broadcast_to(np.asarray(Jm[1], dtype=float), (m.ned,))
        gy = np.broadcast_to(np.asarray(Jm[2], dtype=float), (m.ned,))
        c[6 * m.nv :] = self.dofmap.normals[:, 0] * gx + self.dofmap.normals[:, 1] * gy
        return c

    def evaluate(self, c, elements: np.ndarray, xy_hat: np.ndarray):
        """Value and gradient of c at reference points xy_hat (n, 2) of the given elements (n,)."""
        c = self.check(c)
        elements = np.asarray(elements)
        ref = self.ref
        v = ref.jet(xy_hat, (0, 0))
        gh = np.stack([ref.jet(xy_hat, (1, 0)), ref.jet(xy_hat, (0, 1))], -1)
        C = self.local.C[elements]
        G = self.local.G[elements]
        coef = c[self.dofs[elements]]
        val = np.einsum("ni,nik,nk->n", coef, C, v)
        grad = np.einsum("ni,nik,nab,nkb->na", coef, C, G, gh)
        return val, grad

    def nodal_values(self, c) -> np.ndarray:
        """Vertex values (the value degrees of freedom)."""
        return self.check(c)[: 6 * self.mesh.nv : 6]


def assemble_fks_bilinear(space: ArgyrisSpace, eps1: float, beta: float, alpha: float, u0, eps2: float, shift: float = 0.0):
    """Linearization of the FKS weak form at u0, minus shift times mass."""
    u = space.at_quadrature(u0)
    grad = space.gradients(u0) if np.ndim(u0) == 1 else np.zeros(space.wq.shape + (2,))
    A = eps1 * space.biharmonic - beta * space.stiffness + space.weighted_mass(alpha * (1.0 - 2.0 * u))
    if eps2:
        A = A - eps2 * space.advection(grad)
    if shift:
        A = A - shift * space.mass
    return A.tocsr()
