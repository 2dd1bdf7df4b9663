"""Triangulations of rectilinear polygonal domains.

Meshes are built from structured templates: the domain is decomposed into
unit lattice cells, each cell is subdivided into ``n x n`` squares and every
square is split along its diagonal.  The construction is deterministic, so the
element counts of a mesh sequence are reproducible from ``n`` alone.

Resolution conventions (``ne`` = triangle count, ``n`` = subdivisions per
unit length):

=================  ==========================================  ============
domain             region                                      ne
=================  ==========================================  ============
UnitSquare         [0, 1]^2                                    2 n^2
LShape             [0, 2]^2 minus (1, 2]^2                     6 n^2
Door               [0, 3] x [0, 4] minus [1, 2] x [2, 3]       22 n^2
PolygonWithHoles   ``POLYGON_WITH_HOLES`` minus two squares    48 n^2
=================  ==========================================  ============
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

Polygon = Sequence[Sequence[float]]


class MeshError(ValueError):
    """Raised for invalid domains, meshes or mesh files."""


class DomainKind(str, Enum):
    UNIT_SQUARE = "unitsquare"
    LSHAPE = "lshape"
    DOOR = "door"
    POLYGON_WITH_HOLES = "polygon"


UNIT_SQUARE = ((0, 0), (1, 0), (1, 1), (0, 1))
LSHAPE = ((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2))
DOOR = ((0, 0), (3, 0), (3, 4), (0, 4))
DOOR_HOLES = (((1, 2), (1, 3), (2, 3), (2, 2)),)
POLYGON_WITH_HOLES = ((0, 0), (6, 0), (6, 3), (4, 3), (4, 5), (0, 5))
POLYGON_HOLES = (
    ((1, 1), (1, 2), (2, 2), (2, 1)),
    ((3, 1), (3, 2), (4, 2), (4, 1)),
)

_CANONICAL = {
    DomainKind.UNIT_SQUARE: (UNIT_SQUARE, ()),
    DomainKind.LSHAPE: (LSHAPE, ()),
    DomainKind.DOOR: (DOOR, DOOR_HOLES),
    DomainKind.POLYGON_WITH_HOLES: (POLYGON_WITH_HOLES, POLYGON_HOLES),
}


@dataclass(frozen=True)
class DomainSpec:
    """A rectilinear polygon (integer vertices) with optional holes.

    ``outer`` is counter-clockwise, every hole clockwise and strictly inside.
    Leave ``outer`` empty to use the canonical geometry of ``kind``.
    """

    kind: DomainKind
    n: int
    outer: tuple = ()
    holes: tuple = ()

    def polygons(self) -> tuple[tuple, tuple]:
        if self.outer:
            return tuple(map(tuple, self.outer)), tuple(tuple(map(tuple, h)) for h in self.holes)
        return _CANONICAL[DomainKind(self.kind)]

    @classmethod
    def named(cls, name: str, n: int) -> "DomainSpec":
        return cls(DomainKind(name.lower()), n)


def signed_area(poly: Polygon) -> float:
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


def _check_polygon(poly: Polygon, name: str) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 3:
        raise MeshError(f"{name}: need at least 3 vertices (x, y)")
    if not np.allclose(p, np.round(p)):
        raise MeshError(f"{name}: vertices must lie on the integer lattice")
    q = np.roll(p, -1, axis=0)
    d = q - p
    if np.any(np.all(d == 0, axis=1)):
        raise MeshError(f"{name}: repeated consecutive vertex")
    if np.any((d[:, 0] != 0) & (d[:, 1] != 0)):
        raise MeshError(f"{name}: edges must be axis aligned")
    if abs(signed_area(p)) == 0:
        raise MeshError(f"{name}: zero area")
    m = len(p)
    for i in range(m):
        for j in range(i + 1, m):
            if j == i + 1 or (i == 0 and j == m - 1):
                continue
            if _segments_intersect(p[i], q[i], p[j], q[j]):
                raise MeshError(f"{name}: not simple (edges {i} and {j} intersect)")
    return p


def _inside(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd point-in-polygon test (points must not lie on the boundary)."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    for (x1, y1), (x2, y2) in zip(poly, np.roll(poly, -1, axis=0)):
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xc)
    return inside


def validate_domain(spec: DomainSpec) -> None:
    if int(spec.n) < 1:
        raise MeshError(f"resolution n must be >= 1, got {spec.n}")
    outer, holes = spec.polygons()
    p = _check_polygon(outer, "outer polygon")
    if signed_area(p) <= 0:
        raise MeshError("outer polygon must be counter-clockwise")
    hs = []
    for k, h in enumerate(holes):
        hp = _check_polygon(h, f"hole {k}")
        if signed_area(hp) >= 0:
            raise MeshError(f"hole {k} must be clockwise")
        if not np.all(_inside(p, hp)):
            raise MeshError(f"hole {k} is not inside the outer polygon")
        for a, b in zip(hp, np.roll(hp, -1, axis=0)):
            for c, d in zip(p, np.roll(p, -1, axis=0)):
                if _segments_intersect(a, b, c, d):
                    raise MeshError(f"hole {k} touches the outer boundary")
        hs.append(hp)
    for i in range(len(hs)):
        for j in range(i + 1, len(hs)):
            touching = any(
                _segments_intersect(a, b, c, d)
                for a, b in zip(hs[i], np.roll(hs[i], -1, axis=0))
                for c, d in zip(hs[j], np.roll(hs[j], -1, axis=0))
            )
            if touching or _inside(hs[i], hs[j][:1])[0] or _inside(hs[j], hs[i][:1])[0]:
                raise MeshError(f"holes {i} and {j} overlap or touch")


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation.

    ``triangle_edges[t, k]`` is the edge opposite local vertex ``k`` of
    triangle ``t``; ``edge_triangles[e]`` lists the one or two triangles
    adjacent to edge ``e`` (``-1`` marks a missing neighbour).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_triangles: np.ndarray
    boundary: np.ndarray
    triangle_edges: np.ndarray

    @property
    def nv(self) -> int:
        return len(self.vertices)

    @property
    def ne(self) -> int:
        return len(self.triangles)

    @property
    def ned(self) -> int:
        return len(self.edges)

    @classmethod
    def from_triangles(cls, vertices, triangles, orient: bool = True) -> "Mesh":
        vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshError("triangle references a vertex index out of range")
        if orient:
            flip = triangle_areas(vertices, triangles) < 0
            triangles[flip] = triangles[flip][:, [0, 2, 1]]
        local = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if np.any(counts > 2):
            raise MeshError("an edge is shared by more than two triangles")
        tri_of = np.repeat(np.arange(len(triangles)), 3)
        order = np.argsort(inverse, kind="stable")
        edge_tri = -np.ones((len(edges), 2), dtype=np.int64)
        slot = np.zeros(len(order), dtype=np.int64)
        sorted_inv = inverse[order]
        slot[1:] = (sorted_inv[1:] == sorted_inv[:-1]).astype(np.int64)
        edge_tri[sorted_inv, slot] = tri_of[order]
        mesh = cls(
            vertices=vertices,
            triangles=triangles,
            edges=edges.astype(np.int64),
            edge_triangles=edge_tri,
            boundary=counts == 1,
            triangle_edges=inverse.reshape(-1, 3),
        )
        for arr in (mesh.vertices, mesh.triangles, mesh.edges, mesh.edge_triangles, mesh.boundary, mesh.triangle_edges):
            arr.setflags(write=False)
        return mesh

    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    def area(self) -> float:
        return float(self.areas().sum())

    def h(self) -> float:
        """Longest edge length."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return float(np.sqrt((d**2).sum(axis=1)).max())

    def boundary_loops(self) -> int:
        b = self.edges[self.boundary]
        if len(b) == 0:
            return 0
        graph = coo_matrix((np.ones(len(b)), (b[:, 0], b[:, 1])), shape=(self.nv, self.nv))
        _, labels = connected_components(graph, directed=False)
        return len(np.unique(labels[np.unique(b)]))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.vertices).tobytes())
        h.update(np.ascontiguousarray(self.triangles).tobytes())
        return h.hexdigest()[:16]


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def validate_mesh(mesh: Mesh, holes: int | None = None) -> None:
    """Raise :class:`MeshError` unless every structural invariant holds."""
    if mesh.ne == 0:
        raise MeshError("mesh has no triangles")
    if np.any(mesh.areas() <= 0):
        raise MeshError("triangle with non-positive signed area")
    used = np.zeros(mesh.nv, dtype=bool)
    used[mesh.triangles.ravel()] = True
    if not used.all():
        raise MeshError("vertex not used by any triangle")
    n_adj = (mesh.edge_triangles >= 0).sum(axis=1)
    if np.any(n_adj[mesh.boundary] != 1) or np.any(n_adj[~mesh.boundary] != 2):
        raise MeshError("edge/triangle adjacency inconsistent")
    # a conforming pair traverses its shared edge in opposite directions
    t0, t1 = mesh.edge_triangles[~mesh.boundary].T
    e = mesh.edges[~mesh.boundary]

    def direction(t, edge):
        tri = mesh.triangles[t]
        pos_a = np.argmax(tri == edge[:, :1], axis=1)
        return tri[np.arange(len(t)), (pos_a + 1) % 3] == edge[:, 1]

    if np.any(direction(t0, e) == direction(t1, e)):
        raise MeshError("inconsistently oriented neighbouring triangles")
    _check_hanging_nodes(mesh)
    adj = coo_matrix((np.ones(len(t0)), (t0, t1)), shape=(mesh.ne, mesh.ne))
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise MeshError(f"mesh has {n_comp} disconnected pieces")
    loops = mesh.boundary_loops()
    h = loops - 1 if holes is None else holes
    if loops - 1 != h:
        raise MeshError(f"expected {h} holes, boundary has {loops} loops")
    if mesh.nv - mesh.ned + mesh.ne != 1 - h:
        raise MeshError(f"Euler relation violated: nv - ned + ne = {mesh.nv - mesh.ned + mesh.ne}, holes = {h}")


def _check_hanging_nodes(mesh: Mesh) -> None:
    v = mesh.vertices
    tol = 1e-12 * max(1.0, float(np.abs(v).max()))
    for a, b in mesh.edges[mesh.boundary]:
        pa, pb = v[a], v[b]
        lo, hi = np.minimum(pa, pb) - tol, np.maximum(pa, pb) + tol
        cand = np.nonzero(np.all((v >= lo) & (v <= hi), axis=1))[0]
        cand = cand[(cand != a) & (cand != b)]
        if len(cand) == 0:
            continue
        d = pb - pa
        cross = d[0] * (v[cand, 1] - pa[1]) - d[1] * (v[cand, 0] - pa[0])
        if np.any(np.abs(cross) <= tol * np.linalg.norm(d)):
            raise MeshError("hanging node on a boundary edge (non-conforming triangulation)")


def generate_domain(spec: DomainSpec) -> Mesh:
    """Structured triangulation of a lattice polygon, ``n`` squares per unit."""
    validate_domain(spec)
    outer, holes = spec.polygons()
    outer = np.asarray(outer, dtype=float)
    n = int(spec.n)
    x0, y0 = outer.min(axis=0).astype(int)
    x1, y1 = outer.max(axis=0).astype(int)
    cx, cy = np.meshgrid(np.arange(x0, x1) + 0.5, np.arange(y0, y1) + 0.5)
    centers = np.column_stack([cx.ravel(), cy.ravel()])
    active = _inside(outer, centers)
    for h in holes:
        active &= ~_inside(np.asarray(h, dtype=float), centers)
    cells = np.floor(centers[active]).astype(np.int64)

    sub = np.arange(n)
    si, sj = np.meshgrid(sub, sub)
    si, sj = si.ravel(), sj.ravel()
    # lower-left lattice corners (in units of 1/n) of every small square
    I = (cells[:, :1] * n + si[None, :]).ravel()
    J = (cells[:, 1:] * n + sj[None, :]).ravel()
    corners = np.stack([np.column_stack([I + di, J + dj]) for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1))], axis=1)
    keys = corners.reshape(-1, 2)
    uniq, inv = np.unique(keys[:, ::-1], axis=0, return_inverse=True)
    ids = inv.reshape(-1, 4)
    vertices = uniq[:, ::-1].astype(float) / n
    tris = np.concatenate([ids[:, [0, 1, 2]], ids[:, [0, 2, 3]]], axis=1).reshape(-1, 3)
    mesh = Mesh.from_triangles(vertices, tris, orient=False)
    validate_mesh(mesh, holes=len(holes))
    return mesh


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four congruent children through edge midpoints."""
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.concatenate([mesh.vertices, mids])
    v0, v1, v2 = mesh.triangles.T
    m0, m1, m2 = (mesh.nv + mesh.triangle_edges[:, k] for k in range(3))
    children = np.stack(
        [
            np.column_stack([v0, m2, m1]),
            np.column_stack([m2, v1, m0]),
            np.column_stack([m1, m0, v2]),
            np.column_stack([m0, m1, m2]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return Mesh.from_triangles(vertices, children, orient=False)


def save_mesh(mesh: Mesh, path) -> None:
    lines = [f"{mesh.nv} {mesh.ne} {mesh.ned}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines += [f"{a} {b} {int(f)}" for (a, b), f in zip(mesh.edges.tolist(), mesh.boundary.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> Mesh:
    """Parse the text mesh format; clockwise triangles are reoriented."""
    raw = Path(path).read_text().split("\n")
    rows = [(i + 1, line.split()) for i, line in enumerate(raw) if line.strip()]
    if not rows:
        raise MeshError(f"{path}: empty mesh file")

    def ints(lineno, tok, k):
        if len(tok) != k:
            raise MeshError(f"{path}:{lineno}: expected {k} fields, got {len(tok)}")
        try:
            return [int(t) for t in tok]
        except ValueError:
            raise MeshError(f"{path}:{lineno}: expected integers") from None

    lineno, tok = rows[0]
    nv, ne, ned = ints(lineno, tok, 3)
    if len(rows) != 1 + nv + ne + ned:
        raise MeshError(f"{path}: expected {1 + nv + ne + ned} non-empty lines, found {len(rows)}")
    verts = []
    for lineno, tok in rows[1 : 1 + nv]:
        if len(tok) != 2:
            raise MeshError(f"{path}:{lineno}: expected 2 coordinates")
        try:
            verts.append([float(t) for t in tok])
        except ValueError:
            raise MeshError(f"{path}:{lineno}: bad coordinate") from None
    tris = []
    for lineno, tok in rows[1 + nv : 1 + nv + ne]:
        t = ints(lineno, tok, 3)
        if min(t) < 0 or max(t) >= nv:
            raise MeshError(f"{path}:{lineno}: vertex index out of range [0, {nv})")
        tris.append(t)
    listed = []
    for lineno, tok in rows[1 + nv + ne :]:
        a, b, flag = ints(lineno, tok, 3)
        if flag not in (0, 1) or min(a, b) < 0 or max(a, b) >= nv:
            raise MeshError(f"{path}:{lineno}: bad edge record")
        listed.append((min(a, b), max(a, b), flag))
    mesh = Mesh.from_triangles(verts, tris, orient=True)
    got = sorted(listed)
    want = [(a, b, int(f)) for (a, b), f in zip(mesh.edges.tolist(), mesh.boundary.tolist())]
    if got != want:
        raise MeshError(f"{path}: edge table does not match the triangles")
    validate_mesh(mesh)
    return mesh
