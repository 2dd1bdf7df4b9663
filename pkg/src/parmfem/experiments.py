"""Named experiment configurations and a driver shared by scripts and the acceptance suite.

A case fixes model, domain, resolution, space, manifold dimension and order;
``run_case`` finds the equilibrium, its unstable eigendata, tunes the
eigenvector scaling, computes the manifold and its invariance defect.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .argyris import ArgyrisSpace
from .diagnostics import DefectReport, invariance_defect, theta_grid
from .equilibrium import morse_index, seeded_equilibrium, unstable_eigendata
from .geometry import DomainSpec, generate_domain
from .lagrange import FESpace, P1Space
from .linalg import EigenPair
from .manifold import compute_manifold, order_norms, tune_scaling
from .models import Model, make_model
from .taylor import Parameterization

# L-shape resolutions giving ne = 486 / 1014 / 1944 (P1 tables) and
# 96 / 216 / 384 (Argyris tables); n = 8 gives ne = 384 for the P1/Argyris comparison
P1_SEQUENCE = (9, 13, 18)
ARGYRIS_SEQUENCE = (4, 6, 8)


@dataclass(frozen=True)
class CaseConfig:
    model: str
    params: tuple  # ((name, value), ...)
    n: int = 9
    domain: str = "lshape"
    space: str = "P1"
    dim: int = 1
    order: int = 30
    target: float = 1e-14
    base: float | None = None
    amplitude: float = 1.0
    mode: int = 1
    products: str | None = None
    eig_window: int = 3
    grid_points: int = 21

    def make_model(self) -> Model:
        return make_model(self.model, **dict(self.params))

    def make_space(self) -> FESpace:
        mesh = generate_domain(DomainSpec.named(self.domain, self.n))
        return ArgyrisSpace(mesh) if self.space == "Argyris" else P1Space(mesh)

    def at(self, **changes) -> "CaseConfig":
        return replace(self, **changes)


FISHER_1D = CaseConfig("fisher", (("alpha", 2.7),))
FISHER_2D = CaseConfig("fisher", (("alpha", 9.0),), dim=2)
FISHER_RICKER_1D = CaseConfig("fisher-ricker", (("alpha", -4.7),))
# the only Morse-index-2 equilibrium found at alpha = -4.41 is u = 0
FISHER_RICKER_2D = CaseConfig("fisher-ricker", (("alpha", -4.41),), dim=2, base=0.0, amplitude=0.0)
FKS_1D = CaseConfig("fks", (("eps1", -1e-2), ("beta", 1.0), ("alpha", 2.61), ("eps2", 1e-3)), n=8, space="Argyris")


@dataclass
class CaseResult:
    config: CaseConfig
    model: Model
    space: FESpace
    c0: np.ndarray = field(repr=False)
    eigenpairs: list[EigenPair] = field(repr=False)
    morse: int
    scalings: tuple
    manifold: Parameterization | None = field(default=None, repr=False)
    defect: DefectReport | None = field(default=None, repr=False)
    seconds: float = 0.0

    @property
    def eigenvalues(self) -> list[float]:
        return [p.value for p in self.eigenpairs]

    @property
    def ne(self) -> int:
        return self.space.mesh.ne


def equilibrium_case(cfg: CaseConfig, space: FESpace | None = None) -> CaseResult:
    """Equilibrium and leading eigendata only."""
    t0 = time.perf_counter()
    model = cfg.make_model()
    space = cfg.make_space() if space is None else space
    res = seeded_equilibrium(model, space, cfg.base, cfg.amplitude, cfg.mode)
    pairs = unstable_eigendata(model, space, res.coeffs, k=max(cfg.eig_window, cfg.dim + 1))
    return CaseResult(cfg, model, space, res.coeffs, pairs, morse_index(pairs), (), seconds=time.perf_counter() - t0)


def run_case(cfg: CaseConfig, space: FESpace | None = None, scalings=None) -> CaseResult:
    """Full pipeline: equilibrium, eigendata, scaling, manifold of order ``cfg.order``, invariance defect."""
    out = equilibrium_case(cfg, space)
    t0 = time.perf_counter() - out.seconds
    pairs = out.eigenpairs[: cfg.dim]
    if scalings is None:
        scalings = tune_scaling(out.model, out.space, out.c0, pairs, cfg.order, cfg.target, cfg.products)
    P = compute_manifold(out.model, out.space, out.c0, pairs, scalings, cfg.order, cfg.products)
    out.manifold = P
    out.scalings = tuple(scalings)
    out.defect = invariance_defect(out.model, out.space, P, theta_grid(cfg.dim, cfg.grid_points))
    out.seconds = time.perf_counter() - t0
    return out


def summary(res: CaseResult) -> str:
    parts = [
        f"{res.config.model}{dict(res.config.params)} {res.space.tag} n={res.config.n} ne={res.ne}",
        "lambda=" + ",".join(f"{v:.6g}" for v in res.eigenvalues),
        f"morse={res.morse}",
    ]
    if res.defect is not None:
        top = order_norms(res.manifold, res.space)[-1]
        parts += [f"N={res.manifold.order}", f"avg={res.defect.average:.4e}", f"max={res.defect.max:.4e}", f"|p_N|={top:.2e}"]
    parts.append(f"{res.seconds:.1f}s")
    return " ".join(parts)
