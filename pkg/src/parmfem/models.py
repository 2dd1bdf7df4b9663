"""Reaction-diffusion models in weak form.

Each model splits its residual into a linear part ``L c`` (the stiff operator
treated implicitly by IMEX stepping) and a nonlinear load, and supplies the
Jacobian.  Residual sign convention: R(u) = 0 at equilibria and the semiflow
is M du/dt = R(u).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import ClassVar

import numpy as np
import scipy.sparse as sp

from .lagrange import FESpace


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Model:
    kind: ClassVar[str] = "?"
    spaces: ClassVar[tuple[str, ...]] = ("P1", "Argyris")

    def check_space(self, space: FESpace) -> None:
        if space.tag not in self.spaces:
            raise ModelError(f"model {self.kind} needs one of {self.spaces}, got {space.tag}")

    def params(self) -> dict:
        return asdict(self)

    def residual(self, space: FESpace, c) -> np.ndarray:
        self.check_space(space)
        c = space.check(c)
        return self.linear_operator(space) @ c + self.nonlinear_load(space, c)

    def linear_operator(self, space: FESpace) -> sp.csr_matrix:
        return -space.stiffness

    def nonlinear_load(self, space: FESpace, c) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, space: FESpace, c) -> sp.csr_matrix:
        raise NotImplementedError


@dataclass(frozen=True)
class Fisher(Model):
    """u_t = lap u + alpha u (1 - u), homogeneous Neumann."""

    alpha: float
    kind: ClassVar[str] = "fisher"

    def nonlinear_load(self, space, c):
        u = space.values(c)
        return space.load(self.alpha * u * (1.0 - u))

    def jacobian(self, space, c):
        u = space.values(c)
        return (-space.stiffness + space.weighted_mass(self.alpha * (1.0 - 2.0 * u))).tocsr()


@dataclass(frozen=True)
class FisherRicker(Model):
    """u_t = lap u + alpha u (1/2 - exp(-u)), homogeneous Neumann."""

    alpha: float
    kind: ClassVar[str] = "fisher-ricker"

    def nonlinear_load(self, space, c):
        u = space.values(c)
        return space.load(self.alpha * u * (0.5 - np.exp(-u)))

    def jacobian(self, space, c):
        u = space.values(c)
        e = np.exp(-u)
        return (-space.stiffness + space.weighted_mass(self.alpha * (0.5 - e + u * e))).tocsr()


@dataclass(frozen=True)
class FKS(Model):
    """Fisher-Kolmogorov-Kuramoto-Sivashinsky model.

    u_t = eps1 lap^2 u + beta lap u + alpha u (1 - u) - (eps2 / 2) |grad u|^2
    with eps1 < 0 and natural (Neumann-type) boundary conditions.  Needs a C1
    space.
    """

    eps1: float
    beta: float
    alpha: float
    eps2: float
    kind: ClassVar[str] = "fks"
    spaces: ClassVar[tuple[str, ...]] = ("Argyris",)

    def __post_init__(self):
        if not self.eps1 < 0:
            raise ModelError(f"FKS needs eps1 < 0, got {self.eps1}")

    @classmethod
    def from_script(cls, a: float, b: float, mu: float, delta: float) -> "FKS":
        """Parameters as in u_t = -a lap^2 u - b lap u + mu u (1 - u) - (delta/2)|grad u|^2."""
        return cls(eps1=-a, beta=-b, alpha=mu, eps2=delta)

    def linear_operator(self, space):
        self.check_space(space)
        return (self.eps1 * space.biharmonic - self.beta * space.stiffness).tocsr()

    def nonlinear_load(self, space, c):
        u = space.values(c)
        g = space.gradients(c)
        return space.load(self.alpha * u * (1.0 - u) - 0.5 * self.eps2 * (g**2).sum(-1))

    def jacobian(self, space, c):
        u = space.values(c)
        g = space.gradients(c)
        J = self.linear_operator(space) + space.weighted_mass(self.alpha * (1.0 - 2.0 * u))
        return (J - self.eps2 * space.advection(g)).tocsr()


MODELS = {m.kind: m for m in (Fisher, FisherRicker, FKS)}


def make_model(kind: str, **params) -> Model:
    try:
        cls = MODELS[kind]
    except KeyError:
        raise ModelError(f"unknown model {kind!r}; choose from {sorted(MODELS)}") from None
    try:
        return cls(**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise ModelError(f"bad parameters for {kind}: {exc}") from None
