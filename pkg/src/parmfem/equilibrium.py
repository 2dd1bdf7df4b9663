"""Newton iteration for discrete equilibria and their unstable eigendata."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lagrange import FESpace, FieldCoeffs
from .linalg import EigenPair, Factorization, SingularMatrixError, eigs_largest_real
from .models import Model


class NewtonError(RuntimeError):
    def __init__(self, message: str, history: list[float]):
        super().__init__(f"{message}; residual history {['%.3e' % r for r in history]}")
        self.history = history


@dataclass
class NewtonResult:
    coeffs: np.ndarray = field(repr=False)
    iterations: int
    history: list[float]


def newton_solve(model: Model, space: FESpace, c_init, tol: float = 1e-12, max_iter: int = 50, max_halvings: int = 10) -> NewtonResult:
    """Damped Newton on the weak residual; stops when the residual inf-norm is below tol."""
    model.check_space(space)
    c = space.check(c_init).copy()
    r = model.residual(space, c)
    history = [float(np.abs(r).max())]
    for it in range(max_iter + 1):
        if history[-1] <= tol:
            return NewtonResult(c, it, history)
        if it == max_iter:
            break
        try:
            step = Factorization(model.jacobian(space, c)).solve(r)
        except SingularMatrixError as exc:
            raise NewtonError(f"singular Jacobian at iteration {it}: {exc}", history) from None
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = c - t * step
            rt = model.residual(space, trial)
            nr = np.abs(rt).max()
            if np.isfinite(nr) and nr < history[-1]:
                break
            t *= 0.5
        c, r = trial, rt
        history.append(float(np.abs(r).max()))
        if not np.isfinite(history[-1]):
            raise NewtonError("residual became non-finite", history)
    raise NewtonError(f"no convergence in {max_iter} iterations", history)


def unstable_eigendata(model: Model, space: FESpace, c0, k: int = 2, sigma: float = 50.0, seed: int = 0) -> list[EigenPair]:
    """The k largest-real eigenpairs of the linearization at c0 against the mass matrix."""
    return eigs_largest_real(model.jacobian(space, c0), space.mass, k, sigma=sigma, seed=seed)


def morse_index(pairs: list[EigenPair], tol: float = 1e-8) -> int:
    return sum(p.value > tol for p in pairs)


def neumann_mode(space: FESpace, index: int = 1, seed: int = 0) -> np.ndarray:
    """Neumann Laplacian eigenfunction number ``index`` (0 is the constant)."""
    pairs = eigs_largest_real(-space.stiffness, space.mass, index + 1, sigma=1.0, seed=seed)
    return pairs[index].vector


def constant(space: FESpace, value: float) -> np.ndarray:
    """Coefficients of the constant function ``value``."""
    if space.tag == "P1":
        return np.full(space.nb, float(value))
    return space.interpolate(lambda x, y: (value + 0 * x, 0 * x, 0 * x, 0 * x, 0 * x, 0 * x))


def default_base(model: Model) -> float:
    """The positive constant equilibrium: u = 1 for Fisher and FKS, u = ln 2 for Fisher-Ricker."""
    return float(np.log(2.0)) if model.kind == "fisher-ricker" else 1.0


def seeded_equilibrium(
    model: Model,
    space: FESpace,
    base: float | None = None,
    amplitude: float = 1.0,
    mode: int = 1,
    tol: float = 1e-12,
    continuation=None,
) -> NewtonResult:
    """Newton from base + amplitude * xi, xi the sup-normalized Neumann mode ``mode``.

    ``continuation`` is an optional sequence of models ending at ``model``; it
    is used when the direct solve fails or returns the constant state, each
    solve seeding the next.
    """
    base = default_base(model) if base is None else float(base)
    xi = neumann_mode(space, mode)
    xi = xi / np.abs(space.values(xi)).max()
    c0 = constant(space, base) + amplitude * xi
    try:
        res = newton_solve(model, space, c0, tol=tol)
        if continuation is None or np.abs(space.values(res.coeffs) - base).max() > 1e-6:
            return res
    except NewtonError:
        if continuation is None:
            raise
    return continue_equilibrium(continuation, space, c0, tol)


def continue_equilibrium(models, space: FESpace, c_init, tol: float = 1e-12) -> NewtonResult:
    """Newton along a sequence of models, each solution seeding the next."""
    c = c_init
    res = None
    for m in models:
        res = newton_solve(m, space, c, tol=tol)
        c = res.coeffs
    if res is None:
        raise ValueError("empty continuation sequence")
    return res


def save_eigendata(pairs: list[EigenPair], path, space_tag: str, mesh_digest: str) -> None:
    """Text format: header ``eigs k nb tag digest``, then one line ``lambda v_1 .. v_nb`` per pair."""
    nb = len(pairs[0].vector) if pairs else 0
    lines = [f"eigs {len(pairs)} {nb} {space_tag} {mesh_digest}"]
    lines += [f"{p.value:.17g} " + " ".join(f"{v:.17g}" for v in p.vector) for p in pairs]
    Path(path).write_text("\n".join(lines) + "\n")


def load_eigendata(path) -> tuple[list[EigenPair], str, str]:
    rows = Path(path).read_text().splitlines()
    head = rows[0].split()
    if head[0] != "eigs":
        raise ValueError(f"{path}: not an eigendata file")
    k, nb, tag, digest = int(head[1]), int(head[2]), head[3], head[4]
    pairs = []
    for lineno, line in enumerate(rows[1 : k + 1], start=2):
        vals = [float(v) for v in line.split()]
        if len(vals) != nb + 1:
            raise ValueError(f"{path}:{lineno}: expected {nb + 1} numbers, found {len(vals)}")
        pairs.append(EigenPair(vals[0], np.array(vals[1:])))
    return pairs, tag, digest
