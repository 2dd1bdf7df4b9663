"""Command-line driver: meshes, equilibria, eigendata, manifolds, defects and exports.

Every option can also be given in a flat ``key = value`` config file passed
with ``--config``; command-line flags take precedence over the file.  Each run
writes a JSON manifest with the resolved parameters, mesh digest and seed.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .argyris import ArgyrisSpace
from .diagnostics import conjugacy_defect, invariance_defect, theta_grid, write_vtk
from .equilibrium import (
    NewtonError,
    load_eigendata,
    morse_index,
    save_eigendata,
    seeded_equilibrium,
    newton_solve,
    unstable_eigendata,
)
from .geometry import DomainKind, DomainSpec, MeshError, generate_domain, load_mesh, refine_uniform, save_mesh
from .lagrange import FieldCoeffs, P1Space, SpaceMismatch
from .linalg import EigenError, SingularMatrixError, eigs_largest_real
from .manifold import ResonanceError, check_nonresonance, compute_manifold, order_norms, tune_scaling, write_norms_csv
from .models import MODELS, ModelError, make_model
from .ode_demo import decay_fit, invariance_residual, ode_manifold, sample_curve
from .taylor import Parameterization

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (NewtonError, EigenError, ResonanceError, SingularMatrixError)
MODEL_FIELDS = {"fisher": ("alpha",), "fisher-ricker": ("alpha",), "fks": ("eps1", "beta", "alpha", "eps2")}


class ConfigError(ValueError):
    pass


# option registry --------------------------------------------------------------
class _Options:
    """Arguments registered with default None; real defaults applied after config merge."""

    def __init__(self, parser: argparse.ArgumentParser):
        self.parser = parser
        self.defaults: dict = {}
        self.types: dict = {}
        self.choices: dict = {}

    def add(self, flag: str, default=None, type=str, choices=None, help: str = ""):
        dest = flag.lstrip("-").replace("-", "_")
        self.defaults[dest] = default
        self.types[dest] = type
        self.choices[dest] = choices
        shown = "" if default is None else f" (default {default})"
        self.parser.add_argument(flag, dest=dest, default=None, type=type, choices=choices, help=help + shown)


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(","))


def _add_common(opt: _Options) -> None:
    opt.parser.add_argument("--config", help="flat key = value file with option defaults")
    opt.add("--manifest", help="manifest path (default: next to the main output)")
    opt.add("--seed", 0, int, help="seed for Krylov start vectors")


def _add_mesh(opt: _Options) -> None:
    opt.add("--mesh", help="mesh file; otherwise one is generated from --domain/--n")
    opt.add("--domain", "lshape", str, [k.value for k in DomainKind], help="canonical domain")
    opt.add("--n", 8, int, help="squares per unit length")
    opt.add("--refine", 0, int, help="uniform refinements")


def _add_model(opt: _Options) -> None:
    opt.add("--model", "fisher", str, sorted(MODELS), help="reaction-diffusion model")
    opt.add("--space", None, str, ["p1", "argyris"], help="finite element space (default p1, argyris for fks)")
    opt.add("--alpha", 2.7, float, help="reaction strength")
    opt.add("--eps1", -0.01, float, help="fks fourth-order coefficient (negative)")
    opt.add("--beta", 1.0, float, help="fks diffusion coefficient")
    opt.add("--eps2", 1e-3, float, help="fks gradient-squared coefficient")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="parmfem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def command(name, help, *groups):
        p = sub.add_parser(name, help=help)
        opt = _Options(p)
        _add_common(opt)
        for g in groups:
            g(opt)
        registry[name] = opt
        return opt

    opt = command("mesh", "generate, refine and save a mesh", _add_mesh)
    opt.add("--out", "domain.mesh", help="mesh file to write")

    opt = command("equilibrium", "Newton solve for an equilibrium", _add_mesh, _add_model)
    opt.add("--initial", help="FieldCoeffs file used as Newton start")
    opt.add("--base", None, float, help="constant of the seed (default: positive constant state)")
    opt.add("--amplitude", 1.0, float, help="amplitude of the Neumann mode added to the seed")
    opt.add("--mode", 1, int, help="Neumann mode index of the seed")
    opt.add("--tol", 1e-12, float, help="residual tolerance")
    opt.add("--continuation-start", None, float, help="alpha at which parameter continuation starts")
    opt.add("--continuation-steps", 5, int, help="number of continuation steps")
    opt.add("--out", "equilibrium.txt", help="FieldCoeffs file to write")

    opt = command("eigs", "unstable eigendata and non-resonance report", _add_mesh, _add_model)
    opt.add("--equilibrium", help="FieldCoeffs file of the equilibrium")
    opt.add("--k", 2, int, help="eigenpairs to save")
    opt.add("--window", 20, int, help="eigenvalues used for the non-resonance check")
    opt.add("--order", 30, int, help="polynomial order for the non-resonance check")
    opt.add("--sigma", 50.0, float, help="shift for shift-invert Arnoldi")
    opt.add("--out", "eigs.txt", help="eigendata file to write")
    opt.add("--report", None, help="non-resonance CSV (default: <out>.resonance.csv)")

    opt = command("manifold", "Taylor coefficients of the unstable manifold", _add_mesh, _add_model)
    opt.add("--equilibrium", help="FieldCoeffs file of the equilibrium")
    opt.add("--eigs", help="eigendata file")
    opt.add("--dim", 1, int, [1, 2], help="manifold dimension")
    opt.add("--order", 30, int, help="truncation order N")
    opt.add("--scaling", None, _floats, help="eigenvector scalings s1[,s2]; tuned if omitted")
    opt.add("--target", 1e-14, float, help="order-N coefficient norm targeted by scaling tuning")
    opt.add("--products", None, str, ["nodal", "quadrature"], help="pointwise product representation")
    opt.add("--out", "manifold.par", help="parameterization file to write")
    opt.add("--norms", None, help="per-order norms CSV (default: <out>.norms.csv)")

    opt = command("defect", "invariance or conjugacy defect report", _add_mesh)
    opt.add("--manifold", help="parameterization file")
    opt.add("--kind", "invariance", str, ["invariance", "conjugacy"], help="defect type")
    opt.add("--points", 21, int, help="grid points per direction")
    opt.add("--T", None, float, help="conjugacy time (default: ln 2 / largest lambda)")
    opt.add("--steps", 100, int, help="IMEX steps of the coarsest conjugacy run")
    opt.add("--levels", 3, int, help="Richardson levels")
    opt.add("--out", "defect.csv", help="report CSV to write")

    opt = command("export", "field or manifold sample to VTK/CSV", _add_mesh)
    opt.add("--field", help="FieldCoeffs file")
    opt.add("--manifold", help="parameterization file")
    opt.add("--theta", None, _floats, help="chart coordinates of the manifold sample")
    opt.add("--vtk", help="legacy ASCII VTK output")
    opt.add("--csv", help="vertex CSV output x,y,value")

    opt = command("demo-ode", "planar ODE unstable manifold", )
    opt.add("--order", 20, int, help="truncation order N")
    opt.add("--scale", 1.0, float, help="eigenvector scaling s")
    opt.add("--points", 201, int, help="curve samples")
    opt.add("--out", None, help="coefficient CSV (default: stdout)")
    opt.add("--curve", None, help="curve CSV theta,a,b")
    return parser, registry


# config -------------------------------------------------------------------------
def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = (value, lineno)
    return out


def resolve(ns: argparse.Namespace, opt: _Options) -> dict:
    """Merge flags over config over defaults, converting config values by option type."""
    config = read_config(ns.config) if ns.config else {}
    params = {}
    for key, (value, lineno) in config.items():
        if key not in opt.defaults:
            raise ConfigError(f"{ns.config}:{lineno}: unknown field '{key}' for command '{ns.command}'")
        try:
            conv = opt.types[key](value)
        except (TypeError, ValueError):
            raise ConfigError(f"{ns.config}:{lineno}: field '{key}': cannot parse {value!r}") from None
        if opt.choices[key] is not None and conv not in opt.choices[key]:
            raise ConfigError(f"{ns.config}:{lineno}: field '{key}': {value!r} not in {opt.choices[key]}")
        params[key] = conv
    for key, default in opt.defaults.items():
        flag = getattr(ns, key)
        if flag is not None:
            params[key] = flag
        params.setdefault(key, default)
    return params


def _require(params: dict, key: str, why: str = ""):
    if params.get(key) is None:
        raise ConfigError(f"missing field '{key}'{': ' + why if why else ''}")
    return params[key]


# shared helpers -------------------------------------------------------------------
def get_mesh(params: dict):
    if params.get("mesh"):
        mesh = load_mesh(params["mesh"])
    else:
        if params["n"] < 1:
            raise ConfigError("field 'n' must be >= 1")
        mesh = generate_domain(DomainSpec.named(params["domain"], params["n"]))
    if params["refine"] < 0:
        raise ConfigError("field 'refine' must be >= 0")
    for _ in range(params["refine"]):
        mesh = refine_uniform(mesh)
    return mesh


def make_space(mesh, tag: str):
    tag = tag.lower()
    if tag == "p1":
        return P1Space(mesh)
    if tag == "argyris":
        return ArgyrisSpace(mesh)
    raise ConfigError(f"field 'space': unknown space {tag!r}")


def get_model(params: dict):
    kind = params["model"]
    try:
        return make_model(kind, **{k: params[k] for k in MODEL_FIELDS[kind]})
    except ModelError as exc:
        raise ConfigError(str(exc)) from None


def model_space(params: dict):
    model = get_model(params)
    mesh = get_mesh(params)
    tag = params["space"] or model.spaces[0]
    space = make_space(mesh, tag)
    try:
        model.check_space(space)
    except ModelError as exc:
        raise ConfigError(f"field 'space': {exc}") from None
    return model, mesh, space


def load_field(path, space) -> np.ndarray:
    f = FieldCoeffs.load(path)
    if f.space_tag != space.tag or f.mesh_digest != space.mesh.digest():
        raise SpaceMismatch(f"{path}: coefficients belong to {f.space_tag}/{f.mesh_digest}, not {space.tag}/{space.mesh.digest()}")
    return space.check(f.values)


def load_manifold(path, mesh):
    P = Parameterization.load(path)
    if P.mesh_digest != mesh.digest():
        raise SpaceMismatch(f"{path}: manifold computed on mesh {P.mesh_digest}, given mesh is {mesh.digest()}")
    space = make_space(mesh, P.space_tag)
    model = make_model(P.model_kind, **P.model_params)
    return P, model, space


def equilibrium_for(params: dict, model, space) -> np.ndarray:
    if params.get("equilibrium"):
        return load_field(params["equilibrium"], space)
    return seeded_equilibrium(model, space).coeffs


def write_manifest(params: dict, command: str, argv, outputs: dict, mesh=None, extra=None) -> Path:
    main = next((v for v in outputs.values() if v), None)
    path = Path(params.get("manifest") or (f"{main}.manifest.json" if main else f"{command}.manifest.json"))
    doc = {
        "command": command,
        "argv": list(argv),
        "params": params,
        "seed": params.get("seed", 0),
        "mesh_digest": mesh.digest() if mesh is not None else None,
        "mesh": {"nv": int(mesh.nv), "ne": int(mesh.ne), "h": float(mesh.h())} if mesh is not None else None,
        "outputs": outputs,
        "results": extra or {},
        "versions": {"parmfem": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "manifold_threads": os.environ.get("MANIFOLD_THREADS"),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=repr) + "\n")
    return path


def _fmt(v: float) -> str:
    return f"{v:.17g}"


# commands -------------------------------------------------------------------------
def cmd_mesh(params, argv):
    mesh = get_mesh(params)
    save_mesh(mesh, params["out"])
    load_mesh(params["out"])
    print(f"nv={mesh.nv} ne={mesh.ne} h={_fmt(mesh.h())} digest={mesh.digest()}")
    write_manifest(params, "mesh", argv, {"mesh": params["out"]}, mesh)


def cmd_equilibrium(params, argv):
    model, mesh, space = model_space(params)
    if params["initial"]:
        res = newton_solve(model, space, load_field(params["initial"], space), tol=params["tol"])
    else:
        chain = None
        if params["continuation_start"] is not None:
            if "alpha" not in MODEL_FIELDS[model.kind]:
                raise ConfigError("field 'continuation_start' needs a model with alpha")
            steps = _require(params, "continuation_steps")
            if steps < 1:
                raise ConfigError("field 'continuation_steps' must be >= 1")
            alphas = np.linspace(params["continuation_start"], params["alpha"], steps + 1)
            chain = [get_model({**params, "alpha": float(a)}) for a in alphas]
        res = seeded_equilibrium(model, space, params["base"], params["amplitude"], params["mode"], params["tol"], chain)
    FieldCoeffs(res.coeffs, space.tag, mesh.digest()).save(params["out"])
    vals = space.nodal_values(res.coeffs)
    print(f"newton iterations={res.iterations} residual={_fmt(res.history[-1])} min={_fmt(vals.min())} max={_fmt(vals.max())}")
    write_manifest(params, "equilibrium", argv, {"equilibrium": params["out"]}, mesh, {"iterations": res.iterations, "history": res.history})


def cmd_eigs(params, argv):
    model, mesh, space = model_space(params)
    c0 = equilibrium_for(params, model, space)
    k, window = params["k"], max(params["window"], params["k"])
    if k < 1:
        raise ConfigError("field 'k' must be >= 1")
    pairs = eigs_largest_real(model.jacobian(space, c0), space.mass, window, sigma=params["sigma"], seed=params["seed"])
    save_eigendata(pairs[:k], params["out"], space.tag, mesh.digest())
    unstable = [p.value for p in pairs if p.value > 0]
    report = check_nonresonance(unstable[:2] or [pairs[0].value], [p.value for p in pairs], params["order"])
    rpath = params["report"] or f"{params['out']}.resonance.csv"
    lines = ["m,n,shift,nearest_eigenvalue,distance"]
    lines += [f"{m},{n},{_fmt(s)},{_fmt(e)},{_fmt(d)}" for (m, n), s, e, d in report.rows]
    lines.append(f"# passed={report.passed} min_distance={_fmt(report.min_distance)}")
    Path(rpath).write_text("\n".join(lines) + "\n")
    index = morse_index(pairs)
    print("eigenvalues " + " ".join(_fmt(p.value) for p in pairs))
    print(f"morse_index={index} nonresonant={report.passed} min_distance={_fmt(report.min_distance)}")
    write_manifest(
        params, "eigs", argv, {"eigs": params["out"], "report": rpath}, mesh,
        {"eigenvalues": [p.value for p in pairs], "morse_index": index, "nonresonant": report.passed},
    )
    if not unstable:
        raise EigenError("equilibrium has no unstable eigenvalue", [])
    if not report.passed:
        raise ResonanceError(report.index, report.shift, f"near eigenvalue {report.eigenvalue:.12g}")


def cmd_manifold(params, argv):
    model, mesh, space = model_space(params)
    c0 = equilibrium_for(params, model, space)
    dim, N = params["dim"], params["order"]
    if N < 1:
        raise ConfigError("field 'order' must be >= 1")
    if params["eigs"]:
        pairs, tag, digest = load_eigendata(params["eigs"])
        if tag != space.tag or digest != mesh.digest():
            raise SpaceMismatch(f"{params['eigs']}: eigendata belong to {tag}/{digest}")
    else:
        pairs = unstable_eigendata(model, space, c0, k=max(dim, 2), seed=params["seed"])
    unstable = [p for p in pairs if p.value > 0][:dim]
    if len(unstable) < dim:
        raise EigenError(f"need {dim} unstable eigenvalues, found {len(unstable)}", [])
    spectrum = [p.value for p in pairs] if len(pairs) > dim else None
    scaling = params["scaling"]
    if scaling is None:
        scaling = tune_scaling(model, space, c0, unstable, N, params["target"], params["products"])
    elif len(scaling) != dim:
        raise ConfigError(f"field 'scaling': need {dim} values, got {len(scaling)}")
    P = compute_manifold(model, space, c0, unstable, scaling, N, params["products"], spectrum)
    P.save(params["out"])
    norms = order_norms(P, space)
    npath = params["norms"] or f"{params['out']}.norms.csv"
    write_norms_csv(norms, npath)
    print("lambdas " + " ".join(_fmt(v) for v in P.lambdas))
    print("scalings " + " ".join(_fmt(v) for v in P.scalings))
    print(f"order_{N}_norm={_fmt(norms[-1])}")
    write_manifest(
        params, "manifold", argv, {"manifold": params["out"], "norms": npath}, mesh,
        {"lambdas": list(P.lambdas), "scalings": list(P.scalings)},
    )


def cmd_defect(params, argv):
    mesh = get_mesh(params)
    P, model, space = load_manifold(_require(params, "manifold"), mesh)
    if params["kind"] == "invariance":
        rep = invariance_defect(model, space, P, theta_grid(P.dim, params["points"]))
    else:
        T = params["T"] if params["T"] is not None else math.log(2.0) / max(P.lambdas)
        growth = math.exp(max(P.lambdas) * T)
        grid = theta_grid(P.dim, params["points"], radius=1.0 / growth)
        rep = conjugacy_defect(model, space, P, T, grid, params["steps"], params["levels"])
    rep.to_csv(params["out"])
    print(f"{rep.kind} average={_fmt(rep.average)} max={_fmt(rep.max)}")
    write_manifest(params, "defect", argv, {"report": params["out"]}, mesh, {"average": rep.average, "max": rep.max})


def cmd_export(params, argv):
    mesh = get_mesh(params)
    if bool(params["field"]) == bool(params["manifold"]):
        raise ConfigError("give exactly one of 'field' and 'manifold'")
    if not (params["vtk"] or params["csv"]):
        raise ConfigError("give at least one of 'vtk' and 'csv'")
    if params["field"]:
        f = FieldCoeffs.load(params["field"])
        space = make_space(mesh, f.space_tag)
        c, name = load_field(params["field"], space), "u"
    else:
        P, _, space = load_manifold(params["manifold"], mesh)
        theta = _require(params, "theta", "chart coordinates of the sample")
        c, name = P.evaluate(theta), "P_theta"
    if params["vtk"]:
        write_vtk(space, c, params["vtk"], name)
    if params["csv"]:
        vals = space.nodal_values(c)
        lines = ["x,y,value"] + [f"{_fmt(x)},{_fmt(y)},{_fmt(v)}" for (x, y), v in zip(mesh.vertices, vals)]
        Path(params["csv"]).write_text("\n".join(lines) + "\n")
    write_manifest(params, "export", argv, {"vtk": params["vtk"], "csv": params["csv"]}, mesh)


def cmd_demo_ode(params, argv):
    N, s = params["order"], params["scale"]
    if N < 1 or not s > 0:
        raise ConfigError("fields 'order' >= 1 and 'scale' > 0 required")
    p = ode_manifold(N, s)
    lines = ["n,a,b,norm"] + [f"{n},{_fmt(a)},{_fmt(b)},{_fmt(math.hypot(a, b))}" for n, (a, b) in enumerate(p)]
    text = "\n".join(lines) + "\n"
    if params["out"]:
        Path(params["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    if params["curve"]:
        curve = sample_curve(p, params["points"])
        rows = ["theta,a,b"] + [",".join(_fmt(v) for v in row) for row in curve]
        Path(params["curve"]).write_text("\n".join(rows) + "\n")
    resid = float(np.abs(invariance_residual(p)).max())
    C, r = decay_fit(p)
    print(f"# invariance_residual={_fmt(resid)} decay_C={_fmt(C)} decay_exponent={_fmt(r)}", file=sys.stderr)
    write_manifest(
        params, "demo-ode", argv, {"coefficients": params["out"], "curve": params["curve"]}, None,
        {"invariance_residual": resid, "decay_C": C, "decay_exponent": r},
    )


COMMANDS = {
    "mesh": cmd_mesh,
    "equilibrium": cmd_equilibrium,
    "eigs": cmd_eigs,
    "manifold": cmd_manifold,
    "defect": cmd_defect,
    "export": cmd_export,
    "demo-ode": cmd_demo_ode,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, registry = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        params = resolve(ns, registry[ns.command])
        COMMANDS[ns.command](params, argv)
    except (ConfigError, ModelError, MeshError, SpaceMismatch) as exc:
        print(f"parmfem {ns.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"parmfem {ns.command}: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"parmfem {ns.command}: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
