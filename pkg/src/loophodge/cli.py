"""Command-line front end.

Subcommands ``info``, ``refine``, ``decompose``, ``harmonic``, ``solve`` and
``rcs`` each write a JSON summary (and CSV data where applicable) into the
output directory (``--out``, else ``$LOOPHODGE_OUTPUT_DIR``, else the
working directory). Outputs are written only after the run succeeds.

Exit codes: 0 success, 1 I/O or parse error, 2 invalid geometry,
3 solver non-convergence, 4 linear dependence (reseeding exhausted).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GeometryError, LinearDependenceError, ParseError, SolverError

SCHEMA_VERSION = 1
OUTPUT_ENV = "LOOPHODGE_OUTPUT_DIR"
FIELDS = ("xd", "xc", "xh", "nxh")

EXIT_OK, EXIT_IO, EXIT_GEOMETRY, EXIT_SOLVER, EXIT_DEPENDENCE = 0, 1, 2, 3, 4


def _sig(x):
    """Round floats (recursively) to 9 significant digits."""
    if isinstance(x, dict):
        return {k: _sig(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_sig(v) for v in x]
    if isinstance(x, np.ndarray):
        return _sig(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.9g}") if np.isfinite(x) else str(x)
    return x


def _fmt(x) -> str:
    return f"{float(x):.9g}"


class Outputs:
    """Artifacts collected in memory and written together at the end of a run."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.files: dict[str, str] = {}

    def json(self, name: str, data: dict):
        payload = {"schema_version": SCHEMA_VERSION, "loophodge_version": __version__}
        payload.update(data)
        self.files[name] = json.dumps(_sig(payload), indent=2, sort_keys=False) + "\n"

    def csv(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in r])
        self.files[name] = buf.getvalue()

    def text(self, name: str, content: str):
        self.files[name] = content

    def commit(self) -> list[str]:
        self.directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name, content in self.files.items():
            path = self.directory / name
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(content)
            os.replace(tmp, path)
            written.append(str(path))
        return written


# -- shared steps ---------------------------------------------------------------

def _load(args):
    from .mesh import load_control_mesh, subdivide

    path = Path(args.mesh)
    if not path.is_file():
        raise FileNotFoundError(f"mesh file not found: {path}")
    mesh = load_control_mesh(path)
    if args.refine:
        mesh = subdivide(mesh, args.refine)
    return mesh


def _surface(mesh):
    from .subdivision import LimitSurface

    try:
        return LimitSurface(mesh)
    except ValueError as exc:  # two extraordinary corners on one patch
        raise GeometryError(f"{exc} (use --refine 1 or more)") from exc


def _context(args, surface):
    from .helmholtz import HelmholtzContext

    return HelmholtzContext(surface, args.quad_order, args.seed)


def _dump_gram(args, ctx, out: Outputs):
    if getattr(args, "dump_gram", None):
        from scipy.io import mmwrite

        buf = io.BytesIO()
        mmwrite(buf, ctx.gram.matrix.tocoo(), comment="stiffness Gram gamma", precision=17)
        out.text(args.dump_gram, buf.getvalue().decode())


def _mesh_stats(mesh, surface) -> dict:
    from .mesh import genus

    top = surface.topology
    val, cnt = np.unique(top.valence, return_counts=True)
    return {
        "vertices": mesh.n_vertices,
        "faces": mesh.n_faces,
        "edges": int(top.n_edges),
        "genus": genus(top),
        "euler_characteristic": top.euler_characteristic,
        "valence_histogram": {str(int(v)): int(c) for v, c in zip(val, cnt)},
        "irregular_patches": surface.n_irregular,
    }


# -- subcommands ----------------------------------------------------------------

def cmd_info(args, out: Outputs):
    from .subdivision import integrated_curvatures, max_mean_curvature, surface_area

    mesh = _load(args)
    surf = _surface(mesh)
    abs_h, gauss = integrated_curvatures(surf, args.quad_order or 6)
    data = {"command": "info", "mesh": str(args.mesh), "refine": args.refine}
    data.update(_mesh_stats(mesh, surf))
    data.update({
        "area": surface_area(surf, args.quad_order or 6),
        "sigma": max_mean_curvature(surf, 6),
        "integrated_abs_mean_curvature": abs_h,
        "gauss_bonnet": gauss,
        "gauss_bonnet_expected": 2 * np.pi * data["euler_characteristic"],
    })
    out.json("info.json", data)


def cmd_refine(args, out: Outputs):
    from .mesh import build_topology, save_off

    if args.refine < 1:
        raise ValueError("refine needs --refine >= 1")
    mesh = _load(args)
    top = build_topology(mesh)
    name = args.output or f"{Path(args.mesh).stem}_r{args.refine}.off"
    buf = io.StringIO()
    save_off(mesh, buf)
    out.text(name, buf.getvalue())
    out.json("refine.json", {"command": "refine", "mesh": str(args.mesh), "refine": args.refine,
                             "output": name, "vertices": mesh.n_vertices, "faces": mesh.n_faces,
                             "edges": int(top.n_edges)})


def cmd_decompose(args, out: Outputs):
    from .helmholtz import analytic_test_field, component_norms, decompose

    mesh = _load(args)
    surf = _surface(mesh)
    ctx = _context(args, surf)
    tags = FIELDS if args.field == "all" else (args.field,)
    table = np.zeros((4, len(tags)))
    for j, tag in enumerate(tags):
        c = decompose(analytic_test_field(tag), ctx.basis, ctx.gram, ctx.harmonics, tol=args.gram_tol)
        table[:, j] = component_norms(c, ctx.basis, ctx.harmonics)
    rows = [[f"J{k + 1}"] + list(table[k]) for k in range(4)]
    out.csv("decompose.csv", ["component", *tags], rows)
    data = {"command": "decompose", "mesh": str(args.mesh), "refine": args.refine, "seed": ctx.seed,
            "quad_order": ctx.basis.quad_order, "gram_tol": args.gram_tol, "fields": list(tags),
            "norms": {tag: dict(zip(("J1", "J2", "J3", "J4"), table[:, j])) for j, tag in enumerate(tags)}}
    data.update(_mesh_stats(mesh, surf))
    out.json("decompose.json", data)
    _dump_gram(args, ctx, out)


def cmd_harmonic(args, out: Outputs):
    mesh = _load(args)
    surf = _surface(mesh)
    ctx = _context(args, surf)
    h = ctx.harmonics
    data = {"command": "harmonic", "mesh": str(args.mesh), "refine": args.refine, "seed": ctx.seed,
            "genus": ctx.genus, "dimension": h.dimension}
    if h.g:
        G = h.gram
        g = h.g
        data.update({
            "legendre_degree": h.fields[0].degree,
            "j3_norms": np.sqrt(np.diag(G)[:g]),
            "j4_norms": np.sqrt(np.diag(G)[g:]),
            "gram_condition_number": h.condition_number,
            "block_condition_numbers": {"G33": float(np.linalg.cond(G[:g, :g])),
                                        "G44": float(np.linalg.cond(G[g:, g:]))},
        })
    else:
        data.update({"j3_norms": [], "j4_norms": [], "gram_condition_number": None})
    out.json("harmonic.json", data)
    _dump_gram(args, ctx, out)


def _solve(args):
    from .bie import Excitation, FORMULATIONS, ScatteringConfig, ScatteringProblem, cut_directions, rcs_dbsm, wavenumber

    if args.formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {args.formulation}")
    if (args.freq is None) == (args.wavelength is None):
        raise ValueError("give exactly one of --freq or --wavelength")
    kappa = wavenumber(args.freq) if args.freq is not None else 2 * np.pi / args.wavelength
    mesh = _load(args)
    surf = _surface(mesh)
    cfg = ScatteringConfig(cutoff=args.cutoff, tol=args.tol, gram_tol=args.gram_tol, seed=args.seed,
                           gram_order=args.quad_order, restart=args.restart, max_iter=args.max_iter)
    t0 = time.perf_counter()
    prob = ScatteringProblem(surf, kappa, cfg)
    exc = Excitation(kappa, direction=args.direction, polarization=args.polarization)
    t1 = time.perf_counter()
    sol = prob.solve(exc, args.formulation)
    t2 = time.perf_counter()
    theta = np.arange(0.0, 180.0 + 0.5 * args.theta_step, args.theta_step)
    sigma = rcs_dbsm(sol.far_field(cut_directions(theta, args.phi)))
    report = {
        "command": args.command, "mesh": str(args.mesh), "refine": args.refine, "seed": prob.context.seed,
        "formulation": args.formulation, "frequency_hz": args.freq, "wavelength": prob.wavelength,
        "kappa": kappa, "sigma": prob.sigma, "kappa_prime": [prob.kappa_p.real, prob.kappa_p.imag],
        "cutoff_wavelengths": args.cutoff, "tol": args.tol, "gram_tol": args.gram_tol,
        "restart": args.restart, "max_iter": args.max_iter,
        "unknowns": {"total": prob.n_unknowns if args.formulation == "cccfier" else 2 * prob.space.nv,
                     "J1": prob.space.nv, "J2": prob.space.nv,
                     "J3": prob.space.g if args.formulation == "cccfier" else 0,
                     "J4": prob.space.g if args.formulation == "cccfier" else 0},
        "iterations": sol.iterations, "residual": sol.residual,
        "wall_time": {"assembly": t1 - t0, "solve": t2 - t1},
        "excitation": {"direction": list(exc.direction), "polarization": list(exc.polarization)},
        "cut_phi_deg": args.phi,
    }
    report.update(_mesh_stats(mesh, surf))
    return prob, report, theta, sigma


def cmd_solve(args, out: Outputs):
    prob, report, theta, sigma = _solve(args)
    out.csv("rcs.csv", ["theta_deg", "sigma_dbsm"], zip(theta, sigma))
    out.json("solve.json", report)
    _dump_gram(args, prob.context, out)


def cmd_rcs(args, out: Outputs):
    _, _, theta, sigma = _solve(args)
    out.csv("rcs.csv", ["theta_deg", "sigma_dbsm"], zip(theta, sigma))


# -- argument parsing -------------------------------------------------------------

def _vector(text):
    v = [float(t) for t in text.split(",")]
    if len(v) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(v)


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loophodge", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, refine_default=1):
        sp.add_argument("--mesh", required=True, help="control mesh (.off or .obj)")
        sp.add_argument("--refine", type=int, default=refine_default,
                        help="Loop subdivision steps applied before use (default %(default)s)")
        sp.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")

    def ctx(sp):
        sp.add_argument("--seed", type=int, default=None, help="random-field seed for the harmonic basis")
        sp.add_argument("--quad-order", type=int, default=None, help="Gram quadrature order")
        sp.add_argument("--gram-tol", type=_positive, default=1e-11)
        sp.add_argument("--dump-gram", default=None, metavar="NAME",
                        help="also write the stiffness Gram in Matrix Market format")

    sp = sub.add_parser("info", help="mesh and limit-surface statistics")
    common(sp)
    sp.add_argument("--quad-order", type=int, default=None)
    sp.set_defaults(func=cmd_info)

    sp = sub.add_parser("refine", help="write the Loop-refined control mesh as OFF")
    common(sp)
    sp.add_argument("--output", default=None, help="file name inside the output directory")
    sp.set_defaults(func=cmd_refine)

    sp = sub.add_parser("decompose", help="Helmholtz decomposition of the analytic test fields")
    common(sp)
    ctx(sp)
    sp.add_argument("--field", choices=FIELDS + ("all",), default="all")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("harmonic", help="harmonic basis diagnostics")
    common(sp)
    ctx(sp)
    sp.set_defaults(func=cmd_harmonic)

    for name, func, hlp in (("solve", cmd_solve, "scattering solve: JSON report and RCS cut"),
                            ("rcs", cmd_rcs, "scattering solve writing only the RCS cut")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        ctx(sp)
        sp.add_argument("--freq", type=_positive, default=None, help="frequency in Hz")
        sp.add_argument("--wavelength", type=_positive, default=None, help="wavelength in m")
        sp.add_argument("--formulation", choices=("cccfier", "cccfier-no-gl"), default="cccfier")
        sp.add_argument("--cutoff", type=_positive, default=1.25, help="Calderon cutoff in wavelengths")
        sp.add_argument("--tol", type=_positive, default=1e-7, help="GMRES relative tolerance")
        sp.add_argument("--restart", type=int, default=200, help="GMRES restart length")
        sp.add_argument("--max-iter", type=int, default=1000, help="GMRES iteration limit")
        sp.add_argument("--direction", type=_vector, default=(0.0, 0.0, -1.0))
        sp.add_argument("--polarization", type=_vector, default=(1.0, 0.0, 0.0))
        sp.add_argument("--phi", type=float, default=0.0, help="cut plane angle in degrees")
        sp.add_argument("--theta-step", type=_positive, default=1.0)
        sp.set_defaults(func=func)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.refine < 0:
        parser.error("--refine must be >= 0")
    out = Outputs(Path(args.out or os.environ.get(OUTPUT_ENV) or "."))
    try:
        args.func(args, out)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except LinearDependenceError as exc:
        print(f"linear dependence: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCE
    except ValueError as exc:  # invalid inputs that survive argument parsing
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    for path in out.commit():
        print(path)
    return EXIT_OK


def main():  # pragma: no cover - console entry point
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
