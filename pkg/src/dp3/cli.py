"""Command line front end: ``dp3 {solve,sweep,signfield,mesh,verify}``.

Exit codes: 0 success, 1 failed verification or no solution found, 2 usage.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger("dp3")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    lam: float = None
    lam_min: float = None
    lam_max: float = None
    steps: int = 9
    tol: float = 1e-10
    resolution: int = 64
    eps_end: float = None
    r_max: float = None
    copies: tuple = (1, 1)
    out: str = None
    fmt: str = None
    conjugate: bool = False
    grid_n: int = 64
    eps: float = 1e-3
    N: float = 40.0
    extra: dict = field(default_factory=dict)


def _copies(text):
    try:
        n1, n2 = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"copies must look like 2x2, got {text!r}")
    if n1 < 1 or n2 < 1:
        raise argparse.ArgumentTypeError("copies must be >= 1x1")
    return n1, n2


def _build_parser():
    p = argparse.ArgumentParser(prog="dp3", description="Doubly periodic minimal surfaces with Scherk ends.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def lam_arg(sp):
        sp.add_argument("--lambda", dest="lam", type=float, required=True)

    def mesh_args(sp):
        sp.add_argument("--resolution", type=int, default=64)
        sp.add_argument("--eps-end", type=float, default=None)
        sp.add_argument("--r-max", type=float, default=None)

    s = sub.add_parser("solve", help="solve the period problem for one lambda")
    lam_arg(s)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out")

    s = sub.add_parser("sweep", help="solve over a lambda grid, CSV output")
    s.add_argument("--lambda-min", dest="lam_min", type=float, default=0.1)
    s.add_argument("--lambda-max", dest="lam_max", type=float, default=0.9)
    s.add_argument("--steps", type=int, default=9)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out")

    s = sub.add_parser("signfield", help="signs of xi1, xi2 over the parameter parallelogram")
    lam_arg(s)
    s.add_argument("--n", dest="grid_n", type=int, default=64)
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--N", type=float, default=40.0)
    s.add_argument("--out")

    s = sub.add_parser("mesh", help="mesh of the assembled surface (or the conjugate piece)")
    lam_arg(s)
    mesh_args(s)
    s.add_argument("--copies", type=_copies, default=(1, 1))
    s.add_argument("--conjugate", action="store_true")
    s.add_argument("--format", dest="fmt", choices=("obj", "ply"))
    s.add_argument("--out", required=True)
    s.add_argument("--tol", type=float, default=1e-10)

    s = sub.add_parser("verify", help="run every check, JSON report")
    lam_arg(s)
    mesh_args(s)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out")
    return p


def _validate(cfg: RunConfig):
    def in_unit(x, name):
        if not 0.0 < x < 1.0:
            raise UsageError(f"{name} must lie in (0, 1), got {x}")

    if cfg.lam is not None:
        in_unit(cfg.lam, "--lambda")
    if cfg.command == "sweep":
        in_unit(cfg.lam_min, "--lambda-min")
        in_unit(cfg.lam_max, "--lambda-max")
        if cfg.lam_min > cfg.lam_max or cfg.steps < 1:
            raise UsageError("need lambda-min <= lambda-max and steps >= 1")
    if cfg.resolution < 8:
        raise UsageError(f"--resolution must be >= 8, got {cfg.resolution}")
    if not cfg.tol > 0:
        raise UsageError("--tol must be positive")
    if cfg.command == "signfield" and cfg.grid_n < 2:
        raise UsageError("--n must be >= 2")


def parse_args(argv=None) -> RunConfig:
    """Parse and validate; bad input prints usage and exits with status 2."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    keys = RunConfig.__dataclass_fields__
    cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k in keys})
    cfg.extra["verbose"] = ns.verbose
    try:
        _validate(cfg)
    except UsageError as exc:
        parser.error(str(exc))
    return cfg


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _workers():
    from ._accel import thread_cap

    cap = thread_cap()
    return cap if cap is not None else (os.cpu_count() or 1)


def _sweep_row(args):
    from .errors import DP3Error
    from .periods import solve_period_problem

    lam, tol = args
    try:
        r = solve_period_problem(lam, tol)
    except DP3Error as exc:
        return lam, None, str(exc)
    c = r.constants
    return lam, (r.params.lam1, r.params.lam2, c.a, c.b, float(r.lattice.v1[0]), float(r.lattice.v2[1])), None


def sweep_lambdas(lam_min, lam_max, steps):
    return np.linspace(lam_min, lam_max, steps) if steps > 1 else np.array([lam_min])


def _build_pieces(cfg, params, conjugate_too=True):
    from .surface import build_domain_grid, integrate_grid_edges, integrate_piece

    grid = build_domain_grid(params, cfg.resolution, cfg.eps_end, cfg.r_max)
    edges = integrate_grid_edges(grid)
    piece = integrate_piece(grid, edges=edges)
    conj = integrate_piece(grid, conjugate=True, edges=edges) if conjugate_too else None
    return grid, piece, conj


def execute(cfg: RunConfig) -> int:
    from .errors import DP3Error, NoSignChange
    from .periods import solve_period_problem

    if cfg.command == "solve":
        try:
            r = solve_period_problem(cfg.lam, cfg.tol)
        except NoSignChange as exc:
            logger.error("%s", exc)
            return EXIT_FAIL
        _emit(r.to_json(), cfg.out)
        return EXIT_OK

    if cfg.command == "sweep":
        lams = sweep_lambdas(cfg.lam_min, cfg.lam_max, cfg.steps)
        jobs = [(float(x), cfg.tol) for x in lams]
        n = min(_workers(), len(jobs))
        if n > 1:
            with ProcessPoolExecutor(max_workers=n) as pool:
                rows = list(pool.map(_sweep_row, jobs))
        else:
            rows = [_sweep_row(j) for j in jobs]
        lines = ["lambda,lambda1,lambda2,a,b,v1x,v2y"]
        status = EXIT_OK
        for lam, vals, err in rows:
            if vals is None:
                logger.error("lambda=%.12g: %s", lam, err)
                status = EXIT_FAIL
                continue
            lines.append(",".join("%.12g" % v for v in (lam,) + vals))
        _emit("\n".join(lines) + "\n", cfg.out)
        return status

    if cfg.command == "signfield":
        from .periods import sign_field

        field_ = sign_field(cfg.lam, n=cfg.grid_n, eps=cfg.eps, N=cfg.N)
        _emit(field_.to_csv(), cfg.out)
        return EXIT_OK

    if cfg.command == "mesh":
        from .meshio import write_mesh
        from .surface import assemble_surface

        try:
            r = solve_period_problem(cfg.lam, cfg.tol)
            _, piece, conj = _build_pieces(cfg, r.params, conjugate_too=cfg.conjugate)
            mesh = conj if cfg.conjugate else assemble_surface(piece, cfg.copies, r.lattice)
        except DP3Error as exc:
            logger.error("%s", exc)
            return EXIT_FAIL
        size = write_mesh(mesh, cfg.out, cfg.fmt)
        logger.info("wrote %d vertices, %d faces (%d bytes) to %s", mesh.n_vertices, mesh.faces.shape[0], size,
                    cfg.out)
        return EXIT_OK

    if cfg.command == "verify":
        from . import verify as V
        from .surface import build_domain_grid, integrate_piece

        try:
            r = solve_period_problem(cfg.lam, cfg.tol)
        except NoSignChange as exc:
            logger.error("%s", exc)
            return EXIT_FAIL
        _, piece, conj = _build_pieces(cfg, r.params)
        coarse = integrate_piece(build_domain_grid(r.params, max(8, cfg.resolution // 2), cfg.eps_end, cfg.r_max))
        rep = V.verify_periods(r)
        rep.extend(V.verify_residues(r.params))
        rep.extend(V.verify_symmetries(piece, conj))
        rep.extend(V.verify_minimality_and_graph(piece, conj, coarse_mesh=coarse, params=r.params))
        _emit(rep.to_json(), cfg.out)
        for c in rep.failures():
            logger.error("check %s failed: measured %r, target %r, tol %g", c.name, c.measured, c.target, c.tol)
        return EXIT_OK if rep.passed else EXIT_FAIL

    raise UsageError(f"unknown command {cfg.command!r}")


def main(argv=None) -> int:
    cfg = parse_args(argv)
    logging.basicConfig(level=logging.INFO if cfg.extra.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
