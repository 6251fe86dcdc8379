"""``tvsc`` command-line interface.

Subcommands write their outputs to files and print the path of the main
output on stdout, one per line, so they compose with pipes::

    tvsc gen disc | tvsc denoise --lambda 0.1 | tvsc analyze

Every run also writes a manifest JSON next to its main output. Exit codes:
0 success, 1 failed check, 2 bad input, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tio
from .datagen import KINDS, DatumSpec, GeometryOutOfDomain, generate
from .flow import _origin_value, trajectory
from .grid import GridImage
from .levelset import CutProblem, solve_cut
from .radial import RadialProfile, solve_radial_dual
from .rof import NonConvergence, SolverConfig, solve_rof
from .staircase import analyze, extreme_level_bound_check, quantitative_bound_check

log = logging.getLogger("tvsc")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NONCONV = 0, 1, 2, 3


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fmt(x: float) -> str:
    return f"{x:g}".replace("-", "m")


def _jobs(requested: int) -> int:
    cap = os.environ.get("TVSC_THREADS")
    n = max(1, requested)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise InputError(f"TVSC_THREADS must be an integer, got {cap!r}") from exc
    return n


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


def _inputs(args) -> list[Path]:
    paths = list(getattr(args, "input", None) or [])
    if not paths and not sys.stdin.isatty():
        paths = [line.strip() for line in sys.stdin.read().splitlines() if line.strip()]
    if not paths:
        raise InputError("no input file given (pass a path or pipe one in)")
    out = []
    for p in paths:
        p = Path(p)
        if not p.exists():
            raise InputError(f"input file not found: {p}")
        out.append(p)
    return out


def _load(path: Path):
    try:
        return tio.read_datum(path)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _positive(flag):
    def check(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be a number, got {text!r}") from None
        if not (v > 0 and np.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{flag} must be positive, got {text}")
        return v

    return check


def _nonneg(flag):
    def check(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be a number, got {text!r}") from None
        if not (v >= 0 and np.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{flag} must be non-negative, got {text}")
        return v

    return check


def _list(check):
    def parse(text):
        items = [t for t in text.split(",") if t.strip()]
        if not items:
            raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
        return [check(t.strip()) for t in items]

    return parse


def _number(flag):
    def check(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be a number, got {text!r}") from None
        if not np.isfinite(v):
            raise argparse.ArgumentTypeError(f"{flag} must be finite, got {text}")
        return v

    return check


def _count(flag):
    def check(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1, got {text}")
        return v

    return check


# gen ---------------------------------------------------------------------


def cmd_gen(args, ctx):
    if args.spec:
        try:
            spec = DatumSpec.from_dict(json.loads(Path(args.spec).read_text()))
        except (OSError, ValueError, TypeError) as exc:
            raise InputError(f"cannot read spec {args.spec}: {exc}") from exc
        ctx["inputs"].append(args.spec)
    else:
        if not args.kind:
            raise InputError("gen needs a datum kind or --spec")
        try:
            params = json.loads(args.params) if args.params else {}
        except json.JSONDecodeError as exc:
            raise InputError(f"--params is not valid JSON: {exc}") from exc
        try:
            spec = DatumSpec(
                args.kind,
                n=args.n,
                extent=args.extent,
                radial=args.radial or args.kind == "radial_profile",
                dim=args.dim,
                seed=args.seed,
                sigma=args.sigma,
                params=params,
            )
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    try:
        datum = generate(spec)
    except GeometryOutOfDomain as exc:
        raise InputError(f"geometry out of domain: {exc}") from exc
    ctx["config"]["spec"] = json.loads(spec.to_json())
    suffix = ".pgm" if args.format == "pgm" and not spec.radial else ".csv"
    name = args.output or Path(args.outdir) / f"{spec.kind}{'_radial' if spec.radial else ''}{suffix}"
    path = tio.write_datum(name, datum)
    return [path], EXIT_OK


# denoise -----------------------------------------------------------------


def _denoise_one(task):
    path, lam, opts = task
    datum = tio.read_datum(path)
    prefix = Path(opts["outdir"]) / f"{Path(path).stem}_lam{_fmt(lam)}"
    status = EXIT_OK
    meta = {"kind": "solve_result", "input": str(path), "lambda": lam, "tv": opts["tv"]}
    if isinstance(datum, RadialProfile):
        try:
            sol = solve_radial_dual(datum, lam, tol=opts["radial_tol"], max_iters=opts["max_iters"])
        except NonConvergence as exc:
            sol, status = exc.result, EXIT_NONCONV
        u_path = tio.write_radial(f"{prefix}_u.csv", sol.u)
        z_path = Path(f"{prefix}_z.csv")
        np.savetxt(z_path, np.column_stack([datum.faces, sol.z.values]), delimiter=",", fmt="%.17g", header="r,z")
        meta.update(u=str(u_path), z=[str(z_path)], kkt_residual=sol.kkt, iters=sol.iters, converged=status == EXIT_OK)
    else:
        cfg = SolverConfig(lam, max_iters=opts["max_iters"], tol=opts["tol"], tv_kind="anisotropic" if opts["tv"] == "aniso" else "isotropic")
        try:
            res = solve_rof(datum, cfg)
        except NonConvergence as exc:
            res, status = exc.result, EXIT_NONCONV
        u_path = tio.write_grid(f"{prefix}_u.csv", res.u)
        zx = tio.write_grid(f"{prefix}_zx.csv", datum.like(res.z.x), sidecar=False)
        zy = tio.write_grid(f"{prefix}_zy.csv", datum.like(res.z.y), sidecar=False)
        meta.update(
            u=str(u_path),
            z=[str(zx), str(zy)],
            energy=res.energy,
            el_residual=res.el_residual,
            gap=res.gap,
            iters=res.iters,
            converged=res.converged,
        )
    out = Path(f"{prefix}.json")
    out.write_text(json.dumps(meta, indent=2))
    return str(out), status, [str(p) for p in [meta["u"], *meta["z"]]]


def cmd_denoise(args, ctx):
    paths = _inputs(args)
    for p in paths:
        _load(p)
        ctx["inputs"].append(p)
    opts = {"tv": args.tv, "tol": args.tol, "radial_tol": args.radial_tol, "max_iters": args.max_iters, "outdir": args.outdir}
    tasks = [(str(p), lam, opts) for p in paths for lam in args.lam]
    results = _map(_denoise_one, tasks, _jobs(args.jobs))
    ctx["extra_outputs"] += [q for r in results for q in r[2]]
    status = max(r[1] for r in results)
    return [r[0] for r in results], status


# levelset ----------------------------------------------------------------


def _levelset_one(task):
    path, lam, t, outdir = task
    g = tio.read_datum(path)
    sol = solve_cut(CutProblem(g, lam, t))
    prefix = Path(outdir) / f"{Path(path).stem}_lam{_fmt(lam)}_t{_fmt(t)}"
    lo = tio.write_levelset(f"{prefix}_min.pgm", sol.minimal)
    hi = tio.write_levelset(f"{prefix}_max.pgm", sol.maximal)
    return {"lambda": lam, "level": t, "energy": sol.energy, "unique": sol.unique, "minimal": str(lo), "maximal": str(hi)}


def cmd_levelset(args, ctx):
    paths = _inputs(args)
    tasks = []
    for p in paths:
        if not isinstance(_load(p), GridImage):
            raise InputError(f"{p}: level-set problems need a grid image")
        ctx["inputs"].append(p)
        tasks += [(str(p), lam, t, args.outdir) for lam in args.lam for t in args.t]
    cuts = _map(_levelset_one, tasks, _jobs(args.jobs))
    outs = []
    for p in paths:
        rows = [c for c, task in zip(cuts, tasks) if task[0] == str(p)]
        out = Path(args.outdir) / f"{p.stem}_levelsets.json"
        out.write_text(json.dumps({"kind": "levelsets", "input": str(p), "cuts": rows}, indent=2))
        ctx["extra_outputs"] += [r[k] for r in rows for k in ("minimal", "maximal")]
        outs.append(out)
    return outs, EXIT_OK


# flow --------------------------------------------------------------------


def cmd_flow(args, ctx):
    paths = _inputs(args)
    outs, status = [], EXIT_OK
    times = sorted(set([0.0] + list(args.t)))
    for p in paths:
        g = _load(p)
        ctx["inputs"].append(p)
        try:
            traj = trajectory(g, times, n=args.substeps, tol=args.tol)
        except NonConvergence as exc:
            log.error("flow: %s", exc)
            return outs, EXIT_NONCONV
        d = Path(args.outdir) / f"{p.stem}_flow"
        d.mkdir(parents=True, exist_ok=True)
        states = []
        for k, s in enumerate(traj.states):
            states.append(str(tio.write_datum(d / f"state_{k:03d}.csv", s)))
        manifest = {
            "kind": "flow",
            "input": str(p),
            "substeps": args.substeps,
            "times": traj.times,
            "defects": traj.defects,
            "origin_trace": [_origin_value(s) for s in traj.states],
            "origin_convention": "mean of the pixels whose closure contains (0, 0)" if isinstance(g, GridImage) else "innermost cell",
            "states": states,
        }
        out = d / "manifest.json"
        out.write_text(json.dumps(manifest, indent=2))
        ctx["extra_outputs"] += states
        outs.append(out)
    return outs, status


# analyze -----------------------------------------------------------------


def report_json(rep, g) -> dict:
    labels = rep.labels
    zones = []
    for k, z in enumerate(rep.flat_zones, start=1):
        zones.append({"value": z.value, "area": z.area, "cells": z.cells, "rle": tio.rle_encode(labels == k)})
    jumps = {"count": len(rep.jumps), "jump_tol": rep.jumps.jump_tol, "magnitudes": rep.jumps.magnitudes.tolist()}
    if rep.jumps.radii is not None:
        jumps["radii"] = rep.jumps.radii.tolist()
    else:
        jumps["edges"] = rep.jumps.edges.tolist()
    return {
        "kind": "staircase_report",
        "lambda": rep.lam,
        "dim": rep.dim,
        "shape": list(np.shape(g.values)),
        "cell_size": rep.cell_size,
        "flat_tol": rep.flat_tol,
        "flat_area": rep.flat_area,
        "m_g": rep.m_g,
        "m_u": rep.m_u,
        "min_g": rep.min_g,
        "min_u": rep.min_u,
        "bound_value": rep.bound_value,
        "top_area": rep.top_area,
        "bottom_area": rep.bottom_area,
        "flat_zones": zones,
        "jumps": jumps,
        "checks": {k: bool(v) for k, v in rep.checks.items()},
    }


def cmd_analyze(args, ctx):
    paths = _inputs(args)
    outs, status = [], EXIT_OK
    for p in paths:
        ctx["inputs"].append(p)
        if p.suffix == ".json":
            try:
                meta = json.loads(p.read_text())
                g = _load(Path(meta["input"]))
                u = _load(Path(meta["u"]))
                lams = [float(meta["lambda"])]
            except (KeyError, json.JSONDecodeError) as exc:
                raise InputError(f"{p}: not a denoise result ({exc})") from exc
            ctx["inputs"] += [meta["input"], meta["u"]]
            pairs = [(lams[0], u)]
        else:
            if not args.lam:
                raise InputError("analyze needs --lambda when given a datum")
            g = _load(p)
            pairs = []
            for lam in args.lam:
                if isinstance(g, RadialProfile):
                    u = solve_radial_dual(g, lam, tol=args.radial_tol).u
                else:
                    try:
                        u = solve_rof(g, SolverConfig(lam, tol=args.tol, max_iters=args.max_iters)).u
                    except NonConvergence as exc:
                        u, status = exc.result.u, EXIT_NONCONV
                pairs.append((lam, u))
        for lam, u in pairs:
            rep = analyze(g, u, lam, flat_tol=args.flat_tol, jump_tol=args.jump_tol)
            rep.checks["quantitative_bound"] = quantitative_bound_check(rep)
            rep.checks["extreme_level_bound"] = extreme_level_bound_check(rep)
            data = report_json(rep, g)
            data["input"] = str(p)
            stem = p.stem if p.suffix == ".json" else f"{p.stem}_lam{_fmt(lam)}"
            out = Path(args.outdir) / f"{stem}_report.json"
            out.write_text(json.dumps(data, indent=2))
            outs.append(out)
            if not rep.ok and status == EXIT_OK:
                status = EXIT_CHECK
            log.info("%s: %d flat zones, %d jumps", out, len(rep.flat_zones), len(rep.jumps))
    return outs, status


# verify ------------------------------------------------------------------


def cmd_verify(args, ctx):
    from .suites import SUITES, run_suite

    if args.list or not args.suite:
        for name, (num, fn) in SUITES.items():
            print(f"{name:24s} criterion {num}: {(fn.__doc__ or '').strip().splitlines()[0] if fn.__doc__ else ''}", file=sys.stderr)
        return [], EXIT_OK if args.list else EXIT_INPUT
    if args.suite not in SUITES:
        raise InputError(f"unknown suite {args.suite!r}; available: {', '.join(SUITES)}")
    res = run_suite(args.suite)
    print(res.summary(), file=sys.stderr)
    out = Path(args.outdir) / f"verify-{args.suite}.json"
    out.write_text(
        json.dumps(
            {
                "kind": "verify",
                "suite": res.name,
                "passed": res.passed,
                "seconds": res.seconds,
                "checks": [{"name": c.name, "value": c.value, "relation": c.relation, "threshold": c.threshold, "passed": c.passed} for c in res.checks],
                "info": res.info,
            },
            indent=2,
            default=float,
        )
    )
    return [out], EXIT_OK if res.passed else EXIT_CHECK


# parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvsc", description="Total-variation denoising, level sets and staircasing diagnostics.")
    p.add_argument("--version", action="version", version=f"tvsc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--outdir", default=".", help="directory for outputs (default: current directory)")
    p.add_argument("--jobs", type=_count("--jobs"), default=1, help="parallel workers for parameter sweeps (capped by TVSC_THREADS)")
    p.add_argument("--manifest", help="path of the run manifest (default: next to the first output)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        # accept the global options after the subcommand too
        sp.add_argument("--outdir", default=argparse.SUPPRESS)
        sp.add_argument("--jobs", type=_count("--jobs"), default=argparse.SUPPRESS)
        sp.add_argument("--manifest", default=argparse.SUPPRESS)
        sp.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    g = sub.add_parser("gen", help="generate a datum")
    g.add_argument("kind", nargs="?", choices=KINDS)
    g.add_argument("--spec", help="JSON file with a full datum spec")
    g.add_argument("--n", type=_count("--n"), default=256, help="pixels per side or radial cells (default 256)")
    g.add_argument("--extent", type=_positive("--extent"), default=2.0, help="half-width of the square domain, or R (default 2)")
    g.add_argument("--radial", action="store_true", help="generate a radial profile")
    g.add_argument("--dim", type=_count("--dim"), default=2, help="space dimension for radial profiles")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sigma", type=_nonneg("--sigma"), default=0.0, help="additive Gaussian noise level")
    g.add_argument("--params", help="kind-specific parameters as JSON")
    g.add_argument("--format", choices=("csv", "pgm"), default="csv")
    g.add_argument("-o", "--output")
    common(g)
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("denoise", help="solve the ROF problem")
    d.add_argument("input", nargs="*")
    d.add_argument("--lambda", dest="lam", type=_list(_positive("--lambda")), required=True, help="weight(s), comma-separated")
    d.add_argument("--tv", choices=("iso", "aniso"), default="iso")
    d.add_argument("--tol", type=_positive("--tol"), default=1e-5, help="grid solver tolerance (default 1e-5)")
    d.add_argument("--radial-tol", type=_positive("--radial-tol"), default=1e-10, help="radial KKT tolerance (default 1e-10)")
    d.add_argument("--max-iters", type=_count("--max-iters"), default=20000)
    common(d)
    d.set_defaults(func=cmd_denoise)

    ls_ = sub.add_parser("levelset", help="exact minimal/maximal level-set problems")
    ls_.add_argument("input", nargs="*")
    ls_.add_argument("--lambda", dest="lam", type=_list(_positive("--lambda")), required=True, help="weight(s), comma-separated")
    ls_.add_argument("--t", type=_list(_number("--t")), required=True, help="level(s), comma-separated")
    common(ls_)
    ls_.set_defaults(func=cmd_levelset)

    f = sub.add_parser("flow", help="TV flow by iterated resolvents")
    f.add_argument("input", nargs="*")
    f.add_argument("--t", type=_list(_nonneg("--t")), required=True, help="output time(s), comma-separated")
    f.add_argument("--substeps", type=_count("--substeps"), default=8, help="resolvent steps per interval (default 8)")
    f.add_argument("--tol", type=_positive("--tol"), default=1e-5)
    common(f)
    f.set_defaults(func=cmd_flow)

    a = sub.add_parser("analyze", help="staircasing report")
    a.add_argument("input", nargs="*")
    a.add_argument("--lambda", dest="lam", type=_list(_positive("--lambda")), help="weight(s), comma-separated")
    a.add_argument("--flat-tol", type=_positive("--flat-tol"), help="default 1e-4 * osc(g) / h")
    a.add_argument("--jump-tol", type=_positive("--jump-tol"), help="default 0.05 * osc(g)")
    a.add_argument("--tol", type=_positive("--tol"), default=1e-6)
    a.add_argument("--radial-tol", type=_positive("--radial-tol"), default=1e-10)
    a.add_argument("--max-iters", type=_count("--max-iters"), default=50000)
    common(a)
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="run a named acceptance suite")
    v.add_argument("suite", nargs="?")
    v.add_argument("--list", action="store_true", help="list suites")
    common(v)
    v.set_defaults(func=cmd_verify)
    return p


def _config(args) -> dict:
    skip = {"func", "input"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cap = os.environ.get("TVSC_THREADS")
    if cap and cap.isdigit():
        import numba

        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))
    Path(args.outdir).mkdir(parents=True, exist_ok=True)
    ctx = {"inputs": [], "extra_outputs": [], "config": _config(args)}
    t0 = time.perf_counter()
    try:
        outputs, status = args.func(args, ctx)
    except InputError as exc:
        print(f"tvsc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonConvergence as exc:
        print(f"tvsc {args.command}: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    wall = time.perf_counter() - t0
    outputs = [str(o) for o in outputs]
    for o in outputs:
        print(o)
    manifest = {
        "tool": "tvsc",
        "version": __version__,
        "command": args.command,
        "argv": argv,
        "config": ctx["config"],
        "inputs": {str(p): _sha256(p) for p in dict.fromkeys(map(str, ctx["inputs"]))},
        "outputs": outputs + ctx["extra_outputs"],
        "wall_time": wall,
        "exit_code": status,
    }
    if args.manifest:
        mpath = Path(args.manifest)
    elif outputs:
        mpath = Path(outputs[0]).with_suffix(".manifest.json")
    else:
        mpath = Path(args.outdir) / f"tvsc-{args.command}.manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, default=str))
    if status == EXIT_NONCONV:
        print(f"tvsc {args.command}: solver did not converge; last iterates written", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
