"""Command-line interface.

Complex values are given as ``re,im``.  Exit status: 0 on success, 1 on an
operational error, 2 when ``verify`` finds a failing suite.  Every output
file is accompanied by ``<file>.meta.json`` holding the resolved
configuration; JSON outputs embed it under ``"config"``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .centres import centre_solve, postcritical_cloud, simple_centre_verify
from .cifs import dual_julia
from .correspondence import CorrParams
from .errors import CorrdynError
from .escape import (
    DEFAULT_LAMBDA,
    DEFAULT_MARGIN,
    RASTER_DEPTH_CAP,
    EscapeConfig,
    escaping_radius,
    raster_dynamical,
    raster_parameter,
)
from .julia import hausdorff_distance, inverse_iteration, leo_cover, repelling_cycle, trace_cycle_motion


def parse_complex(text: str) -> complex:
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None


def parse_word(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated root indices, got {text!r}") from None


def parse_bounds(text: str) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("bounds are re_min,re_max,im_min,im_max")
    return vals


def _cx(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        if isinstance(v, complex):
            v = _cx(v)
        elif isinstance(v, Path):
            v = str(v)
        out[k] = v
    return out


def _emit(obj: dict, args) -> None:
    obj = {"config": _config(args), **obj}
    text = json.dumps(obj, sort_keys=True, indent=2)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _params(args) -> CorrParams:
    return CorrParams(args.p, args.q, args.c)


def cmd_radius(args) -> int:
    R = escaping_radius(_params(args), args.lam, args.margin)
    if args.out:
        _emit({"radius": R}, args)
    else:
        print(format(R, ".17g"))
    return 0


def _escape_cfg(args) -> EscapeConfig:
    return EscapeConfig(lam=args.lam, depth_cap=args.cap, radius_margin=args.margin)


def cmd_kset(args) -> int:
    P = _params(args)
    bounds = args.bounds
    if bounds is None:
        R = escaping_radius(P, args.lam, args.margin)
        bounds = (-R, R, -R, R)
    raster = raster_dynamical(P, _escape_cfg(args), bounds, args.width, args.height)
    io.save_raster(raster, args.out, _config(args))
    return 0


def cmd_pset(args) -> int:
    raster = raster_parameter((args.p, args.q), _escape_cfg(args), args.bounds, args.width, args.height)
    io.save_raster(raster, args.out, _config(args))
    return 0


def cmd_julia(args) -> int:
    cloud = inverse_iteration(_params(args), args.start, args.burn_in, args.points, args.seed,
                              args.walkers)
    io.save_cloud(cloud, args.out, _config(args))
    return 0


def cmd_dual(args) -> int:
    P = _params(args)
    cloud = dual_julia(args.centre, P, args.tol)
    io.save_cloud(cloud, args.out, _config(args))
    return 0


def cmd_centre(args) -> int:
    if args.action == "solve":
        c = centre_solve(args.p, args.q, args.word, args.guess)
        rec = simple_centre_verify(CorrParams(args.p, args.q, c), len(args.word), args.escape_depth)
    else:
        rec = simple_centre_verify(_params(args), args.n, args.escape_depth)
    _emit(rec.to_dict(), args)
    return 0


def cmd_postcrit(args) -> int:
    cloud = postcritical_cloud(_params(args), args.depth)
    io.save_cloud(cloud, args.out, _config(args))
    io.write_json({"escaping": cloud.escaping.astype(int).tolist()},
                  Path(args.out).with_name(Path(args.out).name + ".escaping.json"))
    return 0


def cmd_cycles(args) -> int:
    P = _params(args)
    rec = repelling_cycle(P, args.word, args.start)
    if args.action == "solve":
        _emit(rec.to_dict(), args)
        return 0
    path = [P.c + (args.to - P.c) * k / args.steps for k in range(args.steps + 1)]
    trace = trace_cycle_motion(P, rec, args.word, path)
    _emit({"trace": [r.to_dict() for r in trace.cycles]}, args)
    return 0


def cmd_leo(args) -> int:
    cloud = io.load_cloud(args.cloud)
    n = leo_cover(_params(args), cloud, args.center, args.radius, args.eps, args.n_max)
    _emit({"n": n}, args)
    return 0


def cmd_hausdorff(args) -> int:
    d = hausdorff_distance(io.load_cloud(args.a), io.load_cloud(args.b))
    if args.out:
        _emit({"distance": d}, args)
    else:
        print(format(d, ".17g"))
    return 0


def cmd_verify(args) -> int:
    from .verify import run_suites

    out = Path(args.out_dir) if args.out_dir else None
    results = run_suites(args.suite, out)
    for r in results:
        print(r.line(), file=sys.stderr)
    print(json.dumps({"suites": [r.to_dict() for r in results]}, sort_keys=True, indent=2))
    return 0 if all(r.passed for r in results) else 2


def _add_params(sp, c_required=True):
    sp.add_argument("--p", type=int, required=True, help="numerator exponent p")
    sp.add_argument("--q", type=int, required=True, help="denominator exponent q")
    if c_required:
        sp.add_argument("--c", type=parse_complex, default=0j, help="parameter c as re,im (default 0,0)")


def _add_escape(sp, cap):
    sp.add_argument("--lam", type=float, default=DEFAULT_LAMBDA, help="growth factor (default 1.1)")
    sp.add_argument("--margin", type=float, default=DEFAULT_MARGIN,
                    help="margin added above the root (default 1e-6)")
    sp.add_argument("--cap", type=int, default=cap, help=f"depth cap (default {cap})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corrdyn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("radius", help="escaping radius")
    _add_params(sp)
    sp.add_argument("--lam", type=float, default=DEFAULT_LAMBDA, help="growth factor (default 1.1)")
    sp.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="margin (default 1e-6)")
    sp.add_argument("-o", "--out", help="write JSON here instead of printing the value")
    sp.set_defaults(func=cmd_radius)

    sp = sub.add_parser("kset", help="dynamical-plane escape raster (PGM)")
    _add_params(sp)
    _add_escape(sp, RASTER_DEPTH_CAP)
    sp.add_argument("--bounds", type=parse_bounds, default=None,
                    help="re_min,re_max,im_min,im_max (default: the square around B_R)")
    sp.add_argument("--width", type=int, default=512, help="pixels (default 512)")
    sp.add_argument("--height", type=int, default=512, help="pixels (default 512)")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_kset)

    sp = sub.add_parser("pset", help="parameter-plane raster of the critical orbit (PGM)")
    _add_params(sp, c_required=False)
    _add_escape(sp, RASTER_DEPTH_CAP)
    sp.add_argument("--bounds", type=parse_bounds, default=(-2.5, 2.5, -2.5, 2.5),
                    help="re_min,re_max,im_min,im_max (default -2.5,2.5,-2.5,2.5)")
    sp.add_argument("--width", type=int, default=512, help="pixels (default 512)")
    sp.add_argument("--height", type=int, default=512, help="pixels (default 512)")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_pset)

    sp = sub.add_parser("julia", help="Julia set by inverse iteration (CSV)")
    _add_params(sp)
    sp.add_argument("--points", type=int, default=100_000, help="cloud size (default 100000)")
    sp.add_argument("--burn-in", type=int, default=100, help="discarded steps (default 100)")
    sp.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    sp.add_argument("--walkers", type=int, default=64, help="independent walkers (default 64)")
    sp.add_argument("--start", type=parse_complex, default=None,
                    help="starting point re,im (default: a repelling fixed point)")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_julia)

    sp = sub.add_parser("dual", help="dual Julia set (CSV)")
    _add_params(sp)
    sp.add_argument("--centre", type=parse_complex, required=True, help="nearby simple centre re,im")
    sp.add_argument("--tol", type=float, default=1e-6, help="limit-set accuracy (default 1e-6)")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_dual)

    sp = sub.add_parser("centre", help="solve for or verify a centre (JSON)")
    sp.add_argument("action", choices=["solve", "verify"])
    _add_params(sp)
    sp.add_argument("--word", type=parse_word, default=None, help="root indices, e.g. 0,0 (solve)")
    sp.add_argument("--guess", type=parse_complex, default=None, help="initial c as re,im (solve)")
    sp.add_argument("--n", type=int, default=None, help="period (verify)")
    sp.add_argument("--escape-depth", type=int, default=12, help="escape steps allowed (default 12)")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_centre)

    sp = sub.add_parser("postcrit", help="truncated post-critical set (CSV)")
    _add_params(sp)
    sp.add_argument("--depth", type=int, default=8, help="levels (default 8)")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_postcrit)

    sp = sub.add_parser("cycles", help="repelling cycles: solve or trace in c (JSON)")
    sp.add_argument("action", choices=["solve", "trace"])
    _add_params(sp)
    sp.add_argument("--word", type=parse_word, required=True, help="root indices, e.g. 0")
    sp.add_argument("--start", type=parse_complex, required=True, help="Newton seed re,im")
    sp.add_argument("--to", type=parse_complex, default=None, help="end parameter re,im (trace)")
    sp.add_argument("--steps", type=int, default=50, help="path steps (trace, default 50)")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_cycles)

    sp = sub.add_parser("leo", help="steps for a disk piece to cover a cloud (JSON)")
    _add_params(sp)
    sp.add_argument("--cloud", required=True, help="CSV cloud")
    sp.add_argument("--center", type=parse_complex, required=True)
    sp.add_argument("--radius", type=float, default=1e-2, help="(default 1e-2)")
    sp.add_argument("--eps", type=float, default=5e-2, help="(default 5e-2)")
    sp.add_argument("--n-max", type=int, default=30, help="(default 30)")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_leo)

    sp = sub.add_parser("hausdorff", help="Hausdorff distance of two CSV clouds")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_hausdorff)

    sp = sub.add_parser("verify", help="run verification suites (JSON summary)")
    sp.add_argument("--suite", action="append", default=None,
                    help="suite number 1..12, 'quadratic' or 'all' (repeatable; default all)")
    sp.add_argument("--out-dir", default=None, help="write suite artifacts here")
    sp.set_defaults(func=cmd_verify)
    return ap


def _validate(ap, args) -> None:
    if args.command == "centre":
        if args.action == "solve" and (not args.word or args.guess is None):
            ap.error("centre solve needs --word and --guess")
        if args.action == "verify" and args.n is None:
            ap.error("centre verify needs --n")
    if args.command == "cycles" and args.action == "trace" and args.to is None:
        ap.error("cycles trace needs --to")
    if args.command == "verify" and args.suite is None:
        args.suite = ["all"]


_COMPLEX_FLAGS = {"--c", "--guess", "--centre", "--center", "--start", "--to", "--bounds"}


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse takes "-1,0" for an option; glue it to its flag as "--c=-1,0"
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _COMPLEX_FLAGS and nxt is not None and nxt.startswith("-") and "," in nxt:
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = ap.parse_args(_join_negative_values(argv))
    _validate(ap, args)
    try:
        return args.func(args)
    except (CorrdynError, ValueError, KeyError, OSError) as exc:
        print(f"corrdyn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
