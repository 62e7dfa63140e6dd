"""Command line interface.

One model file describes one chart.  Atlases with several charts are not
supported: run each chart separately and combine results yourself.

Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import catalog
from .charclasses import CharNumbers, Z2RingPresentation, existence_criterion, theorem2_classes
from .cycles import cycle_from_json
from .dsl import entry_to_model, parse_model
from .errors import EngelError
from .flags import growth_vector, is_engel_at, nilpotentization_at
from .framebuilder import canonical_flag_at, frames_on_grid, parallelization_frame_at
from .loci import (SIGMA1, SIGMA2, cycle_crossings, extract_locus, link_consistency_at,
                   reversal_check, write_csv, write_obj)
from .sections import check_welldefined_delta2, delta1, delta2


class UsageError(Exception):
    pass


def parse_point(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 4:
        raise UsageError(f"a point needs 4 comma-separated coordinates, got {text!r}")
    try:
        return tuple(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read point {text!r}") from None


def parse_path(text):
    return [parse_point(p) for p in text.split(";") if p.strip()]


def _jsonable(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def emit(obj, out):
    out.write(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def load_model(args):
    if getattr(args, "model", None) and getattr(args, "entry", None):
        raise UsageError("give either --model or --entry, not both")
    if getattr(args, "model", None):
        with open(args.model, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = entry_to_model(catalog.get(args.entry or "engel-canonical", args.f))
    m = parse_model(text)
    return m


def _section(model, which):
    which = which.lower()
    if which in ("d1", "delta1"):
        return delta1(model.frame, model.complement)
    if which in ("d2", "delta2"):
        return delta2(model.frame, model.complement)
    raise UsageError(f"--section must be d1 or d2, not {which!r}")


def _config(model, args):
    over = {}
    if getattr(args, "refine_tol", None) is not None:
        over["refine_tol"] = args.refine_tol
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    return model.loci_config(**over)


def _rank_tol(model, args):
    return args.rank_tol if getattr(args, "rank_tol", None) is not None else model.rank_tol


# commands

def cmd_growth(args, out):
    m = load_model(args)
    p = parse_point(args.at)
    mode = "exact" if args.exact else "numeric"
    pt = p if args.exact else tuple(float(v) for v in p)
    g = growth_vector(m.frame, pt, mode=mode, tol=_rank_tol(m, args))
    emit({"point": p, "growth_vector": list(g.dims), "stalled": g.stalled,
          "engel": g.is_engel, "mode": mode}, out)


def cmd_locus(args, out):
    m = load_model(args)
    s = _section(m, args.section)
    ex = extract_locus(s, m.box, grid=args.grid, config=_config(m, args))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(ex.samples, fh)
    else:
        write_csv(ex.samples, out)
    if args.obj:
        with open(args.obj, "w", encoding="utf-8") as fh:
            write_obj(ex.samples, fh)
    if args.out:
        emit({"samples": len(ex.samples), "seeds": ex.seeds, "diverged": ex.diverged,
              "S1": len(ex.of(SIGMA1)), "S2": len(ex.of(SIGMA2)), "out": args.out}, out)


def cmd_reversal(args, out):
    m = load_model(args)
    s = _section(m, args.section)
    rep = reversal_check(s, args.locus, parse_path(args.path), samples=args.samples,
                         config=_config(m, args))
    emit(rep.to_dict(), out)


def cmd_link(args, out):
    m = load_model(args)
    s = _section(m, args.section)
    rep = link_consistency_at(s, [float(v) for v in parse_point(args.at)], args.radius,
                              grid=args.grid, config=_config(m, args), expected=None)
    emit(rep.to_dict(), out)


def cmd_pair(args, out):
    m = load_model(args)
    s = _section(m, args.section)
    with open(args.cycle, encoding="utf-8") as fh:
        cyc = cycle_from_json(json.load(fh))
    crossings = cycle_crossings(s, cyc, grid=args.grid, config=_config(m, args))
    emit({"pairing": sum(c.sign for c in crossings),
          "crossings": [c.to_dict() for c in crossings]}, out)


def cmd_classes(args, out):
    with open(args.ring, encoding="utf-8") as fh:
        ring = Z2RingPresentation.from_json(json.load(fh))
    ws = [ring.element(getattr(args, k)) for k in ("w1D", "w2D", "w1Q", "w2Q")]
    res = theorem2_classes(*ws)
    emit({k: str(v) for k, v in res.items()}, out)


def cmd_exists(args, out):
    ok = existence_criterion(CharNumbers(args.euler, args.signature))
    emit({"euler": args.euler, "signature": args.signature, "exists": ok}, out)


def cmd_frame(args, out):
    m = load_model(args)
    metric = np.array(json.loads(args.metric), dtype=float) if args.metric else None
    if args.grid:
        axes = [np.linspace(lo, hi, args.grid) for lo, hi in m.box]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
        pts = [tuple(Fraction(v).limit_denominator(10 ** 9) for v in p) for p in pts]
        frames = frames_on_grid(m.frame, pts, metric, m.chart_orientation)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                emit({"frames": frames}, fh)
            emit({"frames": len(frames), "out": args.out}, out)
        else:
            emit({"frames": frames}, out)
        return
    if not args.at:
        raise UsageError("frame needs --at or --grid")
    p = parse_point(args.at)
    flag = canonical_flag_at(m.frame, p, m.chart_orientation)
    e = parallelization_frame_at(flag, metric, m.chart_orientation)
    emit({"point": p, "E": [v.tolist() for v in e], "flag": flag.to_dict()}, out)


def cmd_nilpotent(args, out):
    m = load_model(args)
    p = parse_point(args.at)
    emit(nilpotentization_at(m.frame, p, m.chart_orientation).to_dict(), out)


def cmd_welldefined(args, out):
    m = load_model(args)
    rep = check_welldefined_delta2(m.frame, m.complement, trials=args.trials, seed=args.seed or 0,
                                   box=m.box)
    emit(rep.to_dict(), out)


def cmd_engel(args, out):
    m = load_model(args)
    p = parse_point(args.at)
    emit({"point": p, "engel": is_engel_at(m.frame, p)}, out)


def cmd_catalog(args, out):
    if args.name:
        out.write(entry_to_model(catalog.get(args.name, args.f)))
    else:
        emit({"entries": catalog.names()}, out)


# argument parsing

def _add_model(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", help="model file")
    g.add_argument("--entry", help="catalog entry instead of a model file (default engel-canonical)")
    g.add_argument("--f", help="modulus for parametric catalog entries, e.g. 'x4^2'")


def _add_tols(p):
    p.add_argument("--rank-tol", type=float, help="relative numeric rank tolerance")
    p.add_argument("--refine-tol", type=float, help="Newton refinement tolerance")
    p.add_argument("--seed", type=int)


def build_parser():
    ap = argparse.ArgumentParser(prog="engelloci", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("growth", help="growth vector at a point")
    _add_model(p)
    _add_tols(p)
    p.add_argument("--at", required=True)
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("engel", help="is the point an Engel point")
    _add_model(p)
    p.add_argument("--at", required=True)
    p.set_defaults(func=cmd_engel)

    p = sub.add_parser("locus", help="extract the zero set of a section to CSV")
    _add_model(p)
    _add_tols(p)
    p.add_argument("--section", default="d1")
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--out")
    p.add_argument("--obj", help="also write an OBJ point cloud")
    p.set_defaults(func=cmd_locus)

    p = sub.add_parser("reversal", help="co-orientation along a path on a locus")
    _add_model(p)
    _add_tols(p)
    p.add_argument("--locus", required=True, choices=["s1", "s2", "S1", "S2"])
    p.add_argument("--section", default="d2")
    p.add_argument("--path", required=True, help="points separated by ';'")
    p.add_argument("--samples", type=int, default=41)
    p.set_defaults(func=cmd_reversal)

    p = sub.add_parser("link", help="signed points of the locus on a small sphere around C")
    _add_model(p)
    _add_tols(p)
    p.add_argument("--at", required=True)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--section", default="d2")
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("pair", help="signed intersection of a locus with a 2-cycle")
    _add_model(p)
    _add_tols(p)
    p.add_argument("--section", default="d1")
    p.add_argument("--cycle", required=True, help="cycle JSON file")
    p.add_argument("--grid", type=int, default=48)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("classes", help="dual classes of the loci from Stiefel-Whitney classes")
    p.add_argument("--ring", required=True, help="ring presentation JSON")
    for k in ("w1D", "w2D", "w1Q", "w2Q"):
        p.add_argument(f"--{k}", required=True)
    p.set_defaults(func=cmd_classes)

    p = sub.add_parser("exists", help="existence criterion for oriented 2-plane fields")
    p.add_argument("--euler", type=int, required=True)
    p.add_argument("--signature", type=int, required=True)
    p.set_defaults(func=cmd_exists)

    p = sub.add_parser("frame", help="parallelizing frame at Engel points")
    _add_model(p)
    p.add_argument("--at")
    p.add_argument("--grid", type=int, help="export frames on an N^4 grid of the box")
    p.add_argument("--metric", help="constant metric as a JSON 4x4 matrix")
    p.add_argument("--out")
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("nilpotent", help="nilpotentization constants at an Engel point")
    _add_model(p)
    p.add_argument("--at", required=True)
    p.set_defaults(func=cmd_nilpotent)

    p = sub.add_parser("welldefined", help="check extension independence of delta2")
    _add_model(p)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_welldefined)

    p = sub.add_parser("catalog", help="list entries or print one as a model file")
    p.add_argument("name", nargs="?")
    p.add_argument("--f")
    p.set_defaults(func=cmd_catalog)
    return ap


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except UsageError as exc:
        err.write(json.dumps({"error": "UsageError", "message": str(exc)}) + "\n")
        return 2
    except EngelError as exc:
        err.write(json.dumps(_jsonable(exc.to_dict())) + "\n")
        return 1
    except OSError as exc:
        err.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
