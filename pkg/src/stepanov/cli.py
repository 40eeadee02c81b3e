"""Command-line front end.

Exit codes: 0 success, 1 a check exceeded its tolerance (or a point could
not be evaluated), 2 invalid manifest or arguments, 3 refusal because a
theorem's preconditions do not hold.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import classify as cl
from . import kahler
from . import report as rp
from . import theorems as th
from . import zoo
from .errors import ManifestError, PreconditionError, StepanovError
from .jets import Manifest, load_manifest
from .pipeline import classify_field, evaluate_field, sample_points, tolerances

EXIT_OK, EXIT_FAIL, EXIT_MANIFEST, EXIT_REFUSED = 0, 1, 2, 3

DIVERGENCE_TOL = {"taylor": 1e-9, "fd": 1e-5}
TRACE_TOL = {"taylor": 1e-10, "fd": 1e-6}


def decade_histogram(values) -> dict[str, int]:
    """Counts per power-of-ten bin, keyed by the bin's upper edge."""
    out: dict[str, int] = {}
    for v in sorted(float(x) for x in values):
        if v <= 0.0:
            key = "0"
        elif not math.isfinite(v):
            key = "inf"
        else:
            key = f"1e{math.floor(math.log10(v)) + 1:+03d}"
        out[key] = out.get(key, 0) + 1
    return out


def _manifest(args) -> Manifest:
    if args.zoo:
        return zoo.zoo_manifest(args.zoo)
    if args.manifest:
        return load_manifest(args.manifest)
    raise ManifestError("give --manifest PATH or --zoo NAME")


def _config(args, **extra) -> dict:
    cfg = {
        "manifest": args.manifest,
        "zoo": args.zoo,
        "points": args.points,
        "seed": args.seed,
        "jets": args.jets,
        "tol": args.tol,
        "fd_tol": args.fd_tol,
        "kahler_tol": args.kahler_tol,
        "format": args.format,
    }
    cfg.update(extra)
    return cfg


def _class_tol(args) -> float:
    if args.jets == "fd":
        return args.fd_tol if args.fd_tol is not None else cl.TAU_FD
    return args.tol if args.tol is not None else cl.TAU_EXACT


def _kahler_tol(args) -> float:
    if args.kahler_tol is not None:
        return args.kahler_tol
    return kahler.TAU_FD if args.jets == "fd" else kahler.TAU_EXACT


def cmd_checks(args) -> tuple[dict, int]:
    m = _manifest(args)
    pts = sample_points(m, args.points, args.seed)
    results = evaluate_field(m, pts, args.jets, _kahler_tol(args))
    failures = rp.error_warnings(results)
    for r in results:
        if not r.ok:
            continue
        if r.kahler is not None and not r.kahler.is_kahler:
            k = r.kahler
            names = ("res_f_square", "res_compat", "res_parallel")
            bad = [f"{n}={getattr(k, n):.3g}" for n in names if getattr(k, n) > k.tol]
            failures.append(f"point {r.index + 1}: Kähler axioms fail ({', '.join(bad)})")
        if not r.divergence <= DIVERGENCE_TOL[args.jets]:
            failures.append(f"point {r.index + 1}: divergence of T is {r.divergence:.3g}")
        if not r.trace_residual <= TRACE_TOL[args.jets]:
            failures.append(f"point {r.index + 1}: trace identity residual {r.trace_residual:.3g}")
    rep = rp.header("checks", _config(args, kahler_tol=_kahler_tol(args)))
    rep["manifest"] = m.name
    rep["points"] = [rp.point_dict(r, classes=False) for r in results]
    rep["thresholds"] = {"divergence_T": DIVERGENCE_TOL[args.jets], "trace_identity": TRACE_TOL[args.jets]}
    rep["failures"] = failures
    rep["warnings"] = []
    rep["passed"] = not failures
    return rep, EXIT_OK if not failures else EXIT_FAIL


def cmd_classify(args) -> tuple[dict, int]:
    m = _manifest(args)
    pts = sample_points(m, args.points, args.seed)
    tol = _class_tol(args)
    fc = classify_field(m, pts, tol, args.jets, _kahler_tol(args))
    rep = rp.header("classify", _config(args))
    rep["manifest"] = m.name
    rep["class_tol"] = tol
    rep["collapse_threshold"] = tolerances(args.jets)["collapse"]
    rep["points"] = [rp.point_dict(r) for r in fc.points]
    rep["aggregates"] = {cid: rp.aggregate_dict(a) for cid, a in fc.aggregates.items()}
    errors = rp.error_warnings(fc.points)
    rep["failures"] = errors
    rep["warnings"] = rp.rank_warnings(fc.points)
    rep["passed"] = not errors
    return rep, EXIT_OK if not errors else EXIT_FAIL


def _verify_config(args) -> dict:
    return {
        "theorem": args.theorem,
        "dim": args.dim,
        "trials": args.trials,
        "seed": args.seed,
        "tol": args.tol,
        "manifest": args.manifest,
        "zoo": args.zoo,
        "points": args.points,
        "jets": args.jets,
        "format": args.format,
    }


def _theorem1(args) -> dict:
    tol = args.tol if args.tol is not None else th.FIT_TOL
    batch = th.verify_theorem1_batch(args.dim, args.trials, args.seed, tol, trace=True)
    eq16 = th.eq16_batch(args.dim, args.trials, args.seed)
    rels = [r.fit.rel_residual for r in batch.results]
    keys = list(batch.results[0].trace) if batch.results else []
    trace_max = {k: max(r.trace[k] for r in batch.results) for k in keys}
    trace_min = {k: min(r.trace[k] for r in batch.results) for k in keys}
    return {
        "conclusion_fit": {
            "passed": batch.passed,
            "failures": batch.failures,
            "tol": tol,
            "max_rel_residual": max(rels, default=0.0),
            "histogram": decade_histogram(rels),
            "rank_deficient": sum(r.fit.rank_deficient for r in batch.results),
            "trials": [
                {
                    "seed": r.seed,
                    "passed": r.passed,
                    "rel_residual": r.fit.rel_residual,
                    "hypothesis_rel_residual": r.hypothesis.rel_residual,
                    "rank": r.fit.rank,
                }
                for r in batch.results
            ],
        },
        "proof_trace": {"max": trace_max, "min": trace_min},
        "vector_substitution": {
            "passed": eq16.passed,
            "failures": eq16.failures,
            "tol": th.EQ16_TOL,
            "max_residual": max((r.residual for r in eq16.results), default=0.0),
            "histogram": decade_histogram([r.residual for r in eq16.results]),
        },
        "notices": batch.notices,
        "passed": batch.passed and eq16.passed,
    }


def _theorem2(args) -> dict:
    m = _manifest(args)
    pts = sample_points(m, args.points, args.seed)
    res = th.verify_theorem2(m, pts, args.tol, args.jets)
    return {
        "manifest": m.name,
        "tol": res.tol,
        "points": [
            {
                "index": p.index + 1,
                "point": p.point,
                "norm_dT": p.norm_dT,
                "norm_dricci": p.norm_dricci,
                "member_O2": p.member_O2,
                "member_O3": p.member_O3,
                "passed": p.passed,
                "message": p.message,
            }
            for p in res.points
        ],
        "non_members_O2": res.non_members_O2,
        "passed": res.passed,
    }


def _theorem3(args) -> dict:
    tol = args.tol if args.tol is not None else th.FIT_TOL
    batch = th.verify_theorem3(args.dim, args.trials, args.seed, tol)
    rels = [r.fit.rel_residual for r in batch.results]
    notices = []
    stats = th.theorem3_statistics(batch)
    if stats["collapsed"]:
        notices.append(
            f"{stats['collapsed']} of {stats['trials']} instances have D = 0: the O4* constraints "
            f"admit only zero vectors there, so the fit holds trivially"
        )
    return {
        "passed": batch.passed,
        "failures": batch.failures,
        "tol": tol,
        "histogram": decade_histogram(rels),
        "statistics": stats,
        "trials": [
            {"seed": r.seed, "passed": r.passed, "rel_residual": r.fit.rel_residual, "rank": r.fit.rank,
             "collapsed": r.fit.collapsed}
            for r in batch.results
        ],
        "notices": notices,
    }


def cmd_verify(args) -> tuple[dict, int]:
    rep = rp.header("verify", _verify_config(args))
    try:
        if args.theorem == 1:
            section = _theorem1(args)
        elif args.theorem == 2:
            section = _theorem2(args)
        else:
            section = _theorem3(args)
    except PreconditionError as exc:
        rep["refused"] = str(exc)
        rep["passed"] = False
        return rep, EXIT_REFUSED
    rep["result"] = section
    rep["warnings"] = list(section.get("notices", []))
    rep["passed"] = bool(section["passed"])
    return rep, EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_zoo(args) -> tuple[str, int]:
    if args.action == "list":
        if args.format == "json":
            data = [
                {
                    "name": e.name,
                    "description": e.description,
                    "reference": {k: {"value": r.value, "check": r.check, "note": r.note} for k, r in e.reference.items()},
                }
                for e in zoo.zoo_list()
            ]
            return rp.dumps(data), EXIT_OK
        return "".join(f"{e.name:<20} {e.description}\n" for e in zoo.zoo_list()), EXIT_OK
    if not args.name:
        raise ManifestError("zoo export needs an entry name")
    return zoo.export(args.name), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stepanov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, theorem=False):
        src = sp.add_mutually_exclusive_group(required=not theorem)
        src.add_argument("--manifest", metavar="PATH")
        src.add_argument("--zoo", metavar="NAME")
        sp.add_argument("--points", type=int, default=9)
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--tol", type=float, default=None, help="class-membership / fit tolerance")
        sp.add_argument("--fd-tol", type=float, default=None, help="class tolerance for finite-difference jets")
        sp.add_argument("--kahler-tol", type=float, default=None)
        sp.add_argument("--jets", choices=("taylor", "fd"), default="taylor")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--out", metavar="PATH")

    common(sub.add_parser("checks", help="Kähler axioms, divergence of T, trace identity"))
    common(sub.add_parser("classify", help="pointwise class membership"))
    v = sub.add_parser("verify", help="numerical checks of the structure theorems")
    common(v, theorem=True)
    v.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--dim", type=int, default=4)
    z = sub.add_parser("zoo", help="built-in manifests")
    z.add_argument("action", choices=("list", "export"))
    z.add_argument("name", nargs="?")
    z.add_argument("--format", choices=("text", "json"), default="text")
    z.add_argument("--out", metavar="PATH")
    return p


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "points", 1) < 1:
        parser.error("--points must be at least 1")
    try:
        if args.command == "zoo":
            text, code = cmd_zoo(args)
            _emit(text, args.out)
            return code
        handler = {"checks": cmd_checks, "classify": cmd_classify, "verify": cmd_verify}[args.command]
        rep, code = handler(args)
    except ManifestError as exc:
        print(f"stepanov: manifest error: {exc}", file=sys.stderr)
        return EXIT_MANIFEST
    except PreconditionError as exc:
        print(f"stepanov: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except StepanovError as exc:
        print(f"stepanov: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(rp.dumps(rep) if args.format == "json" else rp.render_text(rep), args.out)
    if code == EXIT_REFUSED:
        print(f"stepanov: refused: {rep.get('refused')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
