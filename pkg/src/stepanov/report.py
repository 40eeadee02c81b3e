"""Report assembly and serialization.

Reports are plain dicts.  The JSON writer prints every float with 17
significant digits (non-finite values become ``null``) and keeps key order,
so identical runs give byte-identical output.  The text form walks the same
dict, so both carry the same numbers.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from . import __version__
from .classify import LABELS, ClassFit
from .kahler import KahlerReport
from .pipeline import ClassAggregate, PointResult

SCHEMA_VERSION = 1


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == 0.0:
        return "0.0" if math.copysign(1.0, x) > 0 else "-0.0"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def plain(obj: Any) -> Any:
    """Convert numpy values and tuples to JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def dumps(obj: Any, indent: int = 2) -> str:
    return _dump(plain(obj), 0, indent) + "\n"


def _dump(v: Any, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, list):
        if not v:
            return "[]"
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            return "[" + ", ".join(_dump(x, 0, indent) for x in v) + "]"
        return "[\n" + ",\n".join(pad + _dump(x, level + 1, indent) for x in v) + "\n" + end + "]"
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_dump(x, level + 1, indent)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def render_text(report: dict) -> str:
    """Indented key/value listing of a report."""
    lines = [f"stepanov {report.get('tool', {}).get('version', '')} {report.get('command', '')}".rstrip()]
    _text(plain(report), 0, lines)
    return "\n".join(lines) + "\n"


def _scalar_text(v) -> str:
    if isinstance(v, float):
        return fmt_float(v)
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


def _text(v, level, lines, key=None):
    pad = "  " * level
    if isinstance(v, dict):
        if key is not None:
            lines.append(f"{pad}{key}:")
            level += 1
        for k, x in v.items():
            _text(x, level, lines, k)
    elif isinstance(v, list) and v and not all(not isinstance(x, (dict, list)) for x in v):
        lines.append(f"{pad}{key}:")
        for i, x in enumerate(v, 1):
            _text(x, level + 1, lines, f"[{i}]")
    else:
        text = "[" + ", ".join(_scalar_text(x) for x in v) + "]" if isinstance(v, list) else _scalar_text(v)
        lines.append(f"{pad}{key}: {text}" if key is not None else f"{pad}{text}")


# pieces ---------------------------------------------------------------------


def header(command: str, config: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "stepanov", "version": __version__},
        "command": command,
        "config": config,
    }


def fit_dict(f: ClassFit) -> dict:
    return {
        "class": f.label,
        "member": f.member,
        "rel_residual": f.rel_residual,
        "rank": f.rank,
        "dof": f.dof,
        "collapsed": f.collapsed,
        "vectors": {k: v for k, v in f.vectors.items()},
    }


def kahler_dict(k: KahlerReport | None) -> dict | None:
    return None if k is None else k.as_dict()


def point_dict(r: PointResult, classes: bool = True) -> dict:
    d: dict[str, Any] = {"index": r.index + 1, "point": r.point}
    if not r.ok:
        d["error"] = r.error
        return d
    cp = r.cp
    d["curvature"] = {
        "scalar": cp.scalar,
        "norm_T": float(np.linalg.norm(cp.T)),
        "norm_dT": r.norm_dT,
        "norm_dricci": r.norm_dricci,
        "norm_dscalar": float(np.linalg.norm(cp.dscalar)),
        "divergence_T": r.divergence,
        "trace_identity_residual": r.trace_residual,
    }
    d["kahler"] = kahler_dict(r.kahler)
    if classes:
        d["classes"] = {cid: fit_dict(f) for cid, f in r.fits.items()}
    return d


def aggregate_dict(a: ClassAggregate) -> dict:
    return {
        "class": LABELS[a.class_id],
        "member": a.member,
        "worst_rel_residual": a.worst_rel_residual,
        "member_points": a.member_points,
        "evaluated_points": a.evaluated_points,
        "rank_deficient_points": a.rank_deficient_points,
    }


def rank_warnings(results: list[PointResult]) -> list[str]:
    out = []
    for r in results:
        for cid, f in r.fits.items():
            if f.rank_deficient:
                out.append(f"point {r.index + 1}: {LABELS[cid]} design matrix has rank {f.rank} < {f.dof}")
    return out


def error_warnings(results: list[PointResult]) -> list[str]:
    return [f"point {r.index + 1}: {r.error}" for r in results if not r.ok]
