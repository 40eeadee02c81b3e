"""Per-point evaluation of a manifest: jets, curvature, Kähler residuals, classes."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import classify as cl
from . import kahler
from .curvature import CurvaturePack, curvature, divergence_T, trace_identity_residual
from .errors import StepanovError
from .jets import Manifest, MetricJet, StructureJet, metric_jet
from .tensor import frob

MARGIN = 0.1
# Below these norms of the covariant derivative of T the point is treated as
# covariantly constant; they track the accuracy of each jet method.
COLLAPSE_EXACT = 1e-9
COLLAPSE_FD = 1e-5

_T = TypeVar("_T")
_R = TypeVar("_R")


def parallel_map(fn: Callable[[_T], _R], items: Iterable[_T]) -> list[_R]:
    """Order-preserving map on a thread pool; serial if STEPANOV_NO_PARALLEL=1."""
    items = list(items)
    if os.environ.get("STEPANOV_NO_PARALLEL") == "1" or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(8, os.cpu_count() or 1)) as pool:
        return list(pool.map(fn, items))


def sample_points(m: Manifest, count: int, seed: int) -> np.ndarray:
    """The domain centroid followed by ``count - 1`` seeded uniform draws.

    Each coordinate is drawn from its interval shrunk by 10% at both ends,
    using numpy's PCG64 generator seeded with ``seed``, one row at a time.
    """
    if count < 1:
        raise ValueError("need at least one point")
    rng = np.random.default_rng(seed)
    lo = np.array([a for a, _ in m.domain])
    hi = np.array([b for _, b in m.domain])
    pad = MARGIN * (hi - lo)
    pts = [m.centroid]
    for _ in range(count - 1):
        pts.append(rng.uniform(lo + pad, hi - pad))
    return np.array(pts)


@dataclass(frozen=True, eq=False)
class PointResult:
    index: int
    point: np.ndarray
    jet: MetricJet | None = None
    sjet: StructureJet | None = None
    cp: CurvaturePack | None = None
    kahler: kahler.KahlerReport | None = None
    divergence: float = float("nan")
    trace_residual: float = float("nan")
    fits: dict[str, cl.ClassFit] = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def norm_dT(self) -> float:
        return frob(self.cp.dT) if self.cp is not None else float("nan")

    @property
    def norm_dricci(self) -> float:
        return frob(self.cp.dricci) if self.cp is not None else float("nan")


def tolerances(method: str) -> dict[str, float]:
    if method == "fd":
        return {"kahler": kahler.TAU_FD, "class": cl.TAU_FD, "collapse": COLLAPSE_FD}
    return {"kahler": kahler.TAU_EXACT, "class": cl.TAU_EXACT, "collapse": COLLAPSE_EXACT}


def evaluate_point(
    m: Manifest,
    p: Sequence[float],
    method: str = "taylor",
    index: int = 0,
    kahler_tol: float | None = None,
    class_tol: float | None = None,
    classes: bool = False,
) -> PointResult:
    """Run the pipeline at one point; errors are captured in the result."""
    tol = tolerances(method)
    kahler_tol = tol["kahler"] if kahler_tol is None else kahler_tol
    class_tol = tol["class"] if class_tol is None else class_tol
    p = np.asarray(p, dtype=float)
    try:
        jet, sjet = metric_jet(m, p, 3, method)
        cp = curvature(jet)
        rep = kahler.check_structure(jet, sjet, cp, kahler_tol)
        fits = {}
        if classes:
            F = sjet.F if sjet is not None else None
            fits = cl.classify_all(cp.g, cp.g_inv, F, cp.T, cp.dT, class_tol, tol["collapse"])
    except StepanovError as exc:
        return PointResult(index, p, error=f"{type(exc).__name__}: {exc}")
    return PointResult(
        index,
        p,
        jet,
        sjet,
        cp,
        rep,
        float(np.linalg.norm(divergence_T(cp))),
        trace_identity_residual(cp),
        fits,
    )


def evaluate_field(
    m: Manifest,
    points: Sequence[Sequence[float]],
    method: str = "taylor",
    kahler_tol: float | None = None,
    class_tol: float | None = None,
    classes: bool = False,
) -> list[PointResult]:
    jobs = list(enumerate(points))
    return parallel_map(
        lambda job: evaluate_point(m, job[1], method, job[0], kahler_tol, class_tol, classes), jobs
    )


@dataclass(frozen=True)
class ClassAggregate:
    class_id: str
    member: bool
    worst_rel_residual: float
    member_points: int
    evaluated_points: int
    rank_deficient_points: int


@dataclass(frozen=True, eq=False)
class FieldClassification:
    points: list[PointResult]
    aggregates: dict[str, ClassAggregate]
    method: str
    tol: float

    @property
    def failed(self) -> list[PointResult]:
        return [r for r in self.points if not r.ok]


def aggregate(results: Sequence[PointResult]) -> dict[str, ClassAggregate]:
    """Field verdict per class: member only if every point evaluated and is member."""
    out = {}
    ok = [r for r in results if r.ok]
    ids = [c for c in cl.CLASS_IDS if any(c in r.fits for r in ok)]
    for cid in ids:
        fits = [r.fits[cid] for r in ok if cid in r.fits]
        worst = max((f.rel_residual for f in fits), default=float("nan"))
        members = sum(f.member for f in fits)
        out[cid] = ClassAggregate(
            cid,
            bool(fits) and members == len(fits) and len(ok) == len(results),
            worst,
            members,
            len(fits),
            sum(f.rank_deficient for f in fits),
        )
    return out


def classify_field(
    m: Manifest,
    points: Sequence[Sequence[float]],
    tol: float | None = None,
    method: str = "taylor",
    kahler_tol: float | None = None,
) -> FieldClassification:
    """Classify every point and aggregate; failed points are kept and reported."""
    tol = tolerances(method)["class"] if tol is None else tol
    results = evaluate_field(m, points, method, kahler_tol, tol, classes=True)
    return FieldClassification(results, aggregate(results), method, tol)
