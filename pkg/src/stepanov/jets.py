"""Metric and affinor jets at a point.

Three sources feed the curvature pipeline:

* component formulas, differentiated exactly by truncated Taylor arithmetic;
* a Kähler potential ``K(x, y)``, whose complex Hessian gives the metric;
* a black-box component function, differentiated by central differences.

Derivative slots always come after the tensor slots: ``dg[i, j, k]`` is
``d_k g_ij`` and ``dF[h, i, k]`` is ``d_k F^h_i``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import taylor
from .errors import (
    DegenerateMetricError,
    DomainError,
    ManifestError,
    NotAMetricError,
    StructureError,
)
from .expr import Expression, evaluate, parse_expression, taylor_jet
from .taylor import Series
from .tensor import canonical_structure

DEGENERACY_FLOOR = 1e-10
EPS = np.finfo(float).eps
# order of the central stencils; step for order-k derivatives is eps**(1/(k + FD_ACCURACY))
FD_ACCURACY = 4

_MANIFEST_FIELDS = {"name", "dim", "coords", "signature", "domain", "metric", "potential", "structure"}


@dataclass(frozen=True, eq=False)
class Manifest:
    """A metric on a single chart.

    ``metric`` and ``structure`` map 0-based index pairs to formulas; only
    one triangle of the metric is needed.  ``adapter`` is an in-process
    black box ``x -> g(x)`` and has no file representation.
    """

    name: str
    dim: int
    coords: tuple[str, ...]
    signature: tuple[int, ...]
    domain: tuple[tuple[float, float], ...]
    metric: Mapping[tuple[int, int], Expression] | None = None
    potential: Expression | None = None
    structure: Mapping[tuple[int, int], Expression] | None = None
    adapter: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.dim
        if not isinstance(n, int) or n < 1:
            raise ManifestError(f"dim must be a positive integer, got {n!r}")
        if len(self.coords) != n or len(set(self.coords)) != n:
            raise ManifestError(f"need {n} distinct coordinate names, got {list(self.coords)}")
        if len(self.signature) != n or any(s not in (1, -1) for s in self.signature):
            raise ManifestError(f"signature must be {n} entries of +1/-1")
        if len(self.domain) != n:
            raise ManifestError(f"domain needs {n} intervals")
        for lo, hi in self.domain:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ManifestError(f"empty or unbounded domain interval [{lo}, {hi}]")
        sources = [s for s in (self.metric, self.potential, self.adapter) if s is not None]
        if len(sources) != 1:
            raise ManifestError("exactly one of metric, potential or adapter is required")
        if (self.structure is not None or self.potential is not None) and n % 2:
            raise StructureError(f"a complex structure needs even dimension, got dim {n}")
        if self.potential is not None and self.structure is not None:
            raise ManifestError("potential manifests carry the canonical structure; drop 'structure'")
        for table, label in ((self.metric, "metric"), (self.structure, "structure")):
            if table is None:
                continue
            for (i, j), e in table.items():
                if not (0 <= i < n and 0 <= j < n):
                    raise ManifestError(f"{label} index ({i + 1},{j + 1}) out of range")
                _check_names(e, self.coords)
        if self.metric is not None:
            for (i, j), e in self.metric.items():
                other = self.metric.get((j, i))
                if other is not None and other.source != e.source:
                    raise ManifestError(f"metric entries ({i + 1},{j + 1}) and ({j + 1},{i + 1}) differ")
        if self.potential is not None:
            _check_names(self.potential, self.coords)

    @property
    def source(self) -> str:
        if self.metric is not None:
            return "metric"
        if self.potential is not None:
            return "potential"
        return "adapter"

    @property
    def has_structure(self) -> bool:
        return self.structure is not None or self.potential is not None

    @property
    def centroid(self) -> np.ndarray:
        return np.array([(lo + hi) / 2 for lo, hi in self.domain])

    def contains(self, x: Sequence[float]) -> bool:
        return all(lo < xi < hi for xi, (lo, hi) in zip(x, self.domain))

    def metric_entry(self, i: int, j: int) -> Expression | None:
        return self.metric.get((i, j)) or self.metric.get((j, i))


def _check_names(e: Expression, coords):
    unknown = [v for v in e.variables if v not in coords]
    if unknown:
        raise ManifestError(f"unknown identifier {unknown[0]!r} in {e.source!r}")


# file format ------------------------------------------------------------


def _parse_key(key: str, n: int) -> tuple[int, int]:
    try:
        a, b = (int(p) for p in key.split(","))
    except ValueError:
        raise ManifestError(f"index key must look like 'i,j', got {key!r}") from None
    if not (1 <= a <= n and 1 <= b <= n):
        raise ManifestError(f"index key {key!r} out of range 1..{n}")
    return a - 1, b - 1


def manifest_from_dict(d: Mapping) -> Manifest:
    if not isinstance(d, Mapping):
        raise ManifestError("manifest must be a JSON object")
    unknown = set(d) - _MANIFEST_FIELDS
    if unknown:
        raise ManifestError(f"unknown manifest field(s): {sorted(unknown)}")
    missing = {"name", "dim", "coords", "signature", "domain"} - set(d)
    if missing:
        raise ManifestError(f"missing manifest field(s): {sorted(missing)}")
    if ("metric" in d) == ("potential" in d):
        raise ManifestError("exactly one of 'metric' or 'potential' is required")
    n = d["dim"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ManifestError(f"dim must be a positive integer, got {n!r}")
    if ("structure" in d or "potential" in d) and n % 2:
        raise StructureError(f"a complex structure needs even dimension, got dim {n}")
    coords = tuple(d["coords"])

    def table(obj, label):
        if not isinstance(obj, Mapping):
            raise ManifestError(f"{label} must be an object of 'i,j': formula")
        return {_parse_key(k, n): _parse(v, label) for k, v in obj.items()}

    try:
        domain = tuple((float(lo), float(hi)) for lo, hi in d["domain"])
    except (TypeError, ValueError):
        raise ManifestError("domain must be a list of [lo, hi] pairs") from None
    return Manifest(
        name=str(d["name"]),
        dim=n,
        coords=coords,
        signature=tuple(int(s) for s in d["signature"]),
        domain=domain,
        metric=table(d["metric"], "metric") if "metric" in d else None,
        potential=_parse(d["potential"], "potential") if "potential" in d else None,
        structure=table(d["structure"], "structure") if "structure" in d else None,
    )


def _parse(src, label) -> Expression:
    if not isinstance(src, str):
        raise ManifestError(f"{label} formulas must be strings, got {src!r}")
    try:
        return parse_expression(src)
    except Exception as exc:  # parse errors become manifest errors
        raise ManifestError(f"{label}: {exc}") from exc


def manifest_to_dict(m: Manifest) -> dict:
    if m.adapter is not None:
        raise ManifestError("adapter manifests have no file representation")
    out = {
        "name": m.name,
        "dim": m.dim,
        "coords": list(m.coords),
        "signature": list(m.signature),
        "domain": [[lo, hi] for lo, hi in m.domain],
    }
    if m.metric is not None:
        out["metric"] = {f"{i + 1},{j + 1}": e.source for (i, j), e in sorted(m.metric.items())}
    else:
        out["potential"] = m.potential.source
    if m.structure is not None:
        out["structure"] = {f"{h + 1},{i + 1}": e.source for (h, i), e in sorted(m.structure.items())}
    return out


def dumps_manifest(m: Manifest) -> str:
    return json.dumps(manifest_to_dict(m), indent=2, ensure_ascii=False) + "\n"


def load_manifest(path: str | Path, validate: bool = True) -> Manifest:
    try:
        text = Path(path).read_text(encoding="utf-8")
        data = json.loads(text)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    m = manifest_from_dict(data)
    if validate:
        check_signature(m)
    return m


def check_signature(m: Manifest) -> None:
    """Compare eigenvalue signs of g at the domain centroid with the declaration."""
    g = metric_values(m, m.centroid)
    ev = np.linalg.eigvalsh(g)
    found = (int(np.sum(ev > 0)), int(np.sum(ev < 0)))
    declared = (m.signature.count(1), m.signature.count(-1))
    if found != declared:
        raise ManifestError(
            f"{m.name}: declared signature has {declared[0]} positive / {declared[1]} negative "
            f"directions, metric at the centroid has {found[0]} / {found[1]}"
        )


# jets -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricJet:
    point: np.ndarray
    g: np.ndarray
    dg: np.ndarray | None = None
    d2g: np.ndarray | None = None
    d3g: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @property
    def order(self) -> int:
        return sum(b is not None for b in (self.dg, self.d2g, self.d3g))

    @property
    def blocks(self) -> list[np.ndarray]:
        return [b for b in (self.g, self.dg, self.d2g, self.d3g) if b is not None]

    def series(self) -> Series:
        return taylor.from_partials(self.blocks, self.dim)

    @classmethod
    def from_series(cls, point, s: Series) -> "MetricJet":
        blocks = [taylor.partials(s, k) for k in range(s.order + 1)]
        blocks = [(b + np.swapaxes(b, 0, 1)) / 2 for b in blocks]
        blocks += [None] * (4 - len(blocks))
        return cls(np.asarray(point, dtype=float), *blocks[:4])


@dataclass(frozen=True, eq=False)
class StructureJet:
    F: np.ndarray
    dF: np.ndarray


def _check_point(m: Manifest, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (m.dim,):
        raise ManifestError(f"point must have {m.dim} coordinates")
    if not m.contains(p):
        raise DomainError(f"point {p.tolist()} outside the chart domain of {m.name}")
    return p


def _check_nondegenerate(g: np.ndarray, where):
    det = np.linalg.det(g)
    if not abs(det) > DEGENERACY_FLOOR:
        raise DegenerateMetricError(f"|det g| = {abs(det):.3g} at {where} is below {DEGENERACY_FLOOR}")


def _metric_series(m: Manifest, p: np.ndarray, order: int) -> Series:
    n = m.dim
    if m.potential is not None:
        return potential_metric_series(m.potential, p, order, m.coords)
    b = taylor.basis(n, order)
    data = np.zeros((n, n, b.size))
    for i in range(n):
        for j in range(i, n):
            e = m.metric_entry(i, j)
            if e is None:
                continue
            s = taylor_jet(e, p, order, m.coords)
            data[i, j] = data[j, i] = s.data
    return Series(data, b)


def potential_metric_series(K: Expression, p, order: int, coords: Sequence[str]) -> Series:
    """Real metric of the Kähler potential ``K`` as a series of ``order``.

    With ``z^a = x^a + i y^a`` and ``H_ab = d^2 K / dz^a dzbar^b = A + iB``
    the metric on ``(x, y)`` is ``[[A, B], [-B, A]]``.
    """
    n = len(coords)
    if n % 2:
        raise StructureError(f"potential needs an even number of coordinates, got {n}")
    m = n // 2
    k = taylor_jet(K, p, order + 2, coords)
    hess = [[k.deriv(a).deriv(b) for b in range(n)] for a in range(n)]
    A = [[(hess[a][b] + hess[m + a][m + b]) * 0.25 for b in range(m)] for a in range(m)]
    B = [[(hess[a][m + b] - hess[m + a][b]) * 0.25 for b in range(m)] for a in range(m)]
    rows = []
    for a in range(m):
        rows.append(taylor.stack([A[a][b] for b in range(m)] + [B[a][b] for b in range(m)]))
    for a in range(m):
        rows.append(taylor.stack([-B[a][b] for b in range(m)] + [A[a][b] for b in range(m)]))
    return taylor.stack(rows)


def metric_values(m: Manifest, p) -> np.ndarray:
    """``g(p)`` only; used by the finite-difference path and signature checks."""
    p = np.asarray(p, dtype=float)
    n = m.dim
    if m.adapter is not None:
        return np.asarray(m.adapter(p), dtype=float)
    if m.potential is not None:
        return potential_metric_series(m.potential, p, 0, m.coords).value
    env = dict(zip(m.coords, p))
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            e = m.metric_entry(i, j)
            if e is not None:
                g[i, j] = g[j, i] = float(evaluate(e.root, env))
    return g


def structure_values(m: Manifest, p) -> np.ndarray:
    if m.potential is not None:
        return canonical_structure(m.dim)
    env = dict(zip(m.coords, np.asarray(p, dtype=float)))
    F = np.zeros((m.dim, m.dim))
    for (h, i), e in m.structure.items():
        F[h, i] = float(evaluate(e.root, env))
    return F


def metric_jet(
    m: Manifest,
    p: Sequence[float],
    order: int = 3,
    method: str = "taylor",
    accuracy: int = FD_ACCURACY,
) -> tuple[MetricJet, StructureJet | None]:
    """Metric jet up to ``order`` and, for Kähler candidates, the affinor jet.

    ``method="fd"`` (forced for adapter manifests) uses central differences
    on the component values instead of exact Taylor arithmetic.
    """
    p = _check_point(m, p)
    if method not in ("taylor", "fd"):
        raise ValueError(f"unknown jet method {method!r}")
    if m.adapter is not None:
        method = "fd"
    if method == "taylor":
        jet = MetricJet.from_series(p, _metric_series(m, p, order))
    else:
        jet = finite_difference_jet(lambda x: metric_values(m, x), p, order, m.domain, accuracy)
    if m.potential is not None:
        g0 = jet.g
        if not np.all(np.linalg.eigvalsh(g0) > 0):
            raise NotAMetricError(f"complex Hessian of {m.potential.source!r} is not positive definite at {p.tolist()}")
    _check_nondegenerate(jet.g, p.tolist())

    sjet = None
    if m.potential is not None:
        n = m.dim
        sjet = StructureJet(canonical_structure(n), np.zeros((n, n, n)))
    elif m.structure is not None:
        if method == "taylor":
            n = m.dim
            b = taylor.basis(n, 1)
            data = np.zeros((n, n, b.size))
            for (h, i), e in m.structure.items():
                data[h, i] = taylor_jet(e, p, 1, m.coords).data
            s = Series(data, b)
            sjet = StructureJet(s.value.copy(), taylor.partials(s, 1))
        else:
            F, dF = fd_partials(lambda x: structure_values(m, x), p, 1, m.domain, accuracy)
            sjet = StructureJet(F, dF)
    return jet, sjet


def potential_metric_jet(
    K: Expression | str, p: Sequence[float], coords: Sequence[str] | None = None, order: int = 3
) -> tuple[MetricJet, StructureJet]:
    """Kähler metric of potential ``K`` with the canonical block structure."""
    if isinstance(K, str):
        K = parse_expression(K)
    coords = tuple(coords) if coords is not None else tuple(K.variables)
    p = np.asarray(p, dtype=float)
    s = potential_metric_series(K, p, order, coords)
    jet = MetricJet.from_series(p, s)
    if not np.all(np.linalg.eigvalsh(jet.g) > 0):
        raise NotAMetricError(f"complex Hessian of {K.source!r} is not positive definite at {p.tolist()}")
    n = len(coords)
    return jet, StructureJet(canonical_structure(n), np.zeros((n, n, n)))


# finite differences -----------------------------------------------------


@lru_cache(maxsize=None)
def central_weights(d: int, accuracy: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Offsets and weights of the central difference for the d-th derivative."""
    npts = 2 * ((d + 1) // 2) - 1 + accuracy
    half = (npts - 1) // 2
    offsets = np.arange(-half, half + 1)
    V = np.vander(offsets, increasing=True).T.astype(float)
    rhs = np.zeros(npts)
    rhs[d] = math.factorial(d)
    w = np.linalg.solve(V, rhs)
    w[np.abs(w) < 1e-12] = 0.0
    return tuple(int(o) for o in offsets), tuple(float(x) for x in w)


def step_size(k: int, x: np.ndarray, accuracy: int = FD_ACCURACY) -> np.ndarray:
    """Per-coordinate step for order-``k`` derivatives, ``eps**(1/(k+accuracy))``."""
    return EPS ** (1.0 / (k + accuracy)) * np.maximum(1.0, np.abs(x))


def fd_partials(
    f: Callable[[np.ndarray], np.ndarray],
    p: Sequence[float],
    order: int,
    domain: Sequence[tuple[float, float]] | None = None,
    accuracy: int = FD_ACCURACY,
) -> list[np.ndarray]:
    """``[f(p), Df(p), ..., D^order f(p)]`` by tensor-product central stencils."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    cache: dict[tuple, np.ndarray] = {}

    def at(disp: np.ndarray) -> np.ndarray:
        key = tuple(disp)
        if key not in cache:
            x = p + disp
            if domain is not None and not all(lo < xi < hi for xi, (lo, hi) in zip(x, domain)):
                raise DomainError(f"finite-difference stencil at {x.tolist()} leaves the chart domain")
            cache[key] = np.asarray(f(x), dtype=float)
        return cache[key]

    f0 = at(np.zeros(n))
    blocks = [f0]
    for k in range(1, order + 1):
        h = step_size(k, p, accuracy)
        block = np.zeros(f0.shape + (n,) * k)
        for multi in itertools.combinations_with_replacement(range(n), k):
            counts = Counter(multi)
            axes = sorted(counts)
            stencils = [list(zip(*central_weights(counts[v], accuracy))) for v in axes]
            total = np.zeros_like(f0)
            for combo in itertools.product(*stencils):
                w = math.prod(wt for _, wt in combo)
                if w == 0.0:
                    continue
                disp = np.zeros(n)
                for v, (off, _) in zip(axes, combo):
                    disp[v] = off * h[v]
                # weights sum to zero, so differencing against f(p) is exact for constants
                total = total + w * (at(disp) - f0)
            total = total / math.prod(h[v] ** counts[v] for v in axes)
            for perm in set(itertools.permutations(multi)):
                block[(Ellipsis,) + perm] = total
        blocks.append(block)
    return blocks


def finite_difference_jet(
    f: Callable[[np.ndarray], np.ndarray],
    p: Sequence[float],
    order: int = 3,
    domain: Sequence[tuple[float, float]] | None = None,
    accuracy: int = FD_ACCURACY,
) -> MetricJet:
    """Metric jet of a black-box ``x -> g(x)`` by central differences."""
    blocks = fd_partials(f, p, order, domain, accuracy)
    blocks = [(b + np.swapaxes(b, 0, 1)) / 2 for b in blocks]
    blocks += [None] * (4 - len(blocks))
    return MetricJet(np.asarray(p, dtype=float), *blocks[:4])
