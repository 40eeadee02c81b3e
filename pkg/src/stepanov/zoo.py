"""Built-in manifests with reference values.

Every reference value is tagged with how it is checked: ``"inspection"``
for values that are evident from the formula (flat metrics, zero
curvature), ``"recomputed"`` for values the test suite reproduces along an
independent finite-difference path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

from .errors import ManifestError
from .jets import Manifest, dumps_manifest, manifest_from_dict

INSPECTION = "inspection"
RECOMPUTED = "recomputed"


@dataclass(frozen=True)
class Reference:
    value: Any
    check: str
    note: str = ""


@dataclass(frozen=True, eq=False)
class ZooEntry:
    name: str
    description: str
    manifest: Manifest
    reference: dict[str, Reference] = field(default_factory=dict)


def _diag(entries):
    return {f"{i + 1},{i + 1}": e for i, e in enumerate(entries)}


def _canonical(m: int) -> dict[str, str]:
    """Structure table of the block affinor on (x1..xm, y1..ym)."""
    out = {}
    for a in range(1, m + 1):
        out[f"{m + a},{a}"] = "1"
        out[f"{a},{m + a}"] = "-1"
    return out


_S4_FACTOR = "4/(1 + x1^2 + x2^2 + y1^2 + y2^2)^2"

_CATALOG: list[tuple[dict, str, dict[str, Reference]]] = [
    (
        {
            "name": "flat-C2",
            "dim": 4,
            "coords": ["x1", "x2", "y1", "y2"],
            "signature": [1, 1, 1, 1],
            "domain": [[-1, 1]] * 4,
            "metric": _diag(["1"] * 4),
            "structure": _canonical(2),
        },
        "Euclidean C^2 with the canonical complex structure.",
        {
            "scalar_curvature": Reference(0.0, INSPECTION),
            "energy_momentum_zero": Reference(True, INSPECTION),
            "kahler": Reference(True, INSPECTION),
            "all_classes_member": Reference(True, INSPECTION),
        },
    ),
    (
        {
            "name": "flat-pseudo-C2",
            "dim": 4,
            "coords": ["x1", "y1", "x2", "y2"],
            "signature": [1, 1, -1, -1],
            "domain": [[-1, 1]] * 4,
            "metric": _diag(["1", "1", "-1", "-1"]),
            "structure": {"2,1": "1", "1,2": "-1", "4,3": "1", "3,4": "-1"},
        },
        "Flat C^2 with neutral signature; the structure rotates each (x, y) pair.",
        {
            "scalar_curvature": Reference(0.0, INSPECTION),
            "energy_momentum_zero": Reference(True, INSPECTION),
            "kahler": Reference(True, INSPECTION),
            "all_classes_member": Reference(True, INSPECTION),
        },
    ),
    (
        {
            "name": "cp1-fs",
            "dim": 2,
            "coords": ["x", "y"],
            "signature": [1, 1],
            "domain": [[-2, 2]] * 2,
            "metric": {"1,1": "4/(1 + x^2 + y^2)^2", "2,2": "4/(1 + x^2 + y^2)^2"},
            "structure": {"2,1": "1", "1,2": "-1"},
        },
        "Fubini-Study CP^1 in an affine chart, isometric to the unit sphere.",
        {
            "scalar_curvature": Reference(2.0, RECOMPUTED, "unit sphere"),
            "energy_momentum_zero": Reference(True, RECOMPUTED, "Einstein tensor vanishes in dimension 2"),
            "kahler": Reference(True, INSPECTION),
            "all_classes_member": Reference(True, RECOMPUTED),
            "potential_equivalent": Reference(
                "4*log(1 + x^2 + y^2)",
                RECOMPUTED,
                "the potential log(1 + x^2 + y^2) gives a quarter of this metric and R = 8",
            ),
        },
    ),
    (
        {
            "name": "cp2-fs",
            "dim": 4,
            "coords": ["x1", "x2", "y1", "y2"],
            "signature": [1, 1, 1, 1],
            "domain": [[-2, 2]] * 4,
            "potential": "log(1 + x1^2 + x2^2 + y1^2 + y2^2)",
        },
        "Fubini-Study CP^2 from its Kähler potential in an affine chart.",
        {
            "scalar_curvature": Reference(24.0, RECOMPUTED),
            "einstein_constant": Reference(6.0, RECOMPUTED, "Ric = 6 g at every point"),
            "energy_momentum_factor": Reference(-6.0, RECOMPUTED, "T = -6 g"),
            "covariant_derivative_T_zero": Reference(True, RECOMPUTED),
            "kahler": Reference(True, INSPECTION, "built from a potential"),
            "all_classes_member": Reference(True, RECOMPUTED),
        },
    ),
    (
        {
            "name": "kahler-nonEinstein",
            "dim": 4,
            "coords": ["x1", "x2", "y1", "y2"],
            "signature": [1, 1, 1, 1],
            "domain": [[-1, 1]] * 4,
            "potential": "x1^2 + y1^2 + x2^2 + y2^2 + (x1^2 + y1^2)^2/4",
        },
        "Product of a rotationally symmetric surface and a flat plane; Kähler, not Einstein.",
        {
            "scalar_curvature_at_centroid": Reference(
                -4.0, RECOMPUTED, "R = -4/(1 + x1^2 + y1^2)^3 from the surface factor"
            ),
            "kahler": Reference(True, INSPECTION, "built from a potential"),
            "covariant_derivative_T_nonzero": Reference(True, RECOMPUTED, "away from x1 = y1 = 0"),
            "O2_non_member_points": Reference(
                ">= 8 of 9", RECOMPUTED, "the centroid is the origin, where nabla T vanishes"
            ),
        },
    ),
    (
        {
            "name": "s4-like-nonkahler",
            "dim": 4,
            "coords": ["x1", "x2", "y1", "y2"],
            "signature": [1, 1, 1, 1],
            "domain": [[0.1, 0.9]] * 4,
            "metric": _diag([_S4_FACTOR] * 4),
            "structure": _canonical(2),
        },
        "Round unit S^4 in stereographic coordinates with the constant block structure.",
        {
            "scalar_curvature": Reference(12.0, RECOMPUTED, "unit 4-sphere"),
            "kahler": Reference(False, RECOMPUTED, "nabla F vanishes only at the origin, outside the domain"),
        },
    ),
    (
        {
            "name": "flrw-dust",
            "dim": 4,
            "coords": ["t", "x", "y", "z"],
            "signature": [-1, 1, 1, 1],
            "domain": [[0.5, 2], [-1, 1], [-1, 1], [-1, 1]],
            "metric": _diag(["-1", "t^(4/3)", "t^(4/3)", "t^(4/3)"]),
        },
        "Spatially flat dust cosmology with scale factor t^(2/3); Lorentzian, no structure.",
        {
            "scalar_curvature": Reference("4/(3 t^2)", RECOMPUTED),
            "energy_density": Reference("T_tt = 4/(3 t^2), other components 0", RECOMPUTED),
            "divergence_free": Reference(True, RECOMPUTED, "contracted Bianchi identity"),
            "kahler": Reference(None, INSPECTION, "no structure supplied"),
        },
    ),
]


@lru_cache(maxsize=None)
def _entries() -> tuple[ZooEntry, ...]:
    return tuple(
        ZooEntry(d["name"], desc, manifest_from_dict(d), ref) for d, desc, ref in _CATALOG
    )


def zoo_list() -> list[ZooEntry]:
    return list(_entries())


def zoo_names() -> list[str]:
    return [e.name for e in _entries()]


def zoo_entry(name: str) -> ZooEntry:
    for e in _entries():
        if e.name == name:
            return e
    raise ManifestError(f"unknown zoo entry {name!r}; available: {', '.join(zoo_names())}")


def zoo_manifest(name: str) -> Manifest:
    return zoo_entry(name).manifest


def export(name: str) -> str:
    """Manifest JSON of a zoo entry."""
    return dumps_manifest(zoo_manifest(name))
