"""Residual diagnostics for a Kähler structure at a point.

The three axioms are ``F^2 = -1``, ``F^a_i g_aj + F^a_j g_ai = 0`` and
``nabla F = 0``.  The derived hybrid identities for g, Ricci and T are
reported alongside them, also when the axioms fail.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .curvature import CurvaturePack, covariant_derivative
from .errors import StructureError
from .jets import MetricJet, StructureJet
from .tensor import frob, pullback_array

TAU_EXACT = 1e-8
TAU_FD = 1e-4


@dataclass(frozen=True)
class KahlerReport:
    res_f_square: float
    res_compat: float
    res_parallel: float
    res_g_hybrid: float
    res_ricci_hybrid: float
    res_T_hybrid: float
    res_T_compat: float
    tol: float

    @property
    def axiom_residuals(self) -> tuple[float, float, float]:
        return self.res_f_square, self.res_compat, self.res_parallel

    @property
    def is_kahler(self) -> bool:
        return all(r <= self.tol for r in self.axiom_residuals)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["is_kahler"] = self.is_kahler
        return d


def hybrid_residual(b: np.ndarray, F: np.ndarray) -> float:
    """``|B_ab F^a_i F^b_j - B_ij|``."""
    return frob(pullback_array(b, F, (0, 1)) - b)


def compat_residual(b: np.ndarray, F: np.ndarray) -> float:
    """``|F^a_i B_aj + F^a_j B_ai|``."""
    x = np.einsum("ai,aj->ij", F, b)
    return frob(x + x.T)


def check_structure(
    jet: MetricJet, sjet: StructureJet | None, cp: CurvaturePack, tol: float = TAU_EXACT
) -> KahlerReport | None:
    """Kähler residuals at one point; ``None`` when no structure is supplied."""
    n = jet.dim
    if n % 2:
        raise StructureError(f"a complex structure needs even dimension, got {n}")
    if sjet is None:
        return None
    F = sjet.F
    nabla_F = covariant_derivative(F, sjet.dF, cp.gamma, "ud")
    return KahlerReport(
        res_f_square=frob(F @ F + np.eye(n)),
        res_compat=compat_residual(jet.g, F),
        res_parallel=frob(nabla_F),
        res_g_hybrid=hybrid_residual(jet.g, F),
        res_ricci_hybrid=hybrid_residual(cp.ricci, F),
        res_T_hybrid=hybrid_residual(cp.T, F),
        res_T_compat=compat_residual(cp.T, F),
        tol=tol,
    )


def theorem_preconditions(report: KahlerReport | None, tol: float | None = None) -> bool | None:
    """Gate for the theorem verifiers; ``None`` means not applicable (no structure)."""
    if report is None:
        return None
    tol = report.tol if tol is None else tol
    checks = report.axiom_residuals + (report.res_T_hybrid, report.res_T_compat)
    return all(r <= tol for r in checks)
