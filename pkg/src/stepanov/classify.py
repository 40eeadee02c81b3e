"""Pointwise class-membership tests on the covariant derivative of T.

Each class is a linear condition ``L(D) = R(v)`` on ``D[i, j, k] = T_ij,k``,
where ``L`` is a fixed linear map and ``R`` is linear in a set of unknown
vectors ``v``.  Membership is decided by a minimum-norm least-squares fit
of ``v``:

======  ======================  =====================================
class   L(D)_ijk                unknown vectors
======  ======================  =====================================
O1      D_ijk + D_jki + D_kij   none
O2      D_ijk - D_ikj           none
O3      D_ijk                   a, b
O1*     D_ijk + D_jki + D_kij   lambda, mu
O2*     D_ijk - D_ikj           rho, sigma
O3*     D_ijk                   phi, gamma, eta, chi
O4*     D_ijk - D_ikj           rho, sigma (with F terms)
O5*     D_ijk                   phi, gamma, eta, chi (with F terms)
======  ======================  =====================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .errors import StepanovError
from .tensor import cyclic_sum_array, frob

TAU_EXACT = 1e-8
TAU_FD = 1e-3
FLOOR = 1e-14

CLASS_IDS = ("O1", "O2", "O3", "O1*", "O2*", "O3*", "O4*", "O5*")
LABELS = {
    "O1": "Ω₁",
    "O2": "Ω₂",
    "O3": "Ω₃",
    "O1*": "Ω₁*",
    "O2*": "Ω₂*",
    "O3*": "Ω₃*",
    "O4*": "Ω₄*",
    "O5*": "Ω₅*",
}


def _cyclic(d):
    return cyclic_sum_array(d)


def _antisym_jk(d):
    return d - d.transpose(0, 2, 1)


def _identity(d):
    return d


def _rhs_o3(v, g, T, F):
    a, b = v["a"], v["b"]
    return (
        np.einsum("k,ij->ijk", a, g)
        + np.einsum("i,jk->ijk", b, g)
        + np.einsum("j,ik->ijk", b, g)
    )


def _rhs_o1s(v, g, T, F):
    lam, mu = v["lambda"], v["mu"]
    out = np.einsum("k,ij->ijk", lam, T) + np.einsum("k,ij->ijk", mu, g)
    return cyclic_sum_array(out)


def _rhs_o2s(v, g, T, F):
    rho, sigma = v["rho"], v["sigma"]
    out = np.einsum("k,ij->ijk", rho, T) + np.einsum("k,ij->ijk", sigma, g)
    return out - out.transpose(0, 2, 1)


def _rhs_o3s(v, g, T, F):
    phi, gam, eta, chi = v["phi"], v["gamma"], v["eta"], v["chi"]
    return (
        np.einsum("k,ij->ijk", phi, T)
        + np.einsum("i,jk->ijk", gam, T)
        + np.einsum("j,ki->ijk", gam, T)
        + np.einsum("k,ij->ijk", eta, g)
        + np.einsum("i,jk->ijk", chi, g)
        + np.einsum("j,ik->ijk", chi, g)
    )


def _rhs_o4s(v, g, T, F):
    rho, sigma = v["rho"], v["sigma"]
    out = _rhs_o2s(v, g, T, F)
    out = out + np.einsum("a,ib,ak,bj->ijk", rho, T, F, F)
    out = out - np.einsum("b,ia,ak,bj->ijk", rho, T, F, F)
    out = out + np.einsum("a,ib,ak,bj->ijk", sigma, g, F, F)
    out = out - np.einsum("b,ia,ak,bj->ijk", sigma, g, F, F)
    return out


def _rhs_o5s(v, g, T, F):
    gam, chi = v["gamma"], v["chi"]
    out = _rhs_o3s(v, g, T, F)
    out = out + np.einsum("a,bk,ai,bj->ijk", gam, T, F, F)
    out = out + np.einsum("b,ka,ai,bj->ijk", gam, T, F, F)
    out = out + np.einsum("a,bk,ai,bj->ijk", chi, g, F, F)
    out = out + np.einsum("b,ak,ai,bj->ijk", chi, g, F, F)
    return out


@dataclass(frozen=True)
class ClassSpec:
    class_id: str
    lhs: Callable[[np.ndarray], np.ndarray]
    unknowns: tuple[str, ...] = ()
    rhs: Callable | None = None
    needs_F: bool = False

    @property
    def label(self) -> str:
        return LABELS[self.class_id]

    def dof(self, n: int) -> int:
        return n * len(self.unknowns)

    def rhs_value(self, vectors: Mapping[str, np.ndarray], g, T, F=None) -> np.ndarray:
        n = g.shape[0]
        if self.rhs is None:
            return np.zeros((n, n, n))
        return self.rhs(vectors, g, T, F)

    def design_matrix(self, g, T, F=None) -> np.ndarray:
        """Columns are ``R(e_c)`` flattened, one per unknown component."""
        n = g.shape[0]
        cols = []
        zero = {u: np.zeros(n) for u in self.unknowns}
        for u in self.unknowns:
            for c in range(n):
                v = dict(zero)
                e = np.zeros(n)
                e[c] = 1.0
                v[u] = e
                cols.append(self.rhs(v, g, T, F).ravel())
        if not cols:
            return np.zeros((n**3, 0))
        return np.stack(cols, axis=1)

    def split(self, x: np.ndarray, n: int) -> dict[str, np.ndarray]:
        return {u: x[i * n : (i + 1) * n].copy() for i, u in enumerate(self.unknowns)}

    def join(self, vectors: Mapping[str, np.ndarray]) -> np.ndarray:
        if not self.unknowns:
            return np.zeros(0)
        return np.concatenate([np.asarray(vectors[u], dtype=float) for u in self.unknowns])


CLASSES: dict[str, ClassSpec] = {
    "O1": ClassSpec("O1", _cyclic),
    "O2": ClassSpec("O2", _antisym_jk),
    "O3": ClassSpec("O3", _identity, ("a", "b"), _rhs_o3),
    "O1*": ClassSpec("O1*", _cyclic, ("lambda", "mu"), _rhs_o1s),
    "O2*": ClassSpec("O2*", _antisym_jk, ("rho", "sigma"), _rhs_o2s),
    "O3*": ClassSpec("O3*", _identity, ("phi", "gamma", "eta", "chi"), _rhs_o3s),
    "O4*": ClassSpec("O4*", _antisym_jk, ("rho", "sigma"), _rhs_o4s, needs_F=True),
    "O5*": ClassSpec("O5*", _identity, ("phi", "gamma", "eta", "chi"), _rhs_o5s, needs_F=True),
}


def get_class(class_id: str) -> ClassSpec:
    try:
        return CLASSES[class_id]
    except KeyError:
        raise StepanovError(f"unknown class {class_id!r}; choose from {', '.join(CLASS_IDS)}") from None


@lru_cache(maxsize=None)
def lhs_matrix(class_id: str, n: int) -> np.ndarray:
    """Matrix of ``L`` acting on flattened ``D``."""
    spec = CLASSES[class_id]
    eye = np.eye(n**3).reshape((n**3, n, n, n))
    cols = [spec.lhs(e).ravel() for e in eye]
    m = np.stack(cols, axis=1)
    m.flags.writeable = False
    return m


def min_norm_lstsq(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm least squares via the SVD.

    Singular values at or below ``max(A.shape) * eps * s_max`` count as zero.
    """
    if A.shape[1] == 0:
        return np.zeros(0), 0
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1]), 0
    thr = max(A.shape) * np.finfo(float).eps * s[0]
    r = int(np.sum(s > thr))
    x = Vt[:r].T @ ((U[:, :r].T @ b) / s[:r])
    return x, r


@dataclass(frozen=True)
class ClassFit:
    class_id: str
    member: bool
    rel_residual: float
    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    rank: int = 0
    dof: int = 0
    collapsed: bool = False

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.dof and not self.collapsed

    @property
    def label(self) -> str:
        return LABELS[self.class_id]


def classify(
    class_id: str,
    g: np.ndarray,
    g_inv: np.ndarray | None,
    F: np.ndarray | None,
    T: np.ndarray,
    D: np.ndarray,
    tol: float = TAU_EXACT,
    floor: float = FLOOR,
) -> ClassFit:
    """Fit one class at a point.

    ``rel_residual = |L(D) - R(v*)| / max(|D|, floor)`` with ``v*`` the
    minimum-norm minimizer.  When ``|D| <= floor`` the point is the
    covariantly constant case: member, zero vectors, ``collapsed=True``.
    """
    spec = get_class(class_id)
    g = np.asarray(g, dtype=float)
    T = np.asarray(T, dtype=float)
    D = np.asarray(D, dtype=float)
    n = g.shape[0]
    if g.shape != (n, n) or T.shape != (n, n) or D.shape != (n, n, n):
        raise StepanovError(f"dimension mismatch: g {g.shape}, T {T.shape}, D {D.shape}")
    if spec.needs_F and F is None:
        raise StepanovError(f"class {spec.label} needs a complex structure F")
    if frob(D - D.transpose(1, 0, 2)) > 1e-10 * max(1.0, frob(D)):
        raise StepanovError("D must be symmetric in its first two slots")

    dof = spec.dof(n)
    norm_d = frob(D)
    if norm_d <= floor:
        return ClassFit(
            class_id, True, 0.0, {u: np.zeros(n) for u in spec.unknowns}, 0, dof, collapsed=True
        )
    lhs = spec.lhs(D).ravel()
    A = spec.design_matrix(g, T, F)
    x, rank = min_norm_lstsq(A, lhs)
    resid = lhs - A @ x if dof else lhs
    rel = frob(resid) / max(norm_d, floor)
    return ClassFit(class_id, bool(rel <= tol), float(rel), spec.split(x, n), rank, dof)


def classify_all(g, g_inv, F, T, D, tol=TAU_EXACT, floor=FLOOR) -> dict[str, ClassFit]:
    """Every class that applies; F-dependent classes are skipped without F."""
    out = {}
    for cid in CLASS_IDS:
        if CLASSES[cid].needs_F and F is None:
            continue
        out[cid] = classify(cid, g, g_inv, F, T, D, tol, floor)
    return out


def residual_for(class_id: str, vectors, g, T, F, D) -> float:
    """``|L(D) - R(v)|`` for given vectors (no fitting)."""
    spec = get_class(class_id)
    return frob(spec.lhs(D) - spec.rhs_value(vectors, g, T, F))
