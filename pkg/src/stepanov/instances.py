"""Synthetic pointwise Kähler data satisfying class constraints exactly.

An instance is ``(g, F, T, D)`` at a single point: F the canonical block
structure, g and T hybrid (F-invariant) symmetric forms, and D a rank-3
tensor standing in for ``T_ij,k``.  D is always symmetric in its first two
slots and satisfies ``F^a_i D_ajk + F^a_j D_aik = 0``, which is what
differentiating the hybrid identity of T along a parallel F gives.

For a class ``L(D) = R(v)`` the generator works in the joint unknowns
``(D, v)``: it computes the null space of the combined linear system and
picks the admissible vectors closest to a requested plant, then adds a
random solution of the homogeneous system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.linalg import null_space

from .classify import get_class, lhs_matrix
from .errors import StepanovError
from .jets import DEGENERACY_FLOOR
from .tensor import canonical_structure, frob

MAX_ATTEMPTS = 10


@dataclass(frozen=True, eq=False)
class AlgebraicInstance:
    dim: int
    g: np.ndarray
    F: np.ndarray
    T: np.ndarray
    D: np.ndarray
    class_id: str
    seed: int
    planted: dict[str, np.ndarray] = field(default_factory=dict)
    # distance between the requested plant and the admissible one used
    plant_shift: float = 0.0
    homogeneous_dim: int = 0
    # dimension of the space of classifying vectors that admit some D
    admissible_dim: int = 0

    def constraint_residuals(self) -> dict[str, float]:
        F, g, T, D = self.F, self.g, self.T, self.D
        n = self.dim
        return {
            "f_square": frob(F @ F + np.eye(n)),
            "g_compat": _compat(g, F),
            "T_compat": _compat(T, F),
            "T_symmetry": frob(T - T.T),
            "D_symmetry": frob(D - D.transpose(1, 0, 2)),
            "D_compat": frob(_d_compat(D, F)),
        }


def _compat(b, F):
    x = F.T @ b
    return frob(x + x.T)


def _d_compat(D, F):
    x = np.einsum("ai,ajk->ijk", F, D)
    return x + x.transpose(1, 0, 2)


def hybrid_project(b: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Average of a form and its F-pullback; the result is F-invariant."""
    return 0.5 * (b + F.T @ b @ F)


@lru_cache(maxsize=None)
def hybrid_symmetric_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of admissible D for the canonical F."""
    F = canonical_structure(n)
    eye = np.eye(n**3).reshape((n**3, n, n, n))
    rows = []
    for e in eye:
        rows.append(np.concatenate([(e - e.transpose(1, 0, 2)).ravel(), _d_compat(e, F).ravel()]))
    C = np.stack(rows, axis=1)
    B = null_space(C)
    B.flags.writeable = False
    return B


def random_hybrid_pair(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    F = canonical_structure(n)
    A = rng.normal(size=(n, n))
    g = hybrid_project(A @ A.T, F)
    g = (g + g.T) / 2
    S = rng.normal(size=(n, n))
    T = hybrid_project((S + S.T) / 2, F)
    T = (T + T.T) / 2
    return g, T


def generate_instance(
    dim: int,
    class_id: str = "O2*",
    seed: int = 0,
    planted: Mapping[str, np.ndarray] | None = None,
    homogeneous: bool = True,
    T: np.ndarray | None = None,
) -> AlgebraicInstance:
    """Random instance of ``class_id`` (or ``"unconstrained"``).

    ``planted`` requests classifying vectors; the admissible vectors nearest
    to the request are used and the gap is recorded in ``plant_shift``.
    ``homogeneous=False`` drops the random homogeneous component of D.
    ``T`` overrides the random energy-momentum form (it is projected to be
    hybrid).
    """
    if dim % 2 or not 2 <= dim <= 8:
        raise StepanovError(f"instance dimension must be even and at most 8, got {dim}")
    n = dim
    F = canonical_structure(n)
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng(seed + attempt)
        g, T_rand = random_hybrid_pair(n, rng)
        if abs(np.linalg.det(g)) > DEGENERACY_FLOOR:
            break
    else:
        raise StepanovError(f"no nondegenerate metric after {MAX_ATTEMPTS} attempts from seed {seed}")
    if T is None:
        T = T_rand
    else:
        T = hybrid_project(np.asarray(T, dtype=float), F)
        T = (T + T.T) / 2

    B = hybrid_symmetric_basis(n)
    r = B.shape[1]
    if class_id == "unconstrained":
        D = (B @ rng.normal(size=r)).reshape((n, n, n))
        return AlgebraicInstance(n, g, F, T, D, class_id, seed, homogeneous_dim=r)

    spec = get_class(class_id)
    dof = spec.dof(n)
    L = lhs_matrix(spec.class_id, n) @ B
    if dof == 0:
        H = null_space(L)
        y = H @ rng.normal(size=H.shape[1]) if homogeneous and H.shape[1] else np.zeros(r)
        D = (B @ y).reshape((n, n, n))
        return AlgebraicInstance(n, g, F, T, D, class_id, seed, homogeneous_dim=H.shape[1])

    R = spec.design_matrix(g, T, F)
    N = null_space(np.hstack([L, -R]))
    Ny, Nv = N[:r], N[r:]
    v0 = spec.join(planted) if planted is not None else rng.normal(size=dof)
    if N.shape[1]:
        c = np.linalg.lstsq(Nv, v0, rcond=None)[0]
        v, y = Nv @ c, Ny @ c
        admissible = int(np.linalg.matrix_rank(Nv))
    else:
        v, y = np.zeros(dof), np.zeros(r)
        admissible = 0
    H = null_space(L)
    if homogeneous and H.shape[1]:
        y = y + H @ rng.normal(size=H.shape[1])
    D = (B @ y).reshape((n, n, n))
    D = (D + D.transpose(1, 0, 2)) / 2
    return AlgebraicInstance(
        n,
        g,
        F,
        T,
        D,
        class_id,
        seed,
        planted=spec.split(v, n),
        plant_shift=float(np.linalg.norm(v - v0)),
        homogeneous_dim=H.shape[1],
        admissible_dim=admissible,
    )


def plant(class_id: str, g, T, F, vectors: Mapping[str, np.ndarray], hybrid: bool = False) -> np.ndarray:
    """A D symmetric in (i, j) with ``L(D) = R(vectors)``, by minimum-norm solve.

    Raises when the requested vectors admit no such D.
    """
    spec = get_class(class_id)
    n = g.shape[0]
    target = spec.rhs_value(vectors, g, T, F).ravel()
    if hybrid:
        B = hybrid_symmetric_basis(n)
    else:
        eye = np.eye(n**3).reshape((n**3, n, n, n))
        sym = np.stack([(e - e.transpose(1, 0, 2)).ravel() for e in eye], axis=1)
        B = null_space(sym)
    L = lhs_matrix(spec.class_id, n) @ B
    y, *_ = np.linalg.lstsq(L, target, rcond=None)
    D = (B @ y).reshape((n, n, n))
    gap = frob(spec.lhs(D).ravel() - target)
    if gap > 1e-9 * max(1.0, frob(target)):
        raise StepanovError(f"vectors are not admissible for {spec.label} (gap {gap:.3g})")
    return (D + D.transpose(1, 0, 2)) / 2

