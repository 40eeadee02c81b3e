"""Numerical checks of the three structure results for Kähler spaces.

* ``verify_theorem1``: on a pointwise Kähler instance whose D satisfies the
  rho/sigma antisymmetric condition (class O2*), D itself is
  ``rho_k T_ij + sigma_k g_ij``.  A proof-trace mode evaluates every
  intermediate identity of the derivation with the fitted vectors.
* ``eq16_check``: data of the phi/gamma/eta/chi form (class O3*) satisfies
  the O2* condition with ``rho = phi - gamma`` and ``sigma = eta - chi``.
* ``verify_theorem2``: on a Kähler metric field, O2 or O3 membership at a
  point coincides with ``nabla T = nabla Ric = 0`` there.
* ``verify_theorem3``: every O4* instance is an O5* member.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import classify as cl
from .classify import ClassFit, ClassSpec
from .errors import PreconditionError, StepanovError
from .instances import AlgebraicInstance, generate_instance, hybrid_symmetric_basis, plant
from .jets import Manifest
from .kahler import theorem_preconditions
from .pipeline import PointResult, evaluate_field, parallel_map, tolerances
from .tensor import frob

CONSTRAINT_TOL = 1e-10
FIT_TOL = 1e-8
EQ16_TOL = 1e-9

SIGN_REPAIR_NOTICE = (
    "proof trace: the symmetrized identity over (i, k) is evaluated with +sigma_i g_jk; "
    "the printed form with -sigma_i g_jk is reported alongside and is not an identity of the "
    "hypothesis. The sum that yields the conclusion is taken with the antisymmetric "
    "hypothesis itself; the sum with its F-pullback is reported separately."
)


def _rhs_eq11(v, g, T, F):
    return np.einsum("k,ij->ijk", v["rho"], T) + np.einsum("k,ij->ijk", v["sigma"], g)


# The conclusion as a class: D = rho (x) T + sigma (x) g, fitted like any other.
EQ11 = ClassSpec("O2*", lambda d: d, ("rho", "sigma"), _rhs_eq11)


def fit_eq11(g, T, D, tol: float = FIT_TOL, floor: float = cl.FLOOR) -> ClassFit:
    n = g.shape[0]
    norm_d = frob(D)
    if norm_d <= floor:
        return ClassFit("O2*", True, 0.0, {"rho": np.zeros(n), "sigma": np.zeros(n)}, 0, 2 * n, True)
    A = EQ11.design_matrix(g, T)
    x, rank = cl.min_norm_lstsq(A, D.ravel())
    rel = frob(D.ravel() - A @ x) / max(norm_d, floor)
    return ClassFit("O2*", bool(rel <= tol), float(rel), EQ11.split(x, n), rank, 2 * n)


# proof trace ---------------------------------------------------------------


def _pb(x, F):
    """``X_ab F^a_i F^b_j`` on the first two slots of a rank-3 array ``X[a, b, k]``."""
    return np.einsum("abk,ai,bj->ijk", x, F, F)


def _equations(D, rho, sigma, g, T, F) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """(lhs, rhs) of each step of the derivation, indices ``[i, j, k]``."""
    o = lambda v, b: np.einsum("k,ij->ijk", v, b)  # v_k B_ij
    Dt = D.transpose(0, 2, 1)  # D_ikj
    # X_abk with a in slot 0, b in slot 1: D_akb, rho_b T_ak, sigma_b g_ak
    D_akb = D.transpose(0, 2, 1)
    rT = np.einsum("b,ak->abk", rho, T)
    sg = np.einsum("b,ak->abk", sigma, g)
    eq6 = (D - Dt, o(rho, T) - o(rho, T).transpose(0, 2, 1) + o(sigma, g) - o(sigma, g).transpose(0, 2, 1))
    eq13 = (D - _pb(D_akb, F), o(rho, T) - _pb(rT, F) + o(sigma, g) - _pb(sg, F))
    # symmetrized over (i, k): D_ijk + D_jki
    D_jki = D.transpose(2, 0, 1)
    lhs14 = D + D_jki
    rT_i = np.einsum("i,jk->ijk", rho, T)
    sg_i = np.einsum("i,jk->ijk", sigma, g)
    eq14_printed = (lhs14, o(rho, T) + rT_i + o(sigma, g) - sg_i)
    eq14 = (lhs14, o(rho, T) + rT_i + o(sigma, g) + sg_i)
    rT_j = np.einsum("j,ik->ijk", rho, T)
    sg_j = np.einsum("j,ik->ijk", sigma, g)
    eq15 = (D + Dt, o(rho, T) + rT_j + o(sigma, g) + sg_j)
    eq11 = (D, o(rho, T) + o(sigma, g))
    return {
        "hypothesis": eq6,
        "pullback": eq13,
        "symmetrized_printed": eq14_printed,
        "symmetrized": eq14,
        "exchanged": eq15,
        "conclusion": eq11,
    }


def _residuals(eqs) -> dict[str, np.ndarray]:
    return {k: lhs - rhs for k, (lhs, rhs) in eqs.items()}


def proof_trace(inst: AlgebraicInstance, rho, sigma, seed: int = 0) -> dict:
    """Residual of each derivation step and of the two candidate sums.

    Each sum is reported twice: its residual on the instance, and its
    ``identity_gap``: on unconstrained random data, the relative distance
    between the summed equation and twice the conclusion.  A zero gap means
    the sum is the conclusion as an algebraic identity.
    """
    g, T, F, D = inst.g, inst.T, inst.F, inst.D
    res = _residuals(_equations(D, rho, sigma, g, T, F))
    out = {name: frob(r) for name, r in res.items()}
    rng = np.random.default_rng(seed)
    n = inst.dim
    Dr = rng.normal(size=(n, n, n))
    Dr = (Dr + Dr.transpose(1, 0, 2)) / 2
    rr = _residuals(_equations(Dr, rng.normal(size=n), rng.normal(size=n), g, T, F))
    for name, other in (("exchanged+hypothesis", "hypothesis"), ("exchanged+pullback", "pullback")):
        out[name] = frob(res["exchanged"] + res[other])
        gap = rr["exchanged"] + rr[other] - 2 * rr["conclusion"]
        out[name + ":identity_gap"] = frob(gap) / max(frob(2 * rr["conclusion"]), cl.FLOOR)
    return out


# theorem 1 -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Theorem1Result:
    seed: int
    dim: int
    passed: bool
    fit: ClassFit
    hypothesis: ClassFit
    constraints: dict[str, float]
    trace: dict[str, float] | None = None


def _check_instance(inst: AlgebraicInstance) -> dict[str, float]:
    res = inst.constraint_residuals()
    bad = {k: v for k, v in res.items() if not v <= CONSTRAINT_TOL}
    if bad:
        raise PreconditionError(f"instance violates the Kähler constraints: {bad}")
    return res


def verify_theorem1(inst: AlgebraicInstance, tol: float = FIT_TOL, trace: bool = False) -> Theorem1Result:
    """Fit the conclusion on an instance satisfying the O2* or O3* hypothesis.

    Raises :class:`PreconditionError` when the instance is not pointwise
    Kähler or satisfies neither hypothesis.
    """
    constraints = _check_instance(inst)
    g, T, F, D = inst.g, inst.T, inst.F, inst.D
    hyp = cl.classify("O2*", g, None, F, T, D, tol)
    if not hyp.member:
        alt = cl.classify("O3*", g, None, F, T, D, tol)
        if not alt.member:
            raise PreconditionError(
                f"instance satisfies neither O2* nor O3* (relative residuals {hyp.rel_residual:.3g}, "
                f"{alt.rel_residual:.3g})"
            )
    fit = fit_eq11(g, T, D, tol)
    tr = proof_trace(inst, hyp.vectors["rho"], hyp.vectors["sigma"], inst.seed) if trace else None
    return Theorem1Result(inst.seed, inst.dim, fit.member, fit, hyp, constraints, tr)


@dataclass(frozen=True, eq=False)
class BatchResult:
    theorem: int
    dim: int
    trials: int
    seed: int
    results: list
    notices: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> int:
        return sum(not r.passed for r in self.results)


def verify_theorem1_batch(
    dim: int, trials: int, seed: int, tol: float = FIT_TOL, trace: bool = False, homogeneous: bool = True
) -> BatchResult:
    hybrid_symmetric_basis(dim)
    cl.lhs_matrix("O2*", dim)

    def run(t):
        inst = generate_instance(dim, "O2*", seed + t, homogeneous=homogeneous)
        return verify_theorem1(inst, tol, trace)

    results = parallel_map(run, range(trials))
    notices = [SIGN_REPAIR_NOTICE] if trace else []
    return BatchResult(1, dim, trials, seed, results, notices)


# eq. 16 --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Eq16Result:
    seed: int
    passed: bool
    residual: float
    rel_residual: float
    vectors: dict[str, np.ndarray]


def omega3_instance(dim: int, seed: int, kahler: bool = True) -> AlgebraicInstance:
    """An instance built from phi, gamma, eta, chi.

    With ``kahler=True`` the vectors are the admissible ones nearest to a
    random request, so D also satisfies the differentiated hybrid identity.
    Otherwise D is planted from unconstrained random vectors.
    """
    if kahler:
        return generate_instance(dim, "O3*", seed)
    base = generate_instance(dim, "unconstrained", seed)
    rng = np.random.default_rng([seed, 1])
    vectors = {u: rng.normal(size=dim) for u in cl.CLASSES["O3*"].unknowns}
    D = plant("O3*", base.g, base.T, base.F, vectors)
    return AlgebraicInstance(dim, base.g, base.F, base.T, D, "O3*", seed, planted=vectors)


def eq16_check(inst: AlgebraicInstance, tol: float = EQ16_TOL) -> Eq16Result:
    """Substitute ``rho = phi - gamma``, ``sigma = eta - chi`` into the O2* condition."""
    v = inst.planted
    if not {"phi", "gamma", "eta", "chi"} <= set(v):
        raise PreconditionError("instance carries no phi, gamma, eta, chi")
    rs = {"rho": v["phi"] - v["gamma"], "sigma": v["eta"] - v["chi"]}
    r = cl.residual_for("O2*", rs, inst.g, inst.T, inst.F, inst.D)
    rel = r / max(frob(inst.D), cl.FLOOR)
    return Eq16Result(inst.seed, bool(r <= tol), r, rel, rs)


def eq16_batch(dim: int, trials: int, seed: int, kahler: bool = True, tol: float = EQ16_TOL) -> BatchResult:
    hybrid_symmetric_basis(dim)
    results = parallel_map(lambda t: eq16_check(omega3_instance(dim, seed + t, kahler), tol), range(trials))
    return BatchResult(16, dim, trials, seed, results)


# theorem 2 -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Theorem2Point:
    index: int
    point: np.ndarray
    norm_dT: float
    norm_dricci: float
    member_O2: bool
    member_O3: bool
    passed: bool
    message: str = ""


@dataclass(frozen=True, eq=False)
class Theorem2Result:
    manifest: str
    tol: float
    method: str
    points: list[Theorem2Point]
    evaluations: list[PointResult]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    @property
    def non_members_O2(self) -> int:
        return sum(not p.member_O2 for p in self.points)


def verify_theorem2(
    m: Manifest,
    points: Sequence[Sequence[float]],
    tol: float | None = None,
    method: str = "taylor",
    class_tol: float | None = None,
) -> Theorem2Result:
    """O2/O3 membership must coincide with ``|nabla T|, |nabla Ric| <= tol``.

    Raises :class:`PreconditionError` for a manifest without a structure or
    one that fails the Kähler gate at any sampled point.
    """
    if not m.has_structure:
        raise PreconditionError(f"{m.name} carries no complex structure; the result concerns Kähler spaces")
    tols = tolerances(method)
    tol = tols["collapse"] if tol is None else tol
    evals = evaluate_field(m, points, method, class_tol=class_tol, classes=True)
    for r in evals:
        if not r.ok:
            raise StepanovError(f"point {r.index + 1} failed: {r.error}")
        gate = theorem_preconditions(r.kahler)
        if not gate:
            k = r.kahler
            raise PreconditionError(
                f"{m.name} is not Kähler at point {r.index + 1} "
                f"(F^2+1: {k.res_f_square:.3g}, compat: {k.res_compat:.3g}, nabla F: {k.res_parallel:.3g}, "
                f"T hybrid: {k.res_T_hybrid:.3g}, T compat: {k.res_T_compat:.3g})"
            )
    out = []
    for r in evals:
        dT, dR = r.norm_dT, r.norm_dricci
        m2, m3 = r.fits["O2"].member, r.fits["O3"].member
        flat = dT <= tol and dR <= tol
        msgs = []
        if (m2 or m3) and not flat:
            msgs.append("member of O2/O3 but nabla T or nabla Ric exceeds tolerance")
        if dT <= tol and not (m2 and m3):
            msgs.append("nabla T vanishes but a class fit failed")
        out.append(Theorem2Point(r.index, r.point, dT, dR, m2, m3, not msgs, "; ".join(msgs)))
    return Theorem2Result(m.name, tol, method, out, evals)


# theorem 3 -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Theorem3Result:
    seed: int
    dim: int
    passed: bool
    fit: ClassFit
    admissible_dim: int
    norm_D: float


def verify_theorem3_instance(inst: AlgebraicInstance, tol: float = FIT_TOL) -> Theorem3Result:
    _check_instance(inst)
    fit = cl.classify("O5*", inst.g, None, inst.F, inst.T, inst.D, tol)
    return Theorem3Result(inst.seed, inst.dim, fit.member, fit, inst.admissible_dim, frob(inst.D))


def verify_theorem3(dim: int, trials: int, seed: int, tol: float = FIT_TOL, planted=None) -> BatchResult:
    """Generate O4* instances and fit O5* to each."""
    if dim % 2:
        raise PreconditionError(f"dimension must be even, got {dim}")
    hybrid_symmetric_basis(dim)
    cl.lhs_matrix("O4*", dim)
    cl.lhs_matrix("O5*", dim)

    def run(t):
        return verify_theorem3_instance(generate_instance(dim, "O4*", seed + t, planted=planted), tol)

    return BatchResult(3, dim, trials, seed, parallel_map(run, range(trials)))


def theorem3_statistics(batch: BatchResult) -> dict:
    """Rank and vector-norm summaries of a theorem 3 batch."""
    fits = [r.fit for r in batch.results]
    ranks = [f.rank for f in fits if not f.collapsed]
    stats = {
        "trials": len(fits),
        "collapsed": sum(f.collapsed for f in fits),
        "admissible_dim": sorted({r.admissible_dim for r in batch.results}),
        "rank_min": min(ranks) if ranks else None,
        "rank_max": max(ranks) if ranks else None,
        "dof": fits[0].dof if fits else None,
        "max_rel_residual": max((f.rel_residual for f in fits), default=0.0),
    }
    for u in cl.CLASSES["O5*"].unknowns:
        norms = np.array([np.linalg.norm(f.vectors[u]) for f in fits])
        stats[f"{u}_norm_mean"] = float(norms.mean()) if norms.size else 0.0
        stats[f"{u}_norm_max"] = float(norms.max()) if norms.size else 0.0
    return stats
