"""Levi-Civita connection, curvature, the energy-momentum tensor and geodesics.

Conventions (fixed so that the unit sphere has scalar curvature +2)::

    Gamma^h_ij   = 1/2 g^ha (d_i g_aj + d_j g_ai - d_a g_ij)
    R^h_ijk      = d_j Gamma^h_ik - d_k Gamma^h_ij
                   + Gamma^h_ja Gamma^a_ik - Gamma^h_ka Gamma^a_ij
    R_ij         = R^a_iaj,   R = g^ij R_ij
    T_ij         = R_ij - R g_ij / 2
    T_ij,k       = d_k T_ij - Gamma^a_ki T_aj - Gamma^a_kj T_ia

Array layouts put the derivative slot last: ``gamma[h, i, j]``,
``riemann[h, i, j, k]``, ``dT[i, j, k] = T_ij,k``.

Everything is computed on truncated Taylor series of the metric, so the
derivatives of curvature come from the same exact arithmetic as the
curvature itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import taylor
from .errors import DomainError
from .jets import MetricJet
from .taylor import Series, einsum


@dataclass(frozen=True, eq=False)
class ConnectionJet:
    gamma: np.ndarray
    dgamma: np.ndarray | None = None
    d2gamma: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class CurvaturePack:
    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    dscalar: np.ndarray
    T: np.ndarray
    dT: np.ndarray
    dricci: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def _christoffel_series(gs: Series) -> Series:
    ginv = taylor.inv(gs)
    dg = gs.gradient()  # [i, j, k] = d_k g_ij
    lower = (
        dg.data.transpose(0, 2, 1, 3)  # d_i g_aj  as [a, i, j]
    )
    first = Series(lower, dg.basis)
    second = Series(dg.data, dg.basis)  # d_j g_ai as [a, i, j]
    third = Series(dg.data.transpose(2, 0, 1, 3), dg.basis)  # d_a g_ij as [a, i, j]
    return einsum("ha,aij->hij", ginv, first + second - third) * 0.5


def christoffel(jet: MetricJet) -> ConnectionJet:
    """Christoffel symbols and as many of their partials as the jet allows."""
    if jet.order < 1:
        raise ValueError("Christoffel symbols need a first-order metric jet")
    gam = _christoffel_series(jet.series())
    blocks = [taylor.partials(gam, k) for k in range(gam.order + 1)]
    blocks += [None] * (3 - len(blocks))
    return ConnectionJet(*blocks[:3])


def _riemann_series(gam: Series) -> Series:
    dgam = gam.gradient()  # [h, i, j, k] = d_k Gamma^h_ij
    d = dgam.data
    # d_j Gamma^h_ik  -> [h, i, j, k]
    term1 = Series(d.transpose(0, 1, 3, 2, 4), dgam.basis)
    term2 = dgam
    quad = einsum("hja,aik->hijk", gam, gam)
    quad = quad - Series(quad.data.transpose(0, 1, 3, 2, 4), quad.basis)
    return term1 - term2 + quad


def covariant_derivative(
    t: np.ndarray, dt: np.ndarray, gamma: np.ndarray, variance: str
) -> np.ndarray:
    """``nabla_k t`` with the derivative slot appended last.

    ``variance`` has one character per slot of ``t``: ``"d"`` for a lower
    index and ``"u"`` for an upper one.  ``dt`` holds the coordinate
    partials with the derivative slot last.
    """
    t = np.asarray(t, dtype=float)
    if dt is None:
        raise ValueError("covariant derivative needs the coordinate partials of t")
    if len(variance) != t.ndim or dt.shape != t.shape + (t.shape[0] if t.ndim else gamma.shape[0],):
        raise ValueError("partials do not match the tensor")
    out = np.array(dt, dtype=float)
    rank = t.ndim
    for s, v in enumerate(variance):
        # contract slot s of t with Gamma
        moved = np.moveaxis(t, s, 0)  # [a, ...rest]
        if v == "d":
            # - Gamma^a_{k i_s} t_{..a..}
            corr = -np.einsum("aik,a...->i...k", gamma.transpose(0, 2, 1), moved)
        elif v == "u":
            # + Gamma^{i_s}_{k a} t^{..a..}
            corr = np.einsum("hka,a...->h...k", gamma, moved)
        else:
            raise ValueError(f"unknown variance {v!r}")
        out = out + np.moveaxis(corr, 0, s) if rank > 1 else out + corr
    return out


def _tensor_covariant_derivative(ts: Series, gamma0: np.ndarray) -> np.ndarray:
    """nabla of a covariant rank-2 series at the expansion point."""
    dt = taylor.partials(ts, 1)
    return covariant_derivative(ts.value, dt, gamma0, "dd")


def curvature(jet: MetricJet) -> CurvaturePack:
    """All curvature data at the jet's point; needs a third-order jet."""
    if jet.order < 3:
        raise ValueError("curvature derivatives need a third-order metric jet")
    gs = jet.series()
    ginv = taylor.inv(gs)
    gam = _christoffel_series(gs)
    riem = _riemann_series(gam)
    ric = Series(np.einsum("aiaj...->ij...", riem.data), riem.basis)
    ric = Series((ric.data + ric.data.transpose(1, 0, 2)) / 2, ric.basis)
    scal = einsum("ij,ij->", ginv, ric)
    T = ric - einsum(",ij->ij", scal, gs) * 0.5

    gamma0 = gam.value
    g0 = gs.value
    dT = _tensor_covariant_derivative(T, gamma0)
    dric = _tensor_covariant_derivative(ric, gamma0)
    return CurvaturePack(
        point=jet.point,
        g=g0,
        g_inv=ginv.value,
        gamma=gamma0,
        riemann=riem.value,
        ricci=ric.value,
        scalar=float(scal.value),
        dscalar=taylor.partials(scal, 1),
        T=T.value,
        dT=dT,
        dricci=dric,
    )


def divergence_T(cp: CurvaturePack, g_inv: np.ndarray | None = None) -> np.ndarray:
    """``g^{ba} T_{ai,b}``; vanishes identically by the contracted Bianchi identity."""
    g_inv = cp.g_inv if g_inv is None else g_inv
    return np.einsum("ba,aib->i", g_inv, cp.dT)


def trace_identity_residual(cp: CurvaturePack) -> float:
    """``|g^ij T_ij - R (1 - n/2)|``."""
    n = cp.dim
    return abs(float(np.einsum("ij,ij->", cp.g_inv, cp.T)) - cp.scalar * (1 - n / 2))


# geodesics ----------------------------------------------------------------


@dataclass(frozen=True)
class GeodesicState:
    s: float
    x: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class GeodesicTrace:
    states: list[GeodesicState]
    exited: bool = False

    def __len__(self):
        return len(self.states)


def geodesic_trace(
    gamma_at: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    v0: Sequence[float],
    s_end: float,
    steps: int,
    inside: Callable[[np.ndarray], bool] | None = None,
) -> GeodesicTrace:
    """Integrate ``x'' + Gamma(x)(x', x') = 0`` with classical fixed-step RK4.

    ``gamma_at(x)`` returns ``Gamma^h_ij`` at ``x``.  If a stage point leaves
    the chart (``inside`` false, or the provider raises :class:`DomainError`)
    the trace stops and is flagged as exited.
    """
    x = np.asarray(x0, dtype=float)
    v = np.asarray(v0, dtype=float)
    h = s_end / steps

    def rhs(x, v):
        if inside is not None and not inside(x):
            raise DomainError("geodesic left the chart")
        gam = gamma_at(x)
        return v, -np.einsum("hij,i,j->h", gam, v, v)

    states = [GeodesicState(0.0, x.copy(), v.copy())]
    for step in range(steps):
        try:
            k1x, k1v = rhs(x, v)
            k2x, k2v = rhs(x + h / 2 * k1x, v + h / 2 * k1v)
            k3x, k3v = rhs(x + h / 2 * k2x, v + h / 2 * k2v)
            k4x, k4v = rhs(x + h * k3x, v + h * k3v)
        except DomainError:
            return GeodesicTrace(states, exited=True)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        states.append(GeodesicState((step + 1) * h, x.copy(), v.copy()))
    return GeodesicTrace(states)


def quadratic_drift(trace: GeodesicTrace, form_at: Callable[[np.ndarray], np.ndarray]) -> float:
    """``max_s |Q(s) - Q(0)|`` for ``Q = A_ij(x) x'^i x'^j``."""
    q = [float(np.einsum("ij,i,j->", form_at(st.x), st.v, st.v)) for st in trace.states]
    return float(np.max(np.abs(np.array(q) - q[0])))


def killing_quadratic_check(trace: GeodesicTrace, ricci_at: Callable[[np.ndarray], np.ndarray]) -> float:
    """Drift of ``R_ij x'^i x'^j`` along the trace."""
    return quadratic_drift(trace, ricci_at)
