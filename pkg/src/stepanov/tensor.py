"""Dense tensors at a point with explicit slot variance.

Storage is a row-major numpy array of shape ``(n,) * rank``.  Each slot is
either covariant (``"d"``, lower index) or contravariant (``"u"``, upper
index).  Indices are 0-based; reports convert to 1-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SlotError, TensorError, VarianceError

CO = "d"
CONTRA = "u"


@dataclass(frozen=True, eq=False)
class Tensor:
    data: np.ndarray
    slots: tuple[str, ...]

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        slots = tuple(self.slots)
        if any(s not in (CO, CONTRA) for s in slots):
            raise TensorError(f"slot variance must be {CO!r} or {CONTRA!r}: {slots}")
        if data.ndim != len(slots):
            raise TensorError(f"data has rank {data.ndim} but {len(slots)} slots given")
        if data.ndim and len(set(data.shape)) != 1:
            raise TensorError(f"all slots must share one dimension, got {data.shape}")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "slots", slots)

    @classmethod
    def covariant(cls, data) -> "Tensor":
        data = np.asarray(data)
        return cls(data, (CO,) * data.ndim)

    @classmethod
    def affinor(cls, data) -> "Tensor":
        """Type (1,1) tensor ``F^h_i`` stored as ``data[h, i]``."""
        return cls(data, (CONTRA, CO))

    @classmethod
    def delta(cls, n: int) -> "Tensor":
        return cls(np.eye(n), (CONTRA, CO))

    @property
    def rank(self) -> int:
        return len(self.slots)

    @property
    def dim(self) -> int:
        return self.data.shape[0] if self.rank else 0

    def __add__(self, other: "Tensor") -> "Tensor":
        if other.slots != self.slots:
            raise VarianceError(f"cannot add {self.slots} and {other.slots}")
        return Tensor(self.data + other.data, self.slots)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return self + other * -1.0

    def __mul__(self, c: float) -> "Tensor":
        return Tensor(self.data * c, self.slots)

    __rmul__ = __mul__

    def transpose(self, perm: Sequence[int]) -> "Tensor":
        return Tensor(np.transpose(self.data, perm), tuple(self.slots[p] for p in perm))

    def is_symmetric(self, a: int, b: int, atol: float = 0.0) -> bool:
        perm = list(range(self.rank))
        perm[a], perm[b] = perm[b], perm[a]
        return bool(np.allclose(self.data, np.transpose(self.data, perm), rtol=0.0, atol=atol))


def _check_slots(t: Tensor, slots: Sequence[int]):
    for s in slots:
        if not 0 <= s < t.rank:
            raise SlotError(f"slot {s} out of range for rank-{t.rank} tensor")
    if len(set(slots)) != len(slots):
        raise SlotError(f"slots must be distinct: {list(slots)}")


def tensor_product(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(np.multiply.outer(a.data, b.data), a.slots + b.slots)


def contract(t: Tensor, a: int, b: int) -> Tensor:
    """Sum over a shared index in slots ``a`` and ``b`` (opposite variance)."""
    _check_slots(t, (a, b))
    if t.slots[a] == t.slots[b]:
        raise VarianceError(f"cannot contract two {t.slots[a]!r} slots")
    rest = tuple(s for i, s in enumerate(t.slots) if i not in (a, b))
    return Tensor(np.trace(t.data, axis1=a, axis2=b), rest)


def symmetrize(t: Tensor, slots: Sequence[int]) -> Tensor:
    """Average over all permutations of the listed slots."""
    _check_slots(t, slots)
    if len({t.slots[s] for s in slots}) > 1:
        raise VarianceError("symmetrized slots must share variance")
    slots = list(slots)
    acc = np.zeros_like(t.data)
    perms = list(itertools.permutations(slots))
    for p in perms:
        axes = list(range(t.rank))
        for src, dst in zip(slots, p):
            axes[dst] = src
        acc += np.transpose(t.data, axes)
    return Tensor(acc / len(perms), t.slots)


def cyclic_sum(t: Tensor) -> Tensor:
    """``t_ijk + t_jki + t_kij`` for a rank-3 tensor of uniform variance."""
    if t.rank != 3:
        raise TensorError(f"cyclic sum needs rank 3, got rank {t.rank}")
    if len(set(t.slots)) != 1:
        raise VarianceError("cyclic sum needs uniform variance")
    return Tensor(cyclic_sum_array(t.data), t.slots)


def cyclic_sum_array(d: np.ndarray) -> np.ndarray:
    return d + np.transpose(d, (2, 0, 1)) + np.transpose(d, (1, 2, 0))


def f_pullback(t: Tensor, F: Tensor, slots: Sequence[int]) -> Tensor:
    """Replace ``B_{..i..}`` by ``B_{..a..} F^a_i`` on each listed covariant slot."""
    _check_slots(t, slots)
    if F.slots != (CONTRA, CO):
        raise VarianceError("F must be a (1,1) tensor stored as F[h, i]")
    for s in slots:
        if t.slots[s] != CO:
            raise VarianceError(f"slot {s} is contravariant; pullback needs covariant slots")
    return Tensor(pullback_array(t.data, F.data, slots), t.slots)


def pullback_array(d: np.ndarray, F: np.ndarray, slots: Sequence[int]) -> np.ndarray:
    out = d
    for s in slots:
        out = np.moveaxis(np.tensordot(out, F, axes=([s], [0])), -1, s)
    return out


def norms(t: Tensor | np.ndarray, g: Tensor | None = None) -> tuple[float, float]:
    """Coordinate-component Frobenius norm and max absolute component.

    ``g`` is accepted for signature compatibility and currently unused.
    """
    data = t.data if isinstance(t, Tensor) else np.asarray(t)
    if data.size == 0:
        return 0.0, 0.0
    return float(np.linalg.norm(data.ravel())), float(np.max(np.abs(data)))


def frob(a) -> float:
    return float(np.linalg.norm(np.ravel(a)))


def canonical_structure(n: int) -> np.ndarray:
    """Block affinor on ``(x^1..x^m, y^1..y^m)``: F(d/dx^a) = d/dy^a, F(d/dy^a) = -d/dx^a."""
    if n % 2:
        raise TensorError(f"complex structure needs even dimension, got {n}")
    m = n // 2
    F = np.zeros((n, n))
    F[m:, :m] = np.eye(m)
    F[:m, m:] = -np.eye(m)
    return F

