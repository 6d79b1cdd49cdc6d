"""Truncated model of the vector-valued Hardy space over the polydisc.

A function with coefficient space of dimension ``r`` and per-variable
degree cap ``d`` is stored as a flat vector of length ``(d+1)^n * r``.
Basis order is graded on multi-indices (ascending total degree, ties
lexicographic), with the coefficient-space basis fastest-varying.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .matrixcore import operator_norm


class PointOutsidePolydisc(ValueError):
    """A sample point left the open unit polydisc."""


def enumerate_multi_indices(n: int, d: int) -> list:
    """All multi-indices with components in 0..d, graded order."""
    if n < 1 or d < 0:
        raise ValueError("need n >= 1 and d >= 0")
    idx = list(itertools.product(range(d + 1), repeat=n))
    idx.sort(key=lambda k: (sum(k), k))
    return idx


@dataclass(frozen=True, eq=True)
class TruncatedHardySpace:
    """Descriptor of the truncated space: n variables, degree cap d,
    coefficient dimension ``coeff_dim``."""

    n: int
    degree: int
    coeff_dim: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1 or self.degree < 0 or self.coeff_dim < 0:
            raise ValueError("invalid space parameters")

    @property
    def indices(self) -> list:
        if "indices" not in self._cache:
            self._cache["indices"] = enumerate_multi_indices(self.n, self.degree)
        return self._cache["indices"]

    @property
    def index_pos(self) -> dict:
        if "pos" not in self._cache:
            self._cache["pos"] = {k: p for p, k in enumerate(self.indices)}
        return self._cache["pos"]

    @property
    def num_indices(self) -> int:
        return (self.degree + 1) ** self.n

    @property
    def total_dim(self) -> int:
        return self.num_indices * self.coeff_dim

    def _tensor_perm(self) -> np.ndarray:
        # perm[j] = row in lexicographic tensor layout of graded row j
        if "perm" not in self._cache:
            d1, r = self.degree + 1, self.coeff_dim
            perm = np.empty(self.total_dim, dtype=np.intp)
            for p, k in enumerate(self.indices):
                t = 0
                for ki in k:
                    t = t * d1 + ki
                perm[p * r:(p + 1) * r] = np.arange(t * r, (t + 1) * r)
            self._cache["perm"] = perm
        return self._cache["perm"]

    def to_tensor(self, arr: np.ndarray) -> np.ndarray:
        """Reorder rows from graded layout to lexicographic tensor layout."""
        out = np.empty_like(np.asarray(arr, dtype=complex))
        out[self._tensor_perm()] = arr
        return out

    def from_tensor(self, arr: np.ndarray) -> np.ndarray:
        return np.asarray(arr, dtype=complex)[self._tensor_perm()]

    def shift_up_map(self, i: int) -> np.ndarray:
        """Position of k + e_i for each index position (or -1 past the cap)."""
        key = ("up", i)
        if key not in self._cache:
            up = np.full(self.num_indices, -1, dtype=np.intp)
            for p, k in enumerate(self.indices):
                if k[i] < self.degree:
                    kk = list(k)
                    kk[i] += 1
                    up[p] = self.index_pos[tuple(kk)]
            self._cache[key] = up
        return self._cache[key]

    def margin_mask(self, margin: int) -> np.ndarray:
        """Boolean row mask keeping indices with every component
        <= degree - margin."""
        cap = self.degree - margin
        keep = np.array([all(ki <= cap for ki in k) for k in self.indices])
        return np.repeat(keep, self.coeff_dim)


def shift_matrix(space: TruncatedHardySpace, i: int) -> np.ndarray:
    """Dense matrix of multiplication by z_i on the truncated space
    (top-layer coefficients are annihilated)."""
    N, r = space.total_dim, space.coeff_dim
    S = np.zeros((N, N), dtype=complex)
    up = space.shift_up_map(i)
    for p in range(space.num_indices):
        q = up[p]
        if q >= 0:
            S[q * r:(q + 1) * r, p * r:(p + 1) * r] = np.eye(r)
    return S


def coshift_matrix(space: TruncatedHardySpace, i: int) -> np.ndarray:
    """Adjoint of :func:`shift_matrix`."""
    return shift_matrix(space, i).conj().T


def apply_shift(space: TruncatedHardySpace, arr: np.ndarray, i: int) -> np.ndarray:
    """Apply multiplication by z_i to columns stored as flat vectors,
    without materializing the shift matrix."""
    arr = np.asarray(arr, dtype=complex)
    r = space.coeff_dim
    out = np.zeros_like(arr)
    up = space.shift_up_map(i)
    src = np.nonzero(up >= 0)[0]
    dst = up[src]
    rows_src = (src[:, None] * r + np.arange(r)).ravel()
    rows_dst = (dst[:, None] * r + np.arange(r)).ravel()
    out[rows_dst] = arr[rows_src]
    return out


def apply_coshift(space: TruncatedHardySpace, arr: np.ndarray, i: int) -> np.ndarray:
    arr = np.asarray(arr, dtype=complex)
    r = space.coeff_dim
    out = np.zeros_like(arr)
    up = space.shift_up_map(i)
    src = np.nonzero(up >= 0)[0]
    dst = up[src]
    rows_src = (src[:, None] * r + np.arange(r)).ravel()
    rows_dst = (dst[:, None] * r + np.arange(r)).ravel()
    out[rows_src] = arr[rows_dst]
    return out


def _check_polydisc(*points):
    for z in points:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(np.abs(z) >= 1.0):
            raise PointOutsidePolydisc(f"point {z} not in the open polydisc")


def szego_kernel(z, w) -> complex:
    """Product kernel of the polydisc: prod_i 1 / (1 - z_i conj(w_i))."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if z.shape != w.shape:
        raise ValueError("points must have equal length")
    _check_polydisc(z, w)
    return complex(reduce(lambda a, b: a * b, 1.0 / (1.0 - z * np.conj(w)), 1.0))


def kernel_vector(space: TruncatedHardySpace, w, eta) -> np.ndarray:
    """Truncated reproducing-kernel vector: coefficient at k is
    ``conj(w)^k eta``."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if w.shape[0] != space.n:
        raise ValueError("point dimension mismatch")
    _check_polydisc(w)
    eta = np.asarray(eta, dtype=complex).reshape(space.coeff_dim)
    out = np.zeros(space.total_dim, dtype=complex)
    r = space.coeff_dim
    wc = np.conj(w)
    for p, k in enumerate(space.indices):
        scale = 1.0 + 0.0j
        for ki, wi in zip(k, wc):
            scale *= wi ** ki
        out[p * r:(p + 1) * r] = scale * eta
    return out


def point_evaluation(space: TruncatedHardySpace, flat: np.ndarray, z) -> np.ndarray:
    """Evaluate the stored polynomial at a point of the polydisc."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    flat = np.asarray(flat, dtype=complex)
    r = space.coeff_dim
    val = np.zeros(r, dtype=complex)
    for p, k in enumerate(space.indices):
        scale = 1.0 + 0.0j
        for ki, zi in zip(k, z):
            scale *= zi ** ki
        val += scale * flat[p * r:(p + 1) * r]
    return val


def constants_projection_check(space: TruncatedHardySpace, cfg=None) -> float:
    """Residual of the inclusion-exclusion identity

        sum_{S subset of variables} (-1)^|S| (prod shift_S)(prod coshift_S)
            = projection onto the degree-zero coefficients,

    which holds exactly on the truncated space."""
    N = space.total_dim
    acc = np.zeros((N, N), dtype=complex)
    shifts = [shift_matrix(space, i) for i in range(space.n)]
    for sel in itertools.product((0, 1), repeat=space.n):
        chosen = [i for i, s in enumerate(sel) if s]
        M = np.eye(N, dtype=complex)
        for i in chosen:
            M = shifts[i] @ M
        for i in chosen:
            M = M @ shifts[i].conj().T
        acc += ((-1) ** len(chosen)) * M
    P0 = np.zeros((N, N), dtype=complex)
    p0 = space.index_pos[(0,) * space.n]
    r = space.coeff_dim
    P0[p0 * r:(p0 + 1) * r, p0 * r:(p0 + 1) * r] = np.eye(r)
    return operator_norm(acc - P0)
