"""One-variable structure of the model's shift-invariant space: fiber
extraction, wandering subspaces, recovery of the one-variable inner
columns, reconstruction of the sum space, and the rank-one defect
round-trip for co-invariant subspaces of the scalar Hardy space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dilation import build_dilation
from .hardy import TruncatedHardySpace, apply_shift, shift_matrix
from .matrixcore import (
    DEFAULT_TOL,
    ToleranceConfig,
    operator_norm,
    orthonormal_range_basis,
    phase_normalize_columns,
    spectral_radius,
    subspace_distance,
)
from .model import (
    ModelSpaces,
    charfns_for_tuple,
    model_space,
    one_var_toeplitz,
)
from .tuples import ContractionTuple, validate_tuple


class NotCoinvariant(ValueError):
    """The given subspace is not invariant under every adjoint shift."""


@dataclass(frozen=True)
class InvariantSubspace:
    """A (numerically) shift-invariant subspace of the truncated space."""

    ambient: TruncatedHardySpace
    basis: np.ndarray  # (total_dim, m) orthonormal columns
    shift_invariance_residual: tuple

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class OneVarSubspace:
    """A shift-invariant subspace of the one-variable truncated space."""

    degree: int
    coeff_dim: int
    basis: np.ndarray  # ((degree+1) * coeff_dim, m)
    reconstruction_residual: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class InnerColumnSet:
    """Taylor columns (in one variable) of the recovered inner function
    for one variable, with the measured truncation drift."""

    variable: int
    inner_dim: int
    columns: tuple        # columns[m]: (coeff_dim, inner_dim) coefficient block
    coeff_dim: int
    isometry_drift: float

    def taylor(self) -> list:
        return list(self.columns)


def invariant_subspace_from_projection(model: ModelSpaces, i: int, cfg: ToleranceConfig = DEFAULT_TOL) -> InvariantSubspace:
    """Range of the i-th clipped multiplier projection as an
    :class:`InvariantSubspace` of the joint-defect-valued space."""
    P = model.projection_matrix(i)
    basis = orthonormal_range_basis(P, cfg)
    residuals = []
    space = model.space
    for j in range(space.n):
        shifted = apply_shift(space, basis, j)
        leak = shifted - basis @ (basis.conj().T @ shifted)
        residuals.append(operator_norm(leak))
    return InvariantSubspace(space, basis, tuple(residuals))


def fiber_extract(S: InvariantSubspace, i: int, cfg: ToleranceConfig = DEFAULT_TOL, margin: int = None) -> OneVarSubspace:
    """Slice the subspace along the coefficient layers with every other
    variable's degree equal to zero, producing the one-variable fiber.

    Also measures how well the tensor reconstruction (full polydisc
    space in the other variables, fiber in variable ``i``) matches the
    input on margin-restricted layers."""
    space = S.ambient
    d, r = space.degree, space.coeff_dim
    if margin is None:
        margin = max(1, d // 2) if d > 0 else 0
    rows = []
    for m in range(d + 1):
        k = [0] * space.n
        k[i] = m
        p = space.index_pos[tuple(k)]
        rows.extend(range(p * r, (p + 1) * r))
    sliced = S.basis[np.array(rows, dtype=np.intp)]
    fiber_basis = _orthonormal_cols_loose(sliced, cfg)
    # tensor-product reconstruction check on margin layers
    Pf = fiber_basis @ fiber_basis.conj().T
    PS = S.basis @ S.basis.conj().T
    mask = space.margin_mask(margin)
    Pt = np.zeros_like(PS)
    for p, k in enumerate(space.indices):
        for q, l in enumerate(space.indices):
            if all(kj == lj for j, (kj, lj) in enumerate(zip(k, l)) if j != i):
                Pt[p * r:(p + 1) * r, q * r:(q + 1) * r] = Pf[
                    k[i] * r:(k[i] + 1) * r, l[i] * r:(l[i] + 1) * r
                ]
    sel = np.nonzero(mask)[0]
    resid = operator_norm((Pt - PS)[np.ix_(sel, sel)])
    return OneVarSubspace(d, r, fiber_basis, float(resid))


def wandering_basis(S_tilde: OneVarSubspace, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the wandering part: the subspace minus its
    image under multiplication by the variable.

    Only the part of the subspace with vanishing top-degree coefficient
    is shifted: on the truncated space the shift annihilates the top
    layer, and shifting full-tail vectors would smear their dropped
    coefficients across the whole space.  Singular values below
    ``sqrt(tail_tol)`` (relative) are treated as truncation noise."""
    B = S_tilde.basis
    if B.shape[1] == 0:
        return np.zeros((B.shape[0], 0), dtype=complex)
    d, r = S_tilde.degree, S_tilde.coeff_dim
    one_var = TruncatedHardySpace(1, d, r)
    top = B[d * r:(d + 1) * r, :]  # top-degree coefficient functional
    _, s, Vh = np.linalg.svd(top, full_matrices=True)
    rank_top = int(np.sum(s > cfg.rank_tol * s[0])) if s.size and s[0] > 0 else 0
    null = Vh.conj().T[:, rank_top:]
    low = B @ null  # combinations with (numerically) zero top coefficient
    shifted = apply_shift(one_var, low, 0)
    Z = orthonormal_range_basis(shifted, cfg)
    residual = B - Z @ (Z.conj().T @ B)
    U, s, _ = np.linalg.svd(residual, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((B.shape[0], 0), dtype=complex)
    cut = max(cfg.rank_tol, np.sqrt(cfg.tail_tol)) * s[0]
    rank = int(np.sum(s > cut))
    return phase_normalize_columns(U[:, :rank])


def inner_from_wandering(
    W: np.ndarray,
    coeff_dim: int,
    cfg: ToleranceConfig = DEFAULT_TOL,
    variable: int = 0,
) -> InnerColumnSet:
    """Read wandering vectors (columns in the one-variable layout with
    the given coefficient dimension) as the Taylor columns of a
    one-variable inner function, and measure the isometry drift of its
    truncated Toeplitz matrix on the lower half of the layers."""
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2 or W.shape[1] == 0:
        return InnerColumnSet(variable, 0, (), coeff_dim, 0.0)
    rows, m = W.shape
    d = rows // coeff_dim - 1
    cols = tuple(W[k * coeff_dim:(k + 1) * coeff_dim, :].copy() for k in range(d + 1))
    toep = one_var_toeplitz(cols, d)
    gram = toep.conj().T @ toep
    # Only input layers whose shifted columns still fit under the degree
    # cap are meaningful: shifting a column of numerical degree ``deg``
    # by more than d - deg drops genuine coefficients off the top, which
    # would register as spurious drift.
    norms = np.array([np.linalg.norm(c) for c in cols])
    peak = norms.max()
    if peak > 0.0:
        sig = norms > max(cfg.rank_tol, np.sqrt(cfg.tail_tol)) * peak
        deg = int(np.max(np.nonzero(sig)[0])) if sig.any() else 0
    else:
        deg = 0
    top_layer = max(0, min(d // 2, d - deg))
    keep = np.repeat(np.arange(d + 1) <= top_layer, m)
    sel = np.nonzero(keep)[0]
    drift = operator_norm((gram - np.eye(gram.shape[0]))[np.ix_(sel, sel)])
    return InnerColumnSet(variable, m, cols, coeff_dim, float(drift))


def inner_from_fiber(S_tilde: OneVarSubspace, cfg: ToleranceConfig = DEFAULT_TOL, variable: int = 0) -> InnerColumnSet:
    """Wandering-subspace extraction plus Taylor-column packaging."""
    W = wandering_basis(S_tilde, cfg)
    return inner_from_wandering(W, S_tilde.coeff_dim, cfg, variable=variable)


def multiplier_columns(inner: InnerColumnSet, space: TruncatedHardySpace) -> np.ndarray:
    """Images of the full truncated domain under the multiplier by the
    recovered inner function (variable ``inner.variable``), as columns
    in the codomain space ``space``."""
    if inner.inner_dim == 0:
        return np.zeros((space.total_dim, 0), dtype=complex)
    i = inner.variable
    r = space.coeff_dim
    e = inner.inner_dim
    d = space.degree
    dom = TruncatedHardySpace(space.n, d, e)
    out = np.zeros((space.total_dim, dom.total_dim), dtype=complex)
    for p, k in enumerate(dom.indices):
        for m, block in enumerate(inner.columns):
            if k[i] + m > d:
                break
            kk = list(k)
            kk[i] = k[i] + m
            q = space.index_pos[tuple(kk)]
            out[q * r:(q + 1) * r, p * e:(p + 1) * e] = block
    return out


def _orthonormal_cols_loose(M: np.ndarray, cfg: ToleranceConfig) -> np.ndarray:
    """Orthonormal range basis with a truncation-aware relative cutoff:
    singular values below ``sqrt(tail_tol)`` of the largest are treated
    as tail noise, not genuine directions."""
    M = np.asarray(M, dtype=complex)
    if M.shape[1] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    cut = max(cfg.rank_tol, np.sqrt(cfg.tail_tol)) * s[0]
    return phase_normalize_columns(U[:, : int(np.sum(s > cut))])


def reconstruct_S_check(inners, model: ModelSpaces, cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Distance (on margin-restricted layers) between the sum of the
    recovered inner-multiplier ranges and the model's sum space."""
    space = model.space
    blocks = [multiplier_columns(inner, space) for inner in inners]
    stacked = np.concatenate([b for b in blocks if b.shape[1] > 0] or [np.zeros((space.total_dim, 0))], axis=1)
    U = _orthonormal_cols_loose(stacked, cfg)
    PS = model.s_projection()
    PU = U @ U.conj().T
    sel = np.nonzero(space.margin_mask(model.margin))[0]
    return operator_norm((PS - PU)[np.ix_(sel, sel)])


def model_inner_functions(model: ModelSpaces, cfg: ToleranceConfig = DEFAULT_TOL) -> list:
    """Full per-variable pipeline: projection range, fiber, wandering
    subspace, inner Taylor columns."""
    out = []
    for i in range(model.space.n):
        S = invariant_subspace_from_projection(model, i, cfg)
        fiber = fiber_extract(S, i, cfg, margin=model.margin)
        out.append(inner_from_fiber(fiber, cfg, variable=i))
    return out


@dataclass(frozen=True)
class RankOneVerdict:
    """Outcome of the co-invariant-subspace round trip."""

    doubly_commuting: bool
    max_commutation_residual: float
    violating_pair: tuple  # () when doubly commuting
    pure: bool
    defect_rank: int
    constants_compression_rank: int
    recovered_inners: tuple
    complement_distance: float


def rankone_corollary_check(
    Q: np.ndarray,
    space: TruncatedHardySpace,
    cfg: ToleranceConfig = DEFAULT_TOL,
) -> RankOneVerdict:
    """Given an orthonormal basis of a co-invariant subspace of the
    scalar truncated polydisc space, compress the shifts, test double
    commutativity, and - in the doubly commuting pure case - verify the
    rank-one joint defect and recover one-variable inner functions whose
    multiplier sum matches the orthogonal complement of the subspace."""
    if space.coeff_dim != 1:
        raise ValueError("rank-one round trip runs on the scalar space")
    Q = np.asarray(Q, dtype=complex)
    q = Q.shape[1]
    if q == 0:
        raise NotCoinvariant("the zero subspace is not a valid co-invariant input")
    if operator_norm(Q.conj().T @ Q - np.eye(q)) > cfg.check_tol:
        raise NotCoinvariant("basis is not orthonormal")
    P = Q @ Q.conj().T
    shifts = [shift_matrix(space, i) for i in range(space.n)]
    for i, S in enumerate(shifts):
        leak = S.conj().T @ Q - Q @ (Q.conj().T @ (S.conj().T @ Q))
        if operator_norm(leak) > cfg.check_tol:
            raise NotCoinvariant(f"not invariant under adjoint shift {i}")
    comps = [Q.conj().T @ S @ Q for S in shifts]
    worst = 0.0
    violator = ()
    for i in range(space.n):
        for j in range(space.n):
            if i == j:
                continue
            r1 = operator_norm(comps[i] @ comps[j] - comps[j] @ comps[i])
            r2 = operator_norm(comps[i] @ comps[j].conj().T - comps[j].conj().T @ comps[i])
            r = max(r1, r2)
            if r > worst:
                worst = r
                violator = (i, j)
    if worst > cfg.check_tol:
        return RankOneVerdict(
            doubly_commuting=False,
            max_commutation_residual=worst,
            violating_pair=violator,
            pure=False,
            defect_rank=-1,
            constants_compression_rank=-1,
            recovered_inners=(),
            complement_distance=float("nan"),
        )
    tupleC = ContractionTuple(tuple(comps))
    report = validate_tuple(tupleC, cfg)
    pure = all(report.pure)
    # rank of the joint defect square and of the constants compression
    D2 = np.eye(q, dtype=complex)
    for C in comps:
        D2 = D2 @ (np.eye(q) - C @ C.conj().T)
    defect_rank = _numerical_rank(D2, cfg)
    p0 = space.index_pos[(0,) * space.n]
    Pc = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    Pc[p0, p0] = 1.0
    const_rank = _numerical_rank(Q.conj().T @ Pc @ Q, cfg)
    if not pure:
        return RankOneVerdict(
            doubly_commuting=True,
            max_commutation_residual=worst,
            violating_pair=(),
            pure=False,
            defect_rank=defect_rank,
            constants_compression_rank=const_rank,
            recovered_inners=(),
            complement_distance=float("nan"),
        )
    L = build_dilation(tupleC, d=space.degree, cfg=cfg, adaptive=False)
    cfs = charfns_for_tuple(tupleC, L.defects, cfg)
    ms = model_space(tupleC, L, cfs, cfg)
    inners = model_inner_functions(ms, cfg)
    # sum of recovered multiplier ranges, compared against the complement
    # of the input subspace inside the ambient scalar space
    blocks = [multiplier_columns(inner, space) for inner in inners]
    stacked = np.concatenate(
        [b for b in blocks if b.shape[1] > 0] or [np.zeros((space.total_dim, 0))], axis=1
    )
    U = _orthonormal_cols_loose(stacked, cfg)
    PU = U @ U.conj().T
    Pperp = np.eye(space.total_dim, dtype=complex) - P
    sel = np.nonzero(space.margin_mask(ms.margin))[0]
    dist = operator_norm((PU - Pperp)[np.ix_(sel, sel)])
    return RankOneVerdict(
        doubly_commuting=True,
        max_commutation_residual=worst,
        violating_pair=(),
        pure=True,
        defect_rank=defect_rank,
        constants_compression_rank=const_rank,
        recovered_inners=tuple(inners),
        complement_distance=float(dist),
    )


def _numerical_rank(M: np.ndarray, cfg: ToleranceConfig) -> int:
    s = np.linalg.svd(np.asarray(M, dtype=complex), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > np.sqrt(cfg.tail_tol) * s[0]))
