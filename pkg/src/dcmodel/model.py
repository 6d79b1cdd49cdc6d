"""Characteristic functions of the coordinate contractions, their
one-variable multipliers on the truncated polydisc Hardy space, the
closed-form kernel identities, the Gramian identity for the dilation,
commuting-projection algebra, and the model space construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .dilation import DegreeCapExceeded, DilationMap, compressed_tuple_residual
from .hardy import PointOutsidePolydisc, TruncatedHardySpace, szego_kernel
from .matrixcore import (
    DEFAULT_TOL,
    ToleranceConfig,
    operator_norm,
    orthonormal_range_basis,
)
from .tuples import ContractionTuple, DefectData, DefectPair, defect_operators


class ResolventSingular(RuntimeError):
    """The resolvent solve at the requested point is singular."""


class NotProjection(ValueError):
    """A matrix expected to be an orthogonal projection is not."""


class NotCommuting(ValueError):
    """Projections expected to commute do not."""


class MarginTooLarge(ValueError):
    """Margin-restricted comparison was asked to discard every layer."""


class ProjectionDriftExceedsTolerance(RuntimeError):
    """Truncated multiplier projection drifts beyond the certified bound."""


# Spaces at most this total dimension use dense matrices; larger ones
# switch to implicit operators with iterative norm estimation.
DENSE_LIMIT = 6000


@dataclass(frozen=True)
class CharFn:
    """Taylor-coefficient realization of the characteristic function of
    one contraction, as maps between its defect coordinate spaces."""

    op_index: int
    operator: np.ndarray
    pair: DefectPair
    taylor: tuple          # theta_0 = -T compressed, theta_m = D* T^{H(m-1)} D
    decay_rate: float

    @property
    def dim_in(self) -> int:
        return self.pair.basis.shape[1]

    @property
    def dim_out(self) -> int:
        return self.pair.basis_star.shape[1]


def _single_defect_pair(Ti: np.ndarray, cfg: ToleranceConfig) -> DefectPair:
    return defect_operators(ContractionTuple((Ti,)), cfg).per_op[0]


def charfn_eval(Ti, z: complex, pair: DefectPair = None, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Point value of the characteristic function in defect coordinates,
    via a direct resolvent solve: ``-T + D*(I - z T^H)^{-1} z D``."""
    Ti = np.asarray(Ti, dtype=complex)
    if pair is None:
        pair = _single_defect_pair(Ti, cfg)
    I = np.eye(Ti.shape[0], dtype=complex)
    A = I - z * Ti.conj().T
    try:
        if np.linalg.cond(A) > 1e13:
            raise ResolventSingular(f"resolvent ill-conditioned at z={z}")
        mid = np.linalg.solve(A, z * pair.defect)
    except np.linalg.LinAlgError as exc:
        raise ResolventSingular(f"resolvent singular at z={z}") from exc
    ambient = -Ti + pair.defect_star @ mid
    return pair.basis_star.conj().T @ ambient @ pair.basis


def charfn_taylor(
    Ti,
    m_max: int = 512,
    cfg: ToleranceConfig = DEFAULT_TOL,
    pair: DefectPair = None,
    op_index: int = 0,
) -> CharFn:
    """Taylor coefficients of the characteristic function, stopping once
    the norm of the running factor bounds the whole remaining tail below
    ``rank_tol`` (a single small coefficient is not enough: nilpotent
    blocks have interior zero coefficients)."""
    Ti = np.asarray(Ti, dtype=complex)
    if pair is None:
        pair = _single_defect_pair(Ti, cfg)
    Bin, Bout = pair.basis, pair.basis_star
    coeffs = [-(Bout.conj().T @ Ti @ Bin)]
    core = Bout.conj().T @ pair.defect_star  # (r_out, dim)
    P = pair.defect @ Bin                    # (dim, r_in), running T^{H(m-1)} D B
    norms = []
    for _ in range(1, m_max + 1):
        theta = core @ P
        coeffs.append(theta)
        norms.append(operator_norm(theta))
        P = Ti.conj().T @ P
        # every later coefficient factors through P, so ||P|| bounds them all
        if operator_norm(P) <= cfg.rank_tol:
            break
    else:
        # estimate the dropped tail from the measured decay
        if len(norms) >= 2 and norms[-2] > 0 and norms[-1] / norms[-2] < 1.0:
            rho = norms[-1] / norms[-2]
            tail = norms[-1] * rho / (1.0 - rho)
        else:
            tail = float("inf")
        if tail > cfg.tail_tol:
            raise DegreeCapExceeded(
                f"characteristic-function coefficients not decayed at m={m_max}",
                achieved_defect=tail,
            )
    positive = [v for v in norms if v > 0]
    if len(positive) >= 2:
        rate = (positive[-1] / positive[0]) ** (1.0 / max(1, len(positive) - 1))
    else:
        rate = 0.0
    return CharFn(
        op_index=op_index,
        operator=Ti,
        pair=pair,
        taylor=tuple(coeffs),
        decay_rate=float(rate),
    )


def charfn_point_from_taylor(cf: CharFn, z: complex) -> np.ndarray:
    """Horner evaluation of the stored Taylor series."""
    acc = np.zeros((cf.dim_out, cf.dim_in), dtype=complex)
    for theta in reversed(cf.taylor):
        acc = z * acc + theta
    return acc


def taylor_tail_estimate(cf: CharFn, degree: int) -> float:
    """Estimated ``sum_{m > degree} ||theta_m||`` from the stored
    coefficients plus geometric extrapolation of the measured decay."""
    norms = [operator_norm(t) for t in cf.taylor]
    stored = sum(v for m, v in enumerate(norms) if m > degree)
    last = len(norms) - 1
    rho = cf.decay_rate
    if rho <= 0.0 or rho >= 1.0:
        return stored
    gap = max(0, degree - last) + 1 if degree >= last else 1
    extrapolated = norms[-1] * rho ** (max(0, degree - last) + 1) / (1.0 - rho)
    return stored + extrapolated


def charfns_for_tuple(T: ContractionTuple, defects: DefectData = None, cfg: ToleranceConfig = DEFAULT_TOL) -> list:
    if defects is None:
        defects = defect_operators(T, cfg)
    return [
        charfn_taylor(T.matrices[i], cfg=cfg, pair=defects.per_op[i], op_index=i)
        for i in range(T.n)
    ]


def inner_boundary_check(cf: CharFn, samples: int = 64, cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Max norm of ``theta(z)^H theta(z) - I`` over equispaced boundary
    points; the characteristic function of a pure contraction is inner,
    so this vanishes up to numerical error."""
    worst = 0.0
    I = np.eye(cf.dim_in, dtype=complex)
    for t in range(samples):
        z = np.exp(2j * np.pi * t / samples)
        th = charfn_eval(cf.operator, z, cf.pair, cfg)
        worst = max(worst, operator_norm(th.conj().T @ th - I))
    return worst


def one_var_toeplitz(taylor, d: int) -> np.ndarray:
    """Lower-triangular block-Toeplitz matrix of a one-variable symbol
    truncated at degree ``d`` (degree-graded block order)."""
    r_out, r_in = taylor[0].shape
    M = np.zeros(((d + 1) * r_out, (d + 1) * r_in), dtype=complex)
    for k in range(d + 1):
        for m, theta in enumerate(taylor):
            if m > k:
                break
            M[k * r_out:(k + 1) * r_out, (k - m) * r_in:(k - m + 1) * r_in] = theta
    return M


@dataclass(frozen=True)
class OneVarMultiplier:
    """Truncated multiplier by a one-variable symbol acting in variable
    ``char_fn.op_index`` and as the identity in the others."""

    char_fn: CharFn
    domain_space: TruncatedHardySpace
    codomain_space: TruncatedHardySpace
    one_var: np.ndarray  # (d+1) r_out x (d+1) r_in block-Toeplitz

    def full_matrix(self) -> np.ndarray:
        """Dense matrix on the n-variable truncated spaces."""
        dom, cod = self.domain_space, self.codomain_space
        r_in, r_out = dom.coeff_dim, cod.coeff_dim
        i = self.char_fn.op_index
        M = np.zeros((cod.total_dim, dom.total_dim), dtype=complex)
        for p, k in enumerate(dom.indices):
            # input coefficient at k feeds output coefficients at k + m e_i
            for m, theta in enumerate(self.char_fn.taylor):
                if k[i] + m > dom.degree:
                    break
                kk = list(k)
                kk[i] = k[i] + m
                q = cod.index_pos[tuple(kk)]
                M[q * r_out:(q + 1) * r_out, p * r_in:(p + 1) * r_in] = theta
        return M


def multiplier_matrix(cf: CharFn, space: TruncatedHardySpace, cfg: ToleranceConfig = DEFAULT_TOL) -> OneVarMultiplier:
    """Build the truncated multiplier of ``cf`` on a polydisc space with
    the same variable count and degree cap as ``space``."""
    n, d = space.n, space.degree
    dom = TruncatedHardySpace(n, d, cf.dim_in)
    cod = TruncatedHardySpace(n, d, cf.dim_out)
    return OneVarMultiplier(
        char_fn=cf,
        domain_space=dom,
        codomain_space=cod,
        one_var=one_var_toeplitz(cf.taylor, d),
    )


def kernel_identity_check(Ti, samples, cfg: ToleranceConfig = DEFAULT_TOL, pair: DefectPair = None) -> float:
    """Closed-form residual of the one-variable kernel identity

        S(z, w) (I - theta(z) theta(w)^H)
            = D*(I - z T^H)^{-1} (I - conj(w) T)^{-1} D*

    as maps on the star-defect coordinates.  ``samples`` is a sequence
    of scalar pairs (z, w) in the unit disc."""
    Ti = np.asarray(Ti, dtype=complex)
    if pair is None:
        pair = _single_defect_pair(Ti, cfg)
    Bout = pair.basis_star
    I = np.eye(Ti.shape[0], dtype=complex)
    Ir = np.eye(Bout.shape[1], dtype=complex)
    worst = 0.0
    for z, w in samples:
        if abs(z) >= 1.0 or abs(w) >= 1.0:
            raise PointOutsidePolydisc(f"sample ({z}, {w}) outside the disc")
        th_z = charfn_eval(Ti, z, pair, cfg)
        th_w = charfn_eval(Ti, w, pair, cfg)
        lhs = szego_kernel([z], [w]) * (Ir - th_z @ th_w.conj().T)
        amb = np.linalg.solve(
            I - z * Ti.conj().T, np.linalg.solve(I - np.conj(w) * Ti, pair.defect_star)
        )
        rhs = Bout.conj().T @ pair.defect_star @ amb @ Bout
        worst = max(worst, operator_norm(lhs - rhs))
    return worst


def _resolvent_product_ambient(Ti, pair: DefectPair, z: complex, w: complex) -> np.ndarray:
    """``D*(I - z T^H)^{-1} (I - conj(w) T)^{-1} D*`` as an ambient matrix."""
    I = np.eye(Ti.shape[0], dtype=complex)
    mid = np.linalg.solve(I - z * Ti.conj().T, np.linalg.solve(I - np.conj(w) * Ti, pair.defect_star))
    return pair.defect_star @ mid


def _theta_product_ambient(Ti, pair: DefectPair, z: complex, w: complex, cfg) -> np.ndarray:
    """``Theta(z) Theta(w)^H`` embedded back into the ambient space."""
    th_z = charfn_eval(Ti, z, pair, cfg)
    th_w = charfn_eval(Ti, w, pair, cfg)
    Bout = pair.basis_star
    return Bout @ th_z @ th_w.conj().T @ Bout.conj().T


def defect_invariance_check(T: ContractionTuple, samples, cfg: ToleranceConfig = DEFAULT_TOL, defects: DefectData = None) -> float:
    """Max leakage out of the joint defect space under the bracketed
    kernel operators and under ``Theta(z) Theta(w)^H``, over samples of
    polydisc point pairs."""
    if defects is None:
        defects = defect_operators(T, cfg)
    B = defects.big_defect_basis
    P = B @ B.conj().T
    I = np.eye(T.dim, dtype=complex)
    worst = 0.0
    for z, w in samples:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        if np.any(np.abs(z) >= 1.0) or np.any(np.abs(w) >= 1.0):
            raise PointOutsidePolydisc("sample outside the polydisc")
        for i in range(T.n):
            X1 = _resolvent_product_ambient(T.matrices[i], defects.per_op[i], z[i], w[i])
            X2 = _theta_product_ambient(T.matrices[i], defects.per_op[i], z[i], w[i], cfg)
            for X in (X1, X2):
                worst = max(worst, operator_norm((I - P) @ X @ P))
    return worst


def product_kernel_identity_check(T: ContractionTuple, samples, cfg: ToleranceConfig = DEFAULT_TOL, defects: DefectData = None) -> float:
    """Residual of the product kernel identity restricted to the joint
    defect space: the product of the per-variable resolvent kernels
    equals the polydisc kernel times the product of
    ``I - Theta_i(z) Theta_i(w)^H``."""
    if defects is None:
        defects = defect_operators(T, cfg)
    B = defects.big_defect_basis
    I = np.eye(T.dim, dtype=complex)
    worst = 0.0
    for z, w in samples:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        if np.any(np.abs(z) >= 1.0) or np.any(np.abs(w) >= 1.0):
            raise PointOutsidePolydisc("sample outside the polydisc")
        lhs_amb = I.copy()
        rhs_amb = I.copy()
        for i in range(T.n):
            lhs_amb = _resolvent_product_ambient(T.matrices[i], defects.per_op[i], z[i], w[i]) @ lhs_amb
            rhs_amb = (I - _theta_product_ambient(T.matrices[i], defects.per_op[i], z[i], w[i], cfg)) @ rhs_amb
        lhs = B.conj().T @ lhs_amb @ B
        rhs = szego_kernel(z, w) * (B.conj().T @ rhs_amb @ B)
        worst = max(worst, operator_norm(lhs - rhs))
    return worst


def _embedding(defects: DefectData, i: int, cfg: ToleranceConfig) -> np.ndarray:
    """Coordinates of the joint defect basis inside the i-th star-defect
    basis (the joint defect space is contained in each star defect)."""
    Bout = defects.per_op[i].basis_star
    B = defects.big_defect_basis
    E = Bout.conj().T @ B
    leak = operator_norm(B - Bout @ E)
    if leak > 1e-6:
        raise NotProjection(
            f"joint defect space leaks out of star defect {i} by {leak:.2e}"
        )
    return E


def one_var_raw_factors(defects: DefectData, charfns, d: int, cfg: ToleranceConfig = DEFAULT_TOL) -> list:
    """For each variable, the one-variable compression of the truncated
    multiplier projection to joint-defect coefficients:
    ``K^H M_theta M_theta^H K`` with ``K = I_{d+1} (x) embedding``."""
    out = []
    for i, cf in enumerate(charfns):
        E = _embedding(defects, i, cfg)
        M1 = one_var_toeplitz(cf.taylor, d)          # (d+1) r_out x (d+1) r_in
        K = np.kron(np.eye(d + 1, dtype=complex), E)  # (d+1) r_out x (d+1) r
        A = K.conj().T @ (M1 @ (M1.conj().T @ K))
        out.append(0.5 * (A + A.conj().T))
    return out


def clip_to_projection(A: np.ndarray) -> tuple:
    """Round a nearly-idempotent Hermitian matrix to the nearest genuine
    orthogonal projection (eigenvalues snapped to 0/1 at 1/2); returns
    the projection and the drift ``||P - A||``."""
    H = 0.5 * (A + A.conj().T)
    w, V = np.linalg.eigh(H)
    snapped = (w.real >= 0.5).astype(float)
    P = (V * snapped) @ V.conj().T
    return P, operator_norm(P - A)


def apply_one_var_factor(space: TruncatedHardySpace, A: np.ndarray, i: int, V: np.ndarray) -> np.ndarray:
    """Apply ``I (x) A (x) I`` (A acting jointly on the k_i index and the
    coefficient slot) to flat column vectors."""
    V = np.asarray(V, dtype=complex)
    single = V.ndim == 1
    if single:
        V = V[:, None]
    d1, r, n = space.degree + 1, space.coeff_dim, space.n
    m = V.shape[1]
    Tn = space.to_tensor(V).reshape((d1,) * n + (r, m))
    A4 = A.reshape(d1, r, d1, r)
    res = np.tensordot(A4, Tn, axes=([2, 3], [i, n]))
    # res axes: (k_i', coeff', other k's..., m) -> restore canonical order
    res = np.moveaxis(res, [0, 1], [i, n])
    out = space.from_tensor(res.reshape(space.total_dim, m))
    return out[:, 0] if single else out


def _masked_opnorm_hermitian(apply_X, mask: np.ndarray, N: int) -> float:
    """Spectral norm of ``P_mask X P_mask`` for Hermitian ``X`` given as
    a matvec callable."""
    active = int(mask.sum())
    if active == 0:
        return 0.0

    def mv(v):
        v = np.asarray(v, dtype=complex).reshape(N)
        return mask * apply_X(mask * v)

    if active <= 2:
        # eigsh needs k < n; fall back to a dense mini-block
        idx = np.nonzero(mask)[0]
        cols = []
        for j in idx:
            e = np.zeros(N, dtype=complex)
            e[j] = 1.0
            cols.append(mv(e)[idx])
        return operator_norm(np.array(cols).T)
    rng = np.random.default_rng(1234)
    v0 = mask * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    v0 /= np.linalg.norm(v0)
    probe = float(np.linalg.norm(mv(v0)))
    if probe < 1e-13:
        return probe
    op = spla.LinearOperator((N, N), matvec=mv, dtype=complex)
    try:
        vals = spla.eigsh(
            op, k=1, which="LM", return_eigenvectors=False, tol=1e-10, v0=v0.real + 0.0
        )
        return float(abs(vals[0]))
    except spla.ArpackError:
        # plain power iteration fallback
        v = v0
        lam = probe
        for _ in range(200):
            w = mv(v)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            lam = nw
            v = w / nw
        return float(lam)


def gramian_identity_check(
    L: DilationMap,
    charfns,
    mode: str = "kernel",
    samples=None,
    margin: int = None,
    cfg: ToleranceConfig = DEFAULT_TOL,
) -> float:
    """Residual of the Gramian identity relating the dilation to the
    one-variable multiplier projections.

    kernel mode: exact closed forms at sample point pairs (no
    truncation); operator mode: compare the truncated matrices of
    ``L L^H`` and the product of multiplier complements on the layers
    with all components at most ``degree - margin``."""
    T = L.tuple
    defects = L.defects
    B = defects.big_defect_basis
    if mode == "kernel":
        if samples is None:
            raise ValueError("kernel mode needs samples of (z, w) pairs")
        I = np.eye(T.dim, dtype=complex)
        worst = 0.0
        for z, w in samples:
            z = np.atleast_1d(np.asarray(z, dtype=complex))
            w = np.atleast_1d(np.asarray(w, dtype=complex))
            if np.any(np.abs(z) >= 1.0) or np.any(np.abs(w) >= 1.0):
                raise PointOutsidePolydisc("sample outside the polydisc")
            Vw = defects.big_defect @ B
            Vz = defects.big_defect @ B
            for i in range(T.n):
                Vw = np.linalg.solve(I - np.conj(w[i]) * T.matrices[i], Vw)
                Vz = np.linalg.solve(I - np.conj(z[i]) * T.matrices[i], Vz)
            lhs = Vz.conj().T @ Vw
            amb = I.copy()
            for i in range(T.n):
                amb = (
                    I - _theta_product_ambient(T.matrices[i], defects.per_op[i], z[i], w[i], cfg)
                ) @ amb
            rhs = szego_kernel(z, w) * (B.conj().T @ amb @ B)
            worst = max(worst, operator_norm(lhs - rhs))
        return worst
    if mode != "operator":
        raise ValueError(f"unknown mode {mode!r}")
    d = L.degree
    if margin is None:
        margin = d // 2
    if margin >= d:
        raise MarginTooLarge(f"margin {margin} >= degree {d}")
    space = L.space
    factors = one_var_raw_factors(defects, charfns, d, cfg)
    mask = space.margin_mask(margin).astype(float)
    N = space.total_dim

    def apply_X(v):
        lhs = L.matrix @ (L.matrix.conj().T @ v)
        rhs = v.copy()
        for i, A in enumerate(factors):
            rhs = rhs - apply_one_var_factor(space, A, i, rhs)
        return lhs - rhs

    if N <= DENSE_LIMIT:
        I = np.eye(N, dtype=complex)
        X = np.column_stack([apply_X(I[:, j]) for j in range(N)])
        sel = mask > 0
        return operator_norm(X[np.ix_(sel, sel)])
    return _masked_opnorm_hermitian(apply_X, mask, N)


def sum_projection(projections, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Projection onto the (closed) sum of the ranges of a commuting
    family of orthogonal projections: ``I - prod(I - P_i)``."""
    mats = [np.asarray(P, dtype=complex) for P in projections]
    if not mats:
        raise ValueError("need at least one projection")
    N = mats[0].shape[0]
    for P in mats:
        if P.shape != (N, N):
            raise NotProjection("projections must be square and equal-sized")
        if operator_norm(P - P.conj().T) > cfg.check_tol:
            raise NotProjection("matrix is not Hermitian")
        if operator_norm(P @ P - P) > cfg.check_tol:
            raise NotProjection("matrix is not idempotent")
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            if operator_norm(mats[a] @ mats[b] - mats[b] @ mats[a]) > cfg.check_tol:
                raise NotCommuting(f"projections {a} and {b} do not commute")
    acc = np.eye(N, dtype=complex)
    for P in mats:
        acc = acc @ (np.eye(N, dtype=complex) - P)
    return np.eye(N, dtype=complex) - acc


@dataclass
class ModelSpaces:
    """Model-space data: per-variable clipped multiplier projections (in
    one-variable compressed form), the dilation range basis, and the
    residuals tying them together."""

    space: TruncatedHardySpace
    charfns: list
    one_var_raw: list
    one_var_proj: list
    drifts: list
    margin_drifts: list
    commutator_residuals: dict
    q_basis: np.ndarray
    s_residual: float
    compression_residuals: list
    margin: int
    _dense: dict = field(default_factory=dict, repr=False)

    def apply_s_complement(self, V: np.ndarray) -> np.ndarray:
        """Apply ``prod(I - P_i)`` (clipped projections) to flat columns."""
        out = np.asarray(V, dtype=complex)
        for i, A in enumerate(self.one_var_proj):
            out = out - apply_one_var_factor(self.space, A, i, out)
        return out

    def projection_matrix(self, i: int) -> np.ndarray:
        """Dense matrix of the clipped projection for variable ``i``
        (small spaces only)."""
        key = ("P", i)
        if key not in self._dense:
            N = self.space.total_dim
            if N > DENSE_LIMIT:
                raise MemoryError("space too large for dense projections")
            I = np.eye(N, dtype=complex)
            self._dense[key] = apply_one_var_factor(self.space, self.one_var_proj[i], i, I)
        return self._dense[key]

    def s_projection(self) -> np.ndarray:
        """Dense projection onto the model's shift-invariant sum space."""
        if "S" not in self._dense:
            N = self.space.total_dim
            if N > DENSE_LIMIT:
                raise MemoryError("space too large for a dense projection")
            I = np.eye(N, dtype=complex)
            self._dense["S"] = I - self.apply_s_complement(I)
        return self._dense["S"]

    def s_range_basis(self, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
        return orthonormal_range_basis(self.s_projection(), cfg)


def model_space(
    T: ContractionTuple,
    L: DilationMap,
    multipliers,
    cfg: ToleranceConfig = DEFAULT_TOL,
    margin: int = None,
) -> ModelSpaces:
    """Assemble the model space from the dilation and the per-variable
    multipliers (given as :class:`CharFn` or :class:`OneVarMultiplier`).

    Clips each compressed multiplier projection to a genuine projection,
    certifies the drift against the measured symbol tail, and records
    the residual between the dilation range and the complement of the
    multiplier sum space on the margin-restricted layers."""
    charfns = [m.char_fn if isinstance(m, OneVarMultiplier) else m for m in multipliers]
    d = L.degree
    if margin is None:
        margin = max(1, d // 2)
    if margin >= d and d > 0:
        margin = d - 1
    if d == 0:
        margin = 0
    space = L.space
    raw = one_var_raw_factors(L.defects, charfns, d, cfg)
    proj, drifts, margin_drifts = [], [], []
    r = space.coeff_dim
    row_keep = np.repeat(np.arange(d + 1) <= d - margin, r)
    for i, A in enumerate(raw):
        P, drift = clip_to_projection(A)
        proj.append(P)
        drifts.append(drift)
        diff = (P - A)[np.ix_(row_keep, row_keep)]
        md = operator_norm(diff)
        margin_drifts.append(md)
        bound = max(cfg.tail_tol, 10.0 * taylor_tail_estimate(charfns[i], d - margin))
        if md > bound:
            raise ProjectionDriftExceedsTolerance(
                f"variable {i}: clipped-projection drift {md:.3e} exceeds bound {bound:.3e}"
            )
    N = space.total_dim
    mask = space.margin_mask(margin).astype(float)
    # pairwise commutators of the full-space projections, margin-restricted
    comms = {}
    for a in range(T.n):
        for b in range(a + 1, T.n):
            def apply_comm(v, a=a, b=b):
                Pa = lambda x: apply_one_var_factor(space, proj[a], a, x)
                Pb = lambda x: apply_one_var_factor(space, proj[b], b, x)
                return 1j * (Pa(Pb(v)) - Pb(Pa(v)))
            comms[(a, b)] = _masked_opnorm_hermitian(apply_comm, mask, N)
    q_basis = orthonormal_range_basis(L.matrix, cfg)

    def apply_X(v):
        lhs = q_basis @ (q_basis.conj().T @ v)
        rhs = v.copy()
        for i, A in enumerate(proj):
            rhs = rhs - apply_one_var_factor(space, A, i, rhs)
        return lhs - rhs

    s_residual = _masked_opnorm_hermitian(apply_X, mask, N)
    comp = compressed_tuple_residual(L)
    return ModelSpaces(
        space=space,
        charfns=charfns,
        one_var_raw=raw,
        one_var_proj=proj,
        drifts=drifts,
        margin_drifts=margin_drifts,
        commutator_residuals=comms,
        q_basis=q_basis,
        s_residual=float(s_residual),
        compression_residuals=comp,
        margin=margin,
    )
