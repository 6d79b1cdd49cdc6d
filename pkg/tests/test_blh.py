"""One-variable invariant-subspace structure: fibers, wandering
subspaces, inner recovery, reconstruction, and the rank-one round trip."""

import numpy as np
import pytest

from dcmodel.blh import (
    NotCoinvariant,
    OneVarSubspace,
    inner_from_wandering,
    model_inner_functions,
    rankone_corollary_check,
    reconstruct_S_check,
    wandering_basis,
)
from dcmodel.dilation import build_dilation
from dcmodel.hardy import TruncatedHardySpace
from dcmodel.model import charfns_for_tuple, model_space
from dcmodel.tuples import make_tensor_tuple


def _model_for(factors, d, adaptive=False):
    T = make_tensor_tuple(factors)
    L = build_dilation(T, d=d, adaptive=adaptive)
    cfs = charfns_for_tuple(T, L.defects)
    return model_space(T, L, cfs)


def _scalar_series(inner):
    return np.array([inner.columns[m][0, 0] for m in range(len(inner.columns))])


def _moebius_series(lam, d):
    out = np.zeros(d + 1, dtype=complex)
    out[0] = -lam
    for m in range(1, d + 1):
        out[m] = (1 - lam ** 2) * lam ** (m - 1)
    return out


def _phase_aligned_error(got, want):
    j = int(np.argmax(np.abs(want)))
    phase = got[j] / want[j]
    phase /= abs(phase)
    return float(np.max(np.abs(got / phase - want[: len(got)])))


class TestWandering:
    def test_monomial_subspace(self):
        # S = span{z, ..., z^d}: wandering part is exactly {z}
        d = 5
        B = np.eye(d + 1, dtype=complex)[:, 1:]
        S = OneVarSubspace(d, 1, B, 0.0)
        W = wandering_basis(S)
        assert W.shape == (d + 1, 1)
        assert abs(W[1, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_full_space_wanders_at_constants(self):
        d = 4
        S = OneVarSubspace(d, 1, np.eye(d + 1, dtype=complex), 0.0)
        W = wandering_basis(S)
        assert W.shape == (d + 1, 1)
        assert abs(W[0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_empty_subspace(self):
        S = OneVarSubspace(3, 1, np.zeros((4, 0), dtype=complex), 0.0)
        assert wandering_basis(S).shape == (4, 0)

    def test_inner_from_wandering_empty(self):
        inn = inner_from_wandering(np.zeros((4, 0)), 1)
        assert inn.inner_dim == 0 and inn.columns == ()


class TestModelInnerFunctions:
    def test_zero_tuple_recovers_coordinates(self):
        ms = _model_for([np.zeros((1, 1)), np.zeros((1, 1))], d=4)
        inners = model_inner_functions(ms)
        for i, inn in enumerate(inners):
            assert inn.inner_dim == 1
            s = _scalar_series(inn)
            want = np.zeros(5, dtype=complex)
            want[1] = 1.0
            assert _phase_aligned_error(s, want) <= 1e-12
        assert reconstruct_S_check(inners, ms) <= 1e-12

    def test_moebius_pair_recovery(self):
        lams = [0.5, 0.6]
        ms = _model_for([[[lam]] for lam in lams], d=20)
        inners = model_inner_functions(ms)
        for lam, inn in zip(lams, inners):
            assert inn.inner_dim == 1
            err = _phase_aligned_error(_scalar_series(inn), _moebius_series(lam, 20))
            assert err <= 1e-6
        assert reconstruct_S_check(inners, ms) <= 1e-5

    def test_nilpotent_exact(self):
        ms = _model_for([[[0.0]], np.array([[0, 0.6], [0, 0]])], d=6)
        inners = model_inner_functions(ms)
        assert reconstruct_S_check(inners, ms) <= 1e-9


@pytest.fixture(scope="module")
def space():
    return TruncatedHardySpace(2, 6, 1)


class TestRankOne:
    def _basis(self, space, monomials):
        Q = np.zeros((space.total_dim, len(monomials)), dtype=complex)
        for j, k in enumerate(monomials):
            Q[space.index_pos[k], j] = 1.0
        return Q

    def test_constants_subspace(self, space):
        v = rankone_corollary_check(self._basis(space, [(0, 0)]), space)
        assert v.doubly_commuting and v.pure
        assert v.defect_rank == 1
        assert v.constants_compression_rank == 1
        assert v.complement_distance <= 1e-10
        # recovered symbols are the coordinate monomials
        for inn in v.recovered_inners:
            s = np.array([inn.columns[m][0, 0] for m in range(len(inn.columns))])
            assert abs(abs(s[1]) - 1.0) <= 1e-12

    def test_monomial_model_subspace(self, space):
        # span{1, z1} is the model of symbols z1^2 and z2
        v = rankone_corollary_check(self._basis(space, [(0, 0), (1, 0)]), space)
        assert v.doubly_commuting and v.pure
        assert v.defect_rank == 1
        assert v.complement_distance <= 1e-10
        degs = sorted(
            int(np.argmax([abs(inn.columns[m][0, 0]) for m in range(len(inn.columns))]))
            for inn in v.recovered_inners
        )
        assert degs == [1, 2]

    def test_negative_case_residual_half(self, space):
        Q = np.zeros((space.total_dim, 2), dtype=complex)
        Q[space.index_pos[(0, 0)], 0] = 1.0
        Q[space.index_pos[(1, 0)], 1] = 1 / np.sqrt(2)
        Q[space.index_pos[(0, 1)], 1] = 1 / np.sqrt(2)
        v = rankone_corollary_check(Q, space)
        assert not v.doubly_commuting
        assert v.max_commutation_residual == pytest.approx(0.5, abs=1e-12)
        assert v.violating_pair in ((0, 1), (1, 0))
        assert v.recovered_inners == ()

    def test_rejects_zero_subspace(self, space):
        with pytest.raises(NotCoinvariant):
            rankone_corollary_check(np.zeros((space.total_dim, 0)), space)

    def test_rejects_non_orthonormal(self, space):
        Q = 2.0 * self._basis(space, [(0, 0)])
        with pytest.raises(NotCoinvariant):
            rankone_corollary_check(Q, space)

    def test_rejects_non_coinvariant(self, space):
        # span{z1} is not invariant under the adjoint shift
        with pytest.raises(NotCoinvariant):
            rankone_corollary_check(self._basis(space, [(1, 0)]), space)

    def test_rejects_vector_coefficients(self):
        sp = TruncatedHardySpace(2, 2, 2)
        with pytest.raises(ValueError):
            rankone_corollary_check(np.zeros((sp.total_dim, 1)), sp)
