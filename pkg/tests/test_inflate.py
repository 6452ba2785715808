import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsgroup.groups import GeneratorSet
from fsgroup.inflate import (
    PoolExhaustedError, WindowClipError, assemble_op, canonical_pool, default_window, enlarged_target,
    fredholm_proxy_compare, greedy_inflating,
)
from fsgroup.operators import BandOperator, band_section
from fsgroup.sets import BallCache, FiniteSubset, union
from fsgroup.spectral import sigma_min

from conftest import F2, Z1, interval

GZ, GF = GeneratorSet.standard(Z1), GeneratorSet.standard(F2)
L1 = BandOperator.shift(Z1, (1,))
Lm1 = BandOperator.shift(Z1, (-1,))
I1 = BandOperator.identity(Z1)


def _pairwise_disjoint(sets):
    return all(a.isdisjoint(b) for i, a in enumerate(sets) for b in sets[i + 1:])


def test_canonical_pool_order():
    assert list(canonical_pool(GZ, 2)) == [(0,), (1,), (-1,), (2,), (-2,)]


def test_greedy_examples():
    Y = [interval(-n, n) for n in range(1, 11)]
    inf = greedy_inflating(Y)
    assert inf.shifts[0] == (0,)
    assert _pairwise_disjoint(inf.placed) and inf.pairwise_disjoint()
    inf = greedy_inflating(Y, 1)
    assert len(inf) == 1 and inf.shifts == ((0,),)
    bc = BallCache(GF)
    inf = greedy_inflating([bc.ball(n) for n in range(4)])
    assert _pairwise_disjoint(inf.placed)


@given(st.lists(st.lists(st.integers(-6, 6), min_size=1, max_size=6), min_size=1, max_size=8))
def test_greedy_always_disjoint(raw):
    Y = [FiniteSubset(Z1, [(x,) for x in r]) for r in raw]
    inf = greedy_inflating(Y)
    assert _pairwise_disjoint(inf.placed)
    for P, S, v in zip(inf.placed, inf.sets, inf.shifts):
        assert len(P) == len(S)


def test_pool_exhausted():
    with pytest.raises(PoolExhaustedError):
        greedy_inflating([interval(0, 5), interval(0, 5)], pool_radius=3)


def test_enlarged_target():
    T = enlarged_target(interval(0, 1), BallCache(GZ).ball(1))
    # {-1..1} - {-1..1} + {-1..1}
    assert T == interval(-3, 3)
    Y = [interval(0, n) for n in range(5)]
    inf = greedy_inflating(Y, enlarged=True)
    assert inf.pairwise_disjoint() and all(P <= T for P, T in zip(inf.placed, inf.targets))


def test_assemble_single_block():
    Y = [interval(0, 2)]
    inf = greedy_inflating(Y)
    W = interval(-3, 5)
    A = band_section(I1.scale(2) + L1, Y[0])
    asm = assemble_op([A], inf, W)
    E = asm.matrix.entries
    idx = [W.index[p] for p in Y[0].items]
    assert np.array_equal(E[np.ix_(idx, idx)], A.entries)
    rest = [i for i in range(len(W)) if i not in idx]
    assert np.array_equal(E[np.ix_(rest, rest)], np.eye(len(rest)))
    assert asm.is_block_diagonal()


def test_assemble_identity_blocks():
    Y = [interval(0, n) for n in range(6)]
    inf = greedy_inflating(Y)
    W = default_window(inf)
    asm = assemble_op([band_section(I1, y) for y in Y], inf, W)
    assert np.array_equal(asm.matrix.entries, np.eye(len(W)))


def test_assemble_nilpotent_blocks():
    Y = [interval(0, n) for n in range(8)]
    inf = greedy_inflating(Y)
    W = default_window(inf)
    asm = assemble_op([band_section(L1, y) for y in Y], inf, W)
    assert asm.is_block_diagonal() and sigma_min(asm.matrix) == 0


def test_window_clip():
    Y = [interval(0, 3), interval(0, 3)]
    inf = greedy_inflating(Y)
    W = FiniteSubset(Z1, list(inf.placed[0].items) + [inf.placed[1].items[0]])
    with pytest.raises(WindowClipError) as e:
        assemble_op([band_section(L1, y) for y in Y], inf, W)
    assert e.value.clipped == (1,)
    # blocks fully outside the window are left out silently
    asm = assemble_op([band_section(L1, y) for y in Y], inf, inf.placed[0])
    assert asm.included == (0,)


@pytest.mark.parametrize("A", [L1, I1.scale(2) + L1, L1 + Lm1, I1.scale(0.5) + L1 - Lm1.scale(0.25)])
def test_norm_and_sigma_composition(A):
    Y = [interval(0, n) for n in range(12)]
    inf = greedy_inflating(Y)
    W = default_window(inf)
    asm = assemble_op([band_section(A, y) for y in Y], inf, W)
    assert asm.complement_size > 0
    assert abs(sigma_min(asm.matrix) - asm.predicted_sigma_min()) <= 1e-12
    nrm = np.linalg.norm(asm.matrix.entries, 2)
    assert abs(nrm - asm.predicted_norm()) <= 1e-12


def test_free_group_assembly():
    bc = BallCache(GF)
    Y = [bc.ball(1 + n // 5) for n in range(20)]
    inf = greedy_inflating(Y)
    assert _pairwise_disjoint(inf.placed)
    W = union(F2, inf.placed) | bc.ball(2)
    A = BandOperator(F2, [((1,), 1), ((2,), 0.5), ((), 3)])
    asm = assemble_op([band_section(A, y) for y in Y], inf, W)
    assert asm.is_block_diagonal()
    assert abs(sigma_min(asm.matrix) - asm.predicted_sigma_min()) <= 1e-12


@pytest.mark.parametrize("A,verdict", [(L1, "unstable"), (I1.scale(2) + L1, "stable"), (L1 + Lm1, "unstable"),
                                       (I1, "stable")])
def test_proxy_examples(A, verdict):
    Y = [interval(0, n) for n in range(20)]
    r = fredholm_proxy_compare(A, Y)
    assert r.agree and r.scan_verdict == verdict
    d = r.to_dict()
    assert set(d) >= {"window", "blocks_included", "sigma_min_full", "sigma_min_minus_last", "scan_verdict", "agree"}
    if verdict == "stable":
        assert r.sigma_min_full >= 1 - 1e-12
    else:
        assert r.sigma_min_full == 0
