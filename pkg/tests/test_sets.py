import pytest
from hypothesis import given, strategies as st

from fsgroup.groups import GeneratorSet, RadiusCapError
from fsgroup.sets import (
    BallCache, FiniteSubset, omega_boundary, omega_interior, set_liminf_window, set_limsup_window,
    translate_left, translate_right, window_limits,
)

from conftest import F2, GROUPS, H3, Z1, Z2, brute_interior, elements, interval, subsets


def test_ball_examples():
    assert BallCache(GeneratorSet.standard(Z1)).ball(3) == interval(-3, 3)
    assert len(BallCache(GeneratorSet.standard(F2)).ball(2)) == 17
    for g in GROUPS.values():
        assert BallCache(GeneratorSet.standard(g)).ball(0).items == (g.identity(),)


def test_free_sphere_sizes():
    bc = BallCache(GeneratorSet.standard(F2))
    for n in range(1, 7):
        assert len(bc.sphere(n)) == 4 * 3 ** (n - 1)


def test_heisenberg_sphere_sizes():
    bc = BallCache(GeneratorSet.standard(H3))
    assert [len(bc.sphere(n)) for n in range(6)] == [1, 4, 12, 36, 82, 164]


def test_ball_cap():
    bc = BallCache(GeneratorSet.standard(Z1), cap=5)
    with pytest.raises(RadiusCapError):
        bc.ball(6)


def test_ball_prefix_order():
    # nested balls give nested leading blocks of the canonical basis
    bc = BallCache(GeneratorSet.standard(Z2))
    assert bc.ball(4).items[: len(bc.ball(3))] == bc.ball(3).items


def test_interior_examples():
    gz = GeneratorSet.standard(Z1)
    A = interval(-3, 3)
    assert omega_interior(A, gz) == interval(-2, 2)
    assert omega_boundary(A, gz) == FiniteSubset(Z1, [(-3,), (3,)])
    assert omega_interior(FiniteSubset.empty(Z1), gz) == FiniteSubset.empty(Z1)
    g2 = GeneratorSet.standard(Z2)
    bc = BallCache(g2)
    bd = omega_boundary(bc.ball(2), g2)
    assert bd == bc.ball(2) - bc.ball(1) and len(bd) == 8
    trivial = GeneratorSet(Z2, ((0, 0),))
    assert omega_boundary(bc.ball(3), trivial) == FiniteSubset.empty(Z2)
    gf = GeneratorSet.standard(F2)
    bf = BallCache(gf)
    inner = omega_interior(bf.ball(2), gf)
    assert bf.ball(1) <= inner <= bf.ball(2)


@pytest.mark.parametrize("name", list(GROUPS))
def test_interior_matches_definition(name):
    g = GROUPS[name]
    gens = GeneratorSet.standard(g)

    @given(subsets(g, 40, 3))
    def check(A):
        inner = omega_interior(A, gens)
        assert inner == brute_interior(A, gens)
        assert omega_boundary(A, gens) == A - inner
        assert omega_boundary(A, gens) <= A

    check()


@pytest.mark.parametrize("name", list(GROUPS))
def test_right_invariance(name):
    g = GROUPS[name]
    gens = GeneratorSet.standard(g)

    @given(subsets(g, 30, 3), elements(g, 3))
    def check(A, s):
        assert translate_right(omega_interior(A, gens), s) == omega_interior(translate_right(A, s), gens)
        assert translate_right(omega_boundary(A, gens), s) == omega_boundary(translate_right(A, s), gens)

    check()


@pytest.mark.parametrize("name,nmax", [("Z", 12), ("Z2", 10), ("F2", 6), ("H3", 6)])
def test_ball_inclusion_chain(name, nmax):
    g = GROUPS[name]
    gens = GeneratorSet.standard(g)
    bc = BallCache(gens)
    for n in range(1, nmax + 1):
        B, prev = bc.ball(n), bc.ball(n - 1)
        inner = omega_interior(B, gens)
        assert prev <= inner <= B
        assert omega_boundary(B, gens) <= B - prev
        if g.kind == "Z^N":
            assert omega_boundary(B, gens) == B - prev


def test_translate_examples():
    A = interval(0, 2)
    assert translate_right(A, (5,)) == interval(5, 7)
    assert translate_right(A, (0,)) == A
    assert translate_left(A, (5,)) == translate_right(A, (5,))
    u, v = (1,), (2,)
    assert translate_right(FiniteSubset(F2, [(), u]), v) == FiniteSubset(F2, [v, (1, 2)])
    assert translate_left(FiniteSubset(F2, [v]), u) == FiniteSubset(F2, [(1, 2)])
    assert translate_right(FiniteSubset(F2, [v]), u) == FiniteSubset(F2, [(2, 1)])


def test_subset_canonical_and_dump():
    A = FiniteSubset(Z1, [(2,), (-1,), (0,), (2,)])
    assert A.items == ((0,), (-1,), (2,))
    assert A.dumps() == "(0)\n(-1)\n(2)\n"
    assert FiniteSubset.loads(Z1, A.dumps()) == A
    B = FiniteSubset.parse(F2, ["u1u2", "e", "u2'"])
    assert FiniteSubset.loads(F2, B.dumps()) == B


def test_window_limits_examples():
    W = interval(-5, 5)
    seq = [interval(-n, n) for n in range(1, 11)]
    r = window_limits(seq, W)
    assert r.limsup == W and r.liminf == W and r.monotone == "increasing"
    alt = [FiniteSubset(Z1, [(n % 2,)]) for n in range(10)]
    W01 = interval(0, 1)
    assert set_limsup_window(alt, W01) == W01
    assert set_liminf_window(alt, W01) == FiniteSubset.empty(Z1)
    # Omega_n eta_n with eta_n = -n is [-2n, 0]
    seq = [interval(-2 * n, 0) for n in range(1, 21)]
    r = window_limits(seq, interval(-10, 10))
    assert r.limsup == r.liminf == interval(-10, 0)
    with pytest.raises(ValueError):
        window_limits([], W)


@given(st.lists(subsets(Z1, 8, 4), min_size=1, max_size=8))
def test_liminf_inside_limsup(seq):
    r = window_limits(seq, interval(-4, 4))
    assert r.liminf <= r.limsup
