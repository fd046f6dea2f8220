import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubelab import fixedpoint as fx
from cubelab.combinatorics import (Arc, ArcBox, Cylinder, VisitSet, Whole, covering_radius, cube_set,
                                   neighborhood_from_json, visit_set)
from cubelab.cubes import permute_vector
from cubelab.errors import KindMismatch, RangeExceeded
from cubelab.systems import Rotation, chacon, golden_rotation, golden_skew, torus_point

import oracles


def vs(entries, M):
    return VisitSet(np.array(sorted(entries), dtype=np.int64), M, {})


def test_arc_wraps_and_is_half_open():
    a = Arc("0.9", "0.1")
    assert a.contains(0) and a.contains(fx.parse("0.95"))
    assert not a.contains(fx.parse("0.1")) and a.contains(fx.parse("0.9"))
    assert not Arc("0.3", "0.3").contains(fx.parse("0.3"))


def test_rational_rotation_visits():
    r = Rotation("0.25", minimal=False)
    S = visit_set(r, torus_point(0), Arc(0, "0.1"), 8)
    assert [n for n in S.entries.tolist() if n >= 0] == [0, 4, 8]
    assert S.contains_base


def test_whole_neighborhood():
    S = visit_set(golden_rotation(), torus_point("0.3"), Whole(), 20)
    assert S.entries.tolist() == list(range(-20, 21))


@given(st.integers(0, fx.MASK), st.integers(0, fx.MASK), st.integers(0, fx.MASK))
@settings(max_examples=30)
def test_bohr_set_matches_loop(x, lo, hi):
    r = golden_rotation()
    S = visit_set(r, torus_point(x), Arc(lo, hi), 300)
    assert S.entries.tolist() == oracles.visit_set_arc(r.alpha, x, lo, hi, 300)


def test_skew_box_visits_match_closed_form():
    s = golden_skew()
    p = torus_point("0.2", "0.7")
    U = ArcBox(((0, "0.5"), ("0.25", "0.75")))
    S = visit_set(s, p, U, 200)
    want = [n for n in range(-200, 201) if U.contains(s.power(p, n))]
    assert S.entries.tolist() == want
    with pytest.raises(KindMismatch):
        visit_set(s, p, Arc(0, "0.5"), 10)


def test_cylinder_visits():
    c = chacon()
    x = c.random_point(fx.LCG(4))
    S = visit_set(c, x, Cylinder("ab", 0), 100)
    word = c.word(x, -100, 101)
    assert S.entries.tolist() == [n for n in range(-100, 101) if word[n + 100:n + 102] == "ab"]
    with pytest.raises(KindMismatch):
        visit_set(golden_rotation(), torus_point(0), Cylinder("a"), 5)


def test_neighborhood_json():
    assert neighborhood_from_json({"whole": True}) == Whole()
    assert neighborhood_from_json({"cylinder": "ab", "offset": 2}) == Cylinder("ab", 2)
    box = neighborhood_from_json({"arcs": [["0", "0.25"]]})
    assert neighborhood_from_json(box.to_json()) == box


def test_indicator_range():
    S = vs([-3, 0, 2], 5)
    assert S.indicator(-3, 2).tolist() == [True, False, False, True, False, True]
    with pytest.raises(RangeExceeded):
        S.indicator(-6, 0)


# ------------------------------------------------------------------ cube sets

def test_cube_set_dimension_one_is_S():
    S = vs([-7, -2, 0, 1, 5, 9], 10)
    C = cube_set(S, 1, 10)
    assert C.as_set() == {(v,) for v in S.entries.tolist()}


def test_cube_set_of_everything_is_full_box():
    S = vs(range(-30, 31), 30)
    C = cube_set(S, 3, 10)
    assert len(C) == 21 ** 3


def test_cube_set_matches_oracle_on_bohr_set():
    r = golden_rotation()
    S = visit_set(r, torus_point(0), Arc("0.9", "0.1"), 200)
    C = cube_set(S, 2, 40)
    assert C.as_set() == oracles.cube_set(S.entries.tolist(), 2, 40)
    assert (0, 0) in C  # every face sum of 0 is 0, which lies in S


def test_cube_set_shell_order():
    S = vs(range(-20, 21, 2), 20)
    pts = [tuple(p) for p in cube_set(S, 2, 6)]
    assert pts == [p for p in oracles.shell_order(2, 6) if p in set(pts)]


@given(st.sets(st.integers(-24, 24), max_size=40), st.integers(1, 3))
@settings(max_examples=40)
def test_cube_set_random_matches_oracle(entries, d):
    box = 24 // d // 2
    S = vs(entries, 24)
    assert cube_set(S, d, box).as_set() == oracles.cube_set(entries, d, box)


@given(st.sets(st.integers(-20, 20), max_size=40), st.sets(st.integers(-20, 20), max_size=10))
@settings(max_examples=30)
def test_cube_set_antitone(a, extra):
    small, big = vs(a, 20), vs(a | extra, 20)
    assert cube_set(small, 2, 10).as_set() <= cube_set(big, 2, 10).as_set()


@given(st.sets(st.integers(-18, 18), max_size=30), st.permutations([0, 1, 2]))
@settings(max_examples=30)
def test_cube_set_permutation_invariant(a, sigma):
    C = cube_set(vs(a, 18), 3, 6).as_set()
    assert {tuple(permute_vector(n, sigma)) for n in C} == C


def test_cube_set_range_check():
    with pytest.raises(RangeExceeded):
        cube_set(vs([0], 10), 3, 4)


# -------------------------------------------------------------- covering radius

def test_covering_radius_examples():
    full = [(i, j) for i in range(-10, 11) for j in range(-10, 11)]
    assert covering_radius(full, 10, 2).covering_radius == 0
    even = [(i, j) for i in range(-10, 11, 2) for j in range(-10, 11, 2)]
    rep = covering_radius(even, 10, 2)
    assert rep.covering_radius == 1 and rep.syndetic_evidence
    assert covering_radius([(0, 0)], 10, 2).covering_radius == 8


def test_covering_radius_infinite_flag():
    rep = covering_radius([(10, 10)], 10, 3)
    assert rep.infinite and not rep.syndetic_evidence
    assert rep.to_json()["radius"] == "infinite"
    assert covering_radius([], 5, 1, d=2).infinite


def test_covering_radius_default_margin_and_errors():
    assert covering_radius([(0,)], 8).margin == 2
    with pytest.raises(ValueError):
        covering_radius([(0,)], 8, 8)


@given(st.sets(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), max_size=12), st.integers(0, 5))
@settings(max_examples=50)
def test_covering_radius_matches_oracle(C, margin):
    rep = covering_radius(C, 6, margin, d=2)
    assert rep.covering_radius == oracles.covering_radius(C, 6, margin, 2)
    if not rep.infinite:
        z = rep.witness_gap
        assert max(abs(v) for v in z) <= 6 - margin
        assert min(max(abs(a - b) for a, b in zip(z, c)) for c in C) == rep.covering_radius


def test_bohr_cube_sets_are_syndetic_at_small_d():
    r = golden_rotation()
    S = visit_set(r, torus_point(0), Arc(0, "0.25"), 200)
    C2 = cube_set(S, 2, 40)
    rep = covering_radius(C2, 40, 10)
    assert rep.covering_radius == oracles.covering_radius(C2.as_set(), 40, 10, 2)
    assert rep.syndetic_evidence
