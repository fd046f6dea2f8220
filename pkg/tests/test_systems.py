import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cubelab import fixedpoint as fx
from cubelab.errors import KindMismatch, OverflowGuard, WindowExhausted
from cubelab.systems import (FactorMap, Product, ProductPoint, Rotation, SkewProduct,
                             SubstitutionSubshift, SymbolicPoint, TorusPoint, apply_power,
                             chacon, distance, factor_project, golden_rotation, golden_skew,
                             golden_sturmian, orbit_sample, resolution_for, system_from_json,
                             torus_point)

from oracles import circ, rotation_steps, skew_steps, sturmian_symbol, two_sided

QUARTER = fx.from_fraction(1, 4)
numerators = st.integers(0, fx.MASK)
powers = st.integers(-(1 << 39), 1 << 39)
CHACON = {"a": "aaba", "b": "b"}


def test_rotation_example():
    r = Rotation(QUARTER, minimal=False)
    assert apply_power(r, torus_point(0), 3) == torus_point("3/4")


def test_skew_example_and_single_steps():
    s = SkewProduct(QUARTER, minimal=False)
    assert apply_power(s, torus_point(0, 0), 4) == torus_point(0, "1/2")
    p = torus_point(0, 0)
    for _ in range(4):
        p = apply_power(s, p, 1)
    assert p == torus_point(0, "1/2")


def test_rational_alpha_needs_minimal_false():
    with pytest.raises(ValueError):
        Rotation(QUARTER)
    with pytest.raises(ValueError):
        SkewProduct(fx.from_fraction(355, 113))


@given(numerators, numerators, st.integers(-300, 300))
def test_skew_closed_form_matches_stepping(x, y, n):
    s = golden_skew()
    assert s.power(TorusPoint((x, y)), n).coords == skew_steps(s.alpha, x, y, n)


@given(numerators, st.integers(-300, 300))
def test_rotation_closed_form_matches_stepping(x, n):
    r = golden_rotation()
    assert r.power(TorusPoint((x,)), n).coords == (rotation_steps(r.alpha, x, n),)


@given(numerators, numerators, powers, powers)
def test_power_composes_exactly(x, y, m, n):
    s = golden_skew()
    p = TorusPoint((x, y))
    assert s.power(s.power(p, m), n) == s.power(p, m + n)


@given(numerators, numerators, powers)
def test_orbit_vectorized_matches_power(x, y, n):
    s = golden_skew()
    p = TorusPoint((x, y))
    xs, ys = s.orbit(p, np.array([n, -n, 0]))
    assert (int(xs[0]), int(ys[0])) == s.power(p, n).coords
    assert (int(xs[1]), int(ys[1])) == s.power(p, -n).coords


def test_power_range_guard():
    with pytest.raises(OverflowGuard):
        apply_power(golden_rotation(), torus_point(0), (1 << 40) + 1)


@given(numerators, numerators, powers)
def test_rotation_is_isometry(a, b, n):
    r = golden_rotation()
    p, q = TorusPoint((a,)), TorusPoint((b,))
    assert r.distance(r.power(p, n), r.power(q, n)) == r.distance(p, q)


@given(st.lists(st.tuples(numerators, numerators), min_size=3, max_size=3))
def test_torus_metric_axioms(coords):
    s = golden_skew()
    p, q, w = (TorusPoint(c) for c in coords)
    assert s.distance(p, q) == s.distance(q, p)
    assert s.distance(p, p) == 0
    assert s.distance(p, w) <= s.distance(p, q) + s.distance(q, w) + 1e-15
    assert s.distance(p, q) == max(circ(a, b) for a, b in zip(p.coords, q.coords))


def test_distance_examples():
    r = golden_rotation()
    assert distance(r, torus_point("0.1"), torus_point("0.9")) == pytest.approx(0.2, abs=1e-15)
    sub = chacon(radius=2)
    p = SymbolicPoint(bytes([0, 0, 0, 1, 0]), 2)
    q = SymbolicPoint(bytes([0, 0, 0, 0, 0]), 2)
    assert sub.distance(p, q) == 0.5
    assert sub.distance(p, p) == 0.0


def test_symbolic_distance_refuses_undecidable_resolution():
    sub = chacon()
    p = SymbolicPoint(bytes([0] * 5), 2)
    q = SymbolicPoint(bytes([0] * 7), 3)
    with pytest.raises(WindowExhausted):
        sub.distance(p, q)


def test_unanchored_window_cannot_shift():
    sub = chacon(radius=2)
    p = SymbolicPoint(bytes([0, 0, 1, 0, 0]), 2)
    assert sub.power(p, 0) is p
    with pytest.raises(WindowExhausted):
        sub.power(p, 1)
    with pytest.raises(WindowExhausted):
        sub.symbols(p, -3, 0)


def test_chacon_windows_match_direct_substitution():
    sub = chacon(radius=64)
    want = two_sided(CHACON, "a", -64, 64)
    assert sub.word(sub.make_point(0), -64, 64) == want
    assert want[64:68] == "aaba" and want[63] == "a"
    # orbit sample M=8: entry n is the window shifted by n
    orbit = orbit_sample(sub, sub.make_point(0), 8)
    assert len(orbit) == 17
    for n, p in orbit:
        assert sub.word(p, -56, 56) == two_sided(CHACON, "a", n - 56, n + 56)


@given(st.integers(-5000, 5000), st.integers(-300, 300))
def test_chacon_shift_consistency(anchor, n):
    sub = chacon(radius=32)
    p = sub.make_point(anchor)
    assert sub.word(sub.power(p, n), -10, 10) == sub.word(p, n - 10, n + 10)


@given(numerators, st.sampled_from(["lower", "upper"]))
def test_sturmian_symbols_match_direct_coding(phase, coding):
    st_ = golden_sturmian(radius=40)
    p = st_.coding(phase, coding)
    got = [int(c) for c in st_.word(p, -40, 40)]
    assert got == [sturmian_symbol(st_.alpha, phase, coding, i) for i in range(-40, 41)]


def test_sturmian_codings_of_zero_differ_in_two_places():
    st_ = golden_sturmian(radius=200)
    lo, up = st_.coding(0, "lower"), st_.coding(0, "upper")
    diff = np.flatnonzero(lo.symbols() != up.symbols()) - 200
    assert diff.tolist() == [-1, 0]


def test_substitution_validation():
    with pytest.raises(ValueError):
        SubstitutionSubshift({"a": "ab", "b": "b"}, "a")  # 'b' never leads back
    with pytest.raises(ValueError):
        SubstitutionSubshift({"a": "ac", "b": "b", "c": "a"}, "a")  # 'b' unreachable
    assert SubstitutionSubshift({"a": "ab", "b": "a"}, "a").alphabet == ("a", "b")


def test_resolution_for():
    assert resolution_for(2 ** -6) == 6
    assert resolution_for(2 ** -4) == 4
    assert resolution_for(0.05) == 4
    for delta in (0.3, 0.01, 1e-3):
        R = resolution_for(delta)
        assert 2.0 ** -(R + 1) < delta <= 2.0 ** -R


@pytest.mark.parametrize("sys", [golden_rotation(), golden_skew(), chacon(), golden_sturmian(),
                                 Product(golden_rotation(), golden_skew()),
                                 Rotation(QUARTER, minimal=False)])
def test_system_json_roundtrip(sys):
    text = sys.dumps()
    back = system_from_json(json.loads(text))
    assert back == sys and back.dumps() == text


@pytest.mark.parametrize("sys", [golden_rotation(), golden_skew(), chacon(), golden_sturmian(),
                                 Product(golden_rotation(), golden_sturmian())])
def test_point_json_roundtrip(sys):
    p = sys.random_point(fx.LCG(4))
    assert sys.point_from_json(json.loads(json.dumps(sys.point_to_json(p)))) == p


def test_factor_examples():
    s = SkewProduct(QUARTER, minimal=False)
    f = FactorMap.skew_to_rotation(s)
    assert factor_project(f, torus_point("0.3", "0.7")) == torus_point("0.3")
    p = torus_point(0, 0)
    assert factor_project(f, apply_power(s, p, 5)) == apply_power(f.target, factor_project(f, p), 5)
    assert factor_project(f, apply_power(s, p, 5)) == torus_point("1/4")
    prod = Product(golden_rotation(), golden_skew())
    left = FactorMap.product_to_left(prod)
    pp = ProductPoint(torus_point("0.1"), torus_point("0.2", "0.3"))
    assert factor_project(left, pp) == torus_point("0.1")
    assert factor_project(FactorMap.product_to_right(prod), pp) == torus_point("0.2", "0.3")


def test_factor_kind_checks():
    with pytest.raises(KindMismatch):
        FactorMap(golden_skew(), golden_skew(), "SkewToRotation")
    with pytest.raises(KindMismatch):
        FactorMap(golden_rotation(), golden_rotation(), "ProductToLeft")
    with pytest.raises(KindMismatch):
        factor_project(FactorMap.skew_to_rotation(golden_skew()), torus_point(0))


@given(numerators, numerators, numerators, numerators, powers)
def test_factor_projection_lipschitz_and_equivariant(a, b, c, d, n):
    s = golden_skew()
    f = FactorMap.skew_to_rotation(s)
    p, q = TorusPoint((a, b)), TorusPoint((c, d))
    assert f.target.distance(factor_project(f, p), factor_project(f, q)) <= s.distance(p, q)
    assert factor_project(f, s.power(p, n)) == f.target.power(factor_project(f, p), n)


def test_orbit_sample_rotation_quarter():
    r = Rotation(QUARTER, minimal=False)
    got = {n: fx.to_float(p.coords[0]) for n, p in orbit_sample(r, torus_point(0), 2)}
    assert got == {-2: 0.5, -1: 0.75, 0: 0.0, 1: 0.25, 2: 0.5}
    assert orbit_sample(r, torus_point(0), 0) == [(0, torus_point(0))]


def test_symbolic_tables_match_pointwise_distance():
    sub = chacon(radius=64)
    p, q = sub.make_point(17), sub.make_point(4242)
    R = 6
    row = sub.table(p, q, -20, 20, resolution=R)
    for k in range(-20, 21):
        d = sub.distance(sub.power(p, k), sub.power(q, k))
        # exact down to 2^-R, clamped to the bound 2^-(R+1) below that
        want = d if d >= 2.0 ** -R else 2.0 ** -(R + 1)
        assert row[k + 20] == want
