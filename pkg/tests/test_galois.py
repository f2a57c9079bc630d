import pytest

from pals import fixtures
from pals.analysis import berlekamp_massey
from pals.galois import (
    FactorSet,
    FactorSetError,
    FeedbackPoly,
    Lfsr,
    find_dense_primitive,
    format_poly_line,
    is_irreducible,
    is_primitive,
    parse_poly_line,
    period_by_enumeration,
    weight_window,
)
from pals.keyschedule import MESSAGE_KEY_POLY

X3_X_1 = FeedbackPoly.from_exponents([3, 1, 0])
X4_X_1 = FeedbackPoly.from_exponents([4, 1, 0])
X4_ALL = FeedbackPoly.from_exponents([4, 3, 2, 1, 0])
F15 = FactorSet(4, (3, 5))


def naive_states(poly: FeedbackPoly, stages: list[int]) -> int:
    """Cycle length by list-based shifting, independent of the int engine."""
    L = poly.degree
    taps = [e for e in poly.taps if e > 0]
    start = list(stages)
    s = list(stages)
    for n in range(1, 2**L + 1):
        fb = 0
        for e in taps:
            fb ^= s[e - 1]
        s = [fb] + s[:-1]
        if s == start:
            return n
    raise AssertionError("no cycle")


def test_period_x3_x_1_visits_every_state():
    r = Lfsr(X3_X_1, [0, 0, 1])
    seen = set()
    for _ in range(7):
        seen.add(r.state)
        r.clock()
    assert len(seen) == 7 and 0 not in seen
    assert r.state == Lfsr(X3_X_1, [0, 0, 1]).state
    assert period_by_enumeration(X3_X_1, 0b100) == 7


def test_non_primitive_quartic_period_divides_5():
    for state in range(1, 16):
        p = period_by_enumeration(X4_ALL, state)
        assert 5 % p == 0
        assert p == naive_states(X4_ALL, [(state >> j) & 1 for j in range(4)])


def test_zero_state_rejected():
    with pytest.raises(ValueError):
        Lfsr(X4_X_1, 0)


def test_is_primitive_small_examples():
    assert is_primitive(X4_X_1, F15)
    assert not is_primitive(X4_ALL, F15)
    assert period_by_enumeration(X4_X_1, 1) == 15


def test_message_key_polynomial_is_primitive():
    f = FactorSet(32, (3, 5, 17, 257, 65537))
    assert is_primitive(MESSAGE_KEY_POLY, f)


@pytest.mark.parametrize("L", [2, 3, 4, 5, 7, 8])
def test_is_primitive_agrees_with_enumeration(L):
    f = fixtures.factor_table()[L]
    for value in range(1 << L, 1 << (L + 1)):
        if not value & 1:
            continue
        p = FeedbackPoly.from_int(value)
        full = period_by_enumeration(p, 1) == (1 << L) - 1
        assert is_primitive(p, f) == full, str(p)


def test_is_irreducible_small():
    assert is_irreducible(X4_X_1)
    assert is_irreducible(X4_ALL)
    assert not is_irreducible(FeedbackPoly.from_exponents([4, 2, 0]))


def test_factor_set_validation():
    FactorSet(4, (3, 5)).validate()
    with pytest.raises(FactorSetError):
        FactorSet(4, (3, 7)).validate()
    with pytest.raises(FactorSetError):
        FactorSet(6, (9, 7)).validate()


def test_find_dense_primitive_degree_7():
    p = find_dense_primitive(7, 3, FactorSet(7, (127,)), "t/7")
    assert p.degree == 7 and 3 <= p.weight <= 5
    assert period_by_enumeration(p, 1) == 127


def test_find_dense_primitive_degree_2_unique():
    p = find_dense_primitive(2, 1, FactorSet(2, (3,)), "t/2")
    assert p == FeedbackPoly.from_exponents([2, 1, 0])


def test_find_dense_primitive_deterministic():
    f = FactorSet(7, (127,))
    assert find_dense_primitive(7, 4, f, "same") == find_dense_primitive(7, 4, f, "same")


def test_find_dense_primitive_degree_163():
    f = fixtures.factor_table()[163]
    p = find_dense_primitive(163, 81, f, "t/163")
    lo, hi = weight_window(163, 81)
    assert lo <= p.weight <= hi
    assert is_primitive(p, f)


def test_weight_window_is_clamped():
    assert weight_window(239, 119) == (108, 130)
    assert weight_window(2, 1)[0] >= 3


def test_shipped_polynomials_have_odd_weight_near_half_degree():
    for L, p in fixtures.production_polys().items():
        lo, hi = weight_window(L, L // 2)
        assert p.weight % 2 == 1 and lo <= p.weight <= hi


def test_advance_matches_clocking():
    r = Lfsr(X4_X_1, 0b1011)
    s = r.copy()
    for _ in range(37):
        r.clock()
    s.advance(37)
    assert r.state == s.state


def test_output_sequence_has_linear_complexity_equal_to_degree():
    p = fixtures.toy_polys()[13]
    bits = Lfsr(p, 1).bits(200)
    assert berlekamp_massey(bits).final_lc == 13


def test_poly_line_round_trip():
    p = fixtures.production_polys()[239]
    assert parse_poly_line(format_poly_line(p)) == p
