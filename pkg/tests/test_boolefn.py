import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pals import fixtures
from pals.boolefn import (
    Anf,
    TruthTable,
    anf_to_tt,
    certify,
    construct_resilient,
    read_table,
    tt_to_anf,
    walsh_spectrum,
    write_table,
)
from pals.keystream import H_MONOMIALS, g_table, h_table


def direct_walsh(t: TruthTable) -> list[int]:
    """W(a) = sum_x (-1)^(f(x) + a.x), evaluated term by term."""
    n = t.n_vars
    return [
        sum((-1) ** (t(x) ^ (bin(a & x).count("1") & 1)) for x in range(1 << n))
        for a in range(1 << n)
    ]


def direct_anf_eval(monomials, n, x):
    return sum(all(x >> (v - 1) & 1 for v in m) for m in monomials) & 1


def test_constant_one_anf():
    t = anf_to_tt(Anf(3, frozenset([frozenset()])))
    assert t.bits.tolist() == [1] * 8


def test_xor_two_variables():
    t = anf_to_tt(Anf(2, frozenset([frozenset({1}), frozenset({2})])))
    assert t.bits.tolist() == [0, 1, 1, 0]


def test_h_anf_round_trip():
    mons = frozenset(frozenset(v + 1 for v in m) for m in H_MONOMIALS)
    t = h_table()
    assert tt_to_anf(t).monomials == mons
    for x in range(512):
        assert t(x) == direct_anf_eval(mons, 9, x)


def test_walsh_constant_zero():
    w = walsh_spectrum(TruthTable(3, np.zeros(8, np.uint8)))
    assert w[0] == 8 and not w[1:].any()


def test_walsh_xor3():
    w = walsh_spectrum(TruthTable.linear(3, 0b111))
    assert abs(w[7]) == 8 and not np.delete(w, 7).any()


def test_majority3():
    t = TruthTable.from_function(3, lambda x: int(bin(x).count("1") >= 2))
    w = walsh_spectrum(t)
    assert np.abs(w).max() == 4
    assert certify(t).nonlinearity == 2
    assert w.tolist() == direct_walsh(t)


def test_certify_xor9():
    r = certify(TruthTable.linear(9, 0x1FF))
    assert (r.balanced, r.ci_order, r.nonlinearity, r.algebraic_degree) == (True, 8, 0, 1)


def test_certify_h():
    r = certify(h_table())
    assert r.balanced and r.algebraic_degree == 7
    assert h_table().weight() == 256


def test_g_is_8_resilient():
    r = certify(g_table())
    assert r.resiliency_order == 8


def test_unbalanced_has_resiliency_minus_one():
    t = TruthTable.from_function(4, lambda x: int(x == 3))
    assert certify(t).resiliency_order == -1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.data())
def test_anf_tt_round_trip(n, data):
    bits = data.draw(st.lists(st.integers(0, 1), min_size=1 << n, max_size=1 << n))
    t = TruthTable(n, np.array(bits, dtype=np.uint8))
    assert anf_to_tt(tt_to_anf(t)) == t


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.data())
def test_walsh_parseval_and_direct_sum(n, data):
    bits = data.draw(st.lists(st.integers(0, 1), min_size=1 << n, max_size=1 << n))
    t = TruthTable(n, np.array(bits, dtype=np.uint8))
    w = walsh_spectrum(t)
    assert int((w.astype(np.int64) ** 2).sum()) == 1 << (2 * n)
    if n <= 4:
        assert w.tolist() == direct_walsh(t)


@pytest.mark.parametrize("mask", [0b1, 0b101, 0b1111, 0b110110])
def test_linear_function_properties(mask):
    n = 6
    r = certify(TruthTable.linear(n, mask))
    assert r.balanced and r.nonlinearity == 0
    assert r.ci_order == bin(mask).count("1") - 1


def test_ci_order_against_subset_counting():
    """Output independent of every m-subset of inputs, checked by counting."""
    t = fixtures.f_tables()[0]
    n = 9
    for subset in itertools.combinations(range(n), 2):
        for vals in itertools.product((0, 1), repeat=2):
            xs = [x for x in range(1 << n) if all((x >> v) & 1 == b for v, b in zip(subset, vals))]
            assert sum(t(x) for x in xs) * 2 == len(xs)


def test_shipped_filters_certify():
    for t in fixtures.f_tables():
        r = certify(t)
        assert r.balanced and r.ci_order >= 2 and r.algebraic_degree == 6 and r.nonlinearity >= 224


def test_construct_resilient_rejects_degree_7():
    with pytest.raises(ValueError):
        construct_resilient(9, 2, 7, b"x")


def test_construct_resilient_distinct_seeds():
    a = construct_resilient(9, 2, 6, "seed-a")
    b = construct_resilient(9, 2, 6, "seed-b")
    assert a != b
    for t in (a, b):
        r = certify(t)
        assert r.balanced and r.ci_order >= 2 and r.algebraic_degree == 6


def test_table_file_round_trip(tmp_path):
    t = fixtures.f_tables()[3]
    write_table(tmp_path / "f.tt", t)
    assert read_table(tmp_path / "f.tt") == t


def test_hex_round_trip_small():
    t = TruthTable(3, np.array([1, 0, 0, 1, 0, 1, 1, 0], np.uint8))
    assert TruthTable.from_hex(3, t.to_hex()) == t
