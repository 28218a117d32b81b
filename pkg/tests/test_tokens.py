import pytest
from hypothesis import given
from hypothesis import strategies as st

from tokenprop import tokens as tk
from tokenprop.errors import ParamError

masks = st.integers(min_value=0, max_value=(1 << 8) - 1)


def test_basic_values():
    assert tk.full(3) == 7
    assert tk.n_tokens(3) == 7
    assert list(tk.all_tokens(2)) == [1, 2, 3]
    assert tk.singleton(2) == 4
    assert tk.from_symbols([0, 2]) == 5
    assert tk.symbols(5) == [0, 2]
    assert tk.size(7) == 3


def test_string_form_is_zero_based_sorted_digits():
    assert tk.to_str(tk.full(3)) == "012"
    assert tk.to_str(tk.from_symbols([2, 0])) == "02"
    assert tk.to_str(tk.EMPTY) == ""
    assert tk.from_str("12") == 6


def test_large_alphabet_symbols_use_letters():
    assert tk.to_str(1 << 10) == "a"
    assert tk.from_str("a") == 1 << 10


@pytest.mark.parametrize("q", [1, 0, 17, 2.0])
def test_check_q_rejects(q):
    with pytest.raises(ParamError):
        tk.check_q(q)


def test_empty_is_never_a_token():
    assert not tk.is_token(tk.EMPTY, 3)
    assert not tk.is_token(8, 3)
    assert tk.is_token(7, 3)


@given(masks)
def test_str_round_trip(m):
    assert tk.from_str(tk.to_str(m)) == m


@given(masks, masks)
def test_subset_matches_set_semantics(a, b):
    assert tk.is_subset(a, b) == set(tk.symbols(a)).issubset(tk.symbols(b))


@given(masks)
def test_singleton_predicate(m):
    assert tk.is_singleton(m) == (len(tk.symbols(m)) == 1)


def test_rectangles():
    rect = {0: 0b011, 1: 0b100}
    assert tk.rect_contains(rect, {0: 1, 1: 2})
    assert not tk.rect_contains(rect, {0: 2, 1: 2})
    assert tk.rect_subset({0: 0b001, 1: 0b100}, rect)
    assert not tk.rect_subset({0: 0b001}, rect)
