"""Tokens (nonempty symbol subsets) as integer bitmasks.

A token over an alphabet of size q is an int in [1, 2^q). The value 0 is
reserved as the EMPTY sentinel: it is what a forced-token or intersection
computation returns when no symbol survives, and it is never a valid token.
Tokens iterate in mask order.
"""
from __future__ import annotations

from typing import Iterable, Mapping

from .errors import ParamError

EMPTY = 0
MAX_Q = 16


def check_q(q: int) -> int:
    if not isinstance(q, int) or q < 2 or q > MAX_Q:
        raise ParamError(f"alphabet size must be an integer in [2, {MAX_Q}], got {q!r}")
    return q


def full(q: int) -> int:
    return (1 << q) - 1


def n_tokens(q: int) -> int:
    return (1 << q) - 1


def all_tokens(q: int) -> range:
    """All tokens in mask order."""
    return range(1, 1 << q)


def singleton(r: int) -> int:
    return 1 << r


def from_symbols(symbols: Iterable[int]) -> int:
    m = 0
    for r in symbols:
        m |= 1 << r
    return m


def symbols(mask: int) -> list[int]:
    out = []
    r = 0
    while mask:
        if mask & 1:
            out.append(r)
        mask >>= 1
        r += 1
    return out


def size(mask: int) -> int:
    return bin(mask).count("1")


def is_singleton(mask: int) -> bool:
    return mask != 0 and mask & (mask - 1) == 0


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


def is_token(mask: int, q: int) -> bool:
    return 0 < mask < (1 << q)


def to_str(mask: int) -> str:
    """Sorted symbol digits, e.g. {0, 1} -> "01". The empty sentinel is ""."""
    return "".join(str(r) if r < 10 else chr(ord("a") + r - 10) for r in symbols(mask))


def from_str(s: str) -> int:
    m = 0
    for ch in s:
        r = int(ch) if ch.isdigit() else ord(ch.lower()) - ord("a") + 10
        m |= 1 << r
    return m


def rect_contains(rect: Mapping[int, int], x: Mapping[int, int]) -> bool:
    """Whether the assignment x lies in the Cartesian product described by rect."""
    return all((rect[u] >> x[u]) & 1 for u in rect)


def rect_subset(small: Mapping[int, int], big: Mapping[int, int]) -> bool:
    return small.keys() == big.keys() and all(is_subset(small[u], big[u]) for u in small)
