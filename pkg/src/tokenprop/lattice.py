"""Laws of intersections of independent random tokens.

Weights live in arrays of length 2^q indexed by mask; index 0 is the empty set. The
law of the intersection of independent random tokens is built by folding pairwise
"intersection convolutions", which only adds nonnegative products, so structural
zeros stay exactly zero.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded


@lru_cache(maxsize=None)
def and_onehot(q: int) -> np.ndarray:
    """(4^q, 2^q) matrix sending the pair index a*2^q+b to column a & b."""
    n = 1 << q
    a, b = np.divmod(np.arange(n * n), n)
    M = np.zeros((n * n, n))
    M[np.arange(n * n), a & b] = 1.0
    M.setflags(write=False)
    return M


def combine(x: np.ndarray, y: np.ndarray, q: int) -> np.ndarray:
    """Law of A & B for independent A ~ x and B ~ y; batched over leading axes."""
    n = 1 << q
    prod = x[..., :, None] * y[..., None, :]
    return prod.reshape(prod.shape[:-2] + (n * n,)) @ and_onehot(q)


def delta_full(q: int, batch=()) -> np.ndarray:
    """Law of the intersection over an empty family: the full token with weight 1."""
    out = np.zeros(tuple(batch) + (1 << q,))
    out[..., (1 << q) - 1] = 1.0
    return out


def intersection_law(laws, q: int) -> np.ndarray:
    """Fold a list of laws (same batch shape) into the law of their intersection."""
    if not laws:
        return delta_full(q)
    acc = laws[0]
    for x in laws[1:]:
        acc = combine(acc, x, q)
    return acc


def leave_one_out_laws(laws, q: int) -> list:
    """For each i, the law of the intersection of all laws except the i-th.

    Uses prefix and suffix folds, so the cost is linear in the number of laws.
    """
    d = len(laws)
    if d == 0:
        return []
    batch = laws[0].shape[:-1]
    prefix = [delta_full(q, batch)]
    for x in laws[:-1]:
        prefix.append(x if len(prefix) == 1 else combine(prefix[-1], x, q))
    suffix = [None] * d
    suffix[d - 1] = delta_full(q, batch)
    for i in range(d - 2, -1, -1):
        suffix[i] = laws[i + 1] if i == d - 2 else combine(laws[i + 1], suffix[i + 1], q)
    out = []
    for i in range(d):
        if i == 0:
            out.append(suffix[0])
        elif i == d - 1:
            out.append(prefix[d - 1])
        else:
            out.append(combine(prefix[i], suffix[i], q))
    return out


def intersection_law_enum(laws, q: int, budget: int = 10**6) -> np.ndarray:
    """Reference path: explicit sum over every tuple of tokens."""
    T = (1 << q) - 1
    if T ** len(laws) > budget:
        raise BudgetExceeded(f"{T}^{len(laws)} tuples exceeds budget {budget}")
    out = np.zeros(1 << q)
    full = (1 << q) - 1
    for tup in itertools.product(range(1, full + 1), repeat=len(laws)):
        w = 1.0
        m = full
        for law, t in zip(laws, tup):
            w *= law[t]
            m &= t
        out[m] += w
    return out
