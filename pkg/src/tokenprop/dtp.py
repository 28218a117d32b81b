"""Deterministic token passing (DTP) and local factor-tree machinery.

Iteration convention: the initial left tokens are the iteration-1 left messages, so the
first call to dtp_iterate only computes right messages. Every later call recomputes all
lefts from the previous rights and then all rights (flooding schedule).
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from . import tokens as tk
from .csp import DEFAULT_BUDGET, FactorGraph
from .errors import BudgetExceeded, InitError

RUNNING = "running"
FIXED_POINT = "fixed_point"
EMPTY_TOKEN = "empty_token"


@dataclass
class DtpStatus:
    kind: str
    edge: tuple | None = None  # ("v->c" | "c->v", v, c) for EMPTY_TOKEN


@dataclass
class TokenState:
    g: FactorGraph
    left: dict  # (v, c) -> mask of t_{v->c}
    right: dict | None = None  # (v, c) -> mask of t_{c->v}
    iteration: int = 0
    halt_on_empty: bool = False
    halted: bool = False
    empty_events: list = field(default_factory=list)


def dtp_init(g: FactorGraph, initial_left: Mapping, halt_on_empty: bool = False) -> TokenState:
    """Start DTP from left tokens given for every (v, c) edge."""
    left = {}
    for e in g.edges:
        if e not in initial_left:
            raise InitError(f"no initial token for edge {e}")
        t = int(initial_left[e])
        if not tk.is_token(t, g.q):
            raise InitError(f"initial token {t} on edge {e} is not a nonempty subset of the alphabet")
        left[e] = t
    return TokenState(g, left, halt_on_empty=halt_on_empty)


def full_init(g: FactorGraph, **kw) -> TokenState:
    return dtp_init(g, {e: tk.full(g.q) for e in g.edges}, **kw)


def left_tokens(g: FactorGraph, right: Mapping) -> dict:
    """t_{v->c} = intersection of t_{b->v} over b in C(v) minus c (full when no other b)."""
    out = {}
    for v, c in g.edges:
        t = tk.full(g.q)
        for b in g.var_constraints[v]:
            if b != c:
                t &= right[(v, b)]
        out[(v, c)] = t
    return out


def right_tokens(g: FactorGraph, left: Mapping) -> dict:
    """t_{c->v} = F_c applied to the product of the other incoming left tokens."""
    out = {}
    for ci, con in enumerate(g.constraints):
        idx = [left[(u, ci)] - 1 for u in con.scope]
        for p, v in enumerate(con.scope):
            if any(idx[i] < 0 for i in range(con.arity) if i != p):
                out[(v, ci)] = tk.EMPTY
                continue
            key = tuple(0 if i == p else idx[i] for i in range(con.arity))
            out[(v, ci)] = int(con.forced_table(p)[key])
    return out


def dtp_iterate(state: TokenState) -> DtpStatus:
    """Advance one iteration and report Running, FixedPoint or the first empty token."""
    g = state.g
    if state.halted:
        return DtpStatus(EMPTY_TOKEN, state.empty_events[-1] if state.empty_events else None)
    old_left, old_right = state.left, state.right
    if state.right is not None:
        state.left = left_tokens(g, state.right)
    state.right = right_tokens(g, state.left)
    state.iteration += 1
    for v, c in g.edges:
        if state.left[(v, c)] == tk.EMPTY:
            return _empty(state, ("v->c", v, c))
    for v, c in g.edges:
        if state.right[(v, c)] == tk.EMPTY:
            return _empty(state, ("c->v", v, c))
    if old_right is not None and old_left == state.left and old_right == state.right:
        return DtpStatus(FIXED_POINT)
    return DtpStatus(RUNNING)


def _empty(state, edge):
    state.empty_events.append((state.iteration, edge))
    if state.halt_on_empty:
        state.halted = True
    return DtpStatus(EMPTY_TOKEN, edge)


def dtp_summary(state: TokenState):
    """Summary tokens t_v = intersection of all incoming rights.

    Returns (tokens, empty) where tokens maps v to a mask and empty lists the
    coordinates whose intersection is empty.
    """
    g = state.g
    if state.right is None:
        raise InitError("summary requested before the first iteration")
    out = {}
    for v in range(g.n_vars):
        t = tk.full(g.q)
        for c in g.var_constraints[v]:
            t &= state.right[(v, c)]
        out[v] = t
    return out, [v for v, t in out.items() if t == tk.EMPTY]


def run_dtp(state: TokenState, iterations: int) -> list:
    statuses = []
    for _ in range(iterations):
        statuses.append(dtp_iterate(state))
    return statuses


# ---------------------------------------------------------------------------
# local balls and factor trees


def ball(g: FactorGraph, v: int, radius: int):
    """BFS over the bipartite factor graph from variable v.

    Returns (dist, parent) keyed by nodes ("v", i) / ("c", j).
    """
    root = ("v", v)
    dist = {root: 0}
    parent = {root: None}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        d = dist[node]
        if d == radius:
            continue
        kind, i = node
        nbrs = [("c", c) for c in g.var_constraints[i]] if kind == "v" else [("v", u) for u in g.scope(i)]
        for nb in nbrs:
            if nb not in dist:
                dist[nb] = d + 1
                parent[nb] = node
                queue.append(nb)
    return dist, parent


def solution_array(variables, constraints, q: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """All satisfying assignments of `constraints` over `variables` by full enumeration.

    Rows follow itertools.product order; columns follow `variables`.
    """
    n = len(variables)
    if q**n > budget:
        raise BudgetExceeded(f"{q}^{n} assignments exceeds budget {budget}")
    col = {v: i for i, v in enumerate(variables)}
    X = np.array(list(itertools.product(range(q), repeat=n)), dtype=np.int64).reshape(-1, n)
    keep = np.ones(len(X), dtype=bool)
    for con in constraints:
        allowed = np.zeros(q**con.arity, dtype=bool)
        for x in con.sat_set:
            allowed[np.ravel_multi_index(x, (q,) * con.arity)] = True
        code = np.ravel_multi_index(tuple(X[:, col[u]] for u in con.scope), (q,) * con.arity)
        keep &= allowed[code]
    return X[keep]


@dataclass(frozen=True)
class FactorTree:
    """A local factor tree rooted at a variable.

    variables/constraints are V[T] and C[T]; leaves are the variables at maximal depth;
    parent maps each non-root variable to the constraint above it.
    """

    g: FactorGraph
    root: int
    depth: int
    variables: tuple
    constraints: tuple
    leaves: tuple
    parent: dict

    @cached_property
    def solutions(self) -> np.ndarray:
        return solution_array(self.variables, [self.g.constraints[c] for c in self.constraints], self.g.q)

    def branch(self, c: int) -> "FactorTree":
        """The subtree through root constraint c (root included)."""
        if c not in self.g.var_constraints[self.root] or c not in self.constraints:
            raise InitError(f"constraint {c} is not attached to the root")
        cons = [c]
        vars_ = [self.root]
        frontier = [c]
        while frontier:
            nxt = []
            for b in frontier:
                for u in self.g.scope(b):
                    if u != self.root and self.parent.get(u) == b:
                        vars_.append(u)
                        for b2 in self.g.var_constraints[u]:
                            if b2 != b and b2 in self.constraints:
                                cons.append(b2)
                                nxt.append(b2)
            frontier = nxt
        vset = set(vars_)
        leaves = tuple(u for u in self.leaves if u in vset)
        return FactorTree(self.g, self.root, self.depth, tuple(vars_), tuple(cons), leaves, self.parent)


def extract_factor_tree(g: FactorGraph, v: int, l: int):
    """T_v^l if the radius-2l ball around v induces a tree with all leaves at depth 2l, else None."""
    if l < 1:
        raise InitError("tree depth l must be at least 1")
    radius = 2 * l
    dist, parent = ball(g, v, radius)
    n_edges = 0
    for node in dist:
        if node[0] == "c":
            n_edges += sum(1 for u in g.scope(node[1]) if ("v", u) in dist)
    if n_edges != len(dist) - 1:
        return None
    variables = tuple(sorted(i for k, i in dist if k == "v"))
    constraints = tuple(sorted(i for k, i in dist if k == "c"))
    leaves = []
    for u in variables:
        if u == v:
            continue
        if all(("c", b) == parent[("v", u)] for b in g.var_constraints[u] if ("c", b) in dist):
            if dist[("v", u)] != radius:
                return None
            leaves.append(u)
    par = {u: parent[("v", u)][1] for u in variables if u != v}
    return FactorTree(g, v, l, variables, constraints, tuple(leaves), par)


def tree_forced_token(T: FactorTree, U, v: int, rect: Mapping[int, int]) -> int:
    """Projection onto v of the tree solutions whose U-coordinates lie in rect."""
    if v in U:
        raise InitError("target coordinate must not be in U")
    sols = T.solutions
    col = {u: i for i, u in enumerate(T.variables)}
    keep = np.ones(len(sols), dtype=bool)
    for u in U:
        keep &= ((rect[u] >> sols[:, col[u]]) & 1).astype(bool)
    out = 0
    for r in np.unique(sols[keep, col[v]]):
        out |= 1 << int(r)
    return out


def local_subgraph(g: FactorGraph, v: int, l: int):
    """G_v^l: constraints within distance 2l-1 of v and all their variables."""
    dist, _ = ball(g, v, 2 * l)
    constraints = sorted(i for k, i in dist if k == "c")
    variables = sorted({u for c in constraints for u in g.scope(c)} | {v})
    return variables, constraints


def local_solution_count(g: FactorGraph, v: int, l: int, budget: int = DEFAULT_BUDGET) -> int:
    """m_v(l): number of values v takes across solutions of G_v^l."""
    variables, constraints = local_subgraph(g, v, l)
    sols = solution_array(variables, [g.constraints[c] for c in constraints], g.q, budget)
    return len(np.unique(sols[:, variables.index(v)]))
