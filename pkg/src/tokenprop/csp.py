"""Constraints, factor graphs, forced tokens and local compatibility."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import tokens as tk
from .errors import (
    BudgetExceeded,
    DegreeViolation,
    IncompleteAssignment,
    MalformedClause,
    MalformedEdge,
    ScopeError,
)

DEFAULT_BUDGET = 10**6


def _member_matrix(q: int) -> np.ndarray:
    """member[i, r] is True when token with index i (mask i+1) contains symbol r."""
    masks = np.arange(1, 1 << q)
    return ((masks[:, None] >> np.arange(q)[None, :]) & 1).astype(bool)


@dataclass(frozen=True)
class Constraint:
    """An extensional constraint: the explicit list of satisfying tuples over its scope."""

    scope: tuple
    sat_set: tuple
    q: int

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        object.__setattr__(self, "scope", scope)
        if len(scope) < 2:
            raise ScopeError(f"constraint arity must be at least 2, got scope {scope}")
        if len(set(scope)) != len(scope):
            raise ScopeError(f"repeated coordinate in scope {scope}")
        sat = tuple(sorted({tuple(int(s) for s in x) for x in self.sat_set}))
        if not sat:
            raise ScopeError("constraint has an empty satisfying set")
        if len(sat) != len(self.sat_set):
            raise ScopeError("duplicate tuples in satisfying set")
        for x in sat:
            if len(x) != len(scope) or any(s < 0 or s >= self.q for s in x):
                raise ScopeError(f"tuple {x} does not fit scope {scope} with q={self.q}")
        object.__setattr__(self, "sat_set", sat)

    @property
    def arity(self) -> int:
        return len(self.scope)

    def position(self, v: int) -> int:
        try:
            return self.scope.index(v)
        except ValueError:
            raise ScopeError(f"coordinate {v} not in scope {self.scope}") from None

    @cached_property
    def sat_lookup(self) -> frozenset:
        return frozenset(self.sat_set)

    def is_full(self) -> bool:
        return len(self.sat_set) == self.q ** self.arity

    def projection(self, p: int) -> int:
        """Mask of symbols appearing at position p in some satisfying tuple."""
        m = 0
        for x in self.sat_set:
            m |= 1 << x[p]
        return m

    def forced_table(self, p: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        """Forced token at position p for every rectangle on the other positions.

        Returns an int array with one axis per scope position; axis p has length 1 and
        every other axis has length 2^q-1 (token index i stands for mask i+1).
        """
        cache = self.__dict__.setdefault("_forced_cache", {})
        if p in cache:
            return cache[p]
        T = tk.n_tokens(self.q)
        k = self.arity
        if T ** (k - 1) > budget:
            raise BudgetExceeded(f"{T}^{k - 1} rectangles exceeds budget {budget}")
        member = _member_matrix(self.q)
        shape = [T] * k
        shape[p] = 1
        table = np.zeros(shape, dtype=np.int64)
        for x in self.sat_set:
            cond = np.ones(shape, dtype=bool)
            for u in range(k):
                if u == p:
                    continue
                sh = [1] * k
                sh[u] = T
                cond = cond & member[:, x[u]].reshape(sh)
            table[cond] |= 1 << x[p]
        table.setflags(write=False)
        cache[p] = table
        return table


@dataclass(frozen=True)
class FactorGraph:
    """Variables 0..n_vars-1 over a shared alphabet of size q, plus extensional constraints.

    labels maps (v, c) to the preferred value L_{v,c} for k-SAT graphs.
    """

    q: int
    n_vars: int
    constraints: tuple
    labels: Mapping | None = None
    check_degree: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        tk.check_q(self.q)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            if c.q != self.q:
                raise ScopeError("constraint alphabet does not match graph alphabet")
            if any(v < 0 or v >= self.n_vars for v in c.scope):
                raise ScopeError(f"scope {c.scope} outside 0..{self.n_vars - 1}")
        if self.check_degree:
            for v, cs in enumerate(self.var_constraints):
                if len(cs) < 2:
                    raise DegreeViolation(f"variable {v} is in {len(cs)} constraint(s); at least 2 required")
        if self.labels is not None:
            labels = dict(self.labels)
            object.__setattr__(self, "labels", labels)
            for ci, c in enumerate(self.constraints):
                excluded = tuple(1 - labels[(v, ci)] for v in c.scope)
                expected = set(itertools.product(range(2), repeat=c.arity)) - {excluded}
                if self.q != 2 or set(c.sat_set) != expected:
                    raise MalformedClause(f"constraint {ci} is not the clause described by its labels")

    @cached_property
    def var_constraints(self) -> tuple:
        """C(v) for every v, each as a sorted tuple of constraint indices."""
        adj = [[] for _ in range(self.n_vars)]
        for ci, c in enumerate(self.constraints):
            for v in c.scope:
                adj[v].append(ci)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def edges(self) -> tuple:
        """All (v, c) incidences in deterministic order (by constraint, then scope position)."""
        return tuple((v, ci) for ci, c in enumerate(self.constraints) for v in c.scope)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def scope(self, c: int) -> tuple:
        return self.constraints[c].scope

    def degree(self, v: int) -> int:
        return len(self.var_constraints[v])

    def is_ksat(self) -> bool:
        return self.labels is not None

    def label(self, v: int, c: int) -> int:
        if self.labels is None:
            raise ScopeError("graph has no k-SAT edge labels")
        return self.labels[(v, c)]

    def neighbors(self, v: int) -> list:
        out = set()
        for c in self.var_constraints[v]:
            out.update(self.constraints[c].scope)
        out.discard(v)
        return sorted(out)


def clause_labels(c: Constraint) -> dict | None:
    """Preferred values if c is a clause (binary alphabet, exactly one excluded tuple)."""
    if c.q != 2 or len(c.sat_set) != 2 ** c.arity - 1:
        return None
    missing = set(itertools.product(range(2), repeat=c.arity)) - set(c.sat_set)
    (x,) = missing
    return {v: 1 - s for v, s in zip(c.scope, x)}


def build_ksat(clauses: Sequence[Sequence[tuple]], n_vars: int, check_degree: bool = True, meta=None) -> FactorGraph:
    """Build a k-SAT factor graph.

    Args:
        clauses: each clause is a list of (coordinate, preferred value) pairs; a literal
            x_i has preferred value 1 and its negation preferred value 0.
        n_vars: number of coordinates.
    """
    constraints = []
    labels = {}
    for ci, clause in enumerate(clauses):
        coords = [int(v) for v, _ in clause]
        if len(coords) < 2:
            raise MalformedClause(f"clause {ci} has fewer than 2 literals")
        if len(set(coords)) != len(coords):
            raise MalformedClause(f"clause {ci} repeats a coordinate")
        prefs = [int(s) for _, s in clause]
        if any(s not in (0, 1) for s in prefs):
            raise MalformedClause(f"clause {ci} has a preferred value outside {{0, 1}}")
        excluded = tuple(1 - s for s in prefs)
        sat = [x for x in itertools.product(range(2), repeat=len(coords)) if x != excluded]
        constraints.append(Constraint(tuple(coords), tuple(sat), 2))
        for v, s in zip(coords, prefs):
            labels[(v, ci)] = s
    return FactorGraph(2, n_vars, tuple(constraints), labels, check_degree, dict(meta or {}))


def coloring_constraint(u: int, v: int, q: int) -> Constraint:
    sat = [(a, b) for a in range(q) for b in range(q) if a != b]
    return Constraint((u, v), tuple(sat), q)


def build_qcol(edges: Iterable[tuple], q: int, n_vars: int | None = None, check_degree: bool = True, meta=None) -> FactorGraph:
    """Build a q-coloring factor graph with one binary "different colors" constraint per edge."""
    seen = set()
    constraints = []
    top = -1
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise MalformedEdge(f"self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise MalformedEdge(f"duplicate edge {key}")
        seen.add(key)
        constraints.append(coloring_constraint(u, v, q))
        top = max(top, u, v)
    n = top + 1 if n_vars is None else n_vars
    return FactorGraph(q, n, tuple(constraints), None, check_degree, dict(meta or {}))


def _check_rect(c: Constraint, v: int, rect: Mapping[int, int]):
    others = set(c.scope) - {v}
    if v not in c.scope or set(rect) != others:
        raise ScopeError(f"rectangle over {sorted(rect)} does not cover scope {c.scope} minus {v}")


def forced_token(g: FactorGraph, c: int, v: int, rect: Mapping[int, int]) -> int:
    """F_c^v(rect): symbols r at v such that some satisfying tuple has v=r and lies in rect.

    Returns tokens.EMPTY when no such symbol exists.
    """
    con = g.constraints[c]
    _check_rect(con, v, rect)
    p = con.position(v)
    sides = [rect.get(u, 0) for u in con.scope]
    out = 0
    for x in con.sat_set:
        if all((sides[i] >> x[i]) & 1 for i in range(con.arity) if i != p):
            out |= 1 << x[p]
    return out


def forceable_tokens(g: FactorGraph, c: int, v: int, budget: int = DEFAULT_BUDGET) -> set:
    """All tokens forced at v by some rectangle on the rest of the scope."""
    con = g.constraints[c]
    table = con.forced_table(con.position(v), budget)
    return {int(m) for m in np.unique(table) if m != tk.EMPTY}


def max_forceable(g: FactorGraph, c: int, v: int) -> int:
    """The largest forceable token, i.e. the projection of the satisfying set onto v."""
    con = g.constraints[c]
    return con.projection(con.position(v))


def max_forceable_excluding(g: FactorGraph, c: int, u: int) -> int:
    """Intersection of max_forceable(b, u) over the other constraints b of u (full if none)."""
    out = tk.full(g.q)
    for b in g.var_constraints[u]:
        if b != c:
            out &= max_forceable(g, b, u)
    return out


@dataclass(frozen=True)
class CompatWitness:
    v: int
    t_v: int
    rect: dict
    u: int
    required: int
    forced: int


def is_locally_compatible(g: FactorGraph, c: int, budget: int = DEFAULT_BUDGET):
    """Decide local compatibility of constraint c.

    Returns (True, None) or (False, CompatWitness). The witness rectangle is over the
    scope minus v and forces t_v at v, yet forces at u a token that misses part of the
    intersection of the largest forceable tokens of u's other constraints.
    """
    con = g.constraints[c]
    k = con.arity
    T = tk.n_tokens(g.q)
    if T ** (k - 1) > budget:
        raise BudgetExceeded(f"{T}^{k - 1} rectangles exceeds budget {budget}")
    shape = (T,) * k
    tables = [np.broadcast_to(con.forced_table(p, budget), shape) for p in range(k)]
    req = [max_forceable_excluding(g, c, u) for u in con.scope]
    for pv, v in enumerate(con.scope):
        sh = [1] * k
        sh[pv] = T
        own = np.arange(1, T + 1).reshape(sh)
        preimage = tables[pv] == own  # rectangle (others) forces exactly the token at axis pv
        for pu, u in enumerate(con.scope):
            if pu == pv:
                continue
            bad = preimage & ((req[pu] & ~tables[pu]) != 0)
            if bad.any():
                idx = np.unravel_index(int(np.flatnonzero(bad)[0]), shape)
                rect = {con.scope[i]: int(idx[i]) + 1 for i in range(k) if i != pv}
                witness = CompatWitness(v, int(idx[pv]) + 1, rect, u, req[pu], int(tables[pu][idx]))
                return False, witness
    return True, None


def satisfies(g: FactorGraph, x) -> bool:
    """Whether the full assignment x (sequence or mapping over all coordinates) satisfies g."""
    if isinstance(x, Mapping):
        missing = [v for v in range(g.n_vars) if v not in x]
    else:
        missing = list(range(len(x), g.n_vars))
    if missing:
        raise IncompleteAssignment(f"coordinates {missing[:5]} unassigned")
    return all(tuple(x[v] for v in con.scope) in con.sat_lookup for con in g.constraints)


def iter_solutions(
    variables: Sequence[int],
    constraints: Sequence[Constraint],
    domains: Mapping[int, int] | None = None,
    q: int | None = None,
) -> Iterator[dict]:
    """Backtracking enumeration of all assignments of `variables` satisfying `constraints`.

    Every constraint scope must be contained in `variables`. domains optionally restricts
    each variable to a token mask.
    """
    order = list(variables)
    if q is None:
        q = constraints[0].q if constraints else 2
    rank = {v: i for i, v in enumerate(order)}
    checks = [[] for _ in order]
    for con in constraints:
        checks[max(rank[v] for v in con.scope)].append(con)
    doms = [tk.symbols(domains.get(v, tk.full(q)) if domains else tk.full(q)) for v in order]
    x = {}

    def rec(i):
        if i == len(order):
            yield dict(x)
            return
        v = order[i]
        for r in doms[i]:
            x[v] = r
            if all(tuple(x[u] for u in con.scope) in con.sat_lookup for con in checks[i]):
                yield from rec(i + 1)
        del x[v]

    yield from rec(0)


def brute_force_solutions(g: FactorGraph) -> list:
    """All satisfying assignments by plain Cartesian-product enumeration (test oracle)."""
    out = []
    for x in itertools.product(range(g.q), repeat=g.n_vars):
        if all(tuple(x[v] for v in con.scope) in con.sat_lookup for con in g.constraints):
            out.append(x)
    return out
