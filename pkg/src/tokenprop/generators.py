"""Random and hand-built instance generators."""
from __future__ import annotations

import itertools

import numpy as np

from .csp import Constraint, FactorGraph, build_ksat, build_qcol, coloring_constraint
from .errors import DegreeViolation, ParamError


def gen_random_ksat(n: int, m: int, k: int = 3, seed: int = 0, planted=None, max_tries: int = 1000) -> FactorGraph:
    """Random k-SAT with m clauses over n variables, each variable in at least two clauses.

    planted may be a 0/1 sequence of length n or True for a random hidden assignment; clauses
    violated by it are rejected, so the instance is satisfiable by construction.
    """
    if k < 2 or k > n or m * k < 2 * n:
        raise ParamError(f"cannot build a k-SAT instance with n={n}, m={m}, k={k} and all degrees >= 2")
    rng = np.random.default_rng(seed)
    if planted is True:
        planted = [int(b) for b in rng.integers(0, 2, size=n)]
    if planted is not None:
        planted = [int(b) for b in planted]
        if len(planted) != n:
            raise ParamError("planted assignment must cover every variable")
    for _ in range(max_tries):
        clauses = []
        while len(clauses) < m:
            vs = rng.choice(n, size=k, replace=False)
            prefs = rng.integers(0, 2, size=k)
            if planted is not None and all(planted[v] != p for v, p in zip(vs, prefs)):
                continue
            clauses.append([(int(v), int(p)) for v, p in zip(vs, prefs)])
        deg = np.zeros(n, dtype=int)
        for cl in clauses:
            for v, _ in cl:
                deg[v] += 1
        if deg.min() >= 2:
            meta = {"kind": "ksat", "n": n, "m": m, "k": k, "alpha": m / n, "seed": seed}
            if planted is not None:
                meta["planted"] = planted
            return build_ksat(clauses, n, meta=meta)
    raise DegreeViolation(f"no instance with all degrees >= 2 after {max_tries} tries")


def gen_random_qcol(n: int, m: int, q: int = 3, seed: int = 0, max_tries: int = 1000) -> FactorGraph:
    """Random simple graph with m edges and minimum degree 2, as a q-coloring instance."""
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if m > len(pairs) or 2 * m < 2 * n:
        raise ParamError(f"cannot build a simple graph with n={n}, m={m} and all degrees >= 2")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        idx = rng.choice(len(pairs), size=m, replace=False)
        edges = sorted(pairs[i] for i in idx)
        deg = np.zeros(n, dtype=int)
        for u, v in edges:
            deg[u] += 1
            deg[v] += 1
        if deg.min() >= 2:
            return build_qcol(edges, q, n, meta={"kind": "qcol", "n": n, "m": m, "q": q, "seed": seed})
    raise DegreeViolation(f"no graph with all degrees >= 2 after {max_tries} tries")


def random_constraint(scope, q: int, rng, density: float = 0.6, must_contain=None) -> Constraint:
    """Constraint over scope keeping each tuple with probability density (never empty)."""
    tuples = list(itertools.product(range(q), repeat=len(scope)))
    keep = [t for t in tuples if rng.random() < density]
    if must_contain is not None and tuple(must_contain) not in keep:
        keep.append(tuple(must_contain))
    if not keep:
        keep = [tuples[int(rng.integers(len(tuples)))]]
    return Constraint(tuple(scope), tuple(keep), q)


def gen_random_csp(n: int, m: int, q: int = 2, arity=(2, 3), seed: int = 0, density: float = 0.6, planted=None, max_tries=1000):
    """Random extensional CSP with minimum degree 2.

    planted: optional assignment (or True for a random one) contained in every constraint.
    Returns (graph, planted assignment or None).
    """
    rng = np.random.default_rng(seed)
    if planted is True:
        planted = [int(x) for x in rng.integers(0, q, size=n)]
    for _ in range(max_tries):
        cons = []
        deg = np.zeros(n, dtype=int)
        for _ in range(m):
            a = int(rng.choice(arity))
            scope = [int(x) for x in rng.choice(n, size=a, replace=False)]
            must = [planted[v] for v in scope] if planted is not None else None
            cons.append(random_constraint(scope, q, rng, density, must))
            deg[scope] += 1
        if deg.min() >= 2:
            meta = {"kind": "csp", "n": n, "m": m, "q": q, "seed": seed}
            return FactorGraph(q, n, tuple(cons), meta=meta), planted
    raise DegreeViolation(f"no instance with all degrees >= 2 after {max_tries} tries")


def gen_local_tree_instance(l: int, q: int = 2, seed: int = 0, max_vars: int = 14, density: float = 0.6):
    """Instance whose radius-2l ball around variable 0 is a factor tree.

    A random tree of depth 2l is grown from variable 0 (variables get 1 or 2 child
    constraints, constraints get 1 or 2 child variables), random constraints are placed on
    it, and the leaves are then paired up by extra binary constraints beyond depth 2l so that
    every degree is at least 2. Returns (graph, root).
    """
    rng = np.random.default_rng(seed)
    for _ in range(200):
        scopes = []
        n = 1
        frontier = [0]
        for depth in range(l):
            nxt = []
            for v in frontier:
                n_child = 2 if depth == 0 else int(rng.choice([1, 1, 1, 2]))
                for _ in range(n_child):
                    width = int(rng.choice([1, 1, 1, 2]))
                    kids = list(range(n, n + width))
                    n += width
                    scopes.append([v] + kids)
                    nxt.extend(kids)
            frontier = nxt
        if n > max_vars:
            continue
        leaves = list(frontier)
        if len(leaves) < 2:
            continue
        rng.shuffle(leaves)
        closing = []
        for i in range(0, len(leaves) - 1, 2):
            closing.append([leaves[i], leaves[i + 1]])
        if len(leaves) % 2:
            closing.append([leaves[-1], leaves[0]])
        cons = [random_constraint(s, q, rng, density) for s in scopes]
        cons += [random_constraint(s, q, rng, 0.8) for s in closing]
        try:
            g = FactorGraph(q, n, tuple(cons), meta={"kind": "local-tree", "l": l, "seed": seed})
        except DegreeViolation:
            continue
        return g, 0
    raise ParamError("could not grow a small enough tree")


def counterexample_instance() -> FactorGraph:
    """Three ternary variables v=0, u=1, w=2 with a constraint c on (v, u) that is not locally compatible.

    c = {(0,0),(0,1),(1,2),(2,2)} on (v, u) and b = {(0,0),(1,1),(2,1)} on (u, w). A
    "different values" padding constraint on (v, w) lifts every degree to 2; it does not
    touch u, so the largest forceable token of u through b stays {0,1,2}.
    """
    c = Constraint((0, 1), ((0, 0), (0, 1), (1, 2), (2, 2)), 3)
    b = Constraint((1, 2), ((0, 0), (1, 1), (2, 1)), 3)
    pad = coloring_constraint(0, 2, 3)
    return FactorGraph(3, 3, (c, b, pad), meta={"kind": "counterexample"})


def toy_formula_instance() -> FactorGraph:
    """(x1 or not x2 or not x4) and (x1 or x3 or not x5) and (x2 or x4 or x5), 0-indexed.

    x3 appears in a single clause, so the minimum-degree check is disabled.
    """
    clauses = [[(0, 1), (1, 0), (3, 0)], [(0, 1), (2, 1), (4, 0)], [(1, 1), (3, 1), (4, 1)]]
    return build_ksat(clauses, 5, check_degree=False, meta={"kind": "toy-formula"})


def ring_instance(constraints_by_edge, n: int, q: int) -> FactorGraph:
    """Cycle x0 - x1 - ... - x{n-1} - x0 with the given binary satisfying sets (one per edge)."""
    cons = [Constraint((i, (i + 1) % n), tuple(sat), q) for i, sat in enumerate(constraints_by_edge)]
    return FactorGraph(q, n, tuple(cons), meta={"kind": "ring", "n": n})
