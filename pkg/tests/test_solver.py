import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tokenprop import tokens as tk
from tokenprop.csp import FactorGraph, brute_force_solutions, build_ksat, build_qcol, satisfies
from tokenprop.errors import Contradiction, NoPolarizedVariable, ParamError
from tokenprop.generators import gen_random_csp, gen_random_ksat, gen_random_qcol
from tokenprop.solver import (
    CONTRADICTION,
    GAVE_UP,
    SAT,
    Residual,
    SolveConfig,
    decimate_finer,
    decimate_once,
    fix_and_simplify,
    singleton_biases,
    solve,
)


def solutions_of_simplified(h):
    fixed = h.meta.get("fixed", {})
    doms = h.meta.get("domains", {})
    out = set()
    for x in itertools.product(range(h.q), repeat=h.n_vars):
        if any(x[u] != s for u, s in fixed.items()):
            continue
        if any(not (tk.singleton(x[u]) & d) for u, d in doms.items()):
            continue
        if all(tuple(x[u] for u in c.scope) in c.sat_lookup for c in h.constraints):
            out.add(x)
    return out


@given(st.integers(0, 10_000))
def test_fix_and_simplify_preserves_the_fiber(seed):
    rng = np.random.default_rng(seed)
    q = 2 + seed % 2
    g, _ = gen_random_csp(6, 6, q=q, seed=seed % 40, density=0.6)
    v, s = int(rng.integers(g.n_vars)), int(rng.integers(q))
    expect = {x for x in brute_force_solutions(g) if x[v] == s}
    try:
        h = fix_and_simplify(g, v, s)
    except Contradiction:
        # the cascade may only refute an empty fiber
        assert not expect
        return
    assert solutions_of_simplified(h) == expect
    u = int(rng.integers(g.n_vars))
    r = int(rng.integers(q))
    if u in h.meta["fixed"] or not (tk.singleton(r) & h.meta["domains"].get(u, tk.full(q))):
        return
    try:
        h2 = fix_and_simplify(h, u, r)
    except Contradiction:
        assert not {x for x in expect if x[u] == r}
        return
    assert solutions_of_simplified(h2) == {x for x in expect if x[u] == r}


def test_fix_and_simplify_rejects_bad_symbol():
    with pytest.raises(ParamError):
        fix_and_simplify(gen_random_ksat(10, 20, 3, seed=0), 0, 2)


def test_residual_cascade_on_coloring():
    # path coloring with two colours: fixing one end determines everything
    g = build_qcol([(0, 1), (1, 2), (2, 3)], 2, check_degree=False)
    res = Residual(g)
    forced = res.fix(0, 0)
    assert forced == {0: 0, 1: 1, 2: 0, 3: 1}
    assert not res.cons


def test_residual_restrict():
    g = build_qcol([(0, 1), (1, 2), (2, 0)], 3)
    res = Residual(g)
    assert res.restrict(0, 0b011) == {}
    assert res.domains[0] == 0b011
    forced = res.restrict(1, 0b100)
    assert forced[1] == 2


def test_singleton_biases_and_decimate_once():
    g = build_qcol([(0, 1), (1, 2), (2, 0)], 3)
    a = np.zeros(8)
    a[[1, 7]] = 0.5
    b = np.zeros(8)
    b[[2, 7]] = 0.5
    np.testing.assert_allclose(singleton_biases(a, 3), [0.5, 0, 0])
    # equal best biases: lowest variable wins
    assert decimate_once(g, {0: b, 1: a}) == (0, 1)
    assert decimate_once(g, {0: b, 1: a}, exclude={0}) == (1, 0)
    with pytest.raises(NoPolarizedVariable):
        decimate_once(g, {0: np.eye(8)[7]})
    with pytest.raises(NoPolarizedVariable):
        decimate_once(g, {0: a}, threshold=0.6)


def test_decimate_finer():
    g = build_qcol([(0, 1), (1, 2), (2, 0)], 3)
    s = np.zeros(8)
    s[3] = 0.3  # {0,1}
    s[1] = 0.2  # {0}
    s[7] = 0.5
    # mass of {0,1}: 0.3; of {0}: 0.2
    assert decimate_finer(g, {0: s}, [7, 7, 7]) == (0, 3)
    # inside domain {0,1} the pair token is the full domain; {0} collects 0.2
    assert decimate_finer(g, {0: s}, [3, 7, 7]) == (0, 1)
    with pytest.raises(NoPolarizedVariable):
        decimate_finer(g, {0: np.eye(8)[7]}, [7, 7, 7])


@pytest.mark.parametrize(
    "kw",
    [
        dict(algorithm="nope"),
        dict(gamma=1.5),
        dict(stop="never"),
        dict(sweeps=0),
        dict(decimation_threshold=-1.0),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ParamError):
        SolveConfig(**kw)


@pytest.mark.parametrize("alg", ["SPgamma", "SPstar", "WPTP", "BP"])
def test_sat_results_are_verified_ksat(alg):
    g = gen_random_ksat(30, 90, 3, seed=1, planted=True)
    res = solve(g, SolveConfig(algorithm=alg, gamma=0.8, brute_force_limit=1 << 6))
    assert res.status in (SAT, GAVE_UP, CONTRADICTION)
    if res.status == SAT:
        assert satisfies(g, res.assignment)
        assert res.trace


@pytest.mark.parametrize("alg", ["PTP", "SDBP"])
@pytest.mark.parametrize("finer", [False, True])
def test_sat_results_are_verified_coloring(alg, finer):
    g = gen_random_qcol(20, 30, 3, seed=3)
    res = solve(g, SolveConfig(algorithm=alg, brute_force_limit=1 << 6, finer_decimation=finer))
    assert res.status in (SAT, GAVE_UP, CONTRADICTION)
    if res.status == SAT:
        assert satisfies(g, res.assignment)


def test_determinism():
    g = gen_random_ksat(40, 140, 3, seed=7, planted=True)
    cfg = SolveConfig(seed=3, brute_force_limit=1 << 8)
    a, b = solve(g, cfg), solve(g, cfg)
    assert a.status == b.status and a.assignment == b.assignment
    assert [(s.variable, s.token) for s in a.trace] == [(s.variable, s.token) for s in b.trace]


def test_unsat_toy_never_sat():
    # all four clauses on two variables
    clauses = [[(0, s), (1, t)] for s in (0, 1) for t in (0, 1)]
    g = build_ksat(clauses, 2)
    for alg in ("SPgamma", "WPTP", "BP"):
        for limit in (1, 1 << 20):
            res = solve(g, SolveConfig(algorithm=alg, gamma=0.5, brute_force_limit=limit))
            assert res.status in (GAVE_UP, CONTRADICTION)
            assert res.assignment is None


def test_small_instance_solved_exhaustively():
    g = build_qcol([(0, 1), (1, 2), (2, 0)], 3)
    res = solve(g)
    assert res.status == SAT and not res.trace
    assert satisfies(g, res.assignment)
