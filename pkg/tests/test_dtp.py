import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tokenprop import tokens as tk
from tokenprop.csp import build_qcol, forced_token, max_forceable
from tokenprop.dtp import (
    EMPTY_TOKEN,
    FIXED_POINT,
    RUNNING,
    dtp_init,
    dtp_iterate,
    dtp_summary,
    extract_factor_tree,
    full_init,
    local_solution_count,
    run_dtp,
    tree_forced_token,
)
from tokenprop.errors import InitError
from tokenprop.generators import gen_local_tree_instance, gen_random_csp, ring_instance


def triangle():
    return build_qcol([(0, 1), (1, 2), (2, 0)], 3)


def test_full_init_first_rights_are_largest_forceable():
    g = gen_random_csp(6, 6, q=3, seed=2)[0]
    state = full_init(g)
    dtp_iterate(state)
    for v, c in g.edges:
        assert state.right[(v, c)] == max_forceable(g, c, v)


def test_init_errors():
    g = triangle()
    with pytest.raises(InitError):
        dtp_init(g, {})
    bad = {e: tk.full(3) for e in g.edges}
    bad[g.edges[0]] = tk.EMPTY
    with pytest.raises(InitError):
        dtp_init(g, bad)


def test_summary_before_iteration():
    with pytest.raises(InitError):
        dtp_summary(full_init(triangle()))


def test_coloring_forced_pair():
    g = triangle()
    init = {e: tk.full(3) for e in g.edges}
    init[(1, 0)] = tk.from_str("2")
    state = dtp_init(g, init)
    dtp_iterate(state)
    assert state.right[(0, 0)] == tk.from_str("01")


def test_full_tokens_reach_fixed_point():
    state = full_init(triangle())
    statuses = run_dtp(state, 3)
    assert statuses[0].kind == RUNNING
    assert statuses[-1].kind == FIXED_POINT
    tokens, empty = dtp_summary(state)
    assert all(t == tk.full(3) for t in tokens.values()) and not empty


def test_conflicting_rights_give_empty_left():
    # x0 = x1 and x0 != x1 on the same pair of coordinates, plus padding
    from tokenprop.csp import Constraint, FactorGraph

    eq = Constraint((0, 1), ((0, 0), (1, 1)), 2)
    ne = Constraint((0, 1), ((0, 1), (1, 0)), 2)
    g = FactorGraph(2, 2, (eq, ne, Constraint((0, 1), ((0, 0), (0, 1), (1, 0), (1, 1)), 2)))
    init = {e: tk.full(2) for e in g.edges}
    init[(1, 0)] = init[(1, 1)] = init[(1, 2)] = tk.from_str("0")
    state = dtp_init(g, init, halt_on_empty=True)
    dtp_iterate(state)
    status = dtp_iterate(state)
    assert status.kind == EMPTY_TOKEN
    assert status.edge[0] == "v->c"
    # halted engines keep reporting the same event
    assert dtp_iterate(state).kind == EMPTY_TOKEN
    assert state.empty_events


@given(st.integers(0, 500), st.integers(1, 6))
def test_summary_equals_intersection_of_next_lefts(seed, iters):
    g, _ = gen_random_csp(7, 8, q=3, seed=seed, density=0.6)
    rng = np.random.default_rng(seed)
    state = dtp_init(g, {e: int(rng.integers(1, 8)) for e in g.edges})
    run_dtp(state, iters)
    tokens, _ = dtp_summary(state)
    dtp_iterate(state)
    for v in range(g.n_vars):
        inter = tk.full(3)
        for c in g.var_constraints[v]:
            inter &= state.left[(v, c)]
        assert inter == tokens[v]


def test_extract_tree_on_ring():
    sets = [((0, 0), (1, 1), (0, 1))] * 6
    g = ring_instance(sets, 6, 2)
    T = extract_factor_tree(g, 0, 1)
    assert T is not None and sorted(T.leaves) == [1, 5]
    assert extract_factor_tree(g, 0, 2) is not None
    # the radius-6 ball closes the ring
    assert extract_factor_tree(g, 0, 3) is None
    # in a triangle the edge opposite the root sits at distance 3
    assert extract_factor_tree(triangle(), 0, 1) is not None
    assert extract_factor_tree(triangle(), 0, 2) is None
    with pytest.raises(InitError):
        extract_factor_tree(g, 0, 0)


def test_single_constraint_tree_reduces_to_forced_token():
    g, root = gen_local_tree_instance(1, q=3, seed=3)
    T = extract_factor_tree(g, root, 1)
    rng = np.random.default_rng(0)
    for c in g.var_constraints[root]:
        br = T.branch(c)
        rect = {u: int(rng.integers(1, 8)) for u in br.leaves}
        assert tree_forced_token(br, br.leaves, root, rect) == forced_token(g, c, root, rect)


def test_tree_forced_token_full_rect_is_projection():
    g, root = gen_local_tree_instance(2, q=2, seed=5)
    T = extract_factor_tree(g, root, 2)
    full = {u: 3 for u in T.leaves}
    expect = 0
    for r in np.unique(T.solutions[:, T.variables.index(root)]):
        expect |= 1 << int(r)
    assert tree_forced_token(T, T.leaves, root, full) == expect
    with pytest.raises(InitError):
        tree_forced_token(T, [root], root, {root: 1})


def test_local_solution_count_on_forcing_ring():
    # x_{i+1} = x_i around a ring, with one edge allowing only (0, 0)
    sets = [((0, 0),)] + [((0, 0), (1, 1))] * 5
    g = ring_instance(sets, 6, 2)
    assert local_solution_count(g, 0, 1) == 1
    assert local_solution_count(g, 3, 1) == 2
    assert local_solution_count(g, 3, 2) == 2
    assert local_solution_count(g, 3, 3) == 1
