import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tokenprop import tokens as tk
from tokenprop.csp import FactorGraph, build_ksat, build_qcol, forced_token, forceable_tokens
from tokenprop.errors import DegenerateMessage, InitError, ParamError
from tokenprop.generators import gen_random_csp, gen_random_qcol
from tokenprop.ptp import (
    ObedienceConditional,
    PtpConfig,
    compute_lefts,
    ksat_gamma_conditional,
    normalize,
    ptp_init,
    ptp_left_update,
    ptp_right_update,
    ptp_step,
    ptp_summary,
    random_distribution,
    run_ptp,
    wptp_left_update,
    wptp_summary,
)


def dist(q, **kw):
    w = np.zeros(1 << q)
    for k, x in kw.items():
        w[tk.from_str(k[1:])] = x
    return w


def star3():
    # variable 0 in three clauses, each other variable in two
    clauses = [[(0, 1), (1, 1), (2, 1)], [(0, 1), (1, 0), (3, 1)], [(0, 0), (2, 0), (3, 0)]]
    return build_ksat(clauses, 4)


def test_full_token_in_full_token_out():
    g = star3()
    full = dist(2, t01=1.0)
    lam = ptp_left_update(g, 0, 0, {1: full, 2: full})
    np.testing.assert_array_equal(normalize(lam), full)


def test_two_uniform_rights_give_one_third():
    # brute force over the 9 tuples: {0}{0}, {0}{01}, {01}{0} give {0}
    g = star3()
    u = dist(2, t0=1 / 3, t1=1 / 3, t01=1 / 3)
    lam = ptp_left_update(g, 0, 0, {1: u, 2: u})
    assert lam[tk.from_str("0")] == pytest.approx(1 / 3)
    assert lam[tk.from_str("01")] == pytest.approx(1 / 9)
    assert lam[0] == 0.0


def test_disjoint_singletons_degenerate():
    g = star3()
    with pytest.raises(DegenerateMessage):
        ptp_left_update(g, 0, 0, {1: dist(2, t0=1.0), 2: dist(2, t1=1.0)})
    with pytest.raises(DegenerateMessage):
        ptp_summary(g, 0, {0: dist(2, t0=1.0), 1: dist(2, t1=1.0), 2: dist(2, t01=1.0)})


def test_coloring_right_examples():
    g = build_qcol([(0, 1), (1, 2), (2, 0)], 3)
    r = ptp_right_update(g, 0, 0, {1: dist(3, t2=1.0)})
    np.testing.assert_array_equal(r, dist(3, t01=1.0))
    r = ptp_right_update(g, 0, 0, {1: dist(3, t12=1.0)})
    np.testing.assert_array_equal(r, dist(3, t012=1.0))


def test_ksat_warning_case():
    g = star3()
    # clause 0 is (x0 or x1 or x2); others set to their falsifying values
    r = ptp_right_update(g, 0, 0, {1: dist(2, t0=1.0), 2: dist(2, t0=1.0)})
    np.testing.assert_array_equal(r, dist(2, t1=1.0))


def test_gamma_conditional_values():
    w = ksat_gamma_conditional(0.3)
    assert w(tk.from_str("0"), 3) == pytest.approx(0.7)
    assert w(3, 3) == pytest.approx(0.3)
    assert w(3, tk.from_str("0")) == 0.0
    assert ksat_gamma_conditional(1.0).is_indicator()
    with pytest.raises(ParamError):
        ksat_gamma_conditional(1.5)


def test_obedience_validation():
    with pytest.raises(ParamError):
        ObedienceConditional(np.ones((4, 4)), 2)
    W = np.eye(4)
    W[0, 0] = 0
    W[1, 2] = 0.5  # {0} given {1} is not obedient
    with pytest.raises(ParamError):
        ObedienceConditional(W, 2)
    with pytest.raises(ParamError):
        ObedienceConditional(np.eye(3), 2)


def test_weighted_gamma_examples():
    g = star3()
    full = dist(2, t01=1.0)
    lam = wptp_left_update(g, 0, 0, {1: full, 2: full}, ksat_gamma_conditional(1.0))
    assert lam[3] == 1.0
    lam = wptp_left_update(g, 0, 0, {1: full, 2: full}, ksat_gamma_conditional(0.5))
    assert lam[tk.from_str("0")] == pytest.approx(0.5)
    assert lam[tk.from_str("1")] == pytest.approx(0.5)
    assert lam[3] == pytest.approx(0.5)


@given(st.integers(0, 10_000))
def test_indicator_weighted_is_bitwise_plain(seed):
    rng = np.random.default_rng(seed)
    g, _ = gen_random_csp(6, 7, q=3, seed=seed % 50)
    v = int(rng.integers(g.n_vars))
    rights = {b: random_distribution(rng, 3) for b in g.var_constraints[v]}
    c = g.var_constraints[v][0]
    ind = ObedienceConditional.indicator(3)
    try:
        plain = ptp_left_update(g, v, c, rights)
    except DegenerateMessage:
        return
    assert np.array_equal(plain, wptp_left_update(g, v, c, rights, ind))
    assert np.array_equal(ptp_summary(g, v, rights), wptp_summary(g, v, rights, ind))


@given(st.integers(0, 10_000))
def test_fast_and_enumerate_paths_agree(seed):
    g, _ = gen_random_csp(6, 7, q=3, seed=seed % 50)
    rng = np.random.default_rng(seed)
    rights = {e: random_distribution(rng, 3) for e in g.edges}
    try:
        a = compute_lefts(g, rights, PtpConfig(method="fast"))
    except DegenerateMessage:
        return
    b = compute_lefts(g, rights, PtpConfig(method="enumerate"))
    for e in g.edges:
        np.testing.assert_allclose(a[e], b[e], atol=1e-14)


def test_right_update_is_conditioned_expectation_monte_carlo():
    rng = np.random.default_rng(9)
    con_g, _ = gen_random_csp(5, 6, q=3, arity=(3,), seed=4, density=0.4)
    c = 0
    scope = con_g.scope(c)
    v = scope[0]
    lefts = {u: random_distribution(rng, 3) for u in scope[1:]}
    rho = normalize(ptp_right_update(con_g, c, v, lefts))
    n = 40_000
    draws = {u: rng.choice(8, size=n, p=lefts[u]) for u in scope[1:]}
    counts = np.zeros(8)
    for i in range(n):
        counts[forced_token(con_g, c, v, {u: int(draws[u][i]) for u in scope[1:]})] += 1
    counts[0] = 0
    kept = counts.sum()
    est = counts / kept
    sigma = np.sqrt(np.maximum(rho * (1 - rho), 1e-12) / kept)
    assert np.all(np.abs(est - rho) <= 3 * sigma + 1e-12)


def test_init_and_run_controls():
    g = gen_random_qcol(8, 12, 3, seed=0)
    cfg = PtpConfig(max_iters=0)
    state, rep = run_ptp(g, cfg)
    assert state.iteration == 0 and not rep.converged
    for e in g.edges:
        w = state.right[e]
        assert w.sum() == pytest.approx(1.0)
        assert set(np.flatnonzero(w)) <= forceable_tokens(g, e[1], e[0])
    with pytest.raises(InitError):
        ptp_init(g, PtpConfig(), rights={})
    with pytest.raises(ParamError):
        ptp_init(g, PtpConfig(init="middle"))
    with pytest.raises(ParamError):
        PtpConfig(mode="weighted").omega_for(0)


def test_left_init_first_step_only_computes_rights():
    g = gen_random_qcol(8, 12, 3, seed=1)
    rng = np.random.default_rng(0)
    lefts = {e: random_distribution(rng, 3) for e in g.edges}
    cfg = PtpConfig(init="left")
    state = ptp_init(g, cfg, lefts=lefts)
    ptp_step(state, cfg)
    for e in g.edges:
        np.testing.assert_array_equal(state.left[e], lefts[e])


def test_messages_stay_normalized():
    g = gen_random_qcol(10, 16, 3, seed=2)
    state, _ = run_ptp(g, PtpConfig(max_iters=15, tol=0.0))
    for w in list(state.left.values()) + list(state.right.values()) + list(state.summaries.values()):
        assert abs(w.sum() - 1.0) < 1e-12 and w[0] == 0.0 and (w >= 0).all()


def test_symmetric_coloring_uniform_fixed_point():
    # K4 minus nothing is not 3-colorable; use the triangular prism, which is vertex-transitive
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)]
    g = build_qcol(edges, 3)
    # start from the full token everywhere: by symmetry the pair tokens stay equal
    rights = {e: dist(3, t01=0.2, t02=0.2, t12=0.2, t012=0.4) for e in g.edges}
    cfg = PtpConfig(tol=1e-8)
    state, rep = run_ptp(g, cfg, ptp_init(g, cfg, rights=rights))
    assert rep.converged
    w = state.right[g.edges[0]]
    assert w[3] == pytest.approx(w[5]) == pytest.approx(w[6])
