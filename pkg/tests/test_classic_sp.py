import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tokenprop.classic_sp import (
    ColMessage,
    SatLeftMessage,
    SatSummary,
    SpConfig,
    SpVector,
    col_sp_init,
    col_sp_summary,
    col_sp_update,
    run_col_sp,
    run_sp,
    sp_gamma_left,
    sp_init,
    sp_right,
    sp_star_left,
    sp_step,
    sp_summary,
)
from tokenprop.csp import build_ksat, build_qcol
from tokenprop.errors import DegenerateMessage, ParamError
from tokenprop.generators import toy_formula_instance, gen_random_ksat, gen_random_qcol


def zero_etas(g, v):
    return {b: 0.0 for b in g.var_constraints[v]}


@pytest.mark.parametrize("gamma", [0.0, 0.4, 1.0])
def test_all_zero_etas(gamma):
    g = gen_random_ksat(12, 40, 3, seed=0)
    v = 0
    c = g.var_constraints[v][0]
    a = sp_gamma_left(g, v, c, zero_etas(g, v), gamma)
    b = sp_star_left(g, v, c, zero_etas(g, v), gamma)
    assert (a.pi_u, a.pi_s, a.pi_star) == pytest.approx((1 - gamma, 0.0, 1.0))
    assert (b.pi_u, b.pi_s, b.pi_star) == pytest.approx((1 - gamma, 1 - gamma, gamma))


def test_sp_summary_trivial_at_gamma_one():
    g = gen_random_ksat(12, 40, 3, seed=0)
    s = sp_summary(g, 3, zero_etas(g, 3), 1.0)
    assert (s.zeta1, s.zeta0, s.zeta_star) == pytest.approx((0.0, 0.0, 1.0))
    assert s.polarity == pytest.approx(0.0)


@given(st.integers(0, 10_000), st.floats(0, 1))
def test_sp_and_sp_star_agree_on_s_plus_star(seed, gamma):
    g = gen_random_ksat(10, 30, 3, seed=seed % 20)
    rng = np.random.default_rng(seed)
    v = int(rng.integers(g.n_vars))
    etas = {b: float(rng.uniform()) for b in g.var_constraints[v]}
    for c in g.var_constraints[v]:
        a = sp_gamma_left(g, v, c, etas, gamma)
        b = sp_star_left(g, v, c, etas, gamma)
        assert a.pi_u == b.pi_u
        assert a.pi_s + a.pi_star == pytest.approx(b.pi_s + b.pi_star, abs=1e-14)


def test_left_formula_against_direct_products():
    # variable 0 appears positive in clauses 0 and 1, negated in 2
    g = build_ksat([[(0, 1), (1, 1), (2, 1)], [(0, 1), (1, 0), (3, 1)], [(0, 0), (2, 0), (3, 0)]], 4)
    etas = {0: 0.2, 1: 0.5, 2: 0.3}
    gamma = 0.6
    m = sp_gamma_left(g, 0, 0, etas, gamma)
    pu, ps = 1 - 0.3, 1 - 0.5
    assert (m.pi_u, m.pi_s, m.pi_star) == pytest.approx(((1 - gamma * pu) * ps, (1 - ps) * pu, ps * pu))
    lefts = {1: SatLeftMessage(0.2, 0.3, 0.5), 2: SatLeftMessage(1.0, 1.0, 2.0)}
    assert sp_right(g, 0, 0, lefts) == pytest.approx(0.2 * 0.25)


def test_eta_range_and_degenerate():
    g = toy_formula_instance()
    with pytest.raises(ParamError):
        sp_summary(g, 0, {b: 1.5 for b in g.var_constraints[0]}, 1.0)
    with pytest.raises(ParamError):
        sp_init(g, SpConfig(gamma=2.0))
    with pytest.raises(DegenerateMessage):
        SatLeftMessage(0.0, 0.0, 0.0).normalized()
    with pytest.raises(DegenerateMessage):
        SatSummary(0.0, 0.0, 0.0).normalized()


@pytest.mark.parametrize("star", [False, True])
@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
def test_vector_sweep_matches_reference(star, gamma):
    g = gen_random_ksat(40, 150, 3, seed=3)
    cfg = SpConfig(gamma=gamma, star=star, seed=1)
    state = sp_init(g, cfg)
    vec = SpVector(g)
    eta = np.array([state.eta[e] for e in g.edges])
    for _ in range(5):
        sp_step(state, cfg)
        eta, summ = vec.sweep(eta, gamma, star)
        ref = np.array([state.eta[e] for e in g.edges])
        np.testing.assert_allclose(eta, ref, rtol=1e-12, atol=1e-14)
        for v in range(g.n_vars):
            s = state.summaries[v]
            np.testing.assert_allclose(summ[v], [s.zeta1, s.zeta0, s.zeta_star], rtol=1e-12, atol=1e-14)


def test_run_sp_reports_convergence():
    g = gen_random_ksat(30, 60, 3, seed=2)
    state, ok = run_sp(g, SpConfig(gamma=1.0, max_iters=500, tol=1e-10))
    assert ok and state.delta < 1e-10
    state, ok = run_sp(g, SpConfig(max_iters=0))
    assert not ok and state.iteration == 0


def test_col_uniform_star_fixed_point():
    m = col_sp_update(0, 1, [[0, 0, 0, 1.0], [0, 0, 0, 1.0]])
    np.testing.assert_allclose(m.as_array(), [0, 0, 0, 1.0], atol=1e-15)
    s = col_sp_summary(0, [[0, 0, 0, 1.0]] * 3)
    np.testing.assert_allclose(s.as_array(), [0, 0, 0, 1.0], atol=1e-15)


def test_col_single_neighbor_warning():
    # one incoming warning "colour 0" forbids 0 at u: u sends no warning, mass to star
    m = col_sp_update(0, 1, [[1.0, 0, 0, 0]])
    np.testing.assert_allclose(m.as_array(), [0, 0, 0, 1.0])
    # two neighbours warning 0 and 1 force colour 2 at u
    m = col_sp_update(0, 1, [[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
    np.testing.assert_allclose(m.as_array(), [0, 0, 1.0, 0])


def test_col_contradiction_is_degenerate():
    with pytest.raises(DegenerateMessage):
        col_sp_update(0, 1, [[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, 0]])


def test_col_runs_and_normalizes():
    g = gen_random_qcol(20, 30, 3, seed=1)
    state, _ = run_col_sp(g, max_iters=50)
    for x in state.eta.values():
        assert x.sum() == pytest.approx(1.0)
    assert isinstance(next(iter(state.summaries.values())), ColMessage)
    with pytest.raises(ParamError):
        col_sp_init(build_qcol([(0, 1), (1, 2), (2, 0)], 4))
