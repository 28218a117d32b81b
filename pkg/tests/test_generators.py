import pytest

from tokenprop.csp import brute_force_solutions, satisfies
from tokenprop.errors import ParamError
from tokenprop.generators import (
    counterexample_instance,
    toy_formula_instance,
    gen_local_tree_instance,
    gen_random_csp,
    gen_random_ksat,
    gen_random_qcol,
)


@pytest.mark.parametrize("seed", range(5))
def test_random_ksat(seed):
    g = gen_random_ksat(30, 100, 3, seed=seed)
    assert g.n_constraints == 100 and g.is_ksat
    assert all(g.degree(v) >= 2 for v in range(g.n_vars))
    assert all(c.arity == 3 for c in g.constraints)
    assert gen_random_ksat(30, 100, 3, seed=seed).constraints == g.constraints


@pytest.mark.parametrize("seed", range(5))
def test_planted_ksat_is_satisfied(seed):
    g = gen_random_ksat(30, 130, 3, seed=seed, planted=True)
    assert satisfies(g, g.meta["planted"])


@pytest.mark.parametrize("seed", range(5))
def test_random_qcol(seed):
    g = gen_random_qcol(15, 25, 3, seed=seed)
    assert g.n_constraints == 25
    assert all(g.degree(v) >= 2 for v in range(g.n_vars))
    assert len({tuple(sorted(c.scope)) for c in g.constraints}) == 25


def test_planted_csp():
    g, x = gen_random_csp(10, 12, q=3, seed=1, planted=True)
    assert satisfies(g, x)


def test_local_tree_instance():
    g, root = gen_local_tree_instance(2, 2, seed=0)
    assert g.n_vars <= 14
    assert all(g.degree(v) >= 1 for v in range(g.n_vars))


def test_param_errors():
    with pytest.raises(ParamError):
        gen_random_ksat(2, 5, 3)
    with pytest.raises(ParamError):
        gen_random_qcol(4, 100, 3)


def test_fixed_instances():
    assert len(brute_force_solutions(toy_formula_instance())) == 21
    g = counterexample_instance()
    assert g.n_vars == 3 and g.n_constraints == 3
