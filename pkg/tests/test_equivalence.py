import pytest

from tokenprop.equivalence import (
    HOLD,
    THEOREMS,
    VIOLATED,
    PairedRunReport,
    SuiteConfig,
    check_bp_vs_wptp_ksat,
    check_ptp_vs_sp_3col,
    check_sdbp_vs_ptp_3col,
    check_sdbp_vs_wptp_general,
    check_sp_star_vs_sp,
    check_wptp_vs_spstar_ksat,
    compatibility_report,
    run_suite,
)
from tokenprop.generators import counterexample_instance, gen_random_ksat, gen_random_qcol


@pytest.fixture(scope="module")
def ksat():
    return gen_random_ksat(12, 42, 3, seed=1)


@pytest.fixture(scope="module")
def col():
    return gen_random_qcol(10, 16, 3, seed=1)


def test_positive_cases_hold(ksat, col):
    reps = [
        check_sp_star_vs_sp(ksat, 0.7, iters=10),
        check_wptp_vs_spstar_ksat(ksat, 0.8, iters=10),
        check_bp_vs_wptp_ksat(ksat, 0.9, iters=5),
        check_ptp_vs_sp_3col(col, iters=10),
        check_sdbp_vs_ptp_3col(col, iters=5),
        check_sdbp_vs_wptp_general(col, iters=5),
    ]
    for r in reps:
        assert r.verdict == HOLD, (r.theorem, r.first_violation)
        assert r.divergences and r.max_divergence() <= r.tol


def test_negative_controls_are_detected(ksat, col):
    reps = [
        check_sp_star_vs_sp(ksat, 0.5, iters=10, perturb=True),
        check_wptp_vs_spstar_ksat(ksat, 0.5, iters=10, perturb=True),
        check_bp_vs_wptp_ksat(ksat, 0.8, iters=5, decoupled=False),
        check_ptp_vs_sp_3col(col, iters=10, perturb=True),
        check_sdbp_vs_ptp_3col(col, iters=5, plain_bp=True),
        check_sdbp_vs_wptp_general(counterexample_instance(), iters=5),
    ]
    for r in reps:
        assert r.verdict == VIOLATED, r.theorem
        assert r.first_violation is not None and "identity" in r.first_violation


def test_report_round_trip(ksat):
    r = check_sp_star_vs_sp(ksat, 0.7, iters=3)
    back = PairedRunReport.from_dict(r.to_dict())
    assert back == r and back.as_expected


def test_degenerate_stop_is_recorded(ksat):
    # gamma = 0 drives SP to all-zero etas quickly; any degeneracy must end in extra
    r = check_wptp_vs_spstar_ksat(ksat, 0.0, iters=30)
    assert r.verdict in (HOLD, VIOLATED)
    if "stopped" in r.extra:
        assert {"iteration", "reason"} <= set(r.extra["stopped"])


def test_compatibility_report():
    rep = compatibility_report(counterexample_instance())
    assert [r["compatible"] for r in rep] == [False, False, True]
    assert rep[0]["witness"] is not None and rep[2]["witness"] is None


def test_small_suite():
    reps = run_suite(THEOREMS, SuiteConfig(n_instances=1, iters=4))
    assert len(reps) == 2 * len(THEOREMS)
    assert all(r.as_expected for r in reps)
