"""Paired-run checks of the correspondences between PTP, SP, BP and SDBP.

Each check starts two algorithms from matched initial messages, advances both one
iteration at a time and records, per iteration and per correspondence identity, the
largest absolute difference over all edges (or variables). A report "holds" when every
recorded divergence is within tolerance.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import tokens as tk
from .classic_sp import ColMessage, SatLeftMessage, SpConfig, SpState, col_sp_init, col_sp_step, sp_step
from .csp import FactorGraph, is_locally_compatible
from .errors import DegenerateMessage
from .mrf import (
    BpConfig,
    ForneyGraph,
    bp_init,
    bp_step,
    decouple,
    diagonal_normalize,
    ksat_from_table,
    ksat_to_table,
    sdbp_init,
    sdbp_step,
)
from .ptp import ObedienceConditional, PtpConfig, init_rights, ksat_gamma_conditional, ptp_init, ptp_step

HOLD, VIOLATED = "hold", "violated"
THEOREMS = ("sp-spstar", "ptp-sp-3col", "wptp-spstar-ksat", "bp-wptp-ksat", "sdbp-ptp-3col", "sdbp-wptp")
PERTURBATION = 1e-6


@dataclass
class PairedRunReport:
    """Outcome of one paired run.

    divergences maps identity name -> list of per-iteration max divergences.
    expectation is "hold" for positive cases and "violated" for negative controls.
    """

    theorem: str
    instance: dict
    tol: float
    divergences: dict = field(default_factory=dict)
    verdict: str = HOLD
    first_violation: dict | None = None
    expectation: str = HOLD
    extra: dict = field(default_factory=dict)

    @property
    def as_expected(self) -> bool:
        return self.verdict == self.expectation

    def max_divergence(self) -> float:
        return max((max(v) for v in self.divergences.values() if v), default=0.0)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d) -> "PairedRunReport":
        return cls(**d)


class _Tracker:
    def __init__(self, report: PairedRunReport):
        self.r = report

    def record(self, identity: str, iteration: int, pairs):
        """pairs: iterable of (edge label, value a, value b) with equal shapes across edges."""
        pairs = list(pairs)
        edges, a, b = zip(*pairs) if pairs else ((), (), ())
        if not edges:
            worst, where = 0.0, None
        else:
            d = np.abs(np.array(a, float).reshape(len(edges), -1) - np.array(b, float).reshape(len(edges), -1)).max(axis=1)
            i = int(np.argmax(d))
            worst, where = float(d[i]), edges[i]
        self.r.divergences.setdefault(identity, []).append(worst)
        if worst > self.r.tol and self.r.first_violation is None:
            self.r.first_violation = {"identity": identity, "iteration": iteration, "edge": where}
            self.r.verdict = VIOLATED


def _advance(rep: PairedRunReport, it: int, *steps) -> bool:
    """Runs the paired steps of one iteration; a degenerate message stops the run.

    The stop is recorded in extra["stopped"]; the verdict covers the iterations compared.
    """
    try:
        for step in steps:
            step()
    except DegenerateMessage as e:
        rep.extra["stopped"] = {"iteration": it, "reason": str(e)}
        return False
    return True


def describe(g: FactorGraph) -> dict:
    d = {"q": g.q, "n_vars": g.n_vars, "n_constraints": g.n_constraints}
    d.update({k: v for k, v in g.meta.items() if isinstance(v, (int, float, str, bool))})
    return d


def _vc(v, c):
    return f"v{v}->c{c}"


def _cv(v, c):
    return f"c{c}->v{v}"


# ---------------------------------------------------------------------------
# SP(gamma) vs SP*(gamma)


def check_sp_star_vs_sp(g: FactorGraph, gamma: float, seed: int = 0, iters: int = 30, tol: float = 1e-12, perturb: bool = False):
    """Both variants from one shared eta init; compares eta per edge and raw zeta per variable."""
    rep = PairedRunReport("sp-spstar", describe(g), tol, expectation=VIOLATED if perturb else HOLD)
    rep.extra["gamma"] = gamma
    tr = _Tracker(rep)
    rng = np.random.default_rng(seed)
    eta0 = {e: float(x) for e, x in zip(g.edges, rng.uniform(0.0, 1.0, size=len(g.edges)))}
    a, b = SpState(g, dict(eta0)), SpState(g, dict(eta0))
    ca, cb = SpConfig(gamma=gamma), SpConfig(gamma=gamma, star=True)
    for it in range(1, iters + 1):
        hook = _bump_pi_s(g) if perturb and it == 1 else None
        if not _advance(rep, it, lambda: sp_step(a, ca), lambda: sp_step(b, cb, perturb=hook)):
            break
        tr.record("eta", it, ((_cv(v, c), a.eta[(v, c)], b.eta[(v, c)]) for v, c in g.edges))
        tr.record(
            "zeta",
            it,
            ((f"v{v}", _zeta(a.summaries[v]), _zeta(b.summaries[v])) for v in range(g.n_vars)),
        )
    return rep


def _zeta(s):
    return [s.zeta1, s.zeta0, s.zeta_star]


def _bump_pi_s(g):
    def hook(lefts):
        e = g.edges[0]
        m = lefts[e]
        lefts[e] = SatLeftMessage(m.pi_u, m.pi_s + PERTURBATION, m.pi_star)

    return hook


# ---------------------------------------------------------------------------
# PTP vs compact SP on 3-COL


def _edge_constraint(g):
    return {frozenset(con.scope): ci for ci, con in enumerate(g.constraints)}


def check_ptp_vs_sp_3col(g: FactorGraph, seed: int = 0, iters: int = 30, tol: float = 1e-10, perturb: bool = False):
    """PTP on a 3-COL graph against the quadruplet SP rule.

    SP's eta_{u->v} is matched with lambda_{u->c} for c = {u, v}: eta^i with the
    singleton {i}, eta^* with the remaining mass. The initial etas are read off PTP's
    initial rights: eta^(0)_{u->v}(k) = rho^(0)_{c->v}(complement of {k}).
    """
    rep = PairedRunReport("ptp-sp-3col", describe(g), tol, expectation=VIOLATED if perturb else HOLD)
    tr = _Tracker(rep)
    cfg = PtpConfig(seed=seed)
    ptp = ptp_init(g, cfg)
    cid = _edge_constraint(g)
    full = tk.full(3)
    eta0 = {}
    for u in range(g.n_vars):
        for v in g.neighbors(u):
            rho = ptp.right[(v, cid[frozenset((u, v))])]
            eta0[(u, v)] = np.array([rho[full & ~tk.singleton(k)] for k in range(3)] + [rho[full]])
    sp = col_sp_init(g, eta=eta0)

    def hook(new):
        k = min(new)
        new[k] = new[k] + np.array([PERTURBATION, 0.0, 0.0, -PERTURBATION])

    for it in range(1, iters + 1):
        h = hook if perturb and it == 1 else None
        if not _advance(rep, it, lambda: ptp_step(ptp, cfg), lambda: col_sp_step(sp, perturb=h)):
            break
        pairs = []
        for (u, v), eta in sp.eta.items():
            lam = ptp.left[(u, cid[frozenset((u, v))])]
            pairs.append((f"v{u}->v{v}", eta, _col_view(lam)))
        tr.record("eta~lambda", it, pairs)
        tr.record(
            "zeta~mu",
            it,
            ((f"v{v}", sp.summaries[v].as_array(), _col_view(ptp.summaries[v])) for v in range(g.n_vars)),
        )
    return rep


def _col_view(dist):
    """(mass of {0}, {1}, {2}, one minus their sum) of a normalized 3-symbol distribution."""
    s = [dist[tk.singleton(i)] for i in range(3)]
    return np.array(s + [1.0 - sum(s)])


# ---------------------------------------------------------------------------
# weighted PTP vs SP*(gamma) on k-SAT


def check_wptp_vs_spstar_ksat(g: FactorGraph, gamma: float, seed: int = 0, iters: int = 30, tol: float = 1e-10, perturb: bool = False):
    """Weighted PTP with the gamma conditional against SP*(gamma).

    Per edge with label L: Pi^s ~ lambda({L}), Pi^u ~ lambda({not L}), Pi^* ~ lambda({0,1})
    (normalized); eta ~ rho({0}) + rho({1}); zeta ~ mu. SP*'s initial eta is the singleton
    mass of PTP's initial right message.
    """
    rep = PairedRunReport("wptp-spstar-ksat", describe(g), tol, expectation=VIOLATED if perturb else HOLD)
    rep.extra["gamma"] = gamma
    tr = _Tracker(rep)
    cfg = PtpConfig(mode="weighted", omega=ksat_gamma_conditional(gamma), seed=seed)
    ptp = ptp_init(g, cfg)
    sp = SpState(g, {e: float(r[1] + r[2]) for e, r in ptp.right.items()})
    scfg = SpConfig(gamma=gamma, star=True)
    for it in range(1, iters + 1):
        hook = _bump_pi_s(g) if perturb and it == 1 else None
        zeta = {}
        steps = (
            lambda: ptp_step(ptp, cfg),
            lambda: sp_step(sp, scfg, perturb=hook),
            lambda: zeta.update({v: sp.summaries[v].normalized() for v in range(g.n_vars)}),
        )
        if not _advance(rep, it, *steps):
            break
        pairs = []
        for v, c in g.edges:
            L = g.label(v, c)
            m = sp.lefts[(v, c)].normalized()
            lam = ptp.left[(v, c)]
            pairs.append((_vc(v, c), [m.pi_s, m.pi_u, m.pi_star], [lam[tk.singleton(L)], lam[tk.singleton(1 - L)], lam[3]]))
        tr.record("Pi~lambda", it, pairs)
        tr.record("eta~rho", it, ((_cv(v, c), sp.eta[(v, c)], ptp.right[(v, c)][1] + ptp.right[(v, c)][2]) for v, c in g.edges))
        tr.record(
            "zeta~mu",
            it,
            ((f"v{v}", [zeta[v].zeta0, zeta[v].zeta1, zeta[v].zeta_star], ptp.summaries[v][1:]) for v in range(g.n_vars)),
        )
    return rep


# ---------------------------------------------------------------------------
# BP vs weighted PTP on k-SAT


def bp_init_from_ptp(g: FactorGraph, rights: dict, decoupled: bool = True, rng=None) -> dict:
    """BP right tables matched to PTP rights: rho(LL) = rho({L}), rho(L*) = rho({0,1}).

    decoupled sets rho(Lbar*) = rho(**) = rho(L*); otherwise those two entries are
    rescaled by independent random factors in [0.5, 1.5].
    """
    out = {}
    for v, c in g.edges:
        L = g.label(v, c)
        r = rights[(v, c)]
        d = {"LL": float(r[tk.singleton(L)]), "L*": float(r[3]), "Lb*": float(r[3]), "**": float(r[3])}
        if not decoupled:
            d["Lb*"] *= float(rng.uniform(0.5, 1.5))
            d["**"] *= float(rng.uniform(0.5, 1.5))
        out[(v, c)] = ksat_to_table(d, L)
    return out


def check_bp_vs_wptp_ksat(g: FactorGraph, gamma: float, seed: int = 0, iters: int = 30, tol: float = 1e-10, decoupled: bool = True):
    """BP on the Forney graph (k-SAT scaling, unnormalized rights) against weighted PTP.

    Eight message identities and three summary identities are tracked, plus the
    "decoupling" identity rho(L*) = rho(Lbar*) = rho(**).
    """
    rep = PairedRunReport("bp-wptp-ksat", describe(g), tol, expectation=HOLD if decoupled else VIOLATED)
    rep.extra.update(gamma=gamma, decoupled=decoupled)
    tr = _Tracker(rep)
    omega = ksat_gamma_conditional(gamma)
    cfg = PtpConfig(mode="weighted", omega=omega, seed=seed)
    ptp = ptp_init(g, cfg)
    fg = ForneyGraph(g, omega)
    bcfg = BpConfig(left_norm="ksat", right_norm="none")
    bp = bp_init(fg, bcfg, bp_init_from_ptp(g, ptp.right, decoupled, np.random.default_rng(seed + 1)))
    _record_bp_right(tr, g, bp.right, ptp.right, 0)
    for it in range(1, iters + 1):
        if not _advance(rep, it, lambda: ptp_step(ptp, cfg), lambda: bp_step(bp, bcfg)):
            break
        left, right = [], []
        for v, c in g.edges:
            L = g.label(v, c)
            lb = ksat_from_table(bp.left[(v, c)], L)
            lp = ptp.left[(v, c)]
            a, b = tk.singleton(L), tk.singleton(1 - L)
            left.append((_vc(v, c), [lb["L*"], lb["Lb*"], lb["**"], lb["LL"]], [lp[a], lp[b], lp[3], lp[a] + lp[3]]))
        tr.record("lambda", it, left)
        _record_bp_right(tr, g, bp.right, ptp.right, it)
        tr.record("mu", it, ((f"v{v}", bp.summaries[v][1:], ptp.summaries[v][1:]) for v in range(g.n_vars)))
    return rep


def _record_bp_right(tr, g, bp_right, ptp_right, it):
    pairs, dec = [], []
    for v, c in g.edges:
        L = g.label(v, c)
        rb = ksat_from_table(bp_right[(v, c)], L)
        rp = ptp_right[(v, c)]
        pairs.append((_cv(v, c), [rb["LL"], rb["L*"], rb["Lb*"], rb["**"]], [rp[1] + rp[2], rp[3], rp[3], rp[3]]))
        dec.append((_cv(v, c), [rb["L*"], rb["L*"]], [rb["Lb*"], rb["**"]]))
    tr.record("rho", it, pairs)
    tr.record("decoupling", it, dec)


# ---------------------------------------------------------------------------
# SDBP vs PTP on 3-COL, and the plain-BP contrast


def check_sdbp_vs_ptp_3col(g: FactorGraph, seed: int = 0, iters: int = 30, tol: float = 1e-10, plain_bp: bool = False):
    """SDBP (indicator omega) against plain PTP: lambda(t) ~ lambda(t, full), rho^norm ~ rho*, mu ~ mu.

    With plain_bp, ordinary BP started from the decoupled version of the same initial
    rights replaces SDBP, and its diagonally normalized rights are compared instead.
    """
    rep = PairedRunReport("sdbp-ptp-3col", describe(g), tol, expectation=VIOLATED if plain_bp else HOLD)
    rep.extra["plain_bp"] = plain_bp
    tr = _Tracker(rep)
    cfg = PtpConfig(seed=seed)
    ptp = ptp_init(g, cfg)
    fg = ForneyGraph(g, ObedienceConditional.indicator(g.q))
    full = tk.full(g.q)
    if plain_bp:
        bcfg = BpConfig()
        other = bp_init(fg, bcfg, {e: decouple(r) for e, r in ptp.right.items()})
    else:
        other = sdbp_init(fg, rho_star=ptp.right)
    for it in range(1, iters + 1):
        step = (lambda: bp_step(other, bcfg)) if plain_bp else (lambda: sdbp_step(other))
        if not _advance(rep, it, lambda: ptp_step(ptp, cfg), step):
            break
        if plain_bp:
            star = {e: diagonal_normalize(r, e) for e, r in other.right.items()}
        else:
            star = other.rho_star
        lam_pairs = []
        for e in g.edges:
            col = other.left_raw[e][:, full]
            lam_pairs.append((_vc(*e), ptp.left[e], col / col.sum()))
        tr.record("lambda", it, lam_pairs)
        tr.record("rho", it, ((_cv(*e), ptp.right[e], star[e]) for e in g.edges))
        tr.record("mu", it, ((f"v{v}", ptp.summaries[v], other.summaries[v]) for v in range(g.n_vars)))
    return rep


# ---------------------------------------------------------------------------
# SDBP vs weighted PTP on general CSPs


def compatibility_report(g: FactorGraph) -> list:
    out = []
    for ci in range(g.n_constraints):
        ok, w = is_locally_compatible(g, ci)
        out.append({"constraint": ci, "compatible": ok, "witness": None if w is None else dataclasses.asdict(w)})
    return out


def probe_family(q: int, seed: int = 0, n_random: int = 2) -> list:
    """Indicator conditional plus n_random seeded random obedience conditionals."""
    rng = np.random.default_rng(seed)
    return [ObedienceConditional.indicator(q)] + [ObedienceConditional.random(q, rng) for _ in range(n_random)]


def check_sdbp_vs_wptp_general(g: FactorGraph, omegas=None, seed: int = 0, iters: int = 30, tol: float = 1e-10):
    """Local-compatibility report plus paired runs of weighted PTP and SDBP for each probe omega.

    If every constraint is locally compatible the expectation is that rho^norm ~ rho*
    holds for every omega; otherwise a divergence is expected for at least one omega.
    Not finding one is inconclusive, since only a finite family of omegas is probed.
    """
    compat = compatibility_report(g)
    all_ok = all(c["compatible"] for c in compat)
    rep = PairedRunReport("sdbp-wptp", describe(g), tol, expectation=HOLD if all_ok else VIOLATED)
    rep.extra["compatibility"] = compat
    tr = _Tracker(rep)
    omegas = probe_family(g.q, seed) if omegas is None else list(omegas)
    rights0 = init_rights(g, np.random.default_rng(seed))
    for k, omega in enumerate(omegas):
        cfg = PtpConfig(mode="weighted", omega=omega, seed=seed)
        ptp = ptp_init(g, cfg, rights=rights0)
        sd = sdbp_init(ForneyGraph(g, omega), rho_star=rights0)
        for it in range(1, iters + 1):
            if not _advance(rep, it, lambda: ptp_step(ptp, cfg), lambda: sdbp_step(sd)):
                break
            tr.record(f"omega{k}:rho", it, ((_cv(*e), ptp.right[e], sd.rho_star[e]) for e in g.edges))
            tr.record(f"omega{k}:mu", it, ((f"v{v}", ptp.summaries[v], sd.summaries[v]) for v in range(g.n_vars)))
    if not all_ok and rep.verdict == HOLD:
        rep.extra["inconclusive"] = True
    return rep


# ---------------------------------------------------------------------------
# suite


@dataclass
class SuiteConfig:
    """Instance families for the suite.

    k-SAT sizes cycle through the per-theorem size tuples at clause density alpha and
    gamma cycles through gammas; 3-COL graphs have col_vertices vertices and col_edges
    edges. At higher densities and small gamma the paired iterations can be chaotic,
    and last-bit rounding differences between two algebraically equal formulas grow
    past the tolerances within 30 iterations, so the defaults stay in the stable range.
    """

    n_instances: int = 25
    iters: int = 30
    seed: int = 0
    alpha: float = 3.5
    sp_sizes: tuple = (20, 30, 40, 50, 60)
    wptp_sizes: tuple = (10, 15, 20, 25, 30)
    bp_sizes: tuple = (10, 12, 14, 16, 20)
    general_sizes: tuple = (8, 10, 12)
    col_vertices: int = 12
    col_edges: int = 20
    gammas: tuple = (0.5, 0.8, 0.9, 1.0)


def _ksat(n, alpha, seed):
    from .generators import gen_random_ksat

    return gen_random_ksat(n, int(round(alpha * n)), 3, seed=seed)


def _col(cfg, seed):
    from .generators import gen_random_qcol

    return gen_random_qcol(cfg.col_vertices, cfg.col_edges, 3, seed=seed)


def _jobs(theorem: str, cfg: SuiteConfig):
    """Yields (label, callable) for the positive cases and negative controls of one theorem."""
    from .generators import counterexample_instance

    N, it = cfg.n_instances, cfg.iters
    for i in range(N):
        s = cfg.seed + i
        gam = cfg.gammas[i % len(cfg.gammas)]
        if theorem == "sp-spstar":
            g = _ksat(cfg.sp_sizes[i % len(cfg.sp_sizes)], cfg.alpha, s)
            yield lambda g=g, s=s, gam=gam: check_sp_star_vs_sp(g, gam, s, it)
        elif theorem == "ptp-sp-3col":
            g = _col(cfg, s)
            yield lambda g=g, s=s: check_ptp_vs_sp_3col(g, s, it)
        elif theorem == "wptp-spstar-ksat":
            g = _ksat(cfg.wptp_sizes[i % len(cfg.wptp_sizes)], cfg.alpha, s)
            yield lambda g=g, s=s, gam=gam: check_wptp_vs_spstar_ksat(g, gam, s, it)
        elif theorem == "bp-wptp-ksat":
            g = _ksat(cfg.bp_sizes[i % len(cfg.bp_sizes)], cfg.alpha, s)
            yield lambda g=g, s=s, gam=gam: check_bp_vs_wptp_ksat(g, gam, s, it)
        elif theorem == "sdbp-ptp-3col":
            g = _col(cfg, s)
            yield lambda g=g, s=s: check_sdbp_vs_ptp_3col(g, s, it)
        elif theorem == "sdbp-wptp":
            g = _ksat(cfg.general_sizes[i % len(cfg.general_sizes)], cfg.alpha, s) if i % 2 == 0 else _col(cfg, s)
            yield lambda g=g, s=s: check_sdbp_vs_wptp_general(g, seed=s, iters=it)
        else:
            raise ValueError(f"unknown theorem {theorem!r}")
    s = cfg.seed
    if theorem == "sp-spstar":
        g = _ksat(cfg.sp_sizes[0], cfg.alpha, s)
        yield lambda: check_sp_star_vs_sp(g, 0.5, s, it, perturb=True)
    elif theorem == "ptp-sp-3col":
        g = _col(cfg, s)
        yield lambda: check_ptp_vs_sp_3col(g, s, it, perturb=True)
    elif theorem == "wptp-spstar-ksat":
        g = _ksat(cfg.wptp_sizes[0], cfg.alpha, s)
        yield lambda: check_wptp_vs_spstar_ksat(g, 0.5, s, it, perturb=True)
    elif theorem == "bp-wptp-ksat":
        g = _ksat(cfg.bp_sizes[0], cfg.alpha, s)
        yield lambda: check_bp_vs_wptp_ksat(g, 0.8, s, it, decoupled=False)
    elif theorem == "sdbp-ptp-3col":
        g = _col(cfg, s)
        yield lambda: check_sdbp_vs_ptp_3col(g, s, it, plain_bp=True)
    elif theorem == "sdbp-wptp":
        yield lambda: check_sdbp_vs_wptp_general(counterexample_instance(), seed=s, iters=it)


def run_suite(theorems=None, cfg: SuiteConfig | None = None, workers: int = 1) -> list:
    """Runs every job of the selected theorems; returns the reports in a fixed order."""
    cfg = cfg or SuiteConfig()
    jobs = [j for t in (theorems or THEOREMS) for j in _jobs(t, cfg)]
    if workers <= 1:
        return [j() for j in jobs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(lambda j: j(), jobs))
