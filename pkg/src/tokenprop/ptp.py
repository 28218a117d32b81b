"""Probabilistic token passing (PTP) and its weighted variant.

A token distribution is a float array of length 2^q indexed by mask. Index 0 stands
for the empty sentinel and always carries zero weight in stored messages: mass that an
update would put on the empty set is dropped, and the message is then normalized.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import lattice
from . import tokens as tk
from .csp import DEFAULT_BUDGET, FactorGraph, forceable_tokens
from .errors import BudgetExceeded, DegenerateMessage, InitError, ParamError, ScopeError


def normalize(w: np.ndarray, edge=None) -> np.ndarray:
    s = w.sum()
    if not s > 0:
        raise DegenerateMessage("message has no mass", edge)
    return w / s


def check_distribution(w: np.ndarray, q: int):
    if w.shape != (1 << q,) or w[0] != 0 or (w < 0).any() or not np.isfinite(w).all():
        raise ParamError("not a token distribution over this alphabet")


class ObedienceConditional:
    """Weights omega(a|b) with omega(a|empty)=0 and omega(a|b)=0 unless a is a subset of b.

    Stored as a (2^q, 2^q) array W[a, b]; row 0 and column 0 are zero.
    """

    def __init__(self, table, q: int):
        W = np.array(table, dtype=float)
        n = 1 << q
        if W.shape != (n, n):
            raise ParamError(f"obedience table must have shape {(n, n)}")
        if (W < 0).any() or not np.isfinite(W).all():
            raise ParamError("obedience weights must be finite and nonnegative")
        if W[:, 0].any() or W[0, :].any():
            raise ParamError("omega(.|empty) and the empty row must be zero")
        a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        if W[(a & ~b) != 0].any():
            raise ParamError("omega(a|b) must vanish unless a is a subset of b")
        W.setflags(write=False)
        self.table = W
        self.q = q

    def __call__(self, a: int, b: int) -> float:
        return float(self.table[a, b])

    @classmethod
    def indicator(cls, q: int) -> "ObedienceConditional":
        W = np.eye(1 << q)
        W[0, 0] = 0.0
        return cls(W, q)

    @classmethod
    def random(cls, q: int, rng: np.random.Generator) -> "ObedienceConditional":
        n = 1 << q
        a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        W = rng.uniform(0.1, 1.0, size=(n, n)) * ((a & ~b) == 0)
        W[0, :] = 0.0
        W[:, 0] = 0.0
        return cls(W, q)

    def is_indicator(self) -> bool:
        return np.array_equal(self.table, ObedienceConditional.indicator(self.q).table)


def ksat_gamma_conditional(gamma: float) -> ObedienceConditional:
    """The one-parameter conditional for binary alphabets.

    omega(a|b) = gamma if a = b = {0,1}; 1-gamma if a is a proper subset of b = {0,1};
    1 if a = b is a singleton; 0 otherwise.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ParamError(f"gamma must be in [0, 1], got {gamma}")
    W = np.zeros((4, 4))
    W[3, 3] = gamma
    W[1, 3] = W[2, 3] = 1.0 - gamma
    W[1, 1] = W[2, 2] = 1.0
    return ObedienceConditional(W, 2)


def _law(dists, q, method, budget):
    if method == "enumerate":
        return lattice.intersection_law_enum(list(dists), q, budget)
    return lattice.intersection_law(list(dists), q)


def _incoming(g, v, rights, exclude):
    cs = [b for b in g.var_constraints[v] if b != exclude]
    try:
        return [rights[b] for b in cs]
    except KeyError as e:
        raise ScopeError(f"missing right message from constraint {e.args[0]} to {v}") from None


def _drop_empty(law, edge):
    out = law.copy()
    out[0] = 0.0
    if not out.sum() > 0:
        raise DegenerateMessage("all mass fell on the empty token", edge)
    return out


def _weigh(law, omega: ObedienceConditional, edge):
    out = omega.table @ law
    if not out.sum() > 0:
        raise DegenerateMessage("all mass fell on the empty token", edge)
    return out


def ptp_left_update(g: FactorGraph, v: int, c: int, rights: Mapping, method="enumerate", budget=DEFAULT_BUDGET):
    """Unnormalized lambda_{v->c}(t): mass of tuples whose intersection is t.

    rights maps each b in C(v) minus c to the normalized rho_{b->v}.
    """
    law = _law(_incoming(g, v, rights, c), g.q, method, budget)
    return _drop_empty(law, ("v->c", v, c))


def wptp_left_update(g, v, c, rights, omega: ObedienceConditional, method="enumerate", budget=DEFAULT_BUDGET):
    """Unnormalized weighted lambda(t) = sum over tuples of omega(t | intersection) * product."""
    law = _law(_incoming(g, v, rights, c), g.q, method, budget)
    return _weigh(law, omega, ("v->c", v, c))


def ptp_summary(g, v, rights, method="enumerate", budget=DEFAULT_BUDGET):
    law = _law(_incoming(g, v, rights, None), g.q, method, budget)
    return _drop_empty(law, ("v", v))


def wptp_summary(g, v, rights, omega: ObedienceConditional, method="enumerate", budget=DEFAULT_BUDGET):
    law = _law(_incoming(g, v, rights, None), g.q, method, budget)
    return _weigh(law, omega, ("v", v))


def right_law(g: FactorGraph, c: int, v: int, lefts: Mapping, budget=DEFAULT_BUDGET) -> np.ndarray:
    """Law (including empty mass at index 0) of F_c applied to independent incoming tokens."""
    con = g.constraints[c]
    p = con.position(v)
    T = tk.n_tokens(g.q)
    if T ** (con.arity - 1) > budget:
        raise BudgetExceeded(f"{T}^{con.arity - 1} tuples exceeds budget {budget}")
    table = con.forced_table(p, budget)
    w = np.ones(table.shape)
    for i, u in enumerate(con.scope):
        if i == p:
            continue
        try:
            lam = lefts[u]
        except KeyError:
            raise ScopeError(f"missing left message from {u} to constraint {c}") from None
        sh = [1] * con.arity
        sh[i] = T
        w = w * lam[1:].reshape(sh)
    return np.bincount(table.ravel(), weights=w.ravel(), minlength=1 << g.q)


def ptp_right_update(g, c, v, lefts, budget=DEFAULT_BUDGET):
    """Unnormalized rho_{c->v}(t): mass of tuples whose forced token is t.

    lefts maps each u in V(c) minus v to the normalized lambda_{u->c}.
    """
    return _drop_empty(right_law(g, c, v, lefts, budget), ("c->v", v, c))


# ---------------------------------------------------------------------------
# closed forms


def ksat_wptp_left_closed(rights, gamma):
    """Closed-form weighted k-SAT left message from the rights of C(v) minus c.

    Same algebraic form as the summary, restricted to the other clauses.
    """
    return ksat_wptp_summary_closed(rights, gamma)


def ksat_wptp_summary_closed(rights, gamma):
    """lambda(0) = prod(rho0+rho01) - gamma*prod(rho01); likewise lambda(1); lambda(01) = gamma*prod(rho01)."""
    a = np.prod([r[1] + r[3] for r in rights])
    b = np.prod([r[2] + r[3] for r in rights])
    s = np.prod([r[3] for r in rights])
    out = np.zeros(4)
    out[1] = a - gamma * s
    out[2] = b - gamma * s
    out[3] = gamma * s
    return out


def ksat_wptp_right_closed(label_v, lefts_with_labels):
    """rho({L}) = P, rho({not L}) = 0, rho(01) = 1 - P with P = prod of lambda(not L_u) over the others.

    lefts_with_labels: list of (lambda_norm array, L_{u,c}) for u in V(c) minus v.
    """
    P = 1.0
    for lam, lu in lefts_with_labels:
        P *= lam[tk.singleton(1 - lu)]
    out = np.zeros(4)
    out[tk.singleton(label_v)] = P
    out[3] = 1.0 - P
    return out


def col3_ptp_left_closed(rights):
    """Closed-form 3-COL PTP left (or summary) message; rights are normalized length-8 arrays."""
    out = np.zeros(8)
    pair = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
    full = 7
    for i in range(3):
        j, k = pair[i]
        tij = tk.from_symbols((i, j))
        tik = tk.from_symbols((i, k))
        out[1 << i] = (
            np.prod([r[tij] + r[tik] + r[full] for r in rights])
            - np.prod([r[tij] + r[full] for r in rights])
            - np.prod([r[tik] + r[full] for r in rights])
            + np.prod([r[full] for r in rights])
        )
    for i, j in ((0, 1), (0, 2), (1, 2)):
        tij = tk.from_symbols((i, j))
        out[tij] = np.prod([r[tij] + r[full] for r in rights]) - np.prod([r[full] for r in rights])
    out[full] = np.prod([r[full] for r in rights])
    return out


def col3_ptp_right_closed(lam):
    """rho(ij) = lambda(k) for the other endpoint's normalized lambda; rho(ijk) = the rest."""
    out = np.zeros(8)
    for k in range(3):
        out[7 & ~(1 << k)] = lam[1 << k]
    out[7] = lam[3] + lam[5] + lam[6] + lam[7]
    return out


# ---------------------------------------------------------------------------
# engine


@dataclass
class PtpConfig:
    """Run configuration.

    mode: "plain" or "weighted"; omega is a single ObedienceConditional or a mapping v -> one.
    init: "right" draws rho^(0); "left" draws lambda^(1) (the first iteration then only
    computes rights). init_support: "forceable" restricts right init to the forceable
    tokens of each edge, "all" uses every token.
    method: "fast" folds intersection laws, "enumerate" sums over explicit tuples.
    """

    mode: str = "plain"
    omega: object = None
    max_iters: int = 1000
    tol: float = 1e-8
    seed: int = 0
    init: str = "right"
    init_support: str = "forceable"
    method: str = "fast"
    budget: int = DEFAULT_BUDGET

    def omega_for(self, v):
        if self.mode == "plain":
            return None
        if isinstance(self.omega, ObedienceConditional):
            return self.omega
        if self.omega is None:
            raise ParamError("weighted mode needs an obedience conditional")
        return self.omega[v]


@dataclass
class PtpState:
    g: FactorGraph
    left: dict | None  # (v, c) -> normalized lambda_{v->c}
    right: dict | None  # (v, c) -> normalized rho_{c->v}
    summaries: dict = field(default_factory=dict)
    left_raw: dict = field(default_factory=dict)
    right_raw: dict = field(default_factory=dict)
    summary_raw: dict = field(default_factory=dict)
    iteration: int = 0
    delta: float = float("inf")


@dataclass
class RunReport:
    converged: bool
    iterations: int
    deltas: list


def random_distribution(rng, q, support=None):
    w = np.zeros(1 << q)
    draws = rng.uniform(0.1, 1.0, size=(1 << q) - 1)
    w[1:] = draws
    if support is not None:
        mask = np.zeros(1 << q, dtype=bool)
        mask[list(support)] = True
        w[~mask] = 0.0
    return w / w.sum()


def init_rights(g, rng, support="forceable"):
    out = {}
    for v, c in g.edges:
        sup = forceable_tokens(g, c, v) if support == "forceable" else None
        out[(v, c)] = random_distribution(rng, g.q, sup)
    return out


def init_lefts(g, rng):
    return {e: random_distribution(rng, g.q) for e in g.edges}


def ptp_init(g: FactorGraph, cfg: PtpConfig, rights=None, lefts=None) -> PtpState:
    """Initial state from explicit messages or from the seeded RNG."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.init == "right":
        right = rights if rights is not None else init_rights(g, rng, cfg.init_support)
        _check_cover(g, right)
        return PtpState(g, None, {e: np.asarray(w, float) for e, w in right.items()})
    if cfg.init == "left":
        left = lefts if lefts is not None else init_lefts(g, rng)
        _check_cover(g, left)
        return PtpState(g, {e: np.asarray(w, float) for e, w in left.items()}, None)
    raise ParamError(f"unknown init {cfg.init!r}")


def _check_cover(g, msgs):
    missing = [e for e in g.edges if e not in msgs]
    if missing:
        raise InitError(f"no initial message for edges {missing[:3]}")
    for e in g.edges:
        check_distribution(np.asarray(msgs[e], float), g.q)


def compute_lefts(g, right, cfg: PtpConfig):
    """All unnormalized left messages from normalized rights."""
    raw = {}
    for v in range(g.n_vars):
        cs = g.var_constraints[v]
        incoming = [right[(v, b)] for b in cs]
        if cfg.method == "enumerate":
            laws = [lattice.intersection_law_enum(incoming[:i] + incoming[i + 1:], g.q, cfg.budget) for i in range(len(cs))]
        else:
            laws = lattice.leave_one_out_laws(incoming, g.q)
        omega = cfg.omega_for(v)
        for c, law in zip(cs, laws):
            edge = ("v->c", v, c)
            raw[(v, c)] = _drop_empty(law, edge) if omega is None else _weigh(law, omega, edge)
    return raw


def compute_summaries(g, right, cfg: PtpConfig):
    raw = {}
    for v in range(g.n_vars):
        incoming = [right[(v, b)] for b in g.var_constraints[v]]
        law = _law(incoming, g.q, "enumerate" if cfg.method == "enumerate" else "fast", cfg.budget)
        omega = cfg.omega_for(v)
        raw[v] = _drop_empty(law, ("v", v)) if omega is None else _weigh(law, omega, ("v", v))
    return raw


def compute_rights(g, left, budget=DEFAULT_BUDGET):
    raw = {}
    for ci, con in enumerate(g.constraints):
        lefts = {u: left[(u, ci)] for u in con.scope}
        for v in con.scope:
            raw[(v, ci)] = _drop_empty(right_law(g, ci, v, lefts, budget), ("c->v", v, ci))
    return raw


def _norm_all(raw, tag):
    return {e: normalize(w, (tag,) + tuple(e) if isinstance(e, tuple) else (tag, e)) for e, w in raw.items()}


def _max_change(old, new):
    if old is None:
        return 0.0
    return max((float(np.max(np.abs(new[e] - old[e]))) for e in new), default=0.0)


def ptp_step(state: PtpState, cfg: PtpConfig) -> PtpState:
    """One flooding iteration: lefts from rights, rights from lefts, then summaries."""
    g = state.g
    old_left, old_right = state.left, state.right
    if state.right is not None:
        state.left_raw = compute_lefts(g, state.right, cfg)
        state.left = _norm_all(state.left_raw, "v->c")
    state.right_raw = compute_rights(g, state.left, cfg.budget)
    state.right = _norm_all(state.right_raw, "c->v")
    state.summary_raw = compute_summaries(g, state.right, cfg)
    state.summaries = {v: normalize(w, ("v", v)) for v, w in state.summary_raw.items()}
    state.iteration += 1
    changes = [_max_change(old_right, state.right)]
    if old_left is not None and old_left is not state.left:
        changes.append(_max_change(old_left, state.left))
    state.delta = max(changes) if old_right is not None else float("inf")
    return state


def run_ptp(g: FactorGraph, cfg: PtpConfig | None = None, state: PtpState | None = None, callback=None):
    """Iterate PTP until the max change of normalized messages drops below tol or max_iters.

    Returns (state, RunReport). callback(state) is invoked after every iteration.
    """
    cfg = cfg or PtpConfig()
    if cfg.max_iters < 0 or cfg.tol < 0:
        raise ParamError("max_iters and tol must be nonnegative")
    state = state or ptp_init(g, cfg)
    deltas = []
    converged = False
    for _ in range(cfg.max_iters):
        ptp_step(state, cfg)
        deltas.append(state.delta)
        if callback is not None:
            callback(state)
        if state.delta < cfg.tol:
            converged = True
            break
    return state, RunReport(converged, state.iteration, deltas)
