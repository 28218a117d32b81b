"""BP and state-decoupled BP on the normally realized MRF (Forney graph).

Every edge (v, c) carries a state (s^L, s^R) of two tokens. Messages over states are
arrays of shape (2^q, 2^q) indexed [s^L, s^R] by mask; row 0 and column 0 (the empty
set) are always zero. Summaries are token distributions of length 2^q.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import lattice
from . import tokens as tk
from .csp import DEFAULT_BUDGET, FactorGraph, forceable_tokens
from .errors import BudgetExceeded, DegenerateMessage, ParamError
from .ptp import ObedienceConditional, random_distribution


@dataclass
class ForneyGraph:
    """A factor graph together with one obedience conditional per variable."""

    g: FactorGraph
    omegas: object  # ObedienceConditional or mapping v -> ObedienceConditional

    def omega(self, v) -> ObedienceConditional:
        if isinstance(self.omegas, ObedienceConditional):
            return self.omegas
        return self.omegas[v]

    @property
    def q(self):
        return self.g.q


@lru_cache(maxsize=None)
def _and_index(q):
    n = 1 << q
    return np.arange(n)[:, None] & np.arange(n)[None, :]


def _weight_tensor(omega: ObedienceConditional) -> np.ndarray:
    """Wt[sL, sR, m] = omega(sL | sR & m)."""
    cache = omega.__dict__.setdefault("_wt", None)
    if cache is None:
        W = omega.table
        cache = W[:, _and_index(omega.q)]
        omega.__dict__["_wt"] = cache
    return cache


def _clean(table):
    table = np.array(table, dtype=float)
    table[0, :] = 0.0
    table[:, 0] = 0.0
    return table


# ---------------------------------------------------------------------------
# global function


def _forced(g: FactorGraph, c: int, v: int, tokens_by_var: Mapping) -> int:
    con = g.constraints[c]
    p = con.position(v)
    idx = []
    for i, u in enumerate(con.scope):
        if i == p:
            idx.append(0)
        else:
            t = tokens_by_var[u]
            if t == tk.EMPTY:
                return tk.EMPTY
            idx.append(t - 1)
    return int(con.forced_table(p)[tuple(idx)])


def left_function(fg: ForneyGraph, v: int, y_v: int, s: Mapping) -> float:
    """g_v = omega_v(y_v | intersection of s^R) times prod [s^L = y_v]."""
    g = fg.g
    inter = tk.full(g.q)
    for c in g.var_constraints[v]:
        sl, sr = s[(v, c)]
        if sl != y_v:
            return 0.0
        inter &= sr
    return fg.omega(v)(y_v, inter)


def right_function(fg: ForneyGraph, c: int, s: Mapping) -> float:
    """f_c = prod over v of [s^R_{v,c} = F_c(s^L of the other variables)]."""
    g = fg.g
    lefts = {u: s[(u, c)][0] for u in g.scope(c)}
    for v in g.scope(c):
        if s[(v, c)][1] != _forced(g, c, v, lefts):
            return 0.0
    return 1.0


def global_F(fg: ForneyGraph, y: Mapping, s: Mapping) -> float:
    """F(y, s) = prod_v g_v * prod_c f_c."""
    g = fg.g
    out = 1.0
    for v in range(g.n_vars):
        out *= left_function(fg, v, y[v], s)
        if out == 0.0:
            return 0.0
    for c in range(g.n_constraints):
        out *= right_function(fg, c, s)
        if out == 0.0:
            return 0.0
    return out


def enumerate_valid(fg: ForneyGraph, budget: int = DEFAULT_BUDGET) -> list:
    """Every configuration with F > 0 as (y, s, F).

    The left functions force s^L = y and the right functions force s^R = F_c(other s^L),
    so only the side variables y need to be enumerated.
    """
    g = fg.g
    T = tk.n_tokens(g.q)
    if T**g.n_vars > budget:
        raise BudgetExceeded(f"{T}^{g.n_vars} side configurations exceeds budget {budget}")
    out = []
    for ys in itertools.product(tk.all_tokens(g.q), repeat=g.n_vars):
        y = dict(enumerate(ys))
        s = {}
        for v, c in g.edges:
            s[(v, c)] = (y[v], _forced(g, c, v, y))
        if any(sr == tk.EMPTY for _, sr in s.values()):
            continue
        val = global_F(fg, y, s)
        if val > 0:
            out.append((y, s, val))
    return out


# ---------------------------------------------------------------------------
# generic BP updates


def _left_from_law(law, omega):
    """lambda(sL, sR) = sum_m law[sL, m] * omega(sL | sR & m); law may be 1-D (shared over sL)."""
    Wt = _weight_tensor(omega)
    if law.ndim == 1:
        out = np.einsum("m,lsm->ls", law, Wt)
    else:
        out = np.einsum("lm,lsm->ls", law, Wt)
    return _clean(out)


def bp_left_update(fg: ForneyGraph, v: int, c: int, rights: Mapping) -> np.ndarray:
    """lambda_{v->c}(sL, sR) = sum over other sR_b of omega(sL | sR & all sR_b) prod_b rho_b(sL, sR_b)."""
    g = fg.g
    laws = [np.asarray(rights[b], float) for b in g.var_constraints[v] if b != c]
    law = lattice.intersection_law(laws, g.q) if laws else lattice.delta_full(g.q, (1 << g.q,))
    return _left_from_law(law, fg.omega(v))


def bp_left_all(fg: ForneyGraph, v: int, rights: Mapping) -> dict:
    """All left messages of v at once (leave-one-out folds)."""
    g = fg.g
    cs = g.var_constraints[v]
    laws = lattice.leave_one_out_laws([np.asarray(rights[b], float) for b in cs], g.q)
    return {c: _left_from_law(law, fg.omega(v)) for c, law in zip(cs, laws)}


def bp_summary(fg: ForneyGraph, v: int, rights: Mapping) -> np.ndarray:
    """mu_v(y) = sum over sR of omega(y | intersection) prod_c rho_c(y, sR_c)."""
    g = fg.g
    law = lattice.intersection_law([np.asarray(rights[c], float) for c in g.var_constraints[v]], g.q)
    W = fg.omega(v).table
    out = np.einsum("ym,ym->y", law, W)
    out[0] = 0.0
    return out


def _grid_tables(g: FactorGraph, c: int, budget: int):
    con = g.constraints[c]
    T = tk.n_tokens(g.q)
    if T ** (con.arity - 1) > budget:
        raise BudgetExceeded(f"{T}^{con.arity - 1} tuples exceeds budget {budget}")
    shape = (T,) * con.arity
    return [np.broadcast_to(con.forced_table(p, budget), shape) for p in range(con.arity)], shape


def bp_right_all(fg: ForneyGraph, c: int, lefts: Mapping, budget: int = DEFAULT_BUDGET) -> dict:
    """rho_{c->v}(sL, sR) for every v in V(c).

    rho(sL_v, sR) = sum over the other left states of [sR = F_c(others)] times
    prod_u lambda_u(sL_u, F_c(left states except u)), where v's own left state enters the
    forced tokens of the other variables.
    """
    g = fg.g
    con = g.constraints[c]
    k = con.arity
    n = 1 << g.q
    T = n - 1
    tables, shape = _grid_tables(g, c, budget)
    gathered = []
    for i, u in enumerate(con.scope):
        sh = [1] * k
        sh[i] = T
        sl = np.arange(1, n).reshape(sh)
        lam = np.asarray(lefts[u], float)
        gathered.append(lam[np.broadcast_to(sl, shape), tables[i]])
    out = {}
    for p, v in enumerate(con.scope):
        w = np.ones(shape)
        for i in range(k):
            if i != p:
                w = w * gathered[i]
        sh = [1] * k
        sh[p] = T
        sl = np.broadcast_to(np.arange(1, n).reshape(sh), shape)
        flat = np.bincount((sl * n + tables[p]).ravel(), weights=w.ravel(), minlength=n * n)
        out[v] = _clean(flat.reshape(n, n))
    return out


def bp_right_update(fg: ForneyGraph, c: int, v: int, lefts: Mapping, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    return bp_right_all(fg, c, lefts, budget)[v]


def is_state_decoupled(msg: np.ndarray, tol: float = 1e-10) -> bool:
    """True iff msg(sL, sR) = msg(sR, sR) for every sR and every nonempty sL strictly inside sR."""
    msg = np.asarray(msg, float)
    n = msg.shape[0]
    scale = max(float(np.max(np.abs(msg))), 1e-300)
    for sr in range(1, n):
        for sl in range(1, n):
            if sl != sr and tk.is_subset(sl, sr):
                if abs(msg[sl, sr] - msg[sr, sr]) > tol * scale:
                    return False
    return True


def decouple(rho_star: np.ndarray) -> np.ndarray:
    """State message with entries rho*(sR) for every sL inside sR."""
    n = len(rho_star)
    out = np.zeros((n, n))
    for sr in range(1, n):
        for sl in range(1, n):
            if tk.is_subset(sl, sr):
                out[sl, sr] = rho_star[sr]
    return out


def diagonal_normalize(rho: np.ndarray, edge=None) -> np.ndarray:
    """rho*(sR) = delta * rho(sR, sR) with delta = 1 / sum of the diagonal."""
    d = np.diag(np.asarray(rho, float)).copy()
    d[0] = 0.0
    s = d.sum()
    if not s > 0:
        raise DegenerateMessage("right message has no diagonal mass", edge)
    return d / s


# ---------------------------------------------------------------------------
# engines


@dataclass
class BpConfig:
    """left_norm: "none", "total" or "ksat" (divide by sum over sL of lambda(sL, full)).
    right_norm: "none" or "total". init: "random" or "decoupled" right messages."""

    max_iters: int = 1000
    tol: float = 1e-8
    seed: int = 0
    left_norm: str = "total"
    right_norm: str = "total"
    init: str = "decoupled"
    budget: int = DEFAULT_BUDGET


@dataclass
class BpState:
    fg: ForneyGraph
    right: dict  # (v, c) -> (2^q, 2^q)
    left: dict = field(default_factory=dict)
    left_raw: dict = field(default_factory=dict)
    summaries: dict = field(default_factory=dict)
    summary_raw: dict = field(default_factory=dict)
    iteration: int = 0
    delta: float = float("inf")


def _scale_left(lam, mode, edge):
    if mode == "none":
        return lam
    if mode == "ksat":
        s = lam[:, lam.shape[0] - 1].sum()
    elif mode == "total":
        s = lam.sum()
    else:
        raise ParamError(f"unknown left normalization {mode!r}")
    if not s > 0:
        raise DegenerateMessage("left message has no mass", edge)
    return lam / s


def _scale_total(x, edge):
    s = x.sum()
    if not s > 0:
        raise DegenerateMessage("message has no mass", edge)
    return x / s


def random_state_message(rng, q, support_tokens, decoupled=True):
    """Random right message supported on sL inside sR with sR in support_tokens."""
    n = 1 << q
    out = np.zeros((n, n))
    if decoupled:
        r = random_distribution(rng, q, support_tokens)
        return decouple(r)
    for sr in support_tokens:
        for sl in range(1, n):
            if tk.is_subset(sl, sr):
                out[sl, sr] = rng.uniform(0.1, 1.0)
    return out / out.sum()


def bp_init(fg: ForneyGraph, cfg: BpConfig, right=None) -> BpState:
    g = fg.g
    if right is None:
        rng = np.random.default_rng(cfg.seed)
        right = {
            (v, c): random_state_message(rng, g.q, sorted(forceable_tokens(g, c, v)), cfg.init == "decoupled")
            for v, c in g.edges
        }
    return BpState(fg, {e: np.asarray(m, float) for e, m in right.items()})


def bp_step(state: BpState, cfg: BpConfig) -> BpState:
    fg, g = state.fg, state.fg.g
    raw, left = {}, {}
    for v in range(g.n_vars):
        rights = {b: state.right[(v, b)] for b in g.var_constraints[v]}
        for c, lam in bp_left_all(fg, v, rights).items():
            raw[(v, c)] = lam
            left[(v, c)] = _scale_left(lam, cfg.left_norm, ("v->c", v, c))
    new_right = {}
    for ci, con in enumerate(g.constraints):
        out = bp_right_all(fg, ci, {u: left[(u, ci)] for u in con.scope}, cfg.budget)
        for v, rho in out.items():
            new_right[(v, ci)] = rho if cfg.right_norm == "none" else _scale_total(rho, ("c->v", v, ci))
    state.delta = max(float(np.max(np.abs(new_right[e] - state.right[e]))) for e in new_right)
    state.left_raw, state.left, state.right = raw, left, new_right
    state.summary_raw = {v: bp_summary(fg, v, {b: new_right[(v, b)] for b in g.var_constraints[v]}) for v in range(g.n_vars)}
    state.summaries = {v: _scale_total(m, ("v", v)) for v, m in state.summary_raw.items()}
    state.iteration += 1
    return state


def run_bp(fg: ForneyGraph, cfg: BpConfig | None = None, state: BpState | None = None, callback=None):
    cfg = cfg or BpConfig()
    state = state or bp_init(fg, cfg)
    converged = False
    for _ in range(cfg.max_iters):
        bp_step(state, cfg)
        if callback is not None:
            callback(state)
        if state.delta < cfg.tol:
            converged = True
            break
    return state, converged


@dataclass
class SdbpState:
    fg: ForneyGraph
    rho_star: dict  # (v, c) -> length-2^q distribution over right states
    right: dict = field(default_factory=dict)  # undecoupled rho from the last step
    left: dict = field(default_factory=dict)  # normalized lambda
    left_raw: dict = field(default_factory=dict)
    summaries: dict = field(default_factory=dict)
    summary_raw: dict = field(default_factory=dict)
    iteration: int = 0
    delta: float = float("inf")


def sdbp_init(fg: ForneyGraph, seed: int = 0, rho_star=None) -> SdbpState:
    g = fg.g
    if rho_star is None:
        rng = np.random.default_rng(seed)
        rho_star = {(v, c): random_distribution(rng, g.q, forceable_tokens(g, c, v)) for v, c in g.edges}
    return SdbpState(fg, {e: np.asarray(r, float) for e, r in rho_star.items()})


def sdbp_lefts(fg: ForneyGraph, v: int, rho_star: Mapping) -> dict:
    """lambda_{v->c}(sL, sR) from the decoupled rights of the other constraints."""
    g = fg.g
    cs = g.var_constraints[v]
    laws = lattice.leave_one_out_laws([np.asarray(rho_star[b], float) for b in cs], g.q)
    return {c: _left_from_law(law, fg.omega(v)) for c, law in zip(cs, laws)}


def sdbp_summary(fg: ForneyGraph, v: int, rho_star: Mapping) -> np.ndarray:
    g = fg.g
    law = lattice.intersection_law([np.asarray(rho_star[c], float) for c in g.var_constraints[v]], g.q)
    out = fg.omega(v).table @ law
    out[0] = 0.0
    return out


def sdbp_step(state: SdbpState, budget: int = DEFAULT_BUDGET) -> SdbpState:
    """One SDBP iteration: lefts from rho*, rights from lefts as in BP, rho* by diagonal normalization."""
    fg, g = state.fg, state.fg.g
    raw, left = {}, {}
    for v in range(g.n_vars):
        for c, lam in sdbp_lefts(fg, v, {b: state.rho_star[(v, b)] for b in g.var_constraints[v]}).items():
            raw[(v, c)] = lam
            left[(v, c)] = _scale_total(lam, ("v->c", v, c))
    right, star = {}, {}
    for ci, con in enumerate(g.constraints):
        out = bp_right_all(fg, ci, {u: left[(u, ci)] for u in con.scope}, budget)
        for v, rho in out.items():
            right[(v, ci)] = rho
            star[(v, ci)] = diagonal_normalize(rho, ("c->v", v, ci))
    state.delta = max(float(np.max(np.abs(star[e] - state.rho_star[e]))) for e in star)
    state.left_raw, state.left, state.right, state.rho_star = raw, left, right, star
    state.summary_raw = {v: sdbp_summary(fg, v, {b: star[(v, b)] for b in g.var_constraints[v]}) for v in range(g.n_vars)}
    state.summaries = {v: _scale_total(m, ("v", v)) for v, m in state.summary_raw.items()}
    state.iteration += 1
    return state


def run_sdbp(fg: ForneyGraph, max_iters=1000, tol=1e-8, seed=0, state=None, callback=None):
    state = state or sdbp_init(fg, seed)
    converged = False
    for _ in range(max_iters):
        sdbp_step(state)
        if callback is not None:
            callback(state)
        if state.delta < tol:
            converged = True
            break
    return state, converged


# ---------------------------------------------------------------------------
# k-SAT closed forms. Messages are dicts over the four supported states, named
# relative to the edge's own label L: "LL", "Lb*" (L-bar, *), "L*", "**".

KSAT_STATES = ("LL", "Lb*", "L*", "**")


def ksat_state_masks(label: int) -> dict:
    L, Lb = tk.singleton(label), tk.singleton(1 - label)
    return {"LL": (L, L), "Lb*": (Lb, 3), "L*": (L, 3), "**": (3, 3)}


def ksat_from_table(table, label) -> dict:
    return {k: float(table[sl, sr]) for k, (sl, sr) in ksat_state_masks(label).items()}


def ksat_to_table(d, label) -> np.ndarray:
    out = np.zeros((4, 4))
    for k, (sl, sr) in ksat_state_masks(label).items():
        out[sl, sr] = d[k]
    return out


def ksat_bp_left_closed(rights_u, rights_s, gamma) -> dict:
    """Closed-form k-SAT BP left message; rights_u / rights_s come from C^u_c(v) / C^s_c(v)."""
    pu_bar = np.prod([r["Lb*"] for r in rights_u])
    ps_bar = np.prod([r["Lb*"] for r in rights_s])
    return {
        "LL": pu_bar * np.prod([r["LL"] + r["L*"] for r in rights_s]),
        "Lb*": ps_bar * (np.prod([r["L*"] + r["LL"] for r in rights_u]) - gamma * np.prod([r["L*"] for r in rights_u])),
        "L*": pu_bar * (np.prod([r["L*"] + r["LL"] for r in rights_s]) - gamma * np.prod([r["L*"] for r in rights_s])),
        "**": gamma * np.prod([r["**"] for r in list(rights_u) + list(rights_s)]),
    }


def ksat_bp_right_closed(lefts) -> dict:
    """Closed-form k-SAT BP right message from the lefts of V(c) minus v."""
    bar = [l["Lb*"] for l in lefts]
    tot = np.prod([l["L*"] + l["**"] + l["Lb*"] for l in lefts])
    pbar = np.prod(bar)
    cross = 0.0
    for i, l in enumerate(lefts):
        cross += (l["LL"] - l["L*"] - l["**"]) * np.prod([b for j, b in enumerate(bar) if j != i])
    return {"LL": pbar, "Lb*": tot + cross - pbar, "L*": tot - pbar, "**": tot - pbar}


def ksat_bp_summary_closed(rights_1, rights_0, gamma) -> np.ndarray:
    """mu over tokens {0}, {1}, {0,1}; rights_1 / rights_0 come from C^1(v) / C^0(v)."""
    out = np.zeros(4)
    out[1] = np.prod([r["Lb*"] for r in rights_1]) * (
        np.prod([r["LL"] + r["L*"] for r in rights_0]) - gamma * np.prod([r["L*"] for r in rights_0])
    )
    out[2] = np.prod([r["Lb*"] for r in rights_0]) * (
        np.prod([r["LL"] + r["L*"] for r in rights_1]) - gamma * np.prod([r["L*"] for r in rights_1])
    )
    out[3] = gamma * np.prod([r["**"] for r in list(rights_1) + list(rights_0)])
    return out


# ---------------------------------------------------------------------------
# 3-COL closed forms (plain omega). Tables are 8x8 indexed by masks.

_FULL3 = 7


def _perms():
    for i in range(3):
        j, k = [x for x in range(3) if x != i]
        yield i, j, k
        yield i, k, j


def _m(*syms):
    return tk.from_symbols(syms)


def col3_bp_left_closed(rights) -> np.ndarray:
    """Closed-form 3-COL BP left message from the rights of C(v) minus c."""
    out = np.zeros((8, 8))
    P = lambda f: np.prod([f(r) for r in rights])  # noqa: E731
    for i, j, k in _perms():
        I, IJ, IK, F = _m(i), _m(i, j), _m(i, k), _FULL3
        all3 = P(lambda r: r[I, IJ] + r[I, IK] + r[I, F])
        ij_ = P(lambda r: r[I, IJ] + r[I, F])
        ik_ = P(lambda r: r[I, IK] + r[I, F])
        out[I, IJ] = all3 - ij_
        out[I, F] = all3 - ij_ - ik_ + P(lambda r: r[I, F])
        out[IJ, IJ] = P(lambda r: r[IJ, IJ] + r[IJ, F])
        out[IJ, F] = P(lambda r: r[IJ, IJ] + r[IJ, F]) - P(lambda r: r[IJ, F])
    out[_FULL3, _FULL3] = P(lambda r: r[_FULL3, _FULL3])
    return out


def col3_bp_right_closed(lam) -> np.ndarray:
    """Closed-form 3-COL BP right message from the other endpoint's left message."""
    out = np.zeros((8, 8))
    F = _FULL3
    rest = lam[_m(0, 1), F] + lam[_m(0, 2), F] + lam[_m(1, 2), F] + lam[F, F]
    for i, j, k in _perms():
        out[_m(i), _m(i, j)] = lam[_m(k), _m(j, k)]
        out[_m(i), F] = lam[_m(j, k), _m(j, k)]
        out[_m(i, j), _m(i, j)] = lam[_m(k), F]
        out[_m(i, j), F] = rest
    out[F, F] = rest
    return out


def col3_bp_summary_closed(rights) -> np.ndarray:
    out = np.zeros(8)
    P = lambda f: np.prod([f(r) for r in rights])  # noqa: E731
    F = _FULL3
    for i in range(3):
        j, k = [x for x in range(3) if x != i]
        I, IJ, IK = _m(i), _m(i, j), _m(i, k)
        out[I] = (
            P(lambda r: r[I, IJ] + r[I, IK] + r[I, F])
            - P(lambda r: r[I, IJ] + r[I, F])
            - P(lambda r: r[I, IK] + r[I, F])
            + P(lambda r: r[I, F])
        )
    for i, j in ((0, 1), (0, 2), (1, 2)):
        IJ = _m(i, j)
        out[IJ] = P(lambda r: r[IJ, IJ] + r[IJ, F]) - P(lambda r: r[IJ, F])
    out[F] = P(lambda r: r[F, F])
    return out


def col3_sdbp_left_closed(rho_stars) -> np.ndarray:
    """Closed-form 3-COL SDBP left message from decoupled rights (length-8 arrays)."""
    out = np.zeros((8, 8))
    P = lambda f: np.prod([f(r) for r in rho_stars])  # noqa: E731
    F = _FULL3
    for i, j, k in _perms():
        I, IJ, IK = _m(i), _m(i, j), _m(i, k)
        all3 = P(lambda r: r[IJ] + r[IK] + r[F])
        out[I, IJ] = all3 - P(lambda r: r[IJ] + r[F])
        out[I, F] = all3 - P(lambda r: r[IJ] + r[F]) - P(lambda r: r[IK] + r[F]) + P(lambda r: r[F])
        out[IJ, IJ] = P(lambda r: r[IJ] + r[F])
        out[IJ, F] = P(lambda r: r[IJ] + r[F]) - P(lambda r: r[F])
    out[F, F] = P(lambda r: r[F])
    return out


def col3_sdbp_right_closed(lam) -> np.ndarray:
    """rho*(ij) = delta * lambda(k, ijk); rho*(ijk) = delta * (sum of lambda(pair, ijk) + lambda(ijk, ijk))."""
    out = np.zeros(8)
    F = _FULL3
    for k in range(3):
        out[F & ~(1 << k)] = lam[1 << k, F]
    out[F] = lam[_m(0, 1), F] + lam[_m(0, 2), F] + lam[_m(1, 2), F] + lam[F, F]
    return out / out.sum()
