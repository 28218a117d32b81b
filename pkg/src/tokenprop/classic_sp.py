"""Classical survey propagation: SP(gamma) / SP*(gamma) for k-SAT and compact SP for 3-COL."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Mapping, Sequence

import numpy as np

from .csp import FactorGraph
from .errors import DegenerateMessage, ParamError


@dataclass(frozen=True)
class SatLeftMessage:
    pi_u: float
    pi_s: float
    pi_star: float

    def total(self) -> float:
        return self.pi_u + self.pi_s + self.pi_star

    def normalized(self) -> "SatLeftMessage":
        s = self.total()
        if not s > 0:
            raise DegenerateMessage("left triplet sums to zero")
        return SatLeftMessage(self.pi_u / s, self.pi_s / s, self.pi_star / s)


@dataclass(frozen=True)
class SatSummary:
    zeta1: float
    zeta0: float
    zeta_star: float

    def normalized(self) -> "SatSummary":
        s = self.zeta1 + self.zeta0 + self.zeta_star
        if not s > 0:
            raise DegenerateMessage("summary triplet sums to zero")
        return SatSummary(self.zeta1 / s, self.zeta0 / s, self.zeta_star / s)

    @property
    def polarity(self) -> float:
        """B(v) = zeta0_norm - zeta1_norm."""
        n = self.normalized()
        return n.zeta0 - n.zeta1


@dataclass(frozen=True)
class ColMessage:
    eta1: float
    eta2: float
    eta3: float
    eta_star: float

    def as_array(self) -> np.ndarray:
        return np.array([self.eta1, self.eta2, self.eta3, self.eta_star])

    @classmethod
    def from_seq(cls, x) -> "ColMessage":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))


def _check_eta(x):
    if not 0.0 <= x <= 1.0:
        raise ParamError(f"eta must lie in [0, 1], got {x}")
    return x


def _split(g: FactorGraph, v: int, c: int, etas: Mapping):
    """(1-eta) factors of the other clauses, split into C^u_c(v) and C^s_c(v)."""
    lc = g.label(v, c)
    unsat, same = [], []
    for b in g.var_constraints[v]:
        if b == c:
            continue
        f = 1.0 - _check_eta(etas[b])
        (same if g.label(v, b) == lc else unsat).append(f)
    return prod(unsat), prod(same)


def sp_gamma_left(g: FactorGraph, v: int, c: int, etas: Mapping, gamma: float) -> SatLeftMessage:
    """SP(gamma) left triplet from the etas of C(v) minus c (mapping b -> eta_{b->v})."""
    pu, ps = _split(g, v, c, etas)
    return SatLeftMessage((1.0 - gamma * pu) * ps, (1.0 - ps) * pu, ps * pu)


def sp_star_left(g: FactorGraph, v: int, c: int, etas: Mapping, gamma: float) -> SatLeftMessage:
    """SP*(gamma): gamma factors moved into the s and star components."""
    pu, ps = _split(g, v, c, etas)
    return SatLeftMessage((1.0 - gamma * pu) * ps, (1.0 - gamma * ps) * pu, gamma * ps * pu)


def sp_right(g: FactorGraph, c: int, v: int, lefts: Mapping) -> float:
    """eta_{c->v} = product of normalized pi_u over the other variables of c."""
    out = 1.0
    for u in g.scope(c):
        if u == v:
            continue
        m = lefts[u]
        s = m.total()
        if not s > 0:
            raise DegenerateMessage("left triplet sums to zero", ("v->c", u, c))
        out *= m.pi_u / s
    return out


def sp_summary(g: FactorGraph, v: int, etas: Mapping, gamma: float) -> SatSummary:
    p1 = prod(1.0 - _check_eta(etas[b]) for b in g.var_constraints[v] if g.label(v, b) == 1)
    p0 = prod(1.0 - _check_eta(etas[b]) for b in g.var_constraints[v] if g.label(v, b) == 0)
    return SatSummary((1.0 - gamma * p1) * p0, (1.0 - gamma * p0) * p1, gamma * p1 * p0)


@dataclass
class SpConfig:
    gamma: float = 1.0
    star: bool = False
    max_iters: int = 1000
    tol: float = 1e-8
    seed: int = 0


@dataclass
class SpState:
    g: FactorGraph
    eta: dict  # (v, c) -> eta_{c->v}
    lefts: dict = field(default_factory=dict)  # (v, c) -> SatLeftMessage
    summaries: dict = field(default_factory=dict)
    iteration: int = 0
    delta: float = float("inf")


def sp_init(g: FactorGraph, cfg: SpConfig, eta=None) -> SpState:
    if not 0.0 <= cfg.gamma <= 1.0:
        raise ParamError(f"gamma must be in [0, 1], got {cfg.gamma}")
    if eta is None:
        rng = np.random.default_rng(cfg.seed)
        eta = {e: float(x) for e, x in zip(g.edges, rng.uniform(0.0, 1.0, size=len(g.edges)))}
    return SpState(g, dict(eta))


def sp_step(state: SpState, cfg: SpConfig, perturb=None) -> SpState:
    """One flooding iteration. perturb(lefts) may modify the left triplets in place (harness use)."""
    g = state.g
    left_fn = sp_star_left if cfg.star else sp_gamma_left
    lefts = {}
    for v in range(g.n_vars):
        etas = {b: state.eta[(v, b)] for b in g.var_constraints[v]}
        for c in g.var_constraints[v]:
            lefts[(v, c)] = left_fn(g, v, c, etas, cfg.gamma)
    if perturb is not None:
        perturb(lefts)
    new = {}
    for ci, con in enumerate(g.constraints):
        ls = {u: lefts[(u, ci)] for u in con.scope}
        for v in con.scope:
            new[(v, ci)] = sp_right(g, ci, v, ls)
    state.delta = max((abs(new[e] - state.eta[e]) for e in new), default=0.0)
    state.eta = new
    state.lefts = lefts
    state.summaries = {
        v: sp_summary(g, v, {b: new[(v, b)] for b in g.var_constraints[v]}, cfg.gamma) for v in range(g.n_vars)
    }
    state.iteration += 1
    return state


def run_sp(g: FactorGraph, cfg: SpConfig | None = None, state: SpState | None = None, callback=None):
    cfg = cfg or SpConfig()
    state = state or sp_init(g, cfg)
    converged = False
    for _ in range(cfg.max_iters):
        sp_step(state, cfg)
        if callback is not None:
            callback(state)
        if state.delta < cfg.tol:
            converged = True
            break
    return state, converged


# ---------------------------------------------------------------------------
# 3-COL compact quadruplet rule


def _col_ratio(incoming: Sequence) -> np.ndarray:
    """Numerators (3) and the denominator of the quadruplet rule for a list of 4-vectors."""
    M = np.array([np.asarray(x.as_array() if isinstance(x, ColMessage) else x, float) for x in incoming]).reshape(-1, 4)
    one_minus = np.prod(1.0 - M[:, :3], axis=0)
    star_plus = np.prod(M[:, 3:4] + M[:, :3], axis=0)
    star = np.prod(M[:, 3])
    num = np.array([one_minus[i] - sum(star_plus[j] for j in range(3) if j != i) + star for i in range(3)])
    den = one_minus.sum() - star_plus.sum() + star
    return num, den


def col_sp_update(u: int, v: int, incoming: Sequence) -> ColMessage:
    """eta_{u->v} from the messages eta_{w->u}, w in N(u) minus v."""
    num, den = _col_ratio(incoming)
    if not den > 0:
        raise DegenerateMessage("zero denominator in 3-COL update", (u, v))
    eta = num / den
    return ColMessage(eta[0], eta[1], eta[2], 1.0 - eta.sum())


def col_sp_summary(v: int, incoming: Sequence) -> ColMessage:
    num, den = _col_ratio(incoming)
    if not den > 0:
        raise DegenerateMessage("zero denominator in 3-COL summary", (v,))
    z = num / den
    return ColMessage(z[0], z[1], z[2], 1.0 - z.sum())


@dataclass
class ColSpState:
    g: FactorGraph
    eta: dict  # (u, v) -> 4-array for the directed pair u -> v
    summaries: dict = field(default_factory=dict)
    iteration: int = 0
    delta: float = float("inf")


def col_sp_init(g: FactorGraph, seed: int = 0, eta=None) -> ColSpState:
    if g.q != 3:
        raise ParamError("compact SP needs a 3-coloring graph")
    if eta is None:
        rng = np.random.default_rng(seed)
        eta = {}
        for u in range(g.n_vars):
            for v in g.neighbors(u):
                w = rng.uniform(0.1, 1.0, size=4)
                eta[(u, v)] = w / w.sum()
    return ColSpState(g, {k: np.asarray(x, float) for k, x in eta.items()})


def col_sp_step(state: ColSpState, perturb=None) -> ColSpState:
    g = state.g
    nbrs = [g.neighbors(u) for u in range(g.n_vars)]
    new = {}
    for u in range(g.n_vars):
        for v in nbrs[u]:
            m = col_sp_update(u, v, [state.eta[(w, u)] for w in nbrs[u] if w != v])
            new[(u, v)] = m.as_array()
    if perturb is not None:
        perturb(new)
    state.delta = max((float(np.max(np.abs(new[k] - state.eta[k]))) for k in new), default=0.0)
    state.eta = new
    state.summaries = {v: col_sp_summary(v, [new[(u, v)] for u in nbrs[v]]) for v in range(g.n_vars)}
    state.iteration += 1
    return state


def run_col_sp(g: FactorGraph, max_iters=1000, tol=1e-8, seed=0, state=None):
    state = state or col_sp_init(g, seed)
    converged = False
    for _ in range(max_iters):
        col_sp_step(state)
        if state.delta < tol:
            converged = True
            break
    return state, converged


# ---------------------------------------------------------------------------
# vectorized k-SAT sweep (same equations, array form; used by the solver)


def _excl_logprod(logs, group, n_groups):
    """For each entry i, the sum of logs over the other entries of its group.

    Zero factors (log -inf) are counted rather than summed, so the result is exactly
    -inf when another factor is zero and finite otherwise.
    """
    zero = np.isneginf(logs)
    logs = np.where(zero, 0.0, logs)
    zeros = np.zeros(n_groups, dtype=int)
    np.add.at(zeros, group, zero.astype(int))
    sums = np.zeros(n_groups)
    np.add.at(sums, group, logs)
    return np.where(zeros[group] - zero > 0, -np.inf, sums[group] - logs)


def _one_minus(gamma, logp):
    """1 - gamma * exp(logp) without cancellation when the product is close to 1."""
    return (1.0 - gamma) - gamma * np.expm1(logp)


class SpVector:
    """Array form of SP(gamma)/SP*(gamma) on a fixed k-SAT factor graph.

    Edge i is g.edges[i]; eta is a float array over edges. Products of (1 - eta) are
    kept in log form so that 1 - gamma * prod stays accurate for tiny etas.
    """

    def __init__(self, g: FactorGraph):
        self.g = g
        self.var = np.array([v for v, _ in g.edges], dtype=int)
        self.con = np.array([c for _, c in g.edges], dtype=int)
        self.lab = np.array([g.label(v, c) for v, c in g.edges], dtype=int)
        self.index = {e: i for i, e in enumerate(g.edges)}

    def _group_logs(self, eta):
        """Log products of (1 - eta): excluding the edge (same label), other label, and per variable."""
        n = self.g.n_vars
        key = self.var * 2 + self.lab
        with np.errstate(divide="ignore"):
            logs = np.log1p(-eta)
        same = _excl_logprod(logs, key, 2 * n)
        zero = np.isneginf(logs)
        zeros = np.zeros(2 * n, dtype=int)
        np.add.at(zeros, key, zero.astype(int))
        sums = np.zeros(2 * n)
        np.add.at(sums, key, np.where(zero, 0.0, logs))
        full = np.where(zeros > 0, -np.inf, sums)
        other = full[self.var * 2 + (1 - self.lab)]
        return same, other, full.reshape(n, 2)

    def sweep(self, eta: np.ndarray, gamma: float, star: bool = False):
        """One flooding iteration; returns (new eta, (n, 3) summaries [zeta1, zeta0, zeta*])."""
        ls, lu, _ = self._group_logs(eta)
        ps, pu = np.exp(ls), np.exp(lu)
        pi_u = _one_minus(gamma, lu) * ps
        pi_s = _one_minus(gamma, ls) * pu if star else _one_minus(1.0, ls) * pu
        pi_star = (gamma if star else 1.0) * ps * pu
        tot = pi_u + pi_s + pi_star
        if np.any(tot <= 0):
            i = int(np.argmax(tot <= 0))
            raise DegenerateMessage("left triplet sums to zero", ("v->c", int(self.var[i]), int(self.con[i])))
        ratio = pi_u / tot
        with np.errstate(divide="ignore"):
            new = np.exp(_excl_logprod(np.log(ratio), self.con, self.g.n_constraints))
        _, _, full = self._group_logs(new)
        l0, l1 = full[:, 0], full[:, 1]
        p0, p1 = np.exp(l0), np.exp(l1)
        summ = np.stack([_one_minus(gamma, l1) * p0, _one_minus(gamma, l0) * p1, gamma * p1 * p0], axis=1)
        return new, summ
