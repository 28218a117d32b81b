"""Decimation solver: propagate, fix the most polarized variable, simplify, repeat."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from . import tokens as tk
from .classic_sp import SpVector
from .csp import Constraint, FactorGraph, clause_labels, iter_solutions, satisfies
from .errors import Contradiction, DegenerateMessage, NoPolarizedVariable, ParamError
from .mrf import BpConfig, ForneyGraph, bp_init, bp_step, sdbp_init, sdbp_step
from .ptp import ObedienceConditional, PtpConfig, ksat_gamma_conditional, ptp_init, ptp_step

ALGORITHMS = ("SPgamma", "SPstar", "PTP", "WPTP", "BP", "SDBP")
SAT, GAVE_UP, CONTRADICTION = "sat", "gave_up", "contradiction"


@dataclass
class SolveConfig:
    """Solver settings.

    gamma is used by SPgamma/SPstar and, for binary instances, to build the obedience
    conditional of WPTP/BP/SDBP when omega is not given.

    Before each decimation, propagation either runs a fixed number of sweeps
    (stop="sweeps") or until the largest message change drops below tol, capped at
    max_iters (stop="converge"). In the easy regime SP flows to its trivial fixed point,
    where every bias vanishes, so the default is a single sweep. With warm_start, messages
    of surviving edges carry over between decimation steps; otherwise every run starts
    from a fresh seeded random initialization. A variable is fixed only if its best
    singleton bias exceeds decimation_threshold. The residual is searched exhaustively
    once its state count is at most brute_force_limit. finer_decimation lets a step
    restrict a variable to any token strictly inside its current domain (singletons
    included) instead of fixing it to a single symbol.
    """

    algorithm: str = "SPgamma"
    gamma: float = 1.0
    omega: ObedienceConditional | None = None
    stop: str = "sweeps"
    sweeps: int = 1
    max_iters: int = 200
    tol: float = 1e-6
    seed: int = 0
    decimation_threshold: float = 0.0
    brute_force_limit: int = 2**20
    finer_decimation: bool = False
    warm_start: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ParamError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ParamError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.stop not in ("sweeps", "converge"):
            raise ParamError(f"stop must be 'sweeps' or 'converge', got {self.stop!r}")
        if self.sweeps <= 0 or self.max_iters <= 0 or self.tol < 0 or self.brute_force_limit < 1:
            raise ParamError("sweeps, max_iters and brute_force_limit must be positive, tol nonnegative")
        if self.decimation_threshold < 0:
            raise ParamError("decimation_threshold must be nonnegative")


@dataclass
class DecimationStep:
    variable: int
    token: int  # mask fixed at this step
    bias: float
    biases: dict  # symbol -> singleton bias at the chosen variable
    iterations: int
    converged: bool
    forced: dict  # further coordinates fixed by the cascade


@dataclass
class SolveResult:
    """status is "sat", "gave_up" or "contradiction".

    A contradiction reached under heuristic decimation does not prove the instance
    unsatisfiable; it only means this run's choices led to an empty constraint.
    """

    status: str
    assignment: list | None
    trace: list = field(default_factory=list)
    iterations: int = 0
    message: str = ""


# ---------------------------------------------------------------------------
# residual instance


class Residual:
    """Constraints over the original coordinates plus per-variable domain masks.

    Constraint ids are stable across simplification so that messages can be reused.
    """

    def __init__(self, g: FactorGraph, domains=None):
        self.q = g.q
        self.n_vars = g.n_vars
        self.cons = {ci: c for ci, c in enumerate(g.constraints)}
        self.domains = [tk.full(g.q)] * g.n_vars if domains is None else list(domains)
        self.fixed = {}
        for v in range(g.n_vars):
            if tk.is_singleton(self.domains[v]):
                self.fixed[v] = tk.symbols(self.domains[v])[0]
        for v, r in list(self.fixed.items()):
            self._apply(v, r)
        self._cleanup()

    def var_cons(self, v):
        return [ci for ci, c in self.cons.items() if v in c.scope]

    def fix(self, v: int, r: int) -> dict:
        """Fix v := r and cascade; returns every coordinate fixed as a result (v included)."""
        if not tk.is_subset(tk.singleton(r), self.domains[v]):
            raise Contradiction(f"symbol {r} not in the domain of {v}")
        before = dict(self.fixed)
        self.domains[v] = tk.singleton(r)
        self.fixed[v] = r
        self._apply(v, r)
        self._cleanup()
        return {u: s for u, s in self.fixed.items() if u not in before}

    def restrict(self, v: int, mask: int) -> dict:
        """Shrink the domain of v to mask and cascade; returns the coordinates fixed as a result."""
        if tk.is_singleton(mask & self.domains[v]):
            return self.fix(v, tk.symbols(mask & self.domains[v])[0])
        before = dict(self.fixed)
        queue = self._restrict(v, mask)
        for u, r in queue:
            self._apply(u, r)
        self._cleanup()
        return {u: s for u, s in self.fixed.items() if u not in before}

    def _apply(self, v, r):
        queue = [(v, r)]
        while queue:
            v, r = queue.pop()
            for ci in self.var_cons(v):
                c = self.cons.pop(ci)
                p = c.position(v)
                kept = {t[:p] + t[p + 1:] for t in c.sat_set if t[p] == r}
                scope = c.scope[:p] + c.scope[p + 1:]
                if not kept:
                    raise Contradiction(f"constraint {ci} has no tuple left after fixing {v}")
                if len(scope) == 1:
                    u = scope[0]
                    queue.extend(self._restrict(u, tk.from_symbols(t[0] for t in kept)))
                else:
                    self.cons[ci] = Constraint(scope, tuple(sorted(kept)), self.q)

    def _restrict(self, u, mask):
        """Intersect the domain of u with mask and filter u's constraints; returns new fixes."""
        new = self.domains[u] & mask
        if new == tk.EMPTY:
            raise Contradiction(f"domain of {u} became empty")
        if new == self.domains[u]:
            return []
        self.domains[u] = new
        for ci in self.var_cons(u):
            c = self.cons[ci]
            p = c.position(u)
            kept = tuple(t for t in c.sat_set if (new >> t[p]) & 1)
            if not kept:
                raise Contradiction(f"constraint {ci} has no tuple left after restricting {u}")
            self.cons[ci] = Constraint(c.scope, kept, self.q)
        if tk.is_singleton(new) and u not in self.fixed:
            s = tk.symbols(new)[0]
            self.fixed[u] = s
            return [(u, s)]
        return []

    def _cleanup(self):
        for ci in list(self.cons):
            c = self.cons[ci]
            if len(c.sat_set) == prod(tk.size(self.domains[u]) for u in c.scope):
                del self.cons[ci]

    def free_vars(self):
        """Unfixed coordinates that still appear in some constraint."""
        return sorted({u for c in self.cons.values() for u in c.scope})

    def n_states(self):
        return prod(tk.size(self.domains[u]) for u in self.free_vars())

    def graph(self):
        """Compact residual factor graph; returns (graph, free vars, constraint ids)."""
        vs = self.free_vars()
        idx = {u: i for i, u in enumerate(vs)}
        cids = sorted(self.cons)
        cons = []
        labels = {}
        for j, ci in enumerate(cids):
            c = self.cons[ci]
            cons.append(Constraint(tuple(idx[u] for u in c.scope), c.sat_set, self.q))
            lab = clause_labels(c)
            if labels is not None and lab is not None:
                for u, s in lab.items():
                    labels[(idx[u], j)] = s
            else:
                labels = None
        g = FactorGraph(self.q, len(vs), tuple(cons), labels, check_degree=False)
        return g, vs, cids

    def finish(self, partial=None) -> list:
        """Full assignment from the fixed coordinates, partial, and domain minima elsewhere."""
        x = dict(self.fixed)
        x.update(partial or {})
        return [x[v] if v in x else tk.symbols(self.domains[v])[0] for v in range(self.n_vars)]


def fix_and_simplify(g: FactorGraph, v: int, symbol: int) -> FactorGraph:
    """Fix v := symbol and simplify; the result lives on the same coordinates.

    Coordinates fixed along the way (v and any cascade) are listed in meta["fixed"] and
    non-trivial domains of the remaining coordinates in meta["domains"].
    """
    if not 0 <= symbol < g.q:
        raise ParamError(f"symbol {symbol} outside the alphabet")
    domains = None
    if "domains" in g.meta:
        domains = [g.meta["domains"].get(u, tk.full(g.q)) for u in range(g.n_vars)]
    res = Residual(g, domains)
    for u, s in g.meta.get("fixed", {}).items():
        if u not in res.fixed:
            res.fix(u, s)
    res.fix(v, symbol)
    cids = sorted(res.cons)
    cons = tuple(res.cons[ci] for ci in cids)
    labels = None
    if g.labels is not None:
        labels = {}
        for j, c in enumerate(cons):
            for u, s in clause_labels(c).items():
                labels[(u, j)] = s
    meta = dict(g.meta)
    meta["fixed"] = dict(res.fixed)
    meta["domains"] = {u: d for u, d in enumerate(res.domains) if d != tk.full(g.q) and u not in res.fixed}
    return FactorGraph(g.q, g.n_vars, cons, labels, check_degree=False, meta=meta)


# ---------------------------------------------------------------------------
# decimation


def singleton_biases(summary: np.ndarray, q: int) -> np.ndarray:
    """Normalized summary mass of each singleton token {r}."""
    s = np.asarray(summary, float)
    tot = s.sum()
    if not tot > 0:
        return np.zeros(q)
    return np.array([s[tk.singleton(r)] for r in range(q)]) / tot


def decimate_once(g: FactorGraph, summaries, threshold: float = 0.0, exclude=()):
    """(v, symbol) maximizing the singleton bias; ties go to the lowest v, then lowest symbol.

    summaries maps v -> token distribution of length 2^q.
    """
    best = None
    for v in sorted(summaries):
        if v in exclude:
            continue
        b = singleton_biases(summaries[v], g.q)
        r = int(np.argmax(b))
        if b[r] > threshold and (best is None or b[r] > best[2]):
            best = (v, r, float(b[r]))
    if best is None:
        raise NoPolarizedVariable("no variable has a singleton bias above the threshold")
    return best[0], best[1]


def decimate_finer(g: FactorGraph, summaries, domains, threshold: float = 0.0):
    """(v, token) maximizing the normalized summary mass of a token strictly inside v's domain.

    Ties go to the lowest v, then the lowest mask. domains maps v -> current domain mask.
    """
    best = None
    for v in sorted(summaries):
        s = np.asarray(summaries[v], float)
        tot = s.sum()
        if not tot > 0:
            continue
        dom = domains[v]
        mass = {}
        for t in range(1, len(s)):
            r = t & dom
            if r and r != dom:
                mass[r] = mass.get(r, 0.0) + s[t] / tot
        for t in sorted(mass):
            if mass[t] > threshold and (best is None or mass[t] > best[2]):
                best = (v, t, mass[t])
    if best is None:
        raise NoPolarizedVariable("no token strictly inside a domain carries mass above the threshold")
    return best[0], best[1]


def _omega(cfg: SolveConfig, q: int):
    if cfg.omega is not None:
        return cfg.omega
    if q == 2:
        return ksat_gamma_conditional(cfg.gamma)
    return ObedienceConditional.indicator(q)


class _Propagator:
    """Runs the configured algorithm on residual graphs, reusing messages across steps."""

    def __init__(self, cfg: SolveConfig, q: int):
        self.cfg = cfg
        self.q = q
        self.rng = np.random.default_rng(cfg.seed)
        self.memory = {}  # (original var, constraint id) -> message
        self.n_iters = cfg.sweeps if cfg.stop == "sweeps" else cfg.max_iters

    def run(self, g, vs, cids):
        """Returns (summaries keyed by original var, iterations, converged)."""
        cfg = self.cfg
        keys = [(vs[v], cids[c]) for v, c in g.edges]
        if not cfg.warm_start:
            self.memory = {}
        if cfg.algorithm in ("SPgamma", "SPstar"):
            if g.labels is None:
                raise ParamError("SP decimation needs a k-SAT instance")
            sv = SpVector(g)
            eta = np.array([self.memory.get(k, np.nan) for k in keys], float)
            miss = np.isnan(eta)
            eta[miss] = self.rng.uniform(0.0, 1.0, size=int(miss.sum()))
            star = cfg.algorithm == "SPstar"
            converged, it = False, 0
            for it in range(1, self.n_iters + 1):
                new, summ = sv.sweep(eta, cfg.gamma, star)
                delta = float(np.max(np.abs(new - eta))) if len(eta) else 0.0
                eta = new
                converged = delta < cfg.tol
                if converged and cfg.stop == "converge":
                    break
            self.memory.update(zip(keys, eta))
            out = {}
            for v in range(g.n_vars):
                z1, z0, zs = summ[v]
                out[vs[v]] = np.array([0.0, z0, z1, zs])
            return out, it, converged
        if cfg.algorithm in ("PTP", "WPTP"):
            pcfg = PtpConfig(mode="plain" if cfg.algorithm == "PTP" else "weighted", omega=_omega(cfg, self.q), seed=int(self.rng.integers(2**31)))
            state = ptp_init(g, pcfg)
            for e, k in zip(g.edges, keys):
                if k in self.memory:
                    state.right[e] = self.memory[k]
            step = lambda: ptp_step(state, pcfg)  # noqa: E731
            get = lambda: state.right  # noqa: E731
        elif cfg.algorithm == "BP":
            fg = ForneyGraph(g, _omega(cfg, self.q))
            bcfg = BpConfig(seed=int(self.rng.integers(2**31)))
            state = bp_init(fg, bcfg)
            for e, k in zip(g.edges, keys):
                if k in self.memory:
                    state.right[e] = self.memory[k]
            step = lambda: bp_step(state, bcfg)  # noqa: E731
            get = lambda: state.right  # noqa: E731
        else:
            fg = ForneyGraph(g, _omega(cfg, self.q))
            state = sdbp_init(fg, int(self.rng.integers(2**31)))
            for e, k in zip(g.edges, keys):
                if k in self.memory:
                    state.rho_star[e] = self.memory[k]
            step = lambda: sdbp_step(state)  # noqa: E731
            get = lambda: state.rho_star  # noqa: E731
        converged, it = False, 0
        for it in range(1, self.n_iters + 1):
            step()
            converged = state.delta < cfg.tol
            if converged and cfg.stop == "converge":
                break
        msgs = get()
        self.memory.update({k: msgs[e] for e, k in zip(g.edges, keys)})
        return {vs[v]: s for v, s in state.summaries.items()}, it, converged


def _exhaustive(res: Residual):
    vs = res.free_vars()
    cons = list(res.cons.values())
    doms = {u: res.domains[u] for u in vs}
    return next(iter_solutions(vs, cons, doms, res.q), None)


def solve(g: FactorGraph, cfg: SolveConfig | None = None) -> SolveResult:
    """Decimation loop; every Sat assignment is checked against the original instance."""
    cfg = cfg or SolveConfig()
    trace = []
    total = 0
    try:
        res = Residual(g)
        prop = _Propagator(cfg, g.q)
        while res.cons and res.n_states() > cfg.brute_force_limit:
            rg, vs, cids = res.graph()
            summaries, it, conv = prop.run(rg, vs, cids)
            total += it
            try:
                if cfg.finer_decimation:
                    v, t = decimate_finer(g, summaries, res.domains, cfg.decimation_threshold)
                else:
                    v, r = decimate_once(g, summaries, cfg.decimation_threshold)
                    t = tk.singleton(r)
            except NoPolarizedVariable as e:
                return SolveResult(GAVE_UP, None, trace, total, f"{e}; {len(vs)} variables left")
            b = singleton_biases(summaries[v], g.q)
            forced = res.restrict(v, t)
            forced.pop(v, None)
            bias = float(np.asarray(summaries[v])[t] / np.sum(summaries[v]))
            trace.append(DecimationStep(v, t, bias, {s: float(b[s]) for s in range(g.q)}, it, conv, forced))
        partial = _exhaustive(res) if res.cons else {}
        if partial is None:
            return SolveResult(CONTRADICTION, None, trace, total, "residual instance has no solution")
    except Contradiction as e:
        return SolveResult(CONTRADICTION, None, trace, total, str(e))
    except DegenerateMessage as e:
        return SolveResult(CONTRADICTION, None, trace, total, f"propagation degenerated: {e}")
    x = res.finish(partial)
    if not satisfies(g, x):
        raise AssertionError("solver produced an assignment that does not satisfy the instance")
    return SolveResult(SAT, x, trace, total, "verified")
