"""Text formats: DIMACS CNF, edge lists, native JSON for instances, messages and reports."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import tokens as tk
from .csp import Constraint, FactorGraph, build_ksat, build_qcol
from .errors import MalformedClause, MalformedEdge, MalformedHeader

FORMAT = "tokenprop-instance"


def parse_dimacs_cnf(text: str, check_degree: bool = True) -> FactorGraph:
    """DIMACS CNF to a k-SAT graph; variable i (1-based) becomes coordinate i-1.

    A positive literal gets preferred value 1, a negative one preferred value 0. Clauses
    may span lines; a line starting with '%' ends the clause section.
    """
    n = m = None
    nums = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            if n is not None:
                raise MalformedHeader("more than one problem line")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise MalformedHeader(f"bad problem line {line!r}")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise MalformedHeader(f"bad problem line {line!r}") from None
            if n < 0 or m < 0:
                raise MalformedHeader("negative counts in problem line")
            continue
        if n is None:
            raise MalformedHeader("clause before the problem line")
        for tok in line.split():
            try:
                nums.append(int(tok))
            except ValueError:
                raise MalformedClause(f"bad literal {tok!r}") from None
    if n is None:
        raise MalformedHeader("no problem line")
    clauses, cur = [], []
    for x in nums:
        if x == 0:
            clauses.append(cur)
            cur = []
            continue
        if abs(x) > n:
            raise MalformedClause(f"literal {x} refers to a variable above {n}")
        cur.append((abs(x) - 1, 1 if x > 0 else 0))
    if cur:
        raise MalformedClause("last clause is not terminated by 0")
    if len(clauses) != m:
        raise MalformedClause(f"header announces {m} clauses, found {len(clauses)}")
    return build_ksat(clauses, n, check_degree=check_degree, meta={"format": "dimacs-cnf"})


def write_dimacs_cnf(g: FactorGraph) -> str:
    if g.labels is None:
        raise MalformedClause("only k-SAT graphs can be written as DIMACS CNF")
    lines = [f"p cnf {g.n_vars} {g.n_constraints}"]
    for ci, c in enumerate(g.constraints):
        lits = [str(v + 1) if g.label(v, ci) == 1 else str(-(v + 1)) for v in c.scope]
        lines.append(" ".join(lits + ["0"]))
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str, q: int = 3, check_degree: bool = True) -> FactorGraph:
    """Lines "u v" of nonnegative vertex ids; '#' starts a comment.

    Vertex ids are mapped to coordinates in increasing order; the original ids are kept
    in meta["vertex_ids"].
    """
    edges = []
    for k, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MalformedEdge(f"line {k}: expected two vertex ids")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedEdge(f"line {k}: vertex ids must be integers") from None
        if u < 0 or v < 0:
            raise MalformedEdge(f"line {k}: negative vertex id")
        edges.append((u, v))
    if not edges:
        raise MalformedEdge("no edges")
    ids = sorted({x for e in edges for x in e})
    idx = {x: i for i, x in enumerate(ids)}
    return build_qcol(
        [(idx[u], idx[v]) for u, v in edges], q, len(ids), check_degree=check_degree, meta={"format": "edge-list", "vertex_ids": ids}
    )


def write_edge_list(g: FactorGraph) -> str:
    ids = g.meta.get("vertex_ids", list(range(g.n_vars)))
    return "".join(f"{ids[c.scope[0]]} {ids[c.scope[1]]}\n" for c in g.constraints)


# ---------------------------------------------------------------------------
# native JSON


def instance_to_dict(g: FactorGraph) -> dict:
    return {
        "format": FORMAT,
        "q": g.q,
        "n_vars": g.n_vars,
        "constraints": [{"scope": list(c.scope), "sat_set": [list(t) for t in c.sat_set]} for c in g.constraints],
        "labels": None if g.labels is None else [[v, c, s] for (v, c), s in sorted(g.labels.items())],
        "check_degree": g.check_degree,
        "meta": g.meta,
    }


def instance_from_dict(d: dict) -> FactorGraph:
    if d.get("format") != FORMAT:
        raise MalformedHeader(f"not a {FORMAT} document")
    q = int(d["q"])
    cons = tuple(Constraint(tuple(c["scope"]), tuple(tuple(t) for t in c["sat_set"]), q) for c in d["constraints"])
    labels = None if d.get("labels") is None else {(int(v), int(c)): int(s) for v, c, s in d["labels"]}
    return FactorGraph(q, int(d["n_vars"]), cons, labels, bool(d.get("check_degree", True)), dict(d.get("meta") or {}))


def dumps_instance(g: FactorGraph) -> str:
    return json.dumps(instance_to_dict(g), indent=1)


def loads_instance(text: str) -> FactorGraph:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedHeader(f"invalid JSON: {e}") from None
    return instance_from_dict(d)


def load_instance(path, q: int = 3, check_degree: bool = True) -> FactorGraph:
    """Reads .cnf as DIMACS, .json as native JSON and anything else as an edge list."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".cnf":
        return parse_dimacs_cnf(text, check_degree)
    if p.suffix == ".json":
        g = loads_instance(text)
        if g.check_degree != check_degree:
            g = FactorGraph(g.q, g.n_vars, g.constraints, g.labels, check_degree, g.meta)
        return g
    return parse_edge_list(text, q, check_degree)


# ---------------------------------------------------------------------------
# messages


def dist_to_dict(w) -> dict:
    """Token distribution to {token string: weight}, skipping zero entries."""
    return {tk.to_str(m): float(x) for m, x in enumerate(np.asarray(w)) if m and x != 0}


def dist_from_dict(d: dict, q: int) -> np.ndarray:
    out = np.zeros(1 << q)
    for k, x in d.items():
        out[tk.from_str(k)] = float(x)
    return out


def table_to_dict(t) -> dict:
    """State table [sL, sR] to {"sL|sR": weight}, skipping zero entries."""
    t = np.asarray(t)
    return {f"{tk.to_str(a)}|{tk.to_str(b)}": float(t[a, b]) for a in range(1, t.shape[0]) for b in range(1, t.shape[1]) if t[a, b] != 0}


def table_from_dict(d: dict, q: int) -> np.ndarray:
    out = np.zeros((1 << q, 1 << q))
    for k, x in d.items():
        a, b = k.split("|")
        out[tk.from_str(a), tk.from_str(b)] = float(x)
    return out


def _encode(m):
    m = np.asarray(m) if not np.isscalar(m) else m
    if np.isscalar(m):
        return float(m)
    return dist_to_dict(m) if m.ndim == 1 else table_to_dict(m)


def messages_to_records(msgs: dict, direction: str) -> list:
    """Per-edge message records {"edge": "v->c", "v": .., "c": .., "message": ..}.

    direction is "v->c" or "c->v"; msgs maps (v, c) to a distribution, state table or number.
    """
    if direction not in ("v->c", "c->v"):
        raise ValueError("direction must be 'v->c' or 'c->v'")
    return [{"edge": direction, "v": int(v), "c": int(c), "message": _encode(m)} for (v, c), m in msgs.items()]


def records_to_messages(records: list, q: int) -> dict:
    out = {}
    for r in records:
        m = r["message"]
        if isinstance(m, dict):
            m = table_from_dict(m, q) if any("|" in k for k in m) else dist_from_dict(m, q)
        out[(int(r["v"]), int(r["c"]))] = m
    return out
