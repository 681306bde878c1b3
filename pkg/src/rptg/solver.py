"""Exact optcost computation on reset-free FRPTGs.

Copies are solved deepest first.  Inside a copy, strongly connected parts are
solved in reverse topological order; a cyclic part is unrolled around its
cheapest location ``l_min`` so that every recursive call works on a smaller
location set.
"""

from __future__ import annotations

from collections import ChainMap
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .model import Game, Location, Owner, ResetKind, Stage, Transition
from .pwa import (
    INF,
    NEG_INF,
    Anchor,
    Offset,
    PwaFunction,
    add_linear,
    clip,
    exterior,
    interior,
    is_inf,
    replace_value,
    restrict,
    selective_replace,
    splice,
    suffix_extremum,
    translate,
    window_extremum,
)
from .strategy import (
    DelayFor,
    DelayUntil,
    Immediate,
    Row,
    Strategy,
    extract,
    merge_rows,
    with_edge,
)

ZERO = Fraction(0)


class SolverError(RuntimeError):
    pass


@dataclass
class Solved:
    fn: PwaFunction
    rows: tuple[Row, ...] = ()
    envelope: PwaFunction | None = None  # best leaving cost before any waiting


@dataclass
class SolveResult:
    game: Game
    epsilon: Fraction
    optcost: dict[str, PwaFunction]
    rows: dict[str, tuple[Row, ...]]
    stats: dict = field(default_factory=dict)
    envelopes: dict[str, PwaFunction] = field(default_factory=dict)

    @property
    def strategy(self) -> Strategy:
        return extract(self)


# ---------------------------------------------------------------------------
# per-location building blocks


def handle_guards(edge: Transition, succ: PwaFunction, mode: str, domain_hi: Fraction) -> PwaFunction:
    """Cost of leaving through ``edge`` at each clock value, ``+-inf`` where it is disabled."""
    fill = INF if mode == "min" else NEG_INF
    succ = restrict(succ, ZERO, domain_hi)
    if not edge.continues:
        # a successor without any move is a deadlock, which player 1 loses
        succ = replace_value(succ, NEG_INF, INF)
    if edge.reset is ResetKind.FULL:
        h = PwaFunction.constant(succ(ZERO), ZERO, domain_hi)
    elif edge.reset is ResetKind.FRACTIONAL and domain_hi > 1:
        h = splice([restrict(succ, ZERO, Fraction(1)), translate(restrict(succ, ZERO, domain_hi - 1), -1)])
    else:
        h = succ
    g = edge.guard
    return clip(h.with_tags(edge.id), g.lo, g.lo_strict, g.hi, g.hi_strict, fill)


def retreat_step(epsilon: Fraction, n_steps: int, m_max: Fraction) -> Fraction:
    return Fraction(epsilon) / (max(n_steps, 1) * (m_max + 1))


def _piece_span(G: PwaFunction, v: Fraction, side: str) -> tuple[Fraction, Fraction]:
    """The piece of G adjacent to ``v`` on ``side``."""
    kind, i = G.locate(v)
    if kind == "piece":
        return G.xs[i], G.xs[i + 1]
    return (G.xs[i - 1], v) if side == "below" else (v, G.xs[i + 1])


def rows_from(W: PwaFunction, G: PwaFunction, t_ret: Fraction) -> tuple[Row, ...]:
    """Turn waiting provenance into interval rows, retreating from unattained limits."""
    rows: list[Row] = []

    def emit(lo, hi, lc, hc, tag):
        if tag is None:
            return
        if isinstance(tag, Offset):
            if tag.tag is None:
                return
            mv = Immediate(tag.tag) if tag.d == 0 else DelayFor(tag.d, tag.tag)
            rows.append(Row(lo, hi, lc, hc, mv))
            return
        e, v = tag.tag, tag.v
        if e is None:
            return
        if tag.side == "at":
            if lo == hi == v:
                rows.append(Row(lo, hi, lc, hc, Immediate(e)))
            else:
                rows.append(Row(lo, hi, lc, hc, DelayUntil(v, e)))
        elif tag.side == "below":
            a, _ = _piece_span(G, v, "below")
            r = max(v - t_ret, (a + v) / 2)
            if hi < r or (hi == r and not hc):
                rows.append(Row(lo, hi, lc, hc, DelayUntil(r, e)))
            elif lo > r or (lo == r and lc):
                rows.append(Row(lo, hi, lc, hc, Immediate(e)))
            else:
                rows.append(Row(lo, r, lc, False, DelayUntil(r, e)))
                rows.append(Row(r, hi, True, hc, Immediate(e)))
        else:
            _, b = _piece_span(G, v, "above")
            r = min(v + t_ret, (v + b) / 2)
            rows.append(Row(lo, hi, lc, hc, DelayUntil(r, e)))

    tags_p = W.point_tags or (None,) * len(W.xs)
    tags_q = W.piece_tags or (None,) * len(W.pieces)
    for i, x in enumerate(W.xs):
        if not is_inf(W.at[i]):
            emit(x, x, True, True, tags_p[i])
        if i < len(W.pieces) and not is_inf(W.pieces[i][0]):
            emit(x, W.xs[i + 1], False, False, tags_q[i])
    return merge_rows(rows)


def _wait(loc: Location, G: PwaFunction, mode: str) -> PwaFunction:
    pi = loc.price
    if loc.dwell.urgent:
        return window_extremum(G, 0, 0, mode)
    if loc.dwell.unbounded and loc.dwell.min == 0:
        if mode == "min":
            return selective_replace(G, pi)
        return add_linear(suffix_extremum(add_linear(G, pi), mode), -pi)
    return add_linear(window_extremum(add_linear(G, pi), loc.dwell.min, loc.dwell.max, mode), -pi)


def compute_location(
    loc: Location,
    succ_fns: Sequence[tuple[Transition, PwaFunction]],
    domain_hi: Fraction,
    epsilon: Fraction,
    n_steps: int,
) -> tuple[PwaFunction, tuple[Row, ...], PwaFunction]:
    """Optcost of one location given its successors; returns (value, rows, pre-wait envelope).

    A player-2 location with no move left keeps the value ``-inf`` so that
    time-continuation edges never pick it; edges read it as ``+inf``.
    """
    mode = "min" if loc.owner is Owner.P1 else "max"
    fill = INF if mode == "min" else NEG_INF
    parts = [handle_guards(e, f, mode, domain_hi) for e, f in succ_fns]
    if not parts:
        G = PwaFunction.constant(fill, ZERO, domain_hi).with_tags(None)
    elif len(parts) == 1:
        G = parts[0]
    else:
        G = interior(parts) if mode == "min" else exterior(parts)
    W = _wait(loc, G, mode)
    m_max = max(G.max_abs_slope(), Fraction(abs(loc.price)))
    rows = rows_from(W, G, retreat_step(epsilon, n_steps, m_max))
    return W, rows, G


def compute_optcost_p1(loc, succ_fns, epsilon, domain_hi, n_steps=1):
    W, rows, _ = compute_location(loc, succ_fns, domain_hi, epsilon, n_steps)
    return W, rows


def compute_optcost_p2(loc, succ_fns, epsilon, domain_hi, n_steps=1):
    W, rows, _ = compute_location(loc, succ_fns, domain_hi, epsilon, n_steps)
    return W, rows


# ---------------------------------------------------------------------------
# components


def exit_ranks(g: Game) -> dict[tuple[str, str], int]:
    """Tie-break order for edges: leaving the SCC first, then by distance to an exit.

    Among equally good moves, preferring the way out keeps player 1 from
    circling inside a component where player 2 can stall forever.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(loc.id for loc in g.locations)
    graph.add_edges_from((e.src, e.dst) for e in g.transitions)
    comp = {}
    for k, members in enumerate(nx.strongly_connected_components(graph)):
        comp.update(dict.fromkeys(members, k))
    exits = [n for n in graph if any(comp[m] != comp[n] for m in graph.successors(n))]
    inner = nx.DiGraph((a, b) for a, b in graph.edges if comp[a] == comp[b])
    inner.add_nodes_from(graph)
    dist = {n: 0 for n in exits}
    frontier = list(exits)
    while frontier:
        nxt = []
        for n in frontier:
            for p in inner.predecessors(n):
                if p not in dist:
                    dist[p] = dist[n] + 1
                    nxt.append(p)
        frontier = nxt
    far = len(graph) + 1
    return {
        (a, b): 0 if comp[a] != comp[b] else 1 + dist.get(b, far) for a, b in graph.edges
    }


class _Context:
    def __init__(self, g: Game, epsilon: Fraction, n_steps: int):
        self.g = g
        self.rank = exit_ranks(g)
        self.eps = epsilon
        self.n_steps = n_steps
        self.D = g.clock_max
        self.inf = PwaFunction.constant(INF, ZERO, self.D)
        self.memo: dict = {}
        self.stats = {"location_solves": 0, "replacements": 0, "max_depth": 0, "p2_rounds": 0}

    def compute(self, lid: str, lookup: Mapping[str, PwaFunction]) -> Solved:
        loc = self.g.loc(lid)
        edges = sorted(self.g.out_edges[lid], key=lambda e: self.rank[(lid, e.dst)])
        succ = [(e, lookup[e.dst]) for e in edges]
        key = (lid, tuple(f for _, f in succ))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        W, rows, G = compute_location(loc, succ, self.D, self.eps, self.n_steps)
        self.stats["location_solves"] += 1
        self.stats["replacements"] += sum(1 for t in (W.piece_tags or ()) if isinstance(t, Anchor))
        out = Solved(W, rows, G)
        self.memo[key] = out
        return out

    def solve_nodes(self, nodes: set[str], known: Mapping[str, PwaFunction], depth: int = 0) -> dict[str, Solved]:
        self.stats["max_depth"] = max(self.stats["max_depth"], depth)
        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(nodes))
        for lid in sorted(nodes):
            for e in self.g.out_edges[lid]:
                if e.dst in nodes:
                    graph.add_edge(lid, e.dst)
        cond = nx.condensation(graph)
        order = list(nx.lexicographical_topological_sort(cond, key=lambda c: min(cond.nodes[c]["members"])))
        res: dict[str, Solved] = {}
        values: dict[str, PwaFunction] = {}
        lookup = ChainMap(values, known)
        for c in reversed(order):
            members = cond.nodes[c]["members"]
            m = next(iter(members))
            if len(members) == 1 and not graph.has_edge(m, m):
                res[m] = self.compute(m, lookup)
                values[m] = res[m].fn
                continue
            part = self.solve_scc(set(members), lookup, depth + 1)
            res.update(part)
            values.update({k: v.fn for k, v in part.items()})
        return res

    def solve_scc(self, members: set[str], known: Mapping[str, PwaFunction], depth: int) -> dict[str, Solved]:
        # on price ties a controller location breaks the cycle without unrolling
        lmin = min(members, key=lambda lid: (self.g.loc(lid).price, self.g.loc(lid).owner is not Owner.P1, lid))
        rest = members - {lmin}
        if self.g.loc(lmin).owner is Owner.P1:
            first = self.solve_nodes(rest, ChainMap({lmin: self.inf}, known), depth)
            first_fns = {k: v.fn for k, v in first.items()}
            at_min = self.compute(lmin, ChainMap({lmin: self.inf}, first_fns, known))
            reach = self._reaching(rest, lmin)
            kept = {k: v for k, v in first.items() if k not in reach}
            second = self.solve_nodes(
                reach, ChainMap({lmin: at_min.fn}, {k: v.fn for k, v in kept.items()}, known), depth
            )
            return {**kept, **second, lmin: at_min}
        cur = self.inf
        cap = 2 + len(members) + sum(len(known[e.dst]) for m in members for e in self.g.out_edges[m] if e.dst in known)
        for _ in range(cap):
            self.stats["p2_rounds"] += 1
            sub = self.solve_nodes(rest, ChainMap({lmin: cur}, known), depth)
            at_min = self.compute(lmin, ChainMap({lmin: cur}, {k: v.fn for k, v in sub.items()}, known))
            if at_min.fn == cur:
                return {**sub, lmin: at_min}
            cur = at_min.fn
        raise SolverError(f"player-2 unrolling at {lmin} did not stabilize in {cap} rounds")

    def _reaching(self, rest: set[str], lmin: str) -> set[str]:
        rev = nx.DiGraph()
        rev.add_nodes_from(rest | {lmin})
        for lid in rest:
            for e in self.g.out_edges[lid]:
                if e.dst in rest or e.dst == lmin:
                    rev.add_edge(e.dst, lid)
        return nx.descendants(rev, lmin) & rest


def solve(g: Game, epsilon: Fraction, n_steps: int | None = None) -> SolveResult:
    """Solve a reset-free FRPTG; ``n_steps`` scales the retreat from open bounds."""
    if g.stage is not Stage.RESET_FREE:
        raise SolverError("solve expects a reset-free FRPTG")
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise SolverError("epsilon must be positive")
    steps = n_steps or max(1, sum(1 for l in g.locations if l.owner is Owner.P1 and not l.is_target))
    ctx = _Context(g, epsilon, steps)
    D = ctx.D
    optcost: dict[str, PwaFunction] = {}
    rows: dict[str, tuple[Row, ...]] = {}
    envelopes: dict[str, PwaFunction] = {}
    for loc in g.locations:
        if loc.is_target:
            optcost[loc.id] = restrict(loc.goal_fn, ZERO, D) if loc.goal_fn.hi >= D else loc.goal_fn
    layers: dict[int, list[str]] = {}
    for loc in g.locations:
        if not loc.is_target:
            layers.setdefault(loc.component or 0, []).append(loc.id)
    by_base = {}
    for loc in g.locations:
        if loc.base is not None and loc.component is not None:
            by_base[(loc.base, loc.component)] = loc.id
    edge_by_base = {(e.base, g.loc(e.src).component): e.id for e in g.transitions}
    order = sorted(layers, reverse=True)
    fixpoint = None
    for j in order:
        if fixpoint is not None:
            _copy_layer(g, layers[j], fixpoint, j, optcost, rows, envelopes, by_base, edge_by_base)
            continue
        res = ctx.solve_nodes(set(layers[j]), optcost)
        for lid, s in res.items():
            optcost[lid] = s.fn
            rows[lid] = s.rows
            envelopes[lid] = s.envelope
        deeper = j + 1
        if deeper in layers and all(
            optcost[lid] == optcost[by_base[(g.loc(lid).base, deeper)]] for lid in layers[j]
        ):
            fixpoint = j
    for loc in g.locations:
        if loc.is_target:
            rows[loc.id] = ()
    optcost = {k: replace_value(f, NEG_INF, INF) for k, f in optcost.items()}
    stats = dict(ctx.stats)
    stats["segments"] = {lid: len(f) for lid, f in sorted(optcost.items())}
    stats["total_segments"] = sum(stats["segments"].values())
    stats["fixpoint_copy"] = fixpoint
    stats["retreat_steps"] = steps
    return SolveResult(g, epsilon, optcost, rows, stats, envelopes)


def _copy_layer(g, lids, src_layer, dst_layer, optcost, rows, envelopes, by_base, edge_by_base):
    """Copies shallower than a repeated layer are identical to it."""
    for lid in lids:
        base = g.loc(lid).base
        twin = by_base[(base, src_layer)]
        optcost[lid] = optcost[twin]
        envelopes[lid] = envelopes[twin]
        out = []
        for r in rows.get(twin, ()):
            eid = edge_by_base[(g.edges[r.move.edge].base, dst_layer)]
            out.append(Row(r.lo, r.hi, r.lo_closed, r.hi_closed, with_edge(r.move, eid)))
        rows[lid] = tuple(out)

