"""Cycle classification on a corner-point discretization of the clock.

Valuations are restricted to multiples of a unit that divides every constant
of the game (guard bounds, dwell bounds and delta).  Perturbations take the
extreme values ``-delta, 0, +delta``.  A negative cycle in this finite graph
is a real play fragment that can be repeated, so reports are sound; the check
can miss cycles whose negative cost needs off-grid delays.
"""

from __future__ import annotations

import math
from fractions import Fraction

import networkx as nx

from .model import (
    BLOCKING,
    NON_ZENO_NEGATIVE,
    RESET_FREE_NEGATIVE,
    Diagnostic,
    Game,
    ResetKind,
)
from .pwa import fmt
from .semantics import apply_reset, controller_perturbed

ZERO = Fraction(0)


def corner_unit(g: Game) -> Fraction:
    dens = [g.delta.denominator]
    for e in g.transitions:
        dens += [e.guard.lo.denominator, e.guard.hi.denominator]
    for loc in g.locations:
        dens.append(loc.dwell.min.denominator)
        if loc.dwell.max is not None:
            dens.append(loc.dwell.max.denominator)
    return Fraction(1, math.lcm(*dens))


def corner_graph(g: Game, resets: bool = True) -> tuple[nx.DiGraph, Fraction]:
    """Weighted graph on (location, level) nodes; edge data holds a witness move."""
    u = corner_unit(g)
    top = math.floor(g.clock_max / u)
    graph = nx.DiGraph()
    inner = sorted(loc.id for loc in g.locations if not loc.is_target)
    for lid in inner:
        for k in range(top + 1):
            graph.add_node((lid, k))
    for lid in inner:
        loc = g.loc(lid)
        for e in sorted(g.out_edges[lid], key=lambda e: e.id):
            if g.loc(e.dst).is_target or (not resets and e.reset is not ResetKind.NONE):
                continue
            for k in range(top + 1):
                nu = k * u
                for t, gamma in _corner_moves(g, loc, e, nu, u, top):
                    w = nu + t + gamma
                    k2 = apply_reset(e.reset, w) / u
                    cost = (t + gamma) * loc.price
                    src, dst = (lid, k), (e.dst, int(k2))
                    old = graph.get_edge_data(src, dst)
                    if old is None or cost < old["weight"]:
                        graph.add_edge(src, dst, weight=cost, move=(t, e.id, gamma))
    return graph, u


def _corner_moves(g, loc, e, nu, u, top):
    out = []
    if controller_perturbed(g, loc):
        for k2 in range(top + 1):
            v = k2 * u
            t = v - nu
            if t < g.delta or not e.guard.contains(v):
                continue
            for gamma in (-g.delta, ZERO, g.delta):
                if 0 <= v + gamma <= g.clock_max:
                    out.append((t, gamma))
        return out
    lo = nu + loc.dwell.min
    hi = g.clock_max if loc.dwell.max is None else min(g.clock_max, nu + loc.dwell.max)
    k2 = math.ceil(lo / u)
    while k2 * u <= hi:
        v = k2 * u
        if e.guard.contains(v):
            out.append((v - nu, ZERO))
        k2 += 1
    return out


def _witness(graph: nx.DiGraph, cycle: list, u: Fraction):
    moves = tuple(graph.edges[a, b]["move"] for a, b in zip(cycle, cycle[1:]))
    start = (cycle[0][0], cycle[0][1] * u)
    cost = sum(graph.edges[a, b]["weight"] for a, b in zip(cycle, cycle[1:]))
    return start, moves, cost


def _location_graph(g: Game, resets: bool) -> nx.DiGraph:
    lg = nx.DiGraph()
    lg.add_nodes_from(sorted(loc.id for loc in g.locations))
    for e in sorted(g.transitions, key=lambda e: e.id):
        if resets or e.reset is ResetKind.NONE:
            lg.add_edge(e.src, e.dst)
    return lg


def _cyclic_parts(lg: nx.DiGraph) -> list[set]:
    out = []
    for comp in nx.strongly_connected_components(lg):
        if len(comp) > 1 or any(lg.has_edge(n, n) for n in comp):
            out.append(comp)
    return out


def cycle_diagnostics(g: Game) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    negative = {loc.id for loc in g.locations if loc.price < 0 and not loc.is_target}
    full = _location_graph(g, resets=True)
    targets = {loc.id for loc in g.locations if loc.is_target}

    # (c) repeatable negative cycles; they must pass through a reset
    risky = False
    for comp in _cyclic_parts(full):
        if comp & negative and any(
            e.reset is not ResetKind.NONE and e.src in comp and e.dst in comp for e in g.transitions
        ):
            risky = True
    if risky:
        graph, u = corner_graph(g)
        graph.add_node("source")
        for n in list(graph.nodes):
            if n != "source":
                graph.add_edge("source", n, weight=ZERO, move=None)
        try:
            cycle = nx.find_negative_cycle(graph, "source")
        except nx.NetworkXError:
            cycle = None
        if cycle is not None:
            start, moves, cost = _witness(graph, cycle, u)
            diags.append(
                Diagnostic(
                    NON_ZENO_NEGATIVE,
                    f"cycle through {' -> '.join(n[0] for n in cycle)} costs {fmt(cost)} per lap",
                    start,
                    moves,
                )
            )

    # (b) a single traversal of a reset-free cycle can cost less than zero
    rf = _location_graph(g, resets=False)
    suspects = sorted(n for comp in _cyclic_parts(rf) if comp & negative for n in comp)
    if suspects:
        graph, u = corner_graph(g, resets=False)
        for lid in suspects:
            found = _reset_free_negative(graph, lid, u)
            if found is not None:
                start, moves, cost = found
                diags.append(
                    Diagnostic(
                        RESET_FREE_NEGATIVE,
                        f"one lap from {lid} can cost {fmt(cost)}",
                        start,
                        moves,
                    )
                )

    # (d) cycles that never reach a target
    for comp in sorted(_cyclic_parts(full), key=lambda c: sorted(c)):
        if comp & targets:
            continue
        reach = set().union(*(nx.descendants(full, n) for n in comp))
        if not reach & targets:
            diags.append(Diagnostic(BLOCKING, f"no target reachable from cycle {sorted(comp)}"))
    return diags


def _reset_free_negative(graph: nx.DiGraph, lid: str, u: Fraction):
    """Cheapest path of at least one step from some (lid, k) back to lid."""
    h = nx.DiGraph()
    h.add_node("source")
    for a, b, data in graph.edges(data=True):
        dst = ("end", b[1]) if b[0] == lid else b
        if a[0] == lid:
            # first steps leave the source copy of lid
            old = h.get_edge_data("source", dst)
            if old is None or data["weight"] < old["weight"]:
                h.add_edge("source", dst, weight=data["weight"], move=data["move"], origin=a)
        h.add_edge(a, dst, weight=data["weight"], move=data["move"])
    lengths, paths = nx.single_source_bellman_ford(h, "source")
    best = None
    for node, cost in lengths.items():
        if isinstance(node, tuple) and node[0] == "end" and cost < 0:
            if best is None or cost < best[0]:
                best = (cost, paths[node])
    if best is None:
        return None
    cost, path = best
    origin = h.edges["source", path[1]]["origin"]
    moves = tuple(h.edges[a, b]["move"] for a, b in zip(path, path[1:]))
    return (lid, origin[1] * u), moves, cost
