"""Cost-preserving game transformations, their state maps, and strategy back-mapping.

Pipeline: RPTG -> dwell-time PTG -> FRPTG (clock kept in [0, 1+2δ] by copies
indexed by the integer part) -> reset-free FRPTG (copies indexed by the number
of resets taken, ending in a ``+inf`` sink).
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction

from .model import (
    URGENT,
    DwellTime,
    Game,
    Guard,
    Location,
    ModelError,
    Owner,
    ResetKind,
    Stage,
    Transition,
)
from .pwa import INF, PwaFunction, restrict, translate
from .semantics import Configuration, Play
from .strategy import (
    DelayFor,
    DelayUntil,
    Immediate,
    Row,
    Strategy,
    merge_rows,
    with_edge,
)

ZERO = Fraction(0)
SINK = "S"


class TransformError(ModelError):
    pass


def _require(g: Game, stage: Stage) -> None:
    if g.stage is not stage:
        raise TransformError(f"expected a {stage.value} game, got {g.stage.value}")


# ---------------------------------------------------------------------------
# RPTG -> dwell-time PTG


def gadget_names(src: str, eid: str) -> tuple[str, str, str]:
    hub = f"({src},{eid})"
    return hub, hub + "-", hub + "+"


def dwell_guard(guard: Guard, delta: Fraction) -> Guard | None:
    """Guard on the gadget entry: bounds move by ``-delta``, clipped at 0; ``x=0`` is kept."""
    if guard.is_point and guard.lo == 0:
        return guard
    return guard.shifted(delta).intersect(ZERO, False, guard.hi, False)


@dataclass
class DwellMap:
    """RPTG -> dwell-time PTG."""

    source: Game
    target: Game
    entry: dict[str, str]  # original edge id -> gadget entry edge id

    def map_state(self, c: Configuration) -> Configuration:
        self.source.loc(c.location)
        return c

    def map_play(self, play: Play) -> tuple[Configuration, list[tuple]]:
        """Translate a perturbed RPTG play into gadget moves of equal cost."""
        g = self.source
        moves: list[tuple] = []
        for s in play.steps:
            e = g.edges[s.edge]
            loc = g.loc(e.src)
            if loc.owner is Owner.P2 or loc.is_target:
                moves.append((s.delay, s.edge))
                continue
            enter = self.entry[e.id]
            moves.append((s.delay - g.delta, enter))
            branch = "+" if s.gamma >= 0 else "-"
            moves.append((ZERO, f"{e.id}.{branch}"))
            moves.append((g.delta + s.gamma, f"{e.id}.{branch}go"))
        return play.start, moves

    def map_strategy_back(self, sigma: Strategy) -> Strategy:
        """Player-1 delays gain ``delta``: gadget entry at ``v`` becomes a proposal at ``v + delta``."""
        d = self.source.delta
        ctrl = {}
        for lid, rows in sigma.controller.items():
            out = []
            for r in rows:
                base = self.target.edges[r.move.edge].base
                m = r.move
                if isinstance(m, Immediate):
                    mv = DelayFor(d, base)
                elif isinstance(m, DelayUntil):
                    mv = DelayUntil(m.v + d, base)
                else:
                    mv = DelayFor(m.d + d, base)
                out.append(Row(r.lo, r.hi, r.lo_closed, r.hi_closed, mv))
            ctrl[lid] = merge_rows(out)
        return Strategy(ctrl, {})


def to_dwell_ptg(g: Game, delta: Fraction | None = None) -> tuple[Game, DwellMap]:
    _require(g, Stage.RPTG)
    d = g.delta if delta is None else Fraction(delta)
    if not 0 < d < Fraction(1, 2):
        raise TransformError("delta must lie in (0, 1/2)")
    top = g.clock_bound + 2 * d
    anywhere = Guard(ZERO, False, top, False)
    locs = list(g.locations)
    edges: list[Transition] = []
    entry: dict[str, str] = {}
    for e in g.transitions:
        src = g.loc(e.src)
        if src.owner is Owner.P2:
            edges.append(e)
            continue
        hub, minus, plus = gadget_names(e.src, e.id)
        pi = src.price
        locs += [
            Location(hub, Owner.P2, pi, URGENT, base=e.src),
            Location(minus, Owner.P2, pi, DwellTime(ZERO, d), base=e.src),
            Location(plus, Owner.P2, pi, DwellTime(d, 2 * d), base=e.src),
        ]
        shifted = dwell_guard(e.guard, d)
        if shifted is not None:
            entry[e.id] = f"{e.id}.enter"
            edges.append(Transition(f"{e.id}.enter", e.src, shifted, ResetKind.NONE, hub, e.id))
        edges += [
            Transition(f"{e.id}.-", hub, anywhere, ResetKind.NONE, minus, e.id),
            Transition(f"{e.id}.+", hub, anywhere, ResetKind.NONE, plus, e.id),
            Transition(f"{e.id}.-go", minus, anywhere, e.reset, e.dst, e.id),
            Transition(f"{e.id}.+go", plus, anywhere, e.reset, e.dst, e.id),
        ]
    out = Game(Stage.DWELL, d, g.clock_bound, tuple(locs), tuple(edges), g.initial)
    return out, DwellMap(g, out, entry)


# ---------------------------------------------------------------------------
# dwell-time PTG -> FRPTG


def copy_name(lid: str, i: int) -> str:
    return f"{lid}_{i}"


def zero_name(lid: str, i: int) -> str:
    return f"{lid}.0_{i}"


def _bounded(loc: Location) -> bool:
    return loc.dwell.max is not None and not loc.dwell.urgent


@dataclass
class FractionalMap:
    """Dwell-time PTG -> FRPTG; copy ``b`` tracks the integer part ``b`` of the clock."""

    source: Game
    target: Game

    @property
    def top(self) -> int:
        return self.source.clock_bound

    def copy_of(self, nu: Fraction) -> int:
        return min(math.floor(nu), self.top)

    def map_state(self, c: Configuration) -> Configuration:
        loc = self.source.loc(c.location)
        b = self.copy_of(c.valuation)
        if c.valuation < 0 or c.valuation - b > self.target.clock_max:
            raise TransformError(f"valuation {c.valuation} outside the map domain")
        return Configuration(copy_name(loc.id, b), c.valuation - b, c.cost)

    def map_play(self, play: Play) -> tuple[Configuration, list[tuple]]:
        g = self.source
        start = self.map_state(play.start)
        moves: list[tuple] = []
        copy = self.copy_of(play.start.valuation)
        nu = play.start.valuation
        for s in play.steps:
            e = g.edges[s.edge]
            loc = g.loc(e.src)
            v = nu + s.delay
            x = nu - copy
            if loc.dwell.unbounded:
                c2 = self.copy_of(v)
                for j in range(copy, c2):
                    moves.append((1 - x, f"{loc.id}.wrap_{j}"))
                    x = ZERO
                moves.append((v - c2 - x, f"{e.id}_{c2}"))
                used = c2
            elif v - copy < 1:
                moves.append((s.delay, f"{e.id}_{copy}"))
                used = copy
            else:
                moves.append((s.delay, f"{loc.id}.frac_{copy}"))
                moves.append((ZERO, f"{e.id}.0_{copy + 1}"))
                used = copy + 1
            copy = 0 if e.reset is ResetKind.FULL else used
            nu = s.after.valuation
        return start, moves

    def map_strategy_back(self, sigma: Strategy) -> Strategy:
        """Copy-cat: copy ``b`` rows cover ``[b, b+1)``; wraps chain into the next copy."""
        ctrl = {}
        for loc in self.source.locations:
            if loc.is_target or loc.owner is Owner.P2:
                continue
            out: list[Row] = []
            for b in range(self.top + 1):
                rows = sigma.controller.get(copy_name(loc.id, b), ())
                for r in rows:
                    hi, hi_closed = r.hi, r.hi_closed
                    if b < self.top and (hi > 1 or (hi == 1 and hi_closed)):
                        hi, hi_closed = Fraction(1), False
                    if r.lo > hi or (r.lo == hi and not (r.lo_closed and hi_closed)):
                        continue
                    mv = self._resolve(sigma, loc.id, b, r.move)
                    if mv is not None:
                        out.append(Row(r.lo + b, hi + b, r.lo_closed, hi_closed, mv))
            ctrl[loc.id] = merge_rows(out)
        return Strategy(ctrl, {})

    def _resolve(self, sigma: Strategy, lid: str, b: int, move):
        edge = self.target.edges[move.edge]
        if edge.base is not None:
            if isinstance(move, DelayUntil):
                return DelayUntil(move.v + b, edge.base)
            return with_edge(move, edge.base)
        # wrap: continue with the next copy's move at x = 0
        nxt = sigma.row_at(copy_name(lid, b + 1), ZERO)
        if nxt is None:
            return None
        inner = self._resolve(sigma, lid, b + 1, nxt.move)
        if isinstance(inner, Immediate):
            return DelayUntil(Fraction(b + 1), inner.edge)
        return inner


def to_frptg(g: Game) -> tuple[Game, FractionalMap]:
    _require(g, Stage.DWELL)
    if g.delta >= Fraction(1, 2):
        raise TransformError("delta must be below 1/2")
    M = g.clock_bound
    D = 1 + 2 * g.delta
    locs: list[Location] = []
    edges: list[Transition] = []
    unit = (ZERO, False, Fraction(1), True)
    for loc in g.locations:
        for i in range(M + 1):
            if loc.is_target:
                goal = restrict(translate(loc.goal_fn, Fraction(i)), ZERO, D)
                locs.append(Location(copy_name(loc.id, i), loc.owner, loc.price, loc.dwell, True, goal, base=loc.id))
                continue
            locs.append(Location(copy_name(loc.id, i), loc.owner, loc.price, loc.dwell, base=loc.id))
            if _bounded(loc) and i >= 1:
                locs.append(Location(zero_name(loc.id, i), loc.owner, loc.price, URGENT, base=loc.id))
        if loc.is_target:
            continue
        for i in range(M):
            if loc.dwell.unbounded:
                edges.append(
                    Transition(
                        f"{loc.id}.wrap_{i}",
                        copy_name(loc.id, i),
                        Guard.point(1),
                        ResetKind.FULL,
                        copy_name(loc.id, i + 1),
                        continues=True,
                    )
                )
            elif _bounded(loc):
                edges.append(
                    Transition(
                        f"{loc.id}.frac_{i}",
                        copy_name(loc.id, i),
                        Guard(Fraction(1), False, D, False),
                        ResetKind.FRACTIONAL,
                        zero_name(loc.id, i + 1),
                    )
                )
    for e in g.transitions:
        src = g.loc(e.src)
        for i in range(M + 1):
            guard = e.guard.shifted(Fraction(i)).intersect(*unit)
            if guard is None:
                continue
            dst = copy_name(e.dst, 0 if e.reset is ResetKind.FULL else i)
            edges.append(Transition(f"{e.id}_{i}", copy_name(e.src, i), guard, e.reset, dst, e.id))
            if _bounded(src) and i >= 1:
                edges.append(Transition(f"{e.id}.0_{i}", zero_name(e.src, i), guard, e.reset, dst, e.id))
    init = tuple(copy_name(i, 0) for i in g.initial)
    out = Game(Stage.FRPTG, g.delta, M, tuple(locs), tuple(edges), init)
    return out, FractionalMap(g, out)


# ---------------------------------------------------------------------------
# FRPTG -> reset-free FRPTG


def layer_name(lid: str, j: int) -> str:
    return f"{lid}^{j}"


@dataclass
class ResetFreeMap:
    """FRPTG -> reset-free FRPTG; copy ``j`` means ``j`` resets taken so far."""

    source: Game
    target: Game
    n: int

    def map_state(self, c: Configuration, resets: int = 0) -> Configuration:
        self.source.loc(c.location)
        if resets > self.n:
            return Configuration(SINK, c.valuation, c.cost)
        return Configuration(layer_name(c.location, resets), c.valuation, c.cost)

    def map_play(self, play: Play) -> tuple[Configuration, list[tuple]]:
        j = 0
        moves = []
        for s in play.steps:
            e = self.source.edges[s.edge]
            moves.append((s.delay, layer_name(e.id, j)))
            if e.reset is not ResetKind.NONE:
                j += 1
            if j > self.n:
                break
        return self.map_state(play.start), moves

    def map_strategy_back(self, sigma: Strategy, optcost: Mapping[str, PwaFunction]) -> Strategy:
        """At ``(l, x)`` follow the deepest copy whose value still equals copy 0's."""
        ctrl = {}
        for loc in self.source.locations:
            if loc.is_target or loc.owner is Owner.P2:
                continue
            fns = [optcost[layer_name(loc.id, j)] for j in range(self.n + 1)]
            cuts = sorted({x for f in fns for x in f.xs})
            for j in range(self.n + 1):
                for r in sigma.controller.get(layer_name(loc.id, j), ()):
                    cuts += [r.lo, r.hi]
            cuts = sorted(set(cuts))
            out: list[Row] = []
            for k, a in enumerate(cuts):
                out += self._cell(sigma, loc.id, fns, a, a, True, True)
                if k + 1 < len(cuts):
                    out += self._cell(sigma, loc.id, fns, a, cuts[k + 1], False, False)
            ctrl[loc.id] = merge_rows(out)
        return Strategy(ctrl, {})

    def _cell(self, sigma, lid, fns, a, b, lc, hc) -> list[Row]:
        probes = [a] if a == b else [a + (b - a) / 3, a + 2 * (b - a) / 3]
        j_star = None
        for j in range(self.n, -1, -1):
            if all(fns[j](p) == fns[0](p) for p in probes):
                j_star = j
                break
        if j_star is None or fns[0](probes[0]) == INF:
            return []
        r = sigma.row_at(layer_name(lid, j_star), probes[0])
        if r is None:
            return []
        base = self.target.edges[r.move.edge].base
        mv = with_edge(r.move, base)
        return [Row(a, b, lc, hc, mv)]


def count_resets(g: Game) -> int:
    return sum(1 for e in g.transitions if e.reset is not ResetKind.NONE)


def to_reset_free(g: Game) -> tuple[Game, ResetFreeMap]:
    _require(g, Stage.FRPTG)
    n = count_resets(g)
    D = g.clock_max
    locs: list[Location] = []
    edges: list[Transition] = []
    for j in range(n + 1):
        for loc in g.locations:
            locs.append(
                Location(layer_name(loc.id, j), loc.owner, loc.price, loc.dwell, loc.is_target, loc.goal_fn, j, loc.id)
            )
    sink_needed = n > 0
    for j in range(n + 1):
        for e in g.transitions:
            src = layer_name(e.src, j)
            if e.reset is ResetKind.NONE:
                dst = layer_name(e.dst, j)
            elif j < n:
                dst = layer_name(e.dst, j + 1)
            else:
                dst = SINK
            edges.append(Transition(layer_name(e.id, j), src, e.guard, e.reset, dst, e.id, e.continues))
    if sink_needed:
        locs.append(Location(SINK, Owner.P1, 0, URGENT, True, PwaFunction.constant(INF, ZERO, D)))
    init = tuple(layer_name(i, 0) for i in g.initial)
    out = Game(Stage.RESET_FREE, g.delta, g.clock_bound, tuple(locs), tuple(edges), init)
    return out, ResetFreeMap(g, out, n)


# ---------------------------------------------------------------------------
# composition


@dataclass
class Pipeline:
    rptg: Game
    dwell: Game
    frptg: Game
    reset_free: Game
    maps: tuple[DwellMap, FractionalMap, ResetFreeMap] = field(repr=False)


def transform_all(g: Game) -> Pipeline:
    dwell, m1 = to_dwell_ptg(g)
    fr, m2 = to_frptg(dwell)
    rf, m3 = to_reset_free(fr)
    return Pipeline(g, dwell, fr, rf, (m1, m2, m3))


def state_table(sm) -> list[tuple[str, str]]:
    """Source location -> target location pairs (debugging sidecar)."""
    return sorted((loc.base, loc.id) for loc in sm.target.locations if loc.base is not None)
