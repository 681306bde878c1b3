"""Executable play semantics for every stage and a discretized value-iteration oracle.

The oracle works on floats over the grid ``{i/K}`` and shares no code with the
exact solver, so the two can be compared as independent computations.
"""

from __future__ import annotations

import math
import sys
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

import numpy as np

from .model import Game, Location, Owner, ResetKind, Stage
from .pwa import INF, Ext, fmt

ZERO = Fraction(0)


class IllegalMove(ValueError):
    def __init__(self, reason: str, detail: str):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason


@dataclass(frozen=True)
class Configuration:
    location: str
    valuation: Fraction
    cost: Fraction = ZERO


@dataclass(frozen=True)
class Step:
    delay: Fraction
    edge: str
    gamma: Fraction = ZERO
    after: Configuration | None = None


@dataclass
class Play:
    start: Configuration
    steps: list[Step] = field(default_factory=list)

    @property
    def last(self) -> Configuration:
        return self.steps[-1].after if self.steps else self.start

    def cost(self, g: Game) -> Ext:
        """Accumulated cost plus the goal term when the play ends in a target."""
        end = self.last
        loc = g.loc(end.location)
        if loc.is_target:
            return end.cost + loc.goal_fn(end.valuation)
        return end.cost


def controller_perturbed(g: Game, loc: Location) -> bool:
    """True where moves follow the excess perturbation rule."""
    return g.stage is Stage.RPTG and loc.owner is Owner.P1


def apply_reset(kind: ResetKind, w: Fraction) -> Fraction:
    if kind is ResetKind.FULL:
        return ZERO
    if kind is ResetKind.FRACTIONAL:
        return w - math.floor(w)
    return w


def step(g: Game, c: Configuration, move: tuple[Fraction, str], gamma: Fraction | None = None) -> Configuration:
    """One timed move ``(t, edge)`` from ``c``, perturbed by ``gamma`` where allowed."""
    t, eid = Fraction(move[0]), move[1]
    loc = g.loc(c.location)
    if loc.is_target:
        raise IllegalMove("edge", f"{loc.id} is a target")
    e = g.edges.get(eid)
    if e is None or e.src != loc.id:
        raise IllegalMove("edge", f"{eid} does not leave {loc.id}")
    if t < 0:
        raise IllegalMove("dwell", "negative delay")
    perturbed = controller_perturbed(g, loc)
    if perturbed:
        if t < g.delta:
            raise IllegalMove("robustness-minimum-delay", f"delay {fmt(t)} below {fmt(g.delta)}")
        gamma = ZERO if gamma is None else Fraction(gamma)
        if abs(gamma) > g.delta:
            raise IllegalMove("perturbation", f"|{fmt(gamma)}| exceeds {fmt(g.delta)}")
    else:
        if gamma:
            raise IllegalMove("ownership", f"no perturbation at {loc.id}")
        gamma = ZERO
    if not loc.dwell.allows(t):
        raise IllegalMove("dwell", f"delay {fmt(t)} at {loc.id}")
    if not e.guard.contains(c.valuation + t):
        raise IllegalMove("guard", f"{fmt(c.valuation + t)} fails {e.guard}")
    w = c.valuation + t + gamma
    if w > g.clock_max:
        raise IllegalMove("guard", f"clock {fmt(w)} beyond {fmt(g.clock_max)}")
    return Configuration(e.dst, apply_reset(e.reset, w), c.cost + (t + gamma) * loc.price)


def replay(g: Game, start: Configuration, moves: Iterable[tuple]) -> Play:
    """Replay ``(t, edge)`` or ``(t, edge, gamma)`` moves from ``start``."""
    play = Play(start)
    cur = start
    for mv in moves:
        t, eid = Fraction(mv[0]), mv[1]
        gamma = Fraction(mv[2]) if len(mv) > 2 and mv[2] is not None else None
        cur = step(g, cur, (t, eid), gamma)
        play.steps.append(Step(t, eid, gamma or ZERO, cur))
    return play


# ---------------------------------------------------------------------------
# adversarial evaluation of a controller


class Controller(Protocol):
    def decide(self, location: str, valuation: Fraction) -> tuple[Fraction, str] | None: ...


@dataclass
class Evaluation:
    cost: Ext
    play: Play
    complete: bool
    states: int


def evaluate_strategy(
    g: Game,
    sigma: Controller,
    start: Configuration,
    adversary_budget: int = 200,
    grid: Sequence[Fraction] = (),
) -> Evaluation:
    """Worst cost of ``sigma`` from ``start`` against a grid adversary.

    Player 2 picks delays landing on ``grid`` points and on the dwell-window
    ends; perturbations range over ``{-delta, 0, delta}`` plus those landing on
    grid points.  A reachable cycle the adversary can repeat costs ``+inf``.
    """
    pts = sorted(set(Fraction(p) for p in grid) | {ZERO})
    memo: dict[tuple[str, Fraction], tuple[Ext, tuple | None]] = {}
    on_stack: set[tuple[str, Fraction]] = set()
    incomplete = [False]
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 50 * adversary_budget + 1000))

    def gammas(w: Fraction) -> list[Fraction]:
        d = g.delta
        out = {-d, ZERO, d}
        lo, hi = w - d, w + d
        for p in pts[_lower(pts, lo):]:
            if p > hi:
                break
            out.add(p - w)
        return sorted(x for x in out if w + x >= 0 and w + x <= g.clock_max)

    def options(loc: Location, nu: Fraction):
        if loc.owner is Owner.P1:
            mv = sigma.decide(loc.id, nu)
            if mv is None:
                return [], True
            t, eid = mv
            if controller_perturbed(g, loc):
                return [(t, eid, gm) for gm in gammas(nu + t)], True
            return [(t, eid, ZERO)], True
        out = []
        d_lo = loc.dwell.min
        d_hi = g.clock_max - nu if loc.dwell.max is None else loc.dwell.max
        for e in g.out_edges[loc.id]:
            cands = {nu + d_lo, nu + d_hi}
            for p in pts[_lower(pts, nu + d_lo):]:
                if p > nu + d_hi:
                    break
                cands.add(p)
            for v in sorted(cands):
                if e.guard.contains(v) and v <= g.clock_max:
                    out.append((v - nu, e.id, ZERO))
        return out, False

    def value(loc_id: str, nu: Fraction, depth: int) -> Ext:
        key = (loc_id, nu)
        if key in memo:
            return memo[key][0]
        loc = g.loc(loc_id)
        if loc.is_target:
            memo[key] = (loc.goal_fn(nu), None)
            return memo[key][0]
        if key in on_stack:
            return INF
        if depth > adversary_budget:
            incomplete[0] = True
            return ZERO
        on_stack.add(key)
        moves, is_p1 = options(loc, nu)
        best: Ext = INF if not moves else -INF
        best_mv = None
        for t, eid, gm in moves:
            try:
                nxt = step(g, Configuration(loc_id, nu), (t, eid), gm if gm else None)
            except IllegalMove:
                if is_p1:
                    best, best_mv = INF, None
                    break
                continue
            v = nxt.cost + value(nxt.location, nxt.valuation, depth + 1)
            if best_mv is None or v > best:
                best, best_mv = v, (t, eid, gm)
        if best == -INF:
            best = INF
        on_stack.discard(key)
        memo[key] = (best, best_mv)
        return best

    try:
        total = value(start.location, start.valuation, 0)
    finally:
        sys.setrecursionlimit(limit)
    play = Play(start)
    cur = start
    seen = set()
    while (cur.location, cur.valuation) in memo and memo[(cur.location, cur.valuation)][1] is not None:
        key = (cur.location, cur.valuation)
        if key in seen or len(play.steps) > adversary_budget:
            break
        seen.add(key)
        t, eid, gm = memo[key][1]
        cur = step(g, cur, (t, eid), gm if gm else None)
        play.steps.append(Step(t, eid, gm, cur))
    return Evaluation(start.cost + total, play, not incomplete[0], len(memo))


def _lower(pts: Sequence[Fraction], x: Fraction) -> int:
    from bisect import bisect_left

    return bisect_left(pts, x)


# ---------------------------------------------------------------------------
# discretized oracle


def oracle_optcost(g: Game, K: int, max_iter: int | None = None) -> dict[str, np.ndarray]:
    """Grid value iteration: values at ``i/K`` for ``i = 0 .. floor(clock_max*K)``.

    Delays, perturbations and valuations are restricted to multiples of
    ``1/K``; ``delta*K`` must be an integer.  Iteration starts from ``+inf``
    and stops at the greatest fixed point.
    """
    dk = g.delta * K
    if dk.denominator != 1:
        raise ValueError("delta must be a multiple of 1/K")
    dk = int(dk)
    n = math.floor(g.clock_max * K)
    grid = [Fraction(i, K) for i in range(n + 1)]
    idx = np.arange(n + 1)
    values: dict[str, np.ndarray] = {}
    for loc in g.locations:
        if loc.is_target:
            values[loc.id] = np.array([float(loc.goal_fn(x)) for x in grid])
        else:
            values[loc.id] = np.full(n + 1, np.inf)
    edge_data = []
    for e in g.transitions:
        mask = np.array([e.guard.contains(x) for x in grid])
        if e.reset is ResetKind.FULL:
            ridx = np.zeros(n + 1, dtype=int)
        elif e.reset is ResetKind.FRACTIONAL:
            ridx = idx % K
        else:
            ridx = idx
        edge_data.append((e, mask, ridx))
    by_src: dict[str, list] = {loc.id: [] for loc in g.locations}
    for item in edge_data:
        by_src[item[0].src].append(item)
    inner = [loc for loc in g.locations if not loc.is_target]
    cap = max_iter or (20 * (n + 1) * max(1, len(inner)) + 200)
    for _ in range(cap):
        new = {}
        for loc in inner:
            new[loc.id] = _oracle_location(g, loc, by_src[loc.id], values, K, dk, n)
        changed = False
        for lid, arr in new.items():
            if not np.allclose(arr, values[lid], rtol=0, atol=1e-9):
                changed = True
            values[lid] = arr
        if not changed:
            return values
    raise RuntimeError("oracle value iteration did not converge")


def _oracle_location(g, loc, edges, values, K, dk, n) -> np.ndarray:
    p1 = loc.owner is Owner.P1
    pi = float(loc.price)
    ramp = np.arange(n + 1) * pi / K
    fill = np.inf if p1 else -np.inf
    best = np.full(n + 1, fill)
    for e, mask, ridx in edges:
        after = values[e.dst][ridx]
        if controller_perturbed(g, loc):
            w = np.full(n + 1, -np.inf)
            for p in range(-dk, dk + 1):
                shifted = np.full(n + 1, -np.inf)
                if p >= 0:
                    shifted[: n + 1 - p] = after[p:] + p * pi / K
                else:
                    shifted[-p:] = after[: n + 1 + p] + p * pi / K
                w = np.maximum(w, shifted)
            cand = np.where(mask, ramp + w, np.inf)
            reach = _suffix(cand, "min")
            lead = np.full(n + 1, np.inf)
            lead[: n + 1 - dk] = reach[dk:] if dk else reach
            best = np.minimum(best, lead)
            continue
        cand = np.where(mask, ramp + after, fill)
        a = int(loc.dwell.min * K)
        if loc.dwell.max is None:
            reach = _suffix(cand, "min" if p1 else "max")
            lead = np.full(n + 1, fill)
            lead[: n + 1 - a] = reach[a:] if a else reach
        else:
            b = int(loc.dwell.max * K)
            lead = np.full(n + 1, fill)
            for off in range(a, b + 1):
                sh = np.full(n + 1, fill)
                sh[: n + 1 - off] = cand[off:]
                lead = np.minimum(lead, sh) if p1 else np.maximum(lead, sh)
        best = np.minimum(best, lead) if p1 else np.maximum(best, lead)
    with np.errstate(invalid="ignore"):
        out = best - ramp
    if not p1:
        out = np.where(out == -np.inf, np.inf, out)
    return out


def _suffix(a: np.ndarray, mode: str) -> np.ndarray:
    op = np.minimum if mode == "min" else np.maximum
    return op.accumulate(a[::-1])[::-1]


# ---------------------------------------------------------------------------
# random plays


def random_play(g: Game, start: Configuration, rng, max_steps: int = 12, unit: Fraction | None = None) -> Play:
    """A legal play with delays and perturbations drawn from a grid of step ``unit``."""
    u = unit or g.delta / 4
    play = Play(start)
    cur = start
    for _ in range(max_steps):
        loc = g.loc(cur.location)
        if loc.is_target:
            break
        options = []
        lo_t = g.delta if controller_perturbed(g, loc) else loc.dwell.min
        hi_v = g.clock_max if loc.dwell.max is None else min(g.clock_max, cur.valuation + loc.dwell.max)
        for e in g.out_edges[loc.id]:
            v = cur.valuation + lo_t
            cands = []
            while v <= hi_v:
                if e.guard.contains(v):
                    cands.append(v)
                v += u
            if e.guard.contains(hi_v) and hi_v - cur.valuation >= lo_t:
                cands.append(hi_v)
            options += [(v - cur.valuation, e.id) for v in cands]
        if not options:
            break
        t, eid = rng.choice(options)
        gamma = None
        if controller_perturbed(g, loc):
            w = cur.valuation + t
            gammas = [k * u for k in range(-int(g.delta / u), int(g.delta / u) + 1)]
            gamma = rng.choice([x for x in gammas if 0 <= w + x <= g.clock_max])
        nxt = step(g, cur, (t, eid), gamma)
        play.steps.append(Step(t, eid, gamma or ZERO, nxt))
        cur = nxt
    return play


def lipschitz_bound(g: Game) -> Fraction:
    """Constant ``C`` with ``|solver - oracle| <= C / K`` on the grid ``i/K``."""
    slopes = [Fraction(abs(loc.price)) for loc in g.locations]
    slopes += [loc.goal_fn.max_abs_slope() for loc in g.locations if loc.is_target]
    lam = max(slopes + [Fraction(1)])
    return 2 * lam * (len(g.locations) + 1) * (g.clock_bound + 1)
