"""End-to-end solving: transform to a reset-free FRPTG, solve, and map results back."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import Game, Owner, Stage, rejected, validate_game
from .pwa import PwaFunction, restrict, splice, translate
from .semantics import Play, replay
from .solver import SolveResult, solve
from .strategy import Strategy
from .transform import (
    SINK,
    ResetFreeMap,
    copy_name,
    layer_name,
    to_dwell_ptg,
    to_frptg,
    to_reset_free,
)

ZERO = Fraction(0)


class RejectedGame(ValueError):
    def __init__(self, diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass
class Solution:
    game: Game
    stages: dict[Stage, Game]
    maps: list = field(repr=False)
    result: SolveResult = field(repr=False)
    optcost: dict[str, PwaFunction]
    strategy: Strategy
    stage_strategies: dict[Stage, Strategy] = field(repr=False)


def transform_chain(g: Game) -> tuple[dict[Stage, Game], list]:
    stages = {g.stage: g}
    maps: list = []
    cur = g
    if cur.stage is Stage.RPTG:
        cur, m = to_dwell_ptg(cur)
        stages[cur.stage] = cur
        maps.append(m)
    if cur.stage is Stage.DWELL:
        cur, m = to_frptg(cur)
        stages[cur.stage] = cur
        maps.append(m)
    if cur.stage is Stage.FRPTG:
        cur, m = to_reset_free(cur)
        stages[cur.stage] = cur
        maps.append(m)
    return stages, maps


def controller_count(g: Game) -> int:
    return max(1, sum(1 for loc in g.locations if loc.owner is Owner.P1 and not loc.is_target))


def solve_game(g: Game, epsilon: Fraction, check: bool = True) -> Solution:
    """Solve any stage; optcost and strategy are reported for the input game's locations."""
    if check:
        bad = rejected(validate_game(g))
        if bad is not None:
            raise RejectedGame(bad)
    epsilon = Fraction(epsilon)
    stages, maps = transform_chain(g)
    sr = solve(stages[Stage.RESET_FREE], epsilon, controller_count(g))
    strategies = {Stage.RESET_FREE: sr.strategy}
    sigma = sr.strategy
    for m in reversed(maps):
        sigma = m.map_strategy_back(sigma, sr.optcost) if isinstance(m, ResetFreeMap) else m.map_strategy_back(sigma)
        strategies[m.source.stage] = sigma
    return Solution(g, stages, maps, sr, original_optcost(g, stages, sr), sigma, strategies)


def original_optcost(g: Game, stages: dict[Stage, Game], sr: SolveResult) -> dict[str, PwaFunction]:
    """Stitch copy values back into functions of the input game's clock."""
    vals = sr.optcost
    if g.stage is Stage.RESET_FREE:
        return dict(vals)
    if g.stage is Stage.FRPTG:
        return {loc.id: vals[layer_name(loc.id, 0)] for loc in g.locations}
    M = g.clock_bound
    out = {}
    for loc in g.locations:
        parts = []
        for b in range(M):
            f = vals[layer_name(copy_name(loc.id, b), 0)]
            parts.append(translate(restrict(f, ZERO, Fraction(1)), -b))
        last = vals[layer_name(copy_name(loc.id, M), 0)]
        parts.append(translate(restrict(last, ZERO, ZERO), -M))
        out[loc.id] = splice(parts)
    return out


def mapped_plays(maps: list, play: Play) -> list[Play]:
    """Push ``play`` through each state map in turn, replaying it in every target game."""
    out = [play]
    for m in maps:
        start, moves = m.map_play(out[-1])
        out.append(replay(m.target, start, moves))
        if out[-1].last.location == SINK:
            break
    return out
