"""Worked-example games and a seeded generator of random games in the solvable class."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .model import (
    BLOCKING,
    NON_ZENO_NEGATIVE,
    RESET_FREE_NEGATIVE,
    UNBOUNDED_CLOCK,
    Game,
    parse_game,
    validate_game,
)


def _game(doc: dict) -> Game:
    return parse_game(json.dumps(doc))


def cost_functions() -> Game:
    """Player 2 at A (price -1) may quit for -1 or hand over to B (price 1)."""
    return _game(
        {
            "stage": "DwellPTG",
            "delta": "1/4",
            "clock_bound": 1,
            "initial": ["A"],
            "locations": [
                {"id": "A", "owner": "P2", "price": -1},
                {"id": "B", "owner": "P1", "price": 1},
                {"id": "T", "target": True, "goal_fn": [[0, 3], ["1/2", 0], [1, 0]]},
                {"id": "TA", "target": True, "goal_fn": [[0, -1], [1, -1]]},
            ],
            "transitions": [
                {"id": "a_quit", "src": "A", "dst": "TA", "guard": {"lo": 0, "hi": 1}},
                {"id": "a_pass", "src": "A", "dst": "B", "guard": {"lo": 0, "hi": 1}},
                {"id": "b_goal", "src": "B", "dst": "T", "guard": {"lo": 0, "hi": 1}},
            ],
        }
    )


def open_guard(delta: str = "1/8") -> Game:
    """Price-2 location whose only exit is the open guard 0 < x < 1 into goal 3 - 3x."""
    return _game(
        {
            "stage": "DwellPTG",
            "delta": delta,
            "clock_bound": 1,
            "initial": ["l"],
            "locations": [
                {"id": "l", "owner": "P1", "price": 2},
                {"id": "A", "target": True, "goal_fn": [[0, 3], [1, 0]]},
            ],
            "transitions": [
                {
                    "id": "go",
                    "src": "l",
                    "dst": "A",
                    "guard": {"lo": 0, "lo_strict": True, "hi": 1, "hi_strict": True},
                }
            ],
        }
    )


def fractional_reset() -> Game:
    """Player 2 chooses when to leave through a fractional reset into a falling goal."""
    return _game(
        {
            "stage": "FRPTG",
            "delta": "1/5",
            "clock_bound": 1,
            "initial": ["P"],
            "locations": [
                {"id": "P", "owner": "P2", "price": 1},
                {"id": "Z", "target": True, "goal_fn": [[0, "6/5"], [1, 0]]},
                {"id": "B", "target": True, "goal_fn": [[0, 0], [1, 0]]},
            ],
            "transitions": [
                {"id": "e1", "src": "P", "dst": "Z", "reset": "fractional", "guard": {"lo": 1, "hi": "6/5"}},
                {"id": "e2", "src": "P", "dst": "B", "guard": {"lo": 0, "hi": 1, "hi_strict": True}},
            ],
        }
    )


def negative_cycle() -> Game:
    """Two price -1 controller locations looping through a full reset."""
    return _game(
        {
            "stage": "RPTG",
            "delta": "1/4",
            "clock_bound": 1,
            "initial": ["s0"],
            "locations": [
                {"id": "s0", "owner": "P1", "price": -1},
                {"id": "s1", "owner": "P1", "price": -1},
                {"id": "T", "target": True, "goal_fn": [[0, 0], [1, 0]]},
            ],
            "transitions": [
                {"id": "c0", "src": "s0", "dst": "s1", "guard": {"lo": 0, "hi": 1}},
                {"id": "c1", "src": "s1", "dst": "s0", "reset": "full", "guard": {"lo": 1, "hi": 1}},
                {"id": "out", "src": "s1", "dst": "T", "guard": {"lo": 1, "hi": 1}},
            ],
        }
    )


WORKED = {
    "cost_functions": cost_functions,
    "open_guard": open_guard,
    "fractional_reset": fractional_reset,
    "negative_cycle": negative_cycle,
}


# ---------------------------------------------------------------------------
# random games


@dataclass(frozen=True)
class FixtureConfig:
    locations: int = 5
    price_lo: int = -3
    price_hi: int = 3
    guard_max: int = 2
    deltas: tuple[str, ...] = ("1/4", "1/8")
    max_edges: int = 2
    reset_prob: float = 0.25


REJECT_KINDS = {NON_ZENO_NEGATIVE, RESET_FREE_NEGATIVE, BLOCKING, UNBOUNDED_CLOCK}


def random_doc(rng: random.Random, cfg: FixtureConfig) -> dict:
    n_inner = rng.randint(1, max(1, cfg.locations - 1))
    n_targets = max(1, min(2, cfg.locations - n_inner))
    inner = [f"L{i}" for i in range(n_inner)]
    targets = [f"T{i}" for i in range(n_targets)]
    M = cfg.guard_max
    locs = []
    for lid in inner:
        locs.append({"id": lid, "owner": rng.choice(["P1", "P2"]), "price": rng.randint(cfg.price_lo, cfg.price_hi)})
    for tid in targets:
        pts = sorted({0, M + 2} | {rng.randint(1, M + 1) for _ in range(rng.randint(0, 2))})
        locs.append({"id": tid, "target": True, "goal_fn": [[x, rng.randint(0, 4)] for x in pts]})
    edges = []
    for lid in inner:
        owner = next(l["owner"] for l in locs if l["id"] == lid)
        for k in range(rng.randint(1, cfg.max_edges)):
            dst = rng.choice(inner + targets + targets)
            lo = rng.randint(0, M)
            hi = rng.randint(lo, M)
            guard = {"lo": lo, "hi": hi}
            if lo == hi:
                if lo == 0 and owner == "P1":
                    guard["hi"] = hi = 1
            if lo < hi:
                guard["lo_strict"] = rng.random() < 0.3
                guard["hi_strict"] = rng.random() < 0.3
            reset = "full" if rng.random() < cfg.reset_prob else "none"
            edges.append({"id": f"{lid}e{k}", "src": lid, "dst": dst, "guard": guard, "reset": reset})
    return {
        "stage": "RPTG",
        "delta": rng.choice(cfg.deltas),
        "clock_bound": M,
        "initial": [inner[0]],
        "locations": locs,
        "transitions": edges,
    }


def random_game(seed: int, cfg: FixtureConfig = FixtureConfig(), max_tries: int = 500) -> tuple[Game, int]:
    """First valid game from the seeded stream, with the number of rejected drafts."""
    rng = random.Random(seed)
    for tries in range(max_tries):
        g = parse_game(json.dumps(random_doc(rng, cfg)))
        if not any(d.kind in REJECT_KINDS for d in validate_game(g)):
            return g, tries
    raise RuntimeError(f"no valid game after {max_tries} drafts for seed {seed}")
