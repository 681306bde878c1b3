import json
import random
from fractions import Fraction as F

import pytest

from rptg.fixtures import negative_cycle, random_game
from rptg.model import Guard, Owner, ResetKind, Stage, parse_game
from rptg.pipeline import mapped_plays, transform_chain
from rptg.semantics import Configuration, apply_reset, random_play, replay
from rptg.solver import solve
from rptg.strategy import DelayFor, DelayUntil, Immediate, Row, Strategy, with_edge
from rptg.transform import (
    SINK,
    TransformError,
    copy_name,
    dwell_guard,
    layer_name,
    to_dwell_ptg,
    to_frptg,
    to_reset_free,
)


def _game(locations, transitions, stage="RPTG", delta="1/4", bound=1):
    return parse_game(
        json.dumps(
            {
                "stage": stage,
                "delta": delta,
                "clock_bound": bound,
                "initial": [locations[0]["id"]],
                "locations": locations,
                "transitions": transitions,
            }
        )
    )


def _line(bound=1, guard=None, reset="none", owner="P1"):
    return _game(
        [
            {"id": "l", "owner": owner, "price": 1},
            {"id": "t", "target": True, "goal_fn": [[0, 0], [bound, 0]]},
        ],
        [{"id": "e", "src": "l", "dst": "t", "guard": guard or {"lo": 0, "hi": bound}, "reset": reset}],
        bound=bound,
    )


# ---------------------------------------------------------------------------
# RPTG -> dwell-time PTG


def test_point_guard_moves_back_by_delta():
    g = dwell_guard(Guard.point(1), F(1, 4))
    assert (g.lo, g.hi) == (F(3, 4), F(3, 4))


def test_open_guard_becomes_half_open():
    g = dwell_guard(Guard(F(0), True, F(1), True), F(1, 8))
    assert (g.lo, g.lo_strict, g.hi, g.hi_strict) == (0, False, F(7, 8), True)


def test_zero_guard_is_kept():
    assert dwell_guard(Guard.point(0), F(1, 4)) == Guard.point(0)


def test_player2_game_unchanged_apart_from_stage():
    g = _line(owner="P2")
    d, _ = to_dwell_ptg(g)
    assert d.stage is Stage.DWELL
    assert d.locations == g.locations and d.transitions == g.transitions


def test_gadget_shape():
    d, m = to_dwell_ptg(_line())
    hub, minus, plus = d.loc("(l,e)"), d.loc("(l,e)-"), d.loc("(l,e)+")
    assert hub.owner is minus.owner is plus.owner is Owner.P2
    assert hub.dwell.urgent
    assert (minus.dwell.min, minus.dwell.max) == (0, F(1, 4))
    assert (plus.dwell.min, plus.dwell.max) == (F(1, 4), F(1, 2))
    assert hub.price == minus.price == plus.price == 1
    assert m.entry == {"e": "e.enter"}


def test_reset_moves_to_gadget_exit():
    d, _ = to_dwell_ptg(_line(reset="full"))
    assert d.edges["e.enter"].reset is ResetKind.NONE
    assert d.edges["e.-go"].reset is d.edges["e.+go"].reset is ResetKind.FULL


def test_delta_too_large_rejected():
    with pytest.raises(TransformError):
        to_dwell_ptg(_line(), F(1, 2))


def test_dwell_delay_gains_delta_when_mapped_back():
    _, m = to_dwell_ptg(_line())
    sigma = Strategy(
        {
            "l": (
                Row(F(0), F(1, 2), True, False, DelayUntil(F(1, 2), "e.enter")),
                Row(F(1, 2), F(3, 4), True, True, Immediate("e.enter")),
            )
        }
    )
    back = m.map_strategy_back(sigma)
    assert back.controller["l"][0].move == DelayUntil(F(3, 4), "e")
    assert back.controller["l"][1].move == DelayFor(F(1, 4), "e")


# ---------------------------------------------------------------------------
# dwell-time PTG -> FRPTG


def test_fractional_reset_keeps_fraction():
    assert apply_reset(ResetKind.FRACTIONAL, F(13, 10)) == F(3, 10)


def test_bound_one_gives_two_copies_and_one_wrap_family():
    d, _ = to_dwell_ptg(_line())
    fr, _ = to_frptg(d)
    assert {copy_name("l", 0), copy_name("l", 1)} <= {loc.id for loc in fr.locations}
    wraps = [e.id for e in fr.transitions if ".wrap_" in e.id]
    assert wraps == ["l.wrap_0"]


def test_guard_shifted_into_copy():
    g = _line(bound=2, guard={"lo": 1, "hi": 2, "hi_strict": True}, owner="P2")
    d, _ = to_dwell_ptg(g)
    fr, _ = to_frptg(d)
    guard = fr.edges["e_1"].guard
    assert (guard.lo, guard.lo_strict, guard.hi, guard.hi_strict) == (0, False, 1, True)


def test_state_map_splits_integer_part():
    g = _line(bound=2)
    d, _ = to_dwell_ptg(g)
    _, m = to_frptg(d)
    c = m.map_state(Configuration("l", F(7, 4)))
    assert (c.location, c.valuation) == (copy_name("l", 1), F(3, 4))


# ---------------------------------------------------------------------------
# FRPTG -> reset-free


def test_one_reset_gives_two_copies_and_sink():
    fr = _game(
        [
            {"id": "p", "owner": "P2", "price": 1},
            {"id": "t", "target": True, "goal_fn": [[0, 0], ["3/2", 0]]},
        ],
        [
            {"id": "loop", "src": "p", "dst": "p", "reset": "full", "guard": {"lo": 0, "hi": 1}},
            {"id": "out", "src": "p", "dst": "t", "guard": {"lo": 0, "hi": 1}},
        ],
        stage="FRPTG",
    )
    rf, m = to_reset_free(fr)
    assert m.n == 1
    assert {layer_name("p", 0), layer_name("p", 1), SINK} <= {loc.id for loc in rf.locations}
    assert rf.edges[layer_name("loop", 0)].dst == layer_name("p", 1)
    assert rf.edges[layer_name("loop", 1)].dst == SINK
    assert rf.loc(SINK).goal_fn(0) == float("inf")
    twice = replay(fr, Configuration("p", F(0)), [(F(0), "loop"), (F(0), "loop")])
    start, moves = m.map_play(twice)
    q = replay(rf, start, moves)
    assert q.last.location == SINK
    assert q.cost(rf) == float("inf")


def test_no_reset_gives_single_copy():
    fr = _game(
        [{"id": "p", "owner": "P2", "price": 1}, {"id": "t", "target": True, "goal_fn": [[0, 0], ["3/2", 0]]}],
        [{"id": "out", "src": "p", "dst": "t", "guard": {"lo": 0, "hi": 1}}],
        stage="FRPTG",
    )
    rf, m = to_reset_free(fr)
    assert m.n == 0
    assert SINK not in {loc.id for loc in rf.locations}
    assert all(loc.component == 0 for loc in rf.locations)


def test_copy_zero_move_is_copied():
    fr = _game(
        [{"id": "p", "owner": "P1", "price": 1}, {"id": "t", "target": True, "goal_fn": [[0, 0], ["3/2", 0]]}],
        [{"id": "out", "src": "p", "dst": "t", "guard": {"lo": 0, "hi": 1}}],
        stage="FRPTG",
    )
    rf, m = to_reset_free(fr)
    sr = solve(rf, F(1, 10))
    back = m.map_strategy_back(sr.strategy, sr.optcost)
    assert [r.move for r in back.controller["p"]] == [
        with_edge(r.move, "out") for r in sr.strategy.controller[layer_name("p", 0)]
    ]


# ---------------------------------------------------------------------------
# plays


@pytest.mark.parametrize("seed", range(10))
def test_random_plays_keep_their_cost(seed):
    g, _ = random_game(seed)
    _, maps = transform_chain(g)
    rng = random.Random(seed)
    for _ in range(20):
        play = random_play(g, Configuration(g.initial[0], F(0)), rng)
        chain = mapped_plays(maps, play)
        for src, dst, m in zip(chain, chain[1:], maps):
            if dst.last.location == SINK:
                continue
            assert dst.last.cost == src.last.cost
            assert dst.cost(m.target) == src.cost(m.source)


@pytest.mark.parametrize("seed", range(10))
def test_copies_bound_the_clock_and_never_rewind(seed):
    g, _ = random_game(seed)
    stages, maps = transform_chain(g)
    rng = random.Random(seed)
    top = stages[Stage.FRPTG].clock_max
    assert top == 1 + 2 * g.delta
    for _ in range(20):
        play = random_play(g, Configuration(g.initial[0], F(0)), rng)
        chain = mapped_plays(maps, play)
        for p in chain[2:]:
            assert all(s.after.valuation <= top for s in p.steps)
        if len(chain) == 4:
            rf = chain[3]
            prev = rf.start
            for s in rf.steps:
                same_copy = rf_component(stages, prev.location) == rf_component(stages, s.after.location)
                if same_copy:
                    assert s.after.valuation >= prev.valuation
                prev = s.after


def rf_component(stages, lid):
    return stages[Stage.RESET_FREE].loc(lid).component


def test_negative_cycle_game_still_transforms():
    stages, _ = transform_chain(negative_cycle())
    assert set(stages) == set(Stage)
