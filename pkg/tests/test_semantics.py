import random
from fractions import Fraction as F

import numpy as np
import pytest

from rptg.fixtures import cost_functions, open_guard, random_game
from rptg.model import (
    URGENT,
    DwellTime,
    Game,
    Guard,
    Location,
    Owner,
    ResetKind,
    Stage,
    Transition,
)
from rptg.pipeline import solve_game
from rptg.pwa import PwaFunction
from rptg.semantics import (
    Configuration,
    IllegalMove,
    evaluate_strategy,
    lipschitz_bound,
    oracle_optcost,
    random_play,
    replay,
    step,
)
from rptg.strategy import Strategy

FREE = DwellTime(F(0), None)


def _excess_game(guard, reset=ResetKind.NONE, price=2, delta=F(1, 8), dwell=FREE, owner=Owner.P1):
    goal = PwaFunction.constant(0, 0, 1)
    return Game(
        Stage.RPTG,
        delta,
        1,
        (Location("l", owner, price, dwell), Location("t", Owner.P1, 0, FREE, True, goal)),
        (Transition("e", "l", guard, reset, "t"),),
        ("l",),
    )


def test_plain_step_and_goal():
    g = cost_functions()
    play = replay(g, Configuration("B", F(0)), [(F(1, 2), "b_goal")])
    assert play.last == Configuration("T", F(1, 2), F(1, 2))
    assert play.cost(g) == F(1, 2)


def test_excess_step_resets_after_perturbation():
    g = _excess_game(Guard.point(F(3, 4)), ResetKind.FULL)
    c = step(g, Configuration("l", F(0)), (F(3, 4), "e"), F(1, 8))
    assert c.valuation == 0
    assert c.cost == (F(3, 4) + F(1, 8)) * 2


def test_guard_checked_before_perturbation():
    g = _excess_game(Guard(F(0), False, F(1, 2), False))
    c = step(g, Configuration("l", F(0)), (F(1, 2), "e"), F(1, 8))
    assert c.valuation == F(5, 8)
    with pytest.raises(IllegalMove) as err:
        step(g, Configuration("l", F(0)), (F(5, 8), "e"), F(-1, 8))
    assert err.value.reason == "guard"


def test_urgent_location_refuses_delay():
    g = _excess_game(Guard(F(0), False, F(1), False), dwell=URGENT, owner=Owner.P2)
    with pytest.raises(IllegalMove) as err:
        step(g, Configuration("l", F(0)), (F(1, 10), "e"))
    assert err.value.reason == "dwell"


def test_controller_delay_below_delta_refused():
    g = _excess_game(Guard(F(0), False, F(1), False))
    with pytest.raises(IllegalMove) as err:
        step(g, Configuration("l", F(0)), (F(1, 16), "e"))
    assert err.value.reason == "robustness-minimum-delay"


def test_adversary_moves_are_not_perturbed():
    g = _excess_game(Guard(F(0), False, F(1), False), owner=Owner.P2)
    with pytest.raises(IllegalMove) as err:
        step(g, Configuration("l", F(0)), (F(1, 2), "e"), F(1, 8))
    assert err.value.reason == "ownership"


def test_cost_is_additive():
    for seed in range(10):
        g, _ = random_game(seed)
        play = random_play(g, Configuration(g.initial[0], F(0)), random.Random(seed))
        total = F(0)
        for s in play.steps:
            total += (s.delay + s.gamma) * g.loc(g.edges[s.edge].src).price
        assert play.last.cost == total
        if g.loc(play.last.location).is_target:
            assert play.cost(g) == total + g.loc(play.last.location).goal_fn(play.last.valuation)


def test_adversary_free_evaluation_is_exact():
    g = open_guard()
    sol = solve_game(g, F(1, 10))
    ev = evaluate_strategy(g, sol.strategy, Configuration("l", F(0)))
    assert ev.cost == F(81, 40) and ev.complete


def test_adversary_worst_case_matches_value():
    g = cost_functions()
    sol = solve_game(g, F(1, 10))
    grid = [F(i, 16) for i in range(17)]
    for x in grid:
        ev = evaluate_strategy(g, sol.strategy, Configuration("A", x), grid=grid)
        assert ev.cost == sol.optcost["A"](x)


def test_oracle_on_cost_functions():
    g = cost_functions()
    K = 100
    o = oracle_optcost(g, K)
    assert abs(o["B"][0] - 0.5) <= lipschitz_bound(g) / K


def test_oracle_on_targets_only():
    goal = PwaFunction.from_points([(0, 2), (F(1, 2), 1), (1, 3), (3, 3)])
    g = Game(Stage.RPTG, F(1, 4), 1, (Location("t", Owner.P1, 0, FREE, True, goal),), ())
    o = oracle_optcost(g, 8)
    assert list(o["t"]) == [float(goal(F(i, 8))) for i in range(len(o["t"]))]
    assert len(o["t"]) == int(g.clock_max * 8) + 1


def test_oracle_approaches_open_guard_value():
    g = open_guard()
    errs = []
    for K in (16, 32, 64):
        v = oracle_optcost(g, K)["l"][0]
        errs.append(abs(v - 2))
        assert errs[-1] <= lipschitz_bound(g) / K
    assert errs == sorted(errs, reverse=True)


def test_oracle_refinement_moves_little():
    for seed in range(5):
        g, _ = random_game(seed)
        C = lipschitz_bound(g)
        a, b = oracle_optcost(g, 16), oracle_optcost(g, 32)
        for lid in a:
            fa, fb = a[lid], b[lid][::2]
            both = np.isfinite(fa) & np.isfinite(fb)
            assert np.all(np.abs(fa[both] - fb[both]) <= C / 16 + C / 32)


def test_strategy_without_rows_scores_infinity():
    g = open_guard()
    ev = evaluate_strategy(g, Strategy(), Configuration("l", F(0)))
    assert ev.cost == float("inf")
