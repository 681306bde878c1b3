from fractions import Fraction as F

import pytest

from rptg.fixtures import WORKED, cost_functions, open_guard, random_game
from rptg.model import Stage
from rptg.pipeline import solve_game
from rptg.semantics import lipschitz_bound
from rptg.strategy import (
    DelayFor,
    DelayUntil,
    Immediate,
    Row,
    Strategy,
    audit,
    merge_rows,
    move_from_json,
    move_to_json,
    structural_violations,
)

EPS = F(1, 10)
K = 32


def _grid(g, sol):
    pts = {F(i, K) for i in range(int(g.clock_max * K) + 1)}
    return sorted(pts | {x for f in sol.optcost.values() for x in f.xs})


def test_moves_round_trip():
    for m in (Immediate("e"), DelayUntil(F(3, 7), "e"), DelayFor(F(1, 8), "f")):
        assert move_from_json(move_to_json(m)) == m
    assert DelayUntil(F(1, 2), "e").delay(F(1, 8)) == F(3, 8)
    assert DelayFor(F(1, 4), "e").delay(F(5)) == F(1, 4)
    assert Immediate("e").delay(F(5)) == 0


def test_strategy_json_round_trip():
    sol = solve_game(open_guard(), EPS)
    assert Strategy.from_json(sol.strategy.to_json()) == sol.strategy


def test_touching_rows_with_same_move_merge():
    a = Row(F(0), F(1, 2), True, False, Immediate("e"))
    b = Row(F(1, 2), F(1), True, True, Immediate("e"))
    c = Row(F(1), F(2), False, True, Immediate("f"))
    assert merge_rows([a, b, c]) == (Row(F(0), F(1), True, True, Immediate("e")), c)


def test_targets_have_no_rows():
    sol = solve_game(cost_functions(), EPS)
    assert "T" not in sol.strategy.controller and "TA" not in sol.strategy.controller


def test_cost_functions_audit_is_clean():
    g = cost_functions()
    sol = solve_game(g, EPS)
    rep = audit(sol.strategy, g, sol.optcost, EPS, samples=20, grid=_grid(g, sol))
    assert rep.ok, rep.violations
    assert rep.checked > 0
    assert len(sol.strategy.controller["B"]) == 2
    assert rep.n_intervals == 2


def test_corrupted_strategy_is_flagged():
    g = open_guard()
    bad = Strategy({"l": (Row(F(0), F(1, 2), True, False, Immediate("go")),)})
    kinds = {v.kind for v in structural_violations(g, bad)}
    assert kinds == {"guard"}
    foreign = Strategy({"l": (Row(F(0), F(1, 2), True, False, Immediate("nope")),)})
    assert {v.kind for v in structural_violations(g, foreign)} == {"edge"}


def test_short_rptg_delay_is_flagged():
    g, _ = random_game(1)
    sol = solve_game(g, EPS)
    lid, rows = next(iter(sol.strategy.controller.items()))
    r = rows[0]
    short = Strategy({lid: (Row(r.lo, r.lo, True, True, DelayFor(g.delta / 2, r.move.edge)),)})
    assert any("below delta" in v.detail for v in structural_violations(g, short))


@pytest.mark.parametrize("name", ["cost_functions", "open_guard", "fractional_reset"])
def test_worked_strategies_are_structurally_sound(name):
    g = WORKED[name]()
    sol = solve_game(g, EPS)
    for stage, sigma in sol.stage_strategies.items():
        assert structural_violations(sol.stages[stage], sigma) == []


@pytest.mark.parametrize("seed", range(8))
def test_back_mapped_strategy_is_near_optimal(seed):
    g, _ = random_game(seed)
    sol = solve_game(g, EPS)
    rep = audit(sol.strategy, g, sol.optcost, 2 * EPS, samples=8, tolerance=lipschitz_bound(g) / K, grid=_grid(g, sol), seed=seed)
    assert rep.ok, rep.violations


@pytest.mark.parametrize("seed", range(8))
def test_interval_count_survives_back_mapping(seed):
    g, _ = random_game(seed)
    sol = solve_game(g, EPS)
    dwell = sol.stage_strategies[Stage.DWELL]
    assert sol.strategy.intervals_per_unit() == dwell.intervals_per_unit()
    for lid, rows in sol.strategy.controller.items():
        assert [(r.lo, r.hi) for r in rows] == [(r.lo, r.hi) for r in dwell.controller[lid]]
