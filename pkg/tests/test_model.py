import json
import random
from fractions import Fraction as F

import pytest

from rptg.fixtures import WORKED, FixtureConfig, cost_functions, negative_cycle, random_doc, random_game
from rptg.model import (
    NON_ZENO_NEGATIVE,
    RESET_FREE_NEGATIVE,
    Guard,
    ModelError,
    Owner,
    ParseError,
    Stage,
    game_to_dict,
    parse_game,
    rejected,
    serialize_game,
    validate_game,
)
from rptg.semantics import Configuration, replay


def _doc(**over):
    doc = {
        "stage": "RPTG",
        "delta": "1/8",
        "clock_bound": 1,
        "initial": ["a"],
        "locations": [
            {"id": "a", "owner": "P1", "price": 1},
            {"id": "b", "owner": "P1", "price": 1},
            {"id": "t", "target": True, "goal_fn": [[0, 0], [1, 0]]},
        ],
        "transitions": [
            {"id": "ab", "src": "a", "dst": "b", "guard": {"lo": 0, "hi": 1}},
            {"id": "bt", "src": "b", "dst": "t", "guard": {"lo": 0, "hi": 1}},
        ],
    }
    doc.update(over)
    return doc


def test_cost_functions_file_parses():
    g = cost_functions()
    assert g.loc("B").price == 1
    goal = g.loc("T").goal_fn
    assert goal(0) == 3
    assert all(goal(F(k, 8)) == 0 for k in range(4, 9))


def test_delta_is_exact():
    assert parse_game(json.dumps(_doc())).delta == F(1, 8)


def test_empty_locations_rejected():
    with pytest.raises(ParseError):
        parse_game(json.dumps(_doc(locations=[], transitions=[], initial=[])))


def test_non_integer_rptg_guard_rejected():
    doc = _doc()
    doc["transitions"][0]["guard"] = {"lo": "1/2", "hi": 1}
    with pytest.raises(ModelError):
        parse_game(json.dumps(doc))


def test_schema_error_names_path():
    doc = _doc()
    doc["locations"][0]["owner"] = "P3"
    with pytest.raises(ParseError, match="locations"):
        parse_game(json.dumps(doc))


def test_guard_is_clipped_to_clock_bound():
    doc = _doc()
    doc["transitions"][0]["guard"] = {"lo": 0, "hi": "inf"}
    g = parse_game(json.dumps(doc))
    assert g.edges["ab"].guard.hi == 1


@pytest.mark.parametrize("name", sorted(WORKED))
def test_round_trip_worked(name):
    g = WORKED[name]()
    assert parse_game(serialize_game(g)) == g


def test_round_trip_random():
    for seed in range(20):
        g, _ = random_game(seed)
        assert parse_game(serialize_game(g)) == g


def test_positive_cycle_with_reset_is_accepted():
    doc = _doc()
    doc["transitions"].append({"id": "ba", "src": "b", "dst": "a", "reset": "full", "guard": {"lo": 1, "hi": 1}})
    diags = validate_game(parse_game(json.dumps(doc)))
    assert not any(d.kind == NON_ZENO_NEGATIVE for d in diags)


def test_acyclic_game_has_no_diagnostics():
    assert validate_game(parse_game(json.dumps(_doc()))) == []


def test_negative_cycle_rejected_with_replayable_witness():
    g = negative_cycle()
    bad = rejected(validate_game(g))
    assert bad is not None and bad.kind == NON_ZENO_NEGATIVE
    lid, nu = bad.start
    play = replay(g, Configuration(lid, nu), bad.witness)
    assert play.last.location == lid and play.last.valuation == nu
    assert play.last.cost < 0


def test_validation_ignores_listing_order():
    for seed in range(10):
        g, _ = random_game(seed)
        doc = game_to_dict(g)
        rng = random.Random(seed)
        rng.shuffle(doc["locations"])
        rng.shuffle(doc["transitions"])
        h = parse_game(json.dumps(doc))
        assert validate_game(h) == validate_game(g)


def test_guard_shift_and_intersect():
    g = Guard(F(0), True, F(1), True)
    s = g.shifted(F(1, 8))
    assert (s.lo, s.lo_strict, s.hi, s.hi_strict) == (F(-1, 8), True, F(7, 8), True)
    assert g.contains(F(1, 2)) and not g.contains(0) and not g.contains(1)
    assert Guard.point(1).is_point


def test_owner_and_stage_tags():
    g = cost_functions()
    assert g.stage is Stage.DWELL
    assert g.loc("A").owner is Owner.P2


def test_nonnegative_prices_never_trip_the_cost_validator():
    rng = random.Random(0)
    cfg = FixtureConfig(price_lo=0)
    for _ in range(300):
        g = parse_game(json.dumps(random_doc(rng, cfg)))
        assert not any(d.kind in (NON_ZENO_NEGATIVE, RESET_FREE_NEGATIVE) for d in validate_game(g))
