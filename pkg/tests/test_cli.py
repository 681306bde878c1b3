import json
from fractions import Fraction as F

import pytest

from rptg.cli import RunConfig, main
from rptg.fixtures import negative_cycle
from rptg.model import parse_game, rational, serialize_game
from rptg.pwa import PwaFunction
from rptg.semantics import Configuration, replay
from rptg.strategy import Strategy


@pytest.fixture
def cf(tmp_path):
    path = tmp_path / "cf.json"
    assert main(["fixtures", "--name", "cost_functions", "-o", str(path)]) == 0
    return path


def test_solve_reports_values_and_strategy(cf, capsys):
    assert main(["solve", "-i", str(cf)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert PwaFunction.from_json(doc["optcost"]["B"])(0) == F(1, 2)
    sigma = Strategy.from_json(doc["strategy"])
    assert sigma.decide("B", F(0)) == (F(1, 2), "b_goal")


def test_stats_go_to_stderr(cf, capsys):
    assert main(["solve", "-i", str(cf), "--stats"]) == 0
    err = json.loads(capsys.readouterr().err)
    assert "intervals_per_unit" in err


def test_csv_writes_one_file_per_location(cf, tmp_path):
    out = tmp_path / "values"
    assert main(["solve", "-i", str(cf), "--emit", "csv", "-o", str(out)]) == 0
    files = sorted(p.name for p in tmp_path.glob("values.*.csv"))
    assert files == [f"values.{lid}.csv" for lid in ("A", "B", "T", "TA")]
    lines = (tmp_path / "values.B.csv").read_text().splitlines()
    assert lines[0] == "x,y" and lines[1] == "0,1/2"


def test_svg_plot(cf, capsys):
    assert main(["plot", "-i", str(cf)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("<svg") and "polyline" in out


def test_negative_cycle_exits_two_with_replayable_witness(tmp_path, capsys):
    path = tmp_path / "neg.json"
    path.write_bytes(serialize_game(negative_cycle()))
    assert main(["solve", "-i", str(path)]) == 2
    w = json.loads(capsys.readouterr().out)["rejected"]
    start = Configuration(w["start"]["location"], rational(w["start"]["valuation"]))
    moves = [[rational(t), e, rational(gm)] for t, e, gm in w["moves"]]
    play = replay(negative_cycle(), start, moves)
    assert play.last.location == start.location and play.last.valuation == start.valuation
    assert play.last.cost < 0
    assert main(["validate", "-i", str(path)]) == 2


def test_errors_exit_one(tmp_path, capsys):
    assert main(["solve", "-i", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"stage": "RPTG"}')
    assert main(["solve", "-i", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        RunConfig("solve", epsilon=F(0))
    with pytest.raises(ValueError):
        RunConfig("solve", delta=F(3, 2))


def test_fixtures_are_deterministic(capsys):
    assert main(["fixtures", "--seed", "5"]) == 0
    first = capsys.readouterr()
    assert main(["fixtures", "--seed", "5"]) == 0
    second = capsys.readouterr()
    assert first.out == second.out
    assert first.err.startswith("accepted 1 of ")
    parse_game(first.out)


def test_transform_writes_sidecar(cf, tmp_path):
    out = tmp_path / "rf.json"
    assert main(["transform", "-i", str(cf), "-o", str(out)]) == 0
    assert parse_game(out.read_text()).stage.value == "ResetFreeFRPTG"
    rows = json.loads((tmp_path / "rf.json.map.json").read_text())
    assert rows and {"stage", "source", "target"} <= set(rows[0])


def test_simulate_prints_cost_ledger(cf, tmp_path, capsys):
    play = tmp_path / "play.json"
    play.write_text(json.dumps({"start": {"location": "B", "valuation": "0"}, "moves": [["1/2", "b_goal"]]}))
    assert main(["simulate", "-i", str(cf), "--play", str(play)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "step,delay,edge,gamma,location,valuation,cost"
    assert lines[-1] == "total,,,,,,1/2"


def test_oracle_csv(cf, capsys):
    assert main(["oracle", "-i", str(cf), "--grid-k", "8"]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.splitlines()[1:]]
    b0 = next(r for r in rows if r[0] == "B" and r[1] == "0")
    assert abs(float(b0[2]) - 0.5) <= 0.5
