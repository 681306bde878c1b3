"""Command-line entry point: validate, transform, solve, simulate, oracle, plot, fixtures."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .fixtures import WORKED, FixtureConfig, random_game
from .model import (
    ModelError,
    Stage,
    parse_game,
    rational,
    serialize_game,
    validate_game,
)
from .pipeline import RejectedGame, solve_game, transform_chain
from .pwa import PwaFunction, fmt, is_inf
from .semantics import Configuration, oracle_optcost, replay
from .transform import state_table

log = logging.getLogger("rptg")

OK, ERROR, REJECTED = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Path | None = None
    output: Path | None = None
    delta: Fraction | None = None
    epsilon: Fraction = Fraction(1, 10)
    grid_k: int = 64
    seed: int = 0
    emit: str = "json"
    stats: bool = False
    play: Path | None = None
    stage: str = Stage.RESET_FREE.value
    locations: int = 5
    price_lo: int = -3
    price_hi: int = 3
    guard_max: int = 2
    name: str | None = None

    def __post_init__(self):
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError("--delta must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("--epsilon must be positive")
        if self.grid_k < 2:
            raise ValueError("--grid-k must be at least 2")


# ---------------------------------------------------------------------------
# io helpers


def _load(cfg: RunConfig):
    if cfg.input is None:
        text = sys.stdin.read()
    else:
        text = cfg.input.read_text()
    if cfg.delta is not None:
        doc = json.loads(text)
        doc["delta"] = fmt(cfg.delta)
        text = json.dumps(doc)
    return parse_game(text)


def _write(cfg: RunConfig, text: str, suffix: str = "") -> None:
    if cfg.output is None:
        sys.stdout.write(text)
        return
    path = cfg.output if not suffix else cfg.output.with_name(cfg.output.name + suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _witness_json(diag) -> dict:
    out = {"kind": diag.kind, "message": diag.message}
    if diag.start is not None:
        out["start"] = {"location": diag.start[0], "valuation": fmt(diag.start[1])}
        out["moves"] = [[fmt(t), e, fmt(gm)] for t, e, gm in diag.witness]
    return out


def _reject(diag) -> int:
    sys.stderr.write("rejected: " + diag.message + "\n")
    sys.stdout.write(_dump({"rejected": _witness_json(diag)}))
    return REJECTED


# ---------------------------------------------------------------------------
# svg


def svg_plot(fns: dict[str, PwaFunction], width: int = 640, height: int = 400) -> str:
    """Breakpoint polylines, one per function; infinite stretches are left out."""
    finite = [
        float(y)
        for f in fns.values()
        for y in list(f.at) + [v for p in f.pieces for v in p]
        if not is_inf(y)
    ]
    xs = [float(x) for f in fns.values() for x in (f.lo, f.hi)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pad = 40

    def px(x, y):
        return (
            f"{pad + (float(x) - x0) / (x1 - x0) * (width - 2 * pad):.2f},"
            f"{height - pad - (float(y) - y0) / (y1 - y0) * (height - 2 * pad):.2f}"
        )

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="11">{x0:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" font-size="11">{x1:g}</text>',
        f'<text x="2" y="{height - pad}" font-size="11">{y0:g}</text>',
        f'<text x="2" y="{pad}" font-size="11">{y1:g}</text>',
    ]
    for k, (name, f) in enumerate(sorted(fns.items())):
        color = palette[k % len(palette)]
        for i, (a, b) in enumerate(f.pieces):
            if is_inf(a) or is_inf(b):
                continue
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                f'points="{px(f.xs[i], a)} {px(f.xs[i + 1], b)}"/>'
            )
        for x, y in zip(f.xs, f.at):
            if not is_inf(y):
                cx, cy = px(x, y).split(",")
                out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
        out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * k}" font-size="11" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg: RunConfig) -> int:
    g = _load(cfg)
    diags = validate_game(g)
    _write(cfg, _dump({"diagnostics": [_witness_json(d) for d in diags]}))
    bad = next((d for d in diags if d.rejects), None)
    if bad is not None:
        sys.stderr.write("rejected: " + bad.message + "\n")
        return REJECTED
    return OK


def cmd_transform(cfg: RunConfig) -> int:
    g = _load(cfg)
    stages, maps = transform_chain(g)
    want = Stage(cfg.stage)
    if want not in stages:
        raise ValueError(f"cannot reach stage {want.value} from {g.stage.value}")
    _write(cfg, serialize_game(stages[want]).decode() + "\n")
    order = list(Stage)
    rows = [
        {"stage": m.target.stage.value, "source": src, "target": dst}
        for m in maps
        if order.index(m.target.stage) <= order.index(want)
        for src, dst in state_table(m)
    ]
    if cfg.output is not None:
        _write(cfg, _dump(rows), ".map.json")
    return OK


def _solve(cfg: RunConfig):
    g = _load(cfg)
    try:
        return g, solve_game(g, cfg.epsilon)
    except RejectedGame as exc:
        return g, exc.diagnostic


def cmd_solve(cfg: RunConfig) -> int:
    g, sol = _solve(cfg)
    if not hasattr(sol, "optcost"):
        return _reject(sol)
    if cfg.stats:
        sys.stderr.write(_dump(_stats(sol)))
    if cfg.emit == "svg":
        _write(cfg, svg_plot({k: v for k, v in sol.optcost.items() if not g.loc(k).is_target}))
    elif cfg.emit == "csv":
        for lid in sorted(sol.optcost):
            text = sol.optcost[lid].to_csv()
            if cfg.output is None:
                sys.stdout.write(f"# {lid}\n{text}")
            else:
                _write(cfg, text, f".{lid}.csv")
    else:
        doc = {
            "optcost": {k: v.to_json() for k, v in sorted(sol.optcost.items())},
            "strategy": sol.strategy.to_json(),
        }
        if cfg.stats:
            doc["stats"] = _stats(sol)
        _write(cfg, _dump(doc))
    return OK


def _stats(sol) -> dict:
    s = dict(sol.result.stats)
    s["intervals_per_unit"] = sol.strategy.intervals_per_unit()
    s["stage_locations"] = {k.value: len(v.locations) for k, v in sol.stages.items()}
    return s


def cmd_plot(cfg: RunConfig) -> int:
    return cmd_solve(RunConfig(**{**cfg.__dict__, "emit": "svg"}))


def cmd_simulate(cfg: RunConfig) -> int:
    g = _load(cfg)
    if cfg.play is None:
        raise ValueError("simulate needs --play FILE")
    doc = json.loads(cfg.play.read_text())
    start = Configuration(doc["start"]["location"], rational(doc["start"]["valuation"]))
    moves = [[rational(m[0]), m[1]] + ([rational(m[2])] if len(m) > 2 and m[2] is not None else []) for m in doc["moves"]]
    play = replay(g, start, moves)
    lines = ["step,delay,edge,gamma,location,valuation,cost"]
    lines.append(f"0,,,,{start.location},{fmt(start.valuation)},{fmt(start.cost)}")
    for i, st in enumerate(play.steps, 1):
        a = st.after
        lines.append(f"{i},{fmt(st.delay)},{st.edge},{fmt(st.gamma)},{a.location},{fmt(a.valuation)},{fmt(a.cost)}")
    lines.append(f"total,,,,,,{fmt(play.cost(g))}")
    _write(cfg, "\n".join(lines) + "\n")
    return OK


def cmd_oracle(cfg: RunConfig) -> int:
    g = _load(cfg)
    vals = oracle_optcost(g, cfg.grid_k)
    lines = ["location,x,value"]
    for lid in sorted(vals):
        for i, v in enumerate(vals[lid]):
            lines.append(f"{lid},{fmt(Fraction(i, cfg.grid_k))},{v:.12g}")
    _write(cfg, "\n".join(lines) + "\n")
    return OK


def cmd_fixtures(cfg: RunConfig) -> int:
    if cfg.name is not None:
        _write(cfg, serialize_game(WORKED[cfg.name]()).decode() + "\n")
        return OK
    fc = FixtureConfig(
        locations=cfg.locations, price_lo=cfg.price_lo, price_hi=cfg.price_hi, guard_max=cfg.guard_max
    )
    g, tries = random_game(cfg.seed, fc)
    sys.stderr.write(f"accepted 1 of {tries + 1} drafts\n")
    _write(cfg, serialize_game(g).decode() + "\n")
    return OK


COMMANDS = {
    "validate": cmd_validate,
    "transform": cmd_transform,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
    "plot": cmd_plot,
    "fixtures": cmd_fixtures,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", type=Path, help="game JSON (stdin when absent)")
    common.add_argument("--output", "-o", type=Path, help="output path (stdout when absent)")
    common.add_argument("--delta", type=Fraction, help="override the game's perturbation bound")
    common.add_argument("--epsilon", type=Fraction, default=Fraction(1, 10))
    common.add_argument("--grid-k", type=int, default=64, help="oracle grid resolution")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--emit", choices=["json", "csv", "svg"], default="json")
    common.add_argument("--stats", action="store_true", help="report solver counters")
    parser = argparse.ArgumentParser(prog="rptg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "simulate":
            p.add_argument("--play", type=Path, help="JSON {start: {location, valuation}, moves: [[t, edge, gamma?]]}")
        if name == "transform":
            p.add_argument("--stage", choices=[s.value for s in Stage if s is not Stage.RPTG], default=Stage.RESET_FREE.value)
        if name == "fixtures":
            p.add_argument("--locations", type=int, default=5)
            p.add_argument("--price-lo", type=int, default=-3)
            p.add_argument("--price-hi", type=int, default=3)
            p.add_argument("--guard-max", type=int, default=2)
            p.add_argument("--name", choices=sorted(WORKED), help="emit a worked example instead")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("RPTG_LOG", "WARNING").upper(), format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
        return COMMANDS[cfg.command](cfg)
    except (ModelError, ValueError, RuntimeError, OSError, KeyError) as exc:
        log.debug("failure", exc_info=True)
        sys.stderr.write(f"error: {exc}\n")
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
