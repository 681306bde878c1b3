"""Game model for every stage of the solving pipeline, with JSON I/O and validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Any

import jsonschema

from .pwa import NEG_INF, PwaFunction, extend_constant, fmt

ZERO = Fraction(0)


class ModelError(ValueError):
    pass


class ParseError(ModelError):
    pass


class Owner(str, Enum):
    P1 = "P1"
    P2 = "P2"


class ResetKind(str, Enum):
    NONE = "none"
    FULL = "full"
    FRACTIONAL = "fractional"


class Stage(str, Enum):
    RPTG = "RPTG"
    DWELL = "DwellPTG"
    FRPTG = "FRPTG"
    RESET_FREE = "ResetFreeFRPTG"


def rational(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise ModelError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ModelError(f"not a rational: {value!r}")


@dataclass(frozen=True)
class Guard:
    lo: Fraction
    lo_strict: bool
    hi: Fraction
    hi_strict: bool

    def __post_init__(self):
        if self.lo > self.hi:
            raise ModelError(f"guard lower bound {self.lo} above upper bound {self.hi}")
        if self.lo == self.hi and (self.lo_strict or self.hi_strict):
            raise ModelError("a point guard must have closed bounds")

    @classmethod
    def closed(cls, lo: Any, hi: Any) -> Guard:
        return cls(rational(lo), False, rational(hi), False)

    @classmethod
    def point(cls, c: Any) -> Guard:
        return cls.closed(c, c)

    @classmethod
    def open(cls, lo: Any, hi: Any) -> Guard:
        return cls(rational(lo), True, rational(hi), True)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: Fraction) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and self.lo_strict:
            return False
        if x == self.hi and self.hi_strict:
            return False
        return True

    def intersect(self, lo: Fraction, lo_strict: bool, hi: Fraction, hi_strict: bool) -> Guard | None:
        """Intersection with another interval, ``None`` when empty."""
        if lo > self.lo or (lo == self.lo and lo_strict):
            nlo, nls = lo, lo_strict
        else:
            nlo, nls = self.lo, self.lo_strict
        if hi < self.hi or (hi == self.hi and hi_strict):
            nhi, nhs = hi, hi_strict
        else:
            nhi, nhs = self.hi, self.hi_strict
        if nlo > nhi or (nlo == nhi and (nls or nhs)):
            return None
        return Guard(nlo, nls, nhi, nhs)

    def shifted(self, d: Fraction) -> Guard:
        """The guard on ``x + d``: every bound moves by ``-d``."""
        return Guard(self.lo - d, self.lo_strict, self.hi - d, self.hi_strict)

    def __str__(self) -> str:
        if self.is_point:
            return f"x={fmt(self.lo)}"
        left = "<" if self.lo_strict else "<="
        right = "<" if self.hi_strict else "<="
        return f"{fmt(self.lo)}{left}x{right}{fmt(self.hi)}"


@dataclass(frozen=True)
class DwellTime:
    min: Fraction = ZERO
    max: Fraction | None = None

    def __post_init__(self):
        if self.min < 0 or (self.max is not None and self.max < self.min):
            raise ModelError("dwell bounds must satisfy 0 <= min <= max")

    @property
    def urgent(self) -> bool:
        return self.max == 0

    @property
    def unbounded(self) -> bool:
        return self.max is None

    def allows(self, t: Fraction) -> bool:
        return t >= self.min and (self.max is None or t <= self.max)


UNBOUNDED = DwellTime()
URGENT = DwellTime(ZERO, ZERO)


@dataclass(frozen=True)
class Location:
    id: str
    owner: Owner
    price: int
    dwell: DwellTime = UNBOUNDED
    is_target: bool = False
    goal_fn: PwaFunction | None = None
    component: int | None = None
    base: str | None = None

    def __post_init__(self):
        if self.is_target and self.goal_fn is None:
            raise ModelError(f"target {self.id} needs a goal function")


@dataclass(frozen=True)
class Transition:
    id: str
    src: str
    guard: Guard
    reset: ResetKind
    dst: str
    base: str | None = None
    # lets time pass into the next integer copy of the same location
    continues: bool = False


@dataclass(frozen=True)
class Game:
    stage: Stage
    delta: Fraction
    clock_bound: int
    locations: tuple[Location, ...]
    transitions: tuple[Transition, ...]
    initial: tuple[str, ...] = ()

    def __post_init__(self):
        ids = [loc.id for loc in self.locations]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate location id")
        eids = [e.id for e in self.transitions]
        if len(set(eids)) != len(eids):
            raise ModelError("duplicate transition id")
        known = set(ids)
        for e in self.transitions:
            if e.src not in known or e.dst not in known:
                raise ModelError(f"transition {e.id} references an unknown location")
        for i in self.initial:
            if i not in known:
                raise ModelError(f"unknown initial location {i}")
        if not 0 < self.delta < 1:
            raise ModelError("delta must lie in (0, 1)")
        if self.clock_bound < 1:
            raise ModelError("clock bound must be at least 1")

    @cached_property
    def by_id(self) -> dict[str, Location]:
        return {loc.id: loc for loc in self.locations}

    @cached_property
    def edges(self) -> dict[str, Transition]:
        return {e.id: e for e in self.transitions}

    @cached_property
    def out_edges(self) -> dict[str, tuple[Transition, ...]]:
        out: dict[str, list[Transition]] = {loc.id: [] for loc in self.locations}
        for e in self.transitions:
            out[e.src].append(e)
        return {k: tuple(v) for k, v in out.items()}

    def loc(self, lid: str) -> Location:
        try:
            return self.by_id[lid]
        except KeyError:
            raise ModelError(f"unknown location {lid}") from None

    @property
    def clock_max(self) -> Fraction:
        """Largest clock value any play can reach at this stage."""
        if self.stage in (Stage.FRPTG, Stage.RESET_FREE):
            return 1 + 2 * self.delta
        return self.clock_bound + 2 * self.delta

    def with_stage(self, stage: Stage) -> Game:
        return replace(self, stage=stage)


# ---------------------------------------------------------------------------
# JSON

_RAT = {"oneOf": [{"type": "integer"}, {"type": "string"}]}
_SCHEMA = {
    "type": "object",
    "required": ["delta", "clock_bound", "locations", "transitions"],
    "properties": {
        "stage": {"enum": [s.value for s in Stage]},
        "delta": _RAT,
        "clock_bound": {"type": "integer", "minimum": 1},
        "initial": {"type": "array", "items": {"type": "string"}},
        "locations": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": {"type": "string"},
                    "owner": {"enum": ["P1", "P2"]},
                    "price": {"type": "integer"},
                    "dwell": {
                        "oneOf": [
                            {"type": "null"},
                            {"const": "urgent"},
                            {
                                "type": "object",
                                "required": ["min", "max"],
                                "properties": {"min": _RAT, "max": _RAT},
                            },
                        ]
                    },
                    "target": {"type": "boolean"},
                    "goal_fn": {"type": "array", "items": {"type": "array"}},
                    "component": {"type": ["integer", "null"]},
                    "base": {"type": ["string", "null"]},
                },
            },
        },
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["src", "dst", "guard"],
                "properties": {
                    "id": {"type": "string"},
                    "src": {"type": "string"},
                    "dst": {"type": "string"},
                    "reset": {"enum": [r.value for r in ResetKind]},
                    "guard": {
                        "type": "object",
                        "required": ["lo", "hi"],
                        "properties": {
                            "lo": _RAT,
                            "hi": _RAT,
                            "lo_strict": {"type": "boolean"},
                            "hi_strict": {"type": "boolean"},
                        },
                    },
                    "base": {"type": ["string", "null"]},
                    "continues": {"type": "boolean"},
                },
            },
        },
    },
}


def _path(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def parse_game(text: bytes | str) -> Game:
    """Parse a game file; guards are clipped to the clock range of the declared stage."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    errors = sorted(jsonschema.Draft7Validator(_SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ParseError(f"{_path(errors[0])}: {errors[0].message}")
    try:
        return _build(doc)
    except (ModelError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from None


def _num(doc: dict, key: str, where: str) -> Fraction:
    try:
        return rational(doc[key])
    except (ValueError, ZeroDivisionError, ModelError):
        raise ParseError(f"{where}/{key}: not a rational: {doc[key]!r}") from None


def _bound(doc: dict, key: str, where: str, default_inf: Fraction) -> Fraction:
    v = doc[key]
    if v in ("inf", "+inf"):
        return default_inf
    if v == "-inf":
        return ZERO
    return _num(doc, key, where)


def _clock_top(stage: Stage, delta: Fraction, bound: int) -> Fraction:
    """Largest guard constant a stage can use: M for an RPTG, else the stage's clock range."""
    if stage is Stage.RPTG:
        return Fraction(bound)
    if stage is Stage.DWELL:
        return bound + 2 * delta
    return 1 + 2 * delta


def _build(doc: dict) -> Game:
    stage = Stage(doc.get("stage", Stage.RPTG.value))
    delta = _num(doc, "delta", "")
    bound = int(doc["clock_bound"])
    goal_hi = bound + 2
    locations = []
    for i, ld in enumerate(doc["locations"]):
        where = f"/locations/{i}"
        dwell_doc = ld.get("dwell")
        if dwell_doc is None:
            dwell = UNBOUNDED
        elif dwell_doc == "urgent":
            dwell = URGENT
        else:
            hi = dwell_doc["max"]
            dwell = DwellTime(
                _num(dwell_doc, "min", where + "/dwell"),
                None if hi in ("inf", "+inf") else _num(dwell_doc, "max", where + "/dwell"),
            )
        target = bool(ld.get("target", False))
        goal = None
        if "goal_fn" in ld:
            try:
                goal = PwaFunction.from_json(ld["goal_fn"])
            except (ValueError, ZeroDivisionError) as exc:
                raise ParseError(f"{where}/goal_fn: {exc}") from None
            if goal.lo != 0:
                raise ParseError(f"{where}/goal_fn: must start at x=0")
            if NEG_INF in goal.at or any(NEG_INF in p for p in goal.pieces):
                raise ParseError(f"{where}/goal_fn: -inf goal values are not supported")
            goal = extend_constant(goal, 0, max(goal_hi, goal.hi))
        if target and goal is None:
            raise ParseError(f"{where}: target without goal_fn")
        locations.append(
            Location(
                id=ld["id"],
                owner=Owner(ld.get("owner", "P1")),
                price=int(ld.get("price", 0)),
                dwell=dwell,
                is_target=target,
                goal_fn=goal,
                component=ld.get("component"),
                base=ld.get("base"),
            )
        )
    top = _clock_top(stage, delta, bound)
    transitions = []
    for i, td in enumerate(doc["transitions"]):
        where = f"/transitions/{i}/guard"
        gd = td["guard"]
        lo = _bound(gd, "lo", where, top)
        hi = _bound(gd, "hi", where, top)
        lo_strict = bool(gd.get("lo_strict", False))
        hi_strict = bool(gd.get("hi_strict", False))
        if stage is Stage.RPTG and (lo.denominator != 1 or hi.denominator != 1):
            raise ParseError(f"{where}: guard endpoints of an RPTG must be integers")
        if lo > hi or (lo == hi and (lo_strict or hi_strict)):
            raise ParseError(f"{where}: empty guard")
        guard = Guard(lo, lo_strict, hi, hi_strict).intersect(ZERO, False, top, False)
        if guard is None:
            raise ParseError(f"{where}: guard lies outside [0, {fmt(top)}]")
        transitions.append(
            Transition(
                id=td.get("id", f"e{i}"),
                src=td["src"],
                guard=guard,
                reset=ResetKind(td.get("reset", "none")),
                dst=td["dst"],
                base=td.get("base"),
                continues=bool(td.get("continues", False)),
            )
        )
    if stage in (Stage.RPTG, Stage.DWELL):
        for e in transitions:
            if e.reset is ResetKind.FRACTIONAL:
                raise ParseError(f"transition {e.id}: fractional resets need an FRPTG stage")
    return Game(
        stage=stage,
        delta=delta,
        clock_bound=bound,
        locations=tuple(locations),
        transitions=tuple(transitions),
        initial=tuple(doc.get("initial", ())),
    )


def game_to_dict(g: Game) -> dict:
    locs = []
    for loc in g.locations:
        if loc.dwell == UNBOUNDED:
            dwell: Any = None
        elif loc.dwell == URGENT:
            dwell = "urgent"
        else:
            dwell = {"min": fmt(loc.dwell.min), "max": "inf" if loc.dwell.max is None else fmt(loc.dwell.max)}
        d: dict[str, Any] = {"id": loc.id, "owner": loc.owner.value, "price": loc.price, "dwell": dwell}
        if loc.is_target:
            d["target"] = True
        if loc.goal_fn is not None:
            d["goal_fn"] = loc.goal_fn.to_json()
        if loc.component is not None:
            d["component"] = loc.component
        if loc.base is not None:
            d["base"] = loc.base
        locs.append(d)
    edges = []
    for e in g.transitions:
        d = {
            "id": e.id,
            "src": e.src,
            "guard": {
                "lo": fmt(e.guard.lo),
                "lo_strict": e.guard.lo_strict,
                "hi": fmt(e.guard.hi),
                "hi_strict": e.guard.hi_strict,
            },
            "reset": e.reset.value,
            "dst": e.dst,
        }
        if e.base is not None:
            d["base"] = e.base
        if e.continues:
            d["continues"] = True
        edges.append(d)
    return {
        "stage": g.stage.value,
        "delta": fmt(g.delta),
        "clock_bound": g.clock_bound,
        "locations": locs,
        "transitions": edges,
        "initial": list(g.initial),
    }


def serialize_game(g: Game) -> bytes:
    return (json.dumps(game_to_dict(g), indent=1) + "\n").encode()


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str
    start: tuple[str, Fraction] | None = None
    witness: tuple[tuple[Fraction, str, Fraction], ...] = ()

    @property
    def rejects(self) -> bool:
        return self.kind == NON_ZENO_NEGATIVE


UNBOUNDED_CLOCK = "unbounded-clock"
RESET_FREE_NEGATIVE = "reset-free-negative-cycle"
NON_ZENO_NEGATIVE = "non-zeno-negative-cycle"
BLOCKING = "blocking-cycle"


def validate_game(g: Game) -> list[Diagnostic]:
    """Report class violations; see :mod:`rptg.cycles` for the cycle checks."""
    from .cycles import cycle_diagnostics

    diags = []
    for e in sorted(g.transitions, key=lambda e: e.id):
        if e.guard.hi > g.clock_max or e.guard.lo < 0:
            diags.append(Diagnostic(UNBOUNDED_CLOCK, f"guard of {e.id} leaves [0, {fmt(g.clock_max)}]"))
    for loc in sorted(g.locations, key=lambda l: l.id):
        if loc.is_target and loc.goal_fn is not None and loc.goal_fn.hi < g.clock_max:
            diags.append(Diagnostic(UNBOUNDED_CLOCK, f"goal of {loc.id} stops before {fmt(g.clock_max)}"))
    return diags + cycle_diagnostics(g)


def rejected(diags: list[Diagnostic]) -> Diagnostic | None:
    return next((d for d in diags if d.rejects), None)
