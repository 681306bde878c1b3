"""Memoryless interval strategies: representation, extraction and auditing."""

from __future__ import annotations

import json
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Game, Owner, Stage
from .pwa import PwaFunction, fmt, is_inf

ZERO = Fraction(0)


@dataclass(frozen=True)
class Immediate:
    edge: str

    def delay(self, x: Fraction) -> Fraction:
        return ZERO


@dataclass(frozen=True)
class DelayUntil:
    v: Fraction
    edge: str

    def delay(self, x: Fraction) -> Fraction:
        return self.v - x


@dataclass(frozen=True)
class DelayFor:
    d: Fraction
    edge: str

    def delay(self, x: Fraction) -> Fraction:
        return self.d


Move = Immediate | DelayUntil | DelayFor


def with_edge(m: Move, edge: str) -> Move:
    if isinstance(m, Immediate):
        return Immediate(edge)
    if isinstance(m, DelayUntil):
        return DelayUntil(m.v, edge)
    return DelayFor(m.d, edge)


def move_to_json(m: Move) -> dict:
    if isinstance(m, Immediate):
        return {"kind": "immediate", "edge": m.edge}
    if isinstance(m, DelayUntil):
        return {"kind": "delay_until", "v": fmt(m.v), "edge": m.edge}
    return {"kind": "delay_for", "d": fmt(m.d), "edge": m.edge}


def move_from_json(d: Mapping) -> Move:
    kind = d["kind"]
    if kind == "immediate":
        return Immediate(d["edge"])
    if kind == "delay_until":
        return DelayUntil(Fraction(d["v"]), d["edge"])
    if kind == "delay_for":
        return DelayFor(Fraction(d["d"]), d["edge"])
    raise ValueError(f"unknown move kind {kind!r}")


@dataclass(frozen=True)
class Row:
    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool
    move: Move

    def contains(self, x: Fraction) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    def sample(self) -> list[Fraction]:
        pts = []
        if self.lo_closed:
            pts.append(self.lo)
        if self.hi > self.lo:
            pts.append((self.lo + self.hi) / 2)
        if self.hi_closed and self.hi != self.lo:
            pts.append(self.hi)
        return pts


def merge_rows(rows: Iterable[Row]) -> tuple[Row, ...]:
    """Merge touching rows that prescribe the same move."""
    out: list[Row] = []
    for r in rows:
        if out:
            p = out[-1]
            touching = p.hi == r.lo and (p.hi_closed != r.lo_closed)
            if touching and p.move == r.move:
                out[-1] = Row(p.lo, r.hi, p.lo_closed, r.hi_closed, p.move)
                continue
        out.append(r)
    return tuple(out)


@dataclass
class Strategy:
    """Per-location interval tables; ``controller`` holds the player-1 rows."""

    controller: dict[str, tuple[Row, ...]] = field(default_factory=dict)
    adversary: dict[str, tuple[Row, ...]] = field(default_factory=dict)

    def row_at(self, location: str, x: Fraction) -> Row | None:
        for table in (self.controller, self.adversary):
            for r in table.get(location, ()):
                if r.contains(x):
                    return r
        return None

    def decide(self, location: str, valuation: Fraction) -> tuple[Fraction, str] | None:
        r = self.row_at(location, valuation)
        if r is None:
            return None
        return r.move.delay(valuation), r.move.edge

    def intervals_per_unit(self) -> int:
        """Largest number of rows meeting any unit interval [k, k+1)."""
        best = 0
        for rows in self.controller.values():
            if not rows:
                continue
            top = int(max(r.hi for r in rows)) + 1
            for k in range(top + 1):
                n = sum(1 for r in rows if r.lo < k + 1 and (r.hi > k or (r.hi == k and r.hi_closed)))
                best = max(best, n)
        return best

    def to_json(self) -> list[dict]:
        out = []
        for owner, table in (("P1", self.controller), ("P2", self.adversary)):
            for loc in sorted(table):
                for r in table[loc]:
                    out.append(
                        {
                            "location": loc,
                            "owner": owner,
                            "interval": {
                                "lo": fmt(r.lo),
                                "lo_closed": r.lo_closed,
                                "hi": fmt(r.hi),
                                "hi_closed": r.hi_closed,
                            },
                            "move": move_to_json(r.move),
                        }
                    )
        return out

    @classmethod
    def from_json(cls, rows: Sequence[Mapping]) -> Strategy:
        tables: dict[str, dict[str, list[Row]]] = {"P1": {}, "P2": {}}
        for d in rows:
            iv = d["interval"]
            row = Row(
                Fraction(iv["lo"]),
                Fraction(iv["hi"]),
                iv.get("lo_closed", True),
                iv["hi_closed"],
                move_from_json(d["move"]),
            )
            tables[d.get("owner", "P1")].setdefault(d["location"], []).append(row)
        return cls(
            {k: tuple(v) for k, v in tables["P1"].items()},
            {k: tuple(v) for k, v in tables["P2"].items()},
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def extract(sr) -> Strategy:
    """Split a solve result's rows into controller and adversary tables."""
    g = sr.game
    ctrl, adv = {}, {}
    for lid, rows in sr.rows.items():
        loc = g.loc(lid)
        if loc.is_target or not rows:
            continue
        (ctrl if loc.owner is Owner.P1 else adv)[lid] = tuple(rows)
    return Strategy(ctrl, adv)


# ---------------------------------------------------------------------------
# audit


@dataclass
class Violation:
    kind: str
    location: str
    detail: str


@dataclass
class AuditReport:
    violations: list[Violation]
    n_intervals: int
    checked: int
    worst_gap: Fraction | float | None
    caveat: str = (
        "player 2 is restricted to grid delays and perturbations; worst cases "
        "between grid points are not explored"
    )

    @property
    def ok(self) -> bool:
        return not self.violations


def structural_violations(g: Game, sigma: Strategy) -> list[Violation]:
    """Rows must be disjoint, ordered, and every move legal from the whole interval."""
    out = []
    for lid, rows in sigma.controller.items():
        for a, b in zip(rows, rows[1:]):
            if a.hi > b.lo or (a.hi == b.lo and a.hi_closed and b.lo_closed):
                out.append(Violation("overlap", lid, f"rows {a} and {b} overlap"))
        for r in rows:
            e = g.edges.get(r.move.edge)
            if e is None or e.src != lid:
                out.append(Violation("edge", lid, f"{r.move.edge} does not leave {lid}"))
                continue
            for x in r.sample():
                t = r.move.delay(x)
                bad = None
                if t < 0:
                    bad = f"negative delay at {fmt(x)}"
                elif g.stage is Stage.RPTG and g.loc(lid).owner is Owner.P1 and t < g.delta:
                    bad = f"delay {fmt(t)} below delta at {fmt(x)}"
                elif not e.guard.contains(x + t):
                    bad = f"guard {e.guard} fails at {fmt(x + t)} from {fmt(x)}"
                elif not g.loc(lid).dwell.allows(t):
                    bad = f"dwell violated at {fmt(x)}"
                if bad:
                    out.append(Violation("guard", lid, bad))
                    break
    return out


def audit(
    sigma: Strategy,
    g: Game,
    optcost: Mapping[str, PwaFunction],
    epsilon: Fraction,
    samples: int,
    tolerance: Fraction = ZERO,
    grid: Sequence[Fraction] = (),
    seed: int = 0,
    budget: int = 200,
) -> AuditReport:
    """Structural checks plus worst-case replay at sampled valuations.

    A sample passes when the adversary's best reply costs at most
    ``optcost + epsilon + tolerance``.
    """
    from .semantics import Configuration, evaluate_strategy

    violations = structural_violations(g, sigma)
    rng = random.Random(seed)
    checked = 0
    worst = None
    for lid in sorted(sigma.controller):
        f = optcost.get(lid)
        if f is None:
            continue
        pts = sorted({x for x in grid if f.lo <= x <= f.hi})
        pick = rng.sample(pts, min(samples, len(pts))) if pts else []
        for x in sorted(pick):
            target = f(x)
            if is_inf(target):
                continue
            ev = evaluate_strategy(g, sigma, Configuration(lid, x), budget, grid)
            checked += 1
            gap = ev.cost - target
            if worst is None or gap > worst:
                worst = gap
            if not ev.complete:
                violations.append(Violation("budget", lid, f"search incomplete from {fmt(x)}"))
            if gap > epsilon + tolerance:
                violations.append(
                    Violation(
                        "optimality",
                        lid,
                        f"from {fmt(x)}: realized {fmt(ev.cost)} vs optcost {fmt(target)}",
                    )
                )
    return AuditReport(violations, sigma.intervals_per_unit(), checked, worst)
