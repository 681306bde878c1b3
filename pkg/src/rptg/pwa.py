"""Exact piecewise-affine functions of a single clock value.

A function is stored as its breakpoints ``xs``, the value ``at`` each
breakpoint, and for each open piece between two breakpoints the pair of
one-sided limits at its ends.  Values are ``Fraction`` or ``math.inf`` /
``-math.inf``.  Keeping point values separate from piece limits lets the
algebra represent the jumps that cost functions acquire at strict guard
bounds and at deadlocks exactly.

Every point and piece can carry a provenance tag.  Tags never influence
equality; they only record which source produced the value, which is what
strategy extraction reads back.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Union

INF = math.inf
NEG_INF = -math.inf

Ext = Union[Fraction, float]


class PwaError(ValueError):
    pass


class DomainError(PwaError):
    pass


class ContinuityError(PwaError):
    pass


@dataclass(frozen=True)
class Offset:
    """Value obtained by leaving at ``x + d`` (``d == 0`` means right away)."""

    d: Fraction
    tag: Any = None


@dataclass(frozen=True)
class Anchor:
    """Value obtained by leaving at the fixed clock value ``v``.

    ``side`` is ``"at"`` when the value is attained at ``v`` and ``"below"`` /
    ``"above"`` when it is only the limit approached from that side.
    """

    v: Fraction
    side: str
    tag: Any = None


@dataclass(frozen=True)
class Segment:
    u: Fraction
    v: Fraction
    slope: Fraction
    value_at_v: Fraction
    tag: Any = None


def ext(value: Any) -> Ext:
    """Parse an extended rational from an int, Fraction, float infinity or string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise PwaError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if math.isinf(value):
            return value
        raise PwaError(f"floating point value {value!r} is not exact")
    if isinstance(value, str):
        s = value.strip()
        if s in ("inf", "+inf"):
            return INF
        if s == "-inf":
            return NEG_INF
        return Fraction(s)
    raise PwaError(f"not a number: {value!r}")


def is_inf(v: Ext) -> bool:
    return isinstance(v, float)


def fmt(v: Ext) -> str:
    if is_inf(v):
        return "inf" if v > 0 else "-inf"
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _line(x0: Fraction, y0: Ext, x1: Fraction, y1: Ext) -> tuple[Ext, Fraction]:
    """Return (intercept, slope) of the piece through its two end limits."""
    if is_inf(y0):
        return y0, Fraction(0)
    slope = (y1 - y0) / (x1 - x0)
    return y0 - slope * x0, slope


def _at(line: tuple[Ext, Fraction], x: Fraction) -> Ext:
    a, b = line
    if is_inf(a):
        return a
    return a + b * x


class PwaFunction:
    """Piecewise-affine map from ``[xs[0], xs[-1]]`` to extended rationals."""

    __slots__ = ("_plain", "at", "piece_tags", "pieces", "point_tags", "xs")

    def __init__(
        self,
        xs: Sequence[Fraction],
        at: Sequence[Ext],
        pieces: Sequence[tuple[Ext, Ext]],
        point_tags: Sequence[Any] | None = None,
        piece_tags: Sequence[Any] | None = None,
    ):
        xs = tuple(Fraction(x) for x in xs)
        at = tuple(at)
        pieces = tuple((p[0], p[1]) for p in pieces)
        if not xs:
            raise PwaError("a function needs at least one breakpoint")
        if len(at) != len(xs) or len(pieces) != len(xs) - 1:
            raise PwaError("breakpoint, value and piece counts disagree")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise PwaError("breakpoints must be strictly ascending")
        for s, e in pieces:
            if is_inf(s) or is_inf(e):
                if s != e:
                    raise PwaError("a finite piece cannot interpolate into an infinity")
        if point_tags is None and piece_tags is not None:
            point_tags = (None,) * len(xs)
        if piece_tags is None and point_tags is not None:
            piece_tags = (None,) * len(pieces)
        xs, at, pieces, point_tags, piece_tags = _merge(xs, at, pieces, point_tags, piece_tags)
        self.xs = xs
        self.at = at
        self.pieces = pieces
        self.point_tags = point_tags
        self.piece_tags = piece_tags
        self._plain = None

    # construction helpers -------------------------------------------------

    @classmethod
    def from_points(cls, points: Iterable[tuple[Any, Any]]) -> PwaFunction:
        """Continuous interpolation through ``(x, y)`` breakpoints."""
        pts = [(Fraction(ext(x)), ext(y)) for x, y in points]
        if not pts:
            raise PwaError("empty breakpoint list")
        xs = [p[0] for p in pts]
        at = [p[1] for p in pts]
        return cls(xs, at, [(at[i], at[i + 1]) for i in range(len(pts) - 1)])

    @classmethod
    def constant(cls, c: Any, lo: Any, hi: Any) -> PwaFunction:
        c, lo, hi = ext(c), Fraction(lo), Fraction(hi)
        if lo == hi:
            return cls([lo], [c], [])
        return cls([lo, hi], [c, c], [(c, c)])

    @classmethod
    def affine(cls, slope: Any, intercept: Any, lo: Any, hi: Any) -> PwaFunction:
        slope, intercept = Fraction(slope), Fraction(intercept)
        lo, hi = Fraction(lo), Fraction(hi)
        return cls.from_points([(lo, intercept + slope * lo), (hi, intercept + slope * hi)])

    # basic queries --------------------------------------------------------

    @property
    def lo(self) -> Fraction:
        return self.xs[0]

    @property
    def hi(self) -> Fraction:
        return self.xs[-1]

    @property
    def tagged(self) -> bool:
        return self.point_tags is not None

    def __len__(self) -> int:
        return len(self.pieces)

    def _check(self, x: Fraction) -> Fraction:
        x = Fraction(x)
        if x < self.xs[0] or x > self.xs[-1]:
            raise DomainError(f"{fmt(x)} outside [{fmt(self.xs[0])}, {fmt(self.xs[-1])}]")
        return x

    def locate(self, x: Any) -> tuple[str, int]:
        """``("point", i)`` if x is breakpoint i, else ``("piece", j)``."""
        x = self._check(x)
        i = bisect_left(self.xs, x)
        if i < len(self.xs) and self.xs[i] == x:
            return "point", i
        return "piece", i - 1

    def line(self, j: int) -> tuple[Ext, Fraction]:
        s, e = self.pieces[j]
        return _line(self.xs[j], s, self.xs[j + 1], e)

    def slope(self, j: int) -> Fraction:
        return self.line(j)[1]

    def __call__(self, x: Any) -> Ext:
        kind, i = self.locate(x)
        if kind == "point":
            return self.at[i]
        return _at(self.line(i), Fraction(x))

    def limit_below(self, x: Any) -> Ext:
        kind, i = self.locate(x)
        j = i - 1 if kind == "point" else i
        if j < 0:
            raise DomainError("no left neighbourhood at the domain start")
        return _at(self.line(j), Fraction(x))

    def limit_above(self, x: Any) -> Ext:
        kind, j = self.locate(x)
        if kind == "point" and j == len(self.pieces):
            raise DomainError("no right neighbourhood at the domain end")
        return _at(self.line(j), Fraction(x))

    def tag_at(self, x: Any) -> Any:
        if not self.tagged:
            return None
        kind, i = self.locate(x)
        return self.point_tags[i] if kind == "point" else self.piece_tags[i]

    def is_continuous(self) -> bool:
        for i, v in enumerate(self.at):
            if i > 0 and self.pieces[i - 1][1] != v:
                return False
            if i < len(self.pieces) and self.pieces[i][0] != v:
                return False
        return True

    def max_abs_slope(self) -> Fraction:
        best = Fraction(0)
        for j, (s, _) in enumerate(self.pieces):
            if not is_inf(s):
                best = max(best, abs(self.slope(j)))
        return best

    def segments(self) -> list[Segment]:
        out = []
        for j, (s, e) in enumerate(self.pieces):
            if is_inf(s):
                continue
            tag = self.piece_tags[j] if self.tagged else None
            out.append(Segment(self.xs[j], self.xs[j + 1], self.slope(j), e, tag))
        return out

    # identity -------------------------------------------------------------

    def plain(self) -> PwaFunction:
        """The canonical untagged form."""
        if self._plain is None:
            if self.tagged:
                self._plain = PwaFunction(self.xs, self.at, self.pieces)
            else:
                self._plain = self
        return self._plain

    def _key(self) -> tuple:
        p = self.plain()
        return (p.xs, p.at, p.pieces)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PwaFunction):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"PwaFunction({self.to_json()!r})"

    def with_tags(self, tag: Hashable) -> PwaFunction:
        """Same function with every point and piece tagged ``tag``."""
        return PwaFunction(
            self.xs, self.at, self.pieces, (tag,) * len(self.xs), (tag,) * len(self.pieces)
        )

    # serialization --------------------------------------------------------

    def to_json(self) -> list:
        """Breakpoint list ``[[x, y], ...]``; jumps use ``[x, y_below, y, y_above]``."""
        if self.is_continuous():
            return [[fmt(x), fmt(y)] for x, y in zip(self.xs, self.at)]
        rows = []
        for i, x in enumerate(self.xs):
            below = fmt(self.pieces[i - 1][1]) if i > 0 else None
            above = fmt(self.pieces[i][0]) if i < len(self.pieces) else None
            rows.append([fmt(x), below, fmt(self.at[i]), above])
        return rows

    @classmethod
    def from_json(cls, rows: Sequence[Sequence[Any]]) -> PwaFunction:
        if not rows:
            raise PwaError("empty breakpoint list")
        if all(len(r) == 2 for r in rows):
            return cls.from_points(rows)
        if not all(len(r) == 4 for r in rows):
            raise PwaError("rows must all be [x, y] or all be [x, y_below, y, y_above]")
        xs = [Fraction(ext(r[0])) for r in rows]
        at = [ext(r[2]) for r in rows]
        pieces = [(ext(rows[i][3]), ext(rows[i + 1][1])) for i in range(len(rows) - 1)]
        return cls(xs, at, pieces)

    def to_csv(self) -> str:
        """Same rows as :meth:`to_json`; jump columns appear only when needed."""
        rows = self.to_json()
        head = "x,y" if self.is_continuous() else "x,y_below,y,y_above"
        return "\n".join([head] + [",".join("" if v is None else v for v in r) for r in rows]) + "\n"


def _merge(xs, at, pieces, ptags, qtags):
    """Drop interior breakpoints where neither value, slope nor tag changes."""
    if len(xs) <= 2:
        return xs, at, pieces, _tup(ptags), _tup(qtags)
    nx, na, npc = [xs[0]], [at[0]], []
    npt = [ptags[0]] if ptags is not None else None
    nqt = [] if qtags is not None else None
    cur_start, cur_tag = pieces[0][0], (qtags[0] if qtags is not None else None)
    cur_x0 = xs[0]
    for i in range(1, len(xs) - 1):
        prev_end = pieces[i - 1][1]
        nxt_start, nxt_end = pieces[i]
        same_tags = qtags is None or (ptags[i] == cur_tag == qtags[i])
        collinear = False
        if same_tags and at[i] == prev_end == nxt_start:
            if is_inf(prev_end):
                collinear = True
            else:
                s_prev = (prev_end - cur_start) / (xs[i] - cur_x0)
                s_next = (nxt_end - nxt_start) / (xs[i + 1] - xs[i])
                collinear = s_prev == s_next
        if collinear:
            continue
        npc.append((cur_start, prev_end))
        if nqt is not None:
            nqt.append(cur_tag)
        nx.append(xs[i])
        na.append(at[i])
        if npt is not None:
            npt.append(ptags[i])
        cur_start, cur_x0 = nxt_start, xs[i]
        cur_tag = qtags[i] if qtags is not None else None
    npc.append((cur_start, pieces[-1][1]))
    if nqt is not None:
        nqt.append(cur_tag)
    nx.append(xs[-1])
    na.append(at[-1])
    if npt is not None:
        npt.append(ptags[-1])
    return tuple(nx), tuple(na), tuple(npc), _tup(npt), _tup(nqt)


def _tup(x):
    return tuple(x) if x is not None else None


class _Builder:
    """Accumulates points and pieces left to right."""

    def __init__(self):
        self.xs, self.at, self.pieces, self.pt, self.qt = [], [], [], [], []

    def point(self, x, v, tag=None):
        self.xs.append(x)
        self.at.append(v)
        self.pt.append(tag)

    def piece(self, s, e, tag=None):
        self.pieces.append((s, e))
        self.qt.append(tag)

    def build(self, tagged=True) -> PwaFunction:
        if tagged:
            return PwaFunction(self.xs, self.at, self.pieces, self.pt, self.qt)
        return PwaFunction(self.xs, self.at, self.pieces)


def evaluate(f: PwaFunction, x: Any) -> Ext:
    return f(x)


# ---------------------------------------------------------------------------
# envelopes of affine candidates


def _better(mode: str, a: Ext, b: Ext) -> bool:
    return a < b if mode == "min" else a > b


def _best(mode: str, values: Sequence[Ext], keys: Sequence[Any]) -> int:
    best = 0
    for i in range(1, len(values)):
        if _better(mode, values[i], values[best]) or (
            values[i] == values[best] and keys[i] < keys[best]
        ):
            best = i
    return best


def _crossings(lines, lo, hi):
    cuts = set()
    for i in range(len(lines)):
        a1, b1 = lines[i]
        if is_inf(a1):
            continue
        for j in range(i + 1, len(lines)):
            a2, b2 = lines[j]
            if is_inf(a2) or b1 == b2:
                continue
            x = (a2 - a1) / (b1 - b2)
            if lo < x < hi:
                cuts.add(x)
    return sorted(cuts)


def _emit_envelope(out: _Builder, lo, hi, lines, tags, keys, mode, close_right=False):
    """Append the envelope of ``lines`` on the open interval (lo, hi).

    Emits pieces and the interior crossing points; the caller emits the point
    at ``lo`` beforehand and at ``hi`` afterwards.
    """
    cuts = [lo] + _crossings(lines, lo, hi) + [hi]
    for k in range(len(cuts) - 1):
        a, b = cuts[k], cuts[k + 1]
        if k > 0:
            vals = [_at(ln, a) for ln in lines]
            i = _best(mode, vals, keys)
            out.point(a, vals[i], tags[i])
        mid = (a + b) / 2
        i = _best(mode, [_at(ln, mid) for ln in lines], keys)
        out.piece(_at(lines[i], a), _at(lines[i], b), tags[i])


def _pointwise(fs: Sequence[PwaFunction], mode: str) -> PwaFunction:
    if not fs:
        raise PwaError("need at least one function")
    lo, hi = fs[0].lo, fs[0].hi
    for f in fs:
        if f.lo != lo or f.hi != hi:
            raise DomainError("functions must share a domain")
    grid = sorted({x for f in fs for x in f.xs})
    keys = list(range(len(fs)))

    def src_tag(i, f, kind, j):
        if f.tagged:
            return f.point_tags[j] if kind == "point" else f.piece_tags[j]
        return i

    out = _Builder()
    idx = [0] * len(fs)
    for g, x in enumerate(grid):
        vals, tags = [], []
        for i, f in enumerate(fs):
            while f.xs[idx[i]] < x:
                idx[i] += 1
            if f.xs[idx[i]] == x:
                vals.append(f.at[idx[i]])
                tags.append(src_tag(i, f, "point", idx[i]))
            else:
                j = idx[i] - 1
                vals.append(_at(f.line(j), x))
                tags.append(src_tag(i, f, "piece", j))
        b = _best(mode, vals, keys)
        out.point(x, vals[b], tags[b])
        if g == len(grid) - 1:
            break
        nxt = grid[g + 1]
        lines, ltags = [], []
        for i, f in enumerate(fs):
            j = idx[i] if f.xs[idx[i]] == x else idx[i] - 1
            lines.append(f.line(j))
            ltags.append(src_tag(i, f, "piece", j))
        _emit_envelope(out, x, nxt, lines, ltags, keys, mode)
    return out.build(tagged=True)


def interior(fs: Sequence[PwaFunction]) -> PwaFunction:
    """Pointwise minimum; tags name the source (its own tag, else its index)."""
    return _pointwise(fs, "min")


def exterior(fs: Sequence[PwaFunction]) -> PwaFunction:
    """Pointwise maximum; dual of :func:`interior`."""
    return _pointwise(fs, "max")


# ---------------------------------------------------------------------------
# structural operations


def restrict(f: PwaFunction, lo: Any, hi: Any) -> PwaFunction:
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi or lo < f.lo or hi > f.hi:
        raise DomainError(f"[{fmt(lo)}, {fmt(hi)}] not inside the domain")
    out = _Builder()
    tag = f.tag_at
    out.point(lo, f(lo), tag(lo))
    if lo == hi:
        return out.build(f.tagged)
    inner = [i for i, x in enumerate(f.xs) if lo < x < hi]
    cuts = [lo] + [f.xs[i] for i in inner] + [hi]
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        _, j = f.locate(mid)
        ln = f.line(j)
        out.piece(_at(ln, a), _at(ln, b), f.piece_tags[j] if f.tagged else None)
        out.point(b, f(b), tag(b))
    return out.build(f.tagged)


def _join(parts: Sequence[PwaFunction], prefer_right: bool = False) -> PwaFunction:
    """Concatenate adjacent functions; at seams the left (or right) point value wins."""
    out = _Builder()
    tagged = any(p.tagged for p in parts)
    last = len(parts) - 1
    for n, p in enumerate(parts):
        if n > 0 and parts[n - 1].hi != p.lo:
            raise DomainError("functions are not adjacent")
        first = 0
        stop = len(p.xs)
        if prefer_right:
            stop = len(p.xs) - 1 if n < last and len(p.xs) > 1 else len(p.xs)
        elif n > 0:
            first = 1
        if prefer_right and n > 0 and len(parts[n - 1].xs) == 1:
            first = 1
        for i in range(first, stop):
            if i > 0:
                out.piece(*p.pieces[i - 1], p.piece_tags[i - 1] if p.tagged else None)
            out.point(p.xs[i], p.at[i], p.point_tags[i] if p.tagged else None)
        if prefer_right and stop < len(p.xs):
            out.piece(*p.pieces[-1], p.piece_tags[-1] if p.tagged else None)
    return out.build(tagged)


def concat(f: PwaFunction, g: PwaFunction) -> PwaFunction:
    if f.hi != g.lo:
        raise DomainError("functions are not adjacent")
    if f.at[-1] != g.at[0]:
        raise ContinuityError(f"value mismatch at {fmt(f.hi)}: {fmt(f.at[-1])} vs {fmt(g.at[0])}")
    return _join([f, g])


def splice(parts: Sequence[PwaFunction]) -> PwaFunction:
    """Concatenate adjacent functions allowing jumps; the right part's value wins at seams."""
    return _join(parts, prefer_right=True)


def _map(f: PwaFunction, x_map, v_map) -> PwaFunction:
    """Apply an increasing affine change of variable and a value transform."""
    xs = [x_map(x) for x in f.xs]
    at = [v_map(x, v) for x, v in zip(f.xs, f.at)]
    pieces = [
        (v_map(f.xs[j], s), v_map(f.xs[j + 1], e)) for j, (s, e) in enumerate(f.pieces)
    ]
    return PwaFunction(xs, at, pieces, f.point_tags, f.piece_tags)


def translate(f: PwaFunction, offset: Any) -> PwaFunction:
    """``x -> f(x + offset)`` on the shifted domain."""
    offset = Fraction(offset)
    return _map(f, lambda x: x - offset, lambda x, v: v)


def add_linear(f: PwaFunction, slope: Any, const: Any = 0) -> PwaFunction:
    """``x -> f(x) + slope * x + const`` (infinite values are unchanged)."""
    slope, const = Fraction(slope), Fraction(const)
    return _map(f, lambda x: x, lambda x, v: v if is_inf(v) else v + slope * x + const)


def replace_value(f: PwaFunction, old: Ext, new: Ext, tag: Any = None) -> PwaFunction:
    """Substitute one infinite value by another, retagging those regions."""
    pt = pq = None
    if f.tagged:
        pt = [tag if v == old else t for v, t in zip(f.at, f.point_tags)]
        pq = [tag if s == old else t for (s, _), t in zip(f.pieces, f.piece_tags)]
    at = [new if v == old else v for v in f.at]
    pieces = [(new, new) if s == old else (s, e) for s, e in f.pieces]
    return PwaFunction(f.xs, at, pieces, pt, pq)


def shift_by_delay(f: PwaFunction, d: Any, price: Any) -> PwaFunction:
    """``x -> f(x + d) + price * d`` on ``[a, b - d]``."""
    d = Fraction(d)
    if d < 0:
        raise PwaError("delay must be non-negative")
    if d > f.hi - f.lo:
        raise DomainError("delay longer than the domain")
    g = restrict(f, f.lo + d, f.hi)
    return add_linear(translate(g, d), 0, Fraction(price) * d)


def extend_constant(f: PwaFunction, lo: Any, hi: Any) -> PwaFunction:
    """Extend by the end values to ``[lo, hi]``; restrict if already wider."""
    lo, hi = Fraction(lo), Fraction(hi)
    parts = []
    if lo < f.lo:
        parts.append(PwaFunction.constant(f.at[0], lo, f.lo))
    parts.append(restrict(f, max(lo, f.lo), min(hi, f.hi)))
    if hi > f.hi:
        parts.append(PwaFunction.constant(f.at[-1], f.hi, hi))
    return _join(parts)


def clip(
    f: PwaFunction, lo: Any, lo_strict: bool, hi: Any, hi_strict: bool, fill: Ext
) -> PwaFunction:
    """Keep f on the interval ``lo (<|<=) x (<|<=) hi`` and set ``fill`` elsewhere."""
    lo, hi = Fraction(lo), Fraction(hi)
    a, b = f.lo, f.hi

    def inside(x):
        return (lo < x or (x == lo and not lo_strict)) and (x < hi or (x == hi and not hi_strict))

    tag = f.tag_at
    cuts = sorted({a, b} | {c for c in (lo, hi) if a < c < b})
    out = _Builder()
    for n, u in enumerate(cuts):
        if n > 0:
            v = cuts[n - 1]
            if inside((u + v) / 2):
                part = restrict(f, v, u)
                for k, piece in enumerate(part.pieces):
                    out.piece(*piece, part.piece_tags[k] if part.tagged else None)
                    if k + 1 < len(part.pieces):
                        x = part.xs[k + 1]
                        out.point(x, part.at[k + 1], part.point_tags[k + 1] if part.tagged else None)
            else:
                out.piece(fill, fill, None)
        out.point(u, f(u) if inside(u) else fill, tag(u) if inside(u) else None)
    return out.build(f.tagged)


def _fill_like(f: PwaFunction, fill: Ext, u, v) -> PwaFunction:
    c = PwaFunction.constant(fill, u, v)
    return c.with_tags(None) if f.tagged else c


# ---------------------------------------------------------------------------
# waiting envelopes


def suffix_extremum(f: PwaFunction, mode: str) -> PwaFunction:
    """``x -> ext over v in [x, b] of f(v)`` by a right-to-left sweep.

    Tags are :class:`Offset` (leave at x) where f itself is kept and
    :class:`Anchor` (leave at a fixed later point) where a value from the
    right dominates.  Ties keep f, so nothing is replaced on equality.
    """
    tag = (lambda j, kind: f.point_tags[j] if kind == "p" else f.piece_tags[j]) if f.tagged else (
        lambda j, kind: None
    )
    k = len(f.xs) - 1
    rev_points = [(f.xs[k], f.at[k], Offset(Fraction(0), tag(k, "p")))]
    rev_pieces = []
    carry_v = f.at[k]
    carry_t: Any = Anchor(f.xs[k], "at", tag(k, "p"))
    for j in range(k - 1, -1, -1):
        x0, x1 = f.xs[j], f.xs[j + 1]
        ln = f.line(j)
        end_lim = f.pieces[j][1]
        if _better(mode, end_lim, carry_v):
            m_v, m_t = end_lim, Anchor(x1, "below", tag(j, "q"))
        else:
            m_v, m_t = carry_v, carry_t
        seg = _Builder()
        # the candidate f piece is preferred on ties (key 0)
        _emit_envelope(
            seg, x0, x1, [ln, (m_v, Fraction(0))], [Offset(Fraction(0), tag(j, "q")), m_t], [0, 1], mode
        )
        chunk = list(zip(seg.pieces, seg.qt))
        pts = list(zip(seg.xs, seg.at, seg.pt))
        # pieces/points are in left-to-right order; store reversed
        for n in range(len(chunk) - 1, -1, -1):
            rev_pieces.append(chunk[n])
            if n > 0:
                rev_points.append(pts[n - 1])
        start_v = chunk[0][0][0]
        start_t = chunk[0][1]
        if isinstance(start_t, Offset):
            start_t = Anchor(x0, "above", start_t.tag)
        vals = [f.at[j], start_v]
        choice = _best(mode, vals, [0, 1])
        if choice == 0:
            pv, ptag = f.at[j], Offset(Fraction(0), tag(j, "p"))
            carry_t = Anchor(x0, "at", tag(j, "p"))
        else:
            pv, ptag = start_v, start_t
            carry_t = start_t
        carry_v = pv
        rev_points.append((x0, pv, ptag))
    rev_points.reverse()
    rev_pieces.reverse()
    return PwaFunction(
        [p[0] for p in rev_points],
        [p[1] for p in rev_points],
        [p[0] for p in rev_pieces],
        [p[2] for p in rev_points],
        [p[1] for p in rev_pieces],
    )


def selective_replace(f: PwaFunction, price: Any, window: tuple[Any, Any] | None = None) -> PwaFunction:
    """Replace parts of f inside the window by waiting lines of slope ``-price``.

    On the window ``[lo, hi]`` the result is ``min over v in [x, hi] of
    price * (v - x) + f(v)``; outside it f is returned unchanged.
    """
    price = Fraction(price)
    lo, hi = (f.lo, f.hi) if window is None else (Fraction(window[0]), Fraction(window[1]))
    if lo < f.lo or hi > f.hi or lo > hi:
        raise DomainError("window must lie inside the domain")
    inner = restrict(f, lo, hi)
    swept = add_linear(suffix_extremum(add_linear(inner, price), "min"), -price)
    parts = []
    if f.lo < lo:
        parts.append(restrict(f, f.lo, lo))
    parts.append(swept)
    if hi < f.hi:
        parts.append(restrict(f, hi, f.hi))
    # points at the window seams belong to the window
    return splice(parts) if len(parts) > 1 else swept


def window_extremum(f: PwaFunction, lo: Any, hi: Any | None, mode: str) -> PwaFunction:
    """``x -> ext over v in [x + lo, min(x + hi, b)] of f(v)`` on f's domain.

    ``hi=None`` lets the window run to the domain end.  Where the window is
    empty the result is the identity of the extremum (``+inf`` for min,
    ``-inf`` for max) with tag ``None``.
    """
    lo = Fraction(lo)
    hi = None if hi is None else Fraction(hi)
    if lo < 0 or (hi is not None and hi < lo):
        raise PwaError("bad window offsets")
    a, b = f.lo, f.hi
    empty_v = INF if mode == "min" else NEG_INF
    crit = {a, b, b - lo}
    for p in f.xs:
        crit.add(p - lo)
        if hi is not None:
            crit.add(p - hi)
    if hi is not None:
        crit.add(b - hi)
    crit = sorted(c for c in crit if a <= c <= b)

    def ptag(i):
        return f.point_tags[i] if f.tagged else None

    def qtag(j):
        return f.piece_tags[j] if f.tagged else None

    out = _Builder()
    for n, c in enumerate(crit):
        v, t = _window_point(f, c, lo, hi, mode, empty_v, ptag, qtag)
        out.point(c, v, t)
        if n == len(crit) - 1:
            break
        c1 = crit[n + 1]
        m = (c + c1) / 2
        if m + lo > b:
            out.piece(empty_v, empty_v, None)
            continue
        lines, tags, keys = [], [], []
        _, j = f.locate(m + lo)
        ln = f.line(j)
        lines.append(ln if is_inf(ln[0]) else (_at(ln, lo), ln[1]))
        tags.append(Offset(lo, qtag(j)))
        keys.append((0, -1, 0))
        end = b if hi is None else min(m + hi, b)
        fixed_end = hi is None or m + hi >= b
        i0 = bisect_right(f.xs, m + lo)
        i1 = bisect_left(f.xs, end)
        for i in range(i0, i1):
            x = f.xs[i]
            for side, val, tg in (
                ("at", f.at[i], ptag(i)),
                ("below", f.pieces[i - 1][1], qtag(i - 1)),
                ("above", f.pieces[i][0], qtag(i)),
            ):
                lines.append((val, Fraction(0)))
                tags.append(Anchor(x, side, tg))
                keys.append((0 if side == "at" else 1, 0, x))
        if fixed_end:
            lines.append((f.at[-1], Fraction(0)))
            tags.append(Anchor(b, "at", ptag(len(f.xs) - 1)))
            keys.append((0, 0, b))
            if len(f.pieces) and m + lo < b:
                lines.append((f.pieces[-1][1], Fraction(0)))
                tags.append(Anchor(b, "below", qtag(len(f.pieces) - 1)))
                keys.append((1, 0, b))
        else:
            _, jh = f.locate(m + hi)
            lh = f.line(jh)
            lines.append(lh if is_inf(lh[0]) else (_at(lh, hi), lh[1]))
            tags.append(Offset(hi, qtag(jh)))
            keys.append((0, 1, 0))
        _emit_envelope(out, c, c1, lines, tags, keys, mode)
    return out.build(tagged=True)


def _window_point(f, x, lo, hi, mode, empty_v, ptag, qtag):
    """The window extremum at a single clock value, by enumeration."""
    b = f.hi
    start = x + lo
    if start > b:
        return empty_v, None
    end = b if hi is None else min(x + hi, b)
    vals, tags, keys = [], [], []
    kind, i = f.locate(start)
    vals.append(f(start))
    tags.append(Offset(lo, ptag(i) if kind == "point" else qtag(i)))
    keys.append((0, -1, 0))
    if start < end:
        vals.append(f.limit_above(start))
        _, j = f.locate((start + min(end, _next_bp(f, start))) / 2)
        tags.append(Anchor(start, "above", qtag(j)))
        keys.append((1, 0, start))
        for i in range(bisect_right(f.xs, start), bisect_left(f.xs, end)):
            p = f.xs[i]
            for side, val, tg in (
                ("at", f.at[i], ptag(i)),
                ("below", f.pieces[i - 1][1], qtag(i - 1)),
                ("above", f.pieces[i][0], qtag(i)),
            ):
                vals.append(val)
                tags.append(Anchor(p, side, tg))
                keys.append((0 if side == "at" else 1, 0, p))
        kind_e, ie = f.locate(end)
        vals.append(f(end))
        if hi is not None and end == x + hi:
            tags.append(Offset(hi, ptag(ie) if kind_e == "point" else qtag(ie)))
            keys.append((0, 1, 0))
        else:
            tags.append(Anchor(end, "at", ptag(ie) if kind_e == "point" else qtag(ie)))
            keys.append((0, 0, end))
        vals.append(f.limit_below(end))
        _, jb = f.locate((end + max(start, _prev_bp(f, end))) / 2)
        tags.append(Anchor(end, "below", qtag(jb)))
        keys.append((1, 0, end))
    k = _best(mode, vals, keys)
    return vals[k], tags[k]


def _next_bp(f, x):
    i = bisect_right(f.xs, x)
    return f.xs[i] if i < len(f.xs) else x


def _prev_bp(f, x):
    i = bisect_left(f.xs, x) - 1
    return f.xs[i] if i >= 0 else x
