"""Randomized algebra laws for piecewise-affine functions (10 000 cases in total)."""

from fractions import Fraction as F

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from strategies import (
    continuous_fns,
    jumpy_fns,
    limit_above,
    limit_below,
    sample_points,
)

from rptg.pwa import (
    INF,
    NEG_INF,
    PwaFunction,
    exterior,
    interior,
    selective_replace,
    shift_by_delay,
    translate,
)

CASES = 2500
PROFILE = settings(max_examples=CASES, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _probe(fs):
    pts = set()
    for f in fs:
        pts.update(sample_points(f))
    return sorted(pts)


@PROFILE
@given(jumpy_fns(), jumpy_fns(), st.sampled_from(["min", "max"]))
def test_pointwise_extremum(f, g, mode):
    out = interior([f, g]) if mode == "min" else exterior([f, g])
    pick = min if mode == "min" else max
    for x in _probe([f, g, out]):
        assert out(x) == pick(f(x), g(x))
    for x in out.xs[1:-1]:
        assert limit_below(out, x) == pick(limit_below(f, x), limit_below(g, x))
        assert limit_above(out, x) == pick(limit_above(f, x), limit_above(g, x))


@PROFILE
@given(jumpy_fns(allow_inf=False), st.lists(st.integers(1, 15), max_size=4))
def test_canonical_form_is_unique(f, extra):
    """Inserting redundant breakpoints never changes the stored representation."""
    xs = sorted(set(f.xs) | {F(k, 8) for k in extra if f.lo < F(k, 8) < f.hi})
    at = [f(x) for x in xs]
    pieces = [(limit_above(f, a), limit_below(f, b)) for a, b in zip(xs, xs[1:])]
    g = PwaFunction(xs, at, pieces)
    assert g == f
    assert g.xs == f.xs and g.at == f.at and g.pieces == f.pieces
    assert hash(g) == hash(f)


@PROFILE
@given(continuous_fns(), continuous_fns(), st.integers(-3, 3))
def test_continuity_is_preserved(f, g, price):
    assert interior([f, g]).is_continuous()
    assert exterior([f, g]).is_continuous()
    assert selective_replace(f, price).is_continuous()


@PROFILE
@given(jumpy_fns(), st.integers(-16, 16), st.integers(0, 8), st.integers(-3, 3))
def test_shift_identities(f, k, d, price):
    a = F(k, 8)
    moved = translate(f, a)
    assert translate(moved, -a) == f
    for x in sample_points(f):
        assert moved(x - a) == f(x)
    delay = F(d, 8)
    if delay <= f.hi - f.lo:
        s = shift_by_delay(f, delay, price)
        for x in sample_points(s):
            v = f(x + delay)
            assert s(x) == (v if v in (INF, NEG_INF) else v + price * delay)
