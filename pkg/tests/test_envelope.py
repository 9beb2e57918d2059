import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabbing.envelope import (
    CrossingBoundViolated,
    DegenerateOverlap,
    MonotoneArc,
    constant_arc,
    full_strip,
    intersect_regions,
    intersection_points,
    lower_envelope,
    sandwich,
    upper_envelope,
)


def parabola(label, a, b, c, lo=-3.0, hi=3.0):
    return MonotoneArc(label, lo, hi, lambda x, a=a, b=b, c=c: a * x * x + b * x + c)


def lens():
    return sandwich([parabola("lo", 1, 0, 0)], [parabola("up", -1, 0, 2)])


def test_single_arc_envelope():
    a = parabola("a", 1, 0, 0)
    env = upper_envelope([a])
    assert len(env.pieces) == 1 and env.pieces[0][2] is a
    assert not env.breakpoints()


def test_two_arcs_one_crossing():
    a = MonotoneArc("a", 0, 2, lambda x: x, s=1)
    b = constant_arc("b", 1.0, 0, 2)
    env = upper_envelope([a, b])
    bps = env.breakpoints()
    assert len(bps) == 1
    assert bps[0][0] == pytest.approx(1.0)
    assert lower_envelope([a, b]).breakpoints()[0][0] == pytest.approx(1.0)


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=7))
@settings(max_examples=40, deadline=None)
def test_envelope_matches_grid_argmax(coefs):
    arcs = [parabola(i, a, b, c) for i, (a, b, c) in enumerate(coefs)]
    try:
        env = upper_envelope(arcs)
    except DegenerateOverlap:
        return
    xs = np.linspace(-3, 3, 601)
    want = np.max([a(xs) for a in arcs], axis=0)
    assert np.allclose(env.value(xs), want, atol=1e-9)


def test_sandwich_non_interacting_is_full_strip():
    r = sandwich([parabola("lo", 0.1, 0, -5)], [parabola("up", -0.1, 0, 5)])
    assert r.components() == 1
    assert not any(v.kind == "cross" for v in r.vertices)
    assert r.slabs[0].lo == -3.0 and r.slabs[-1].hi == 3.0


def test_sandwich_lens_two_vertices():
    r = lens()
    vs = r.vertices
    assert len(vs) == 2
    assert sorted(v.x for v in vs) == pytest.approx([-1.0, 1.0])
    assert all(v.kind == "cross" for v in vs)
    assert all(v.value == pytest.approx(1.0) for v in vs)


@given(st.integers(0, 2**16))
@settings(max_examples=15, deadline=None)
def test_sandwich_grid_membership(seed):
    rng = np.random.default_rng(seed)
    lows = [parabola(("l", i), *rng.uniform(-1, 1, 3)) for i in range(3)]
    ups = [parabola(("u", i), *(rng.uniform(-1, 1, 3) + [0, 0, 1.5])) for i in range(3)]
    try:
        r = sandwich(lows, ups)
    except DegenerateOverlap:
        return
    xs = np.linspace(-2.99, 2.99, 200)
    ys = np.linspace(-6, 6, 200)
    lo = np.max([a(xs) for a in lows], axis=0)
    hi = np.min([a(xs) for a in ups], axis=0)
    for x, l, h in zip(xs, lo, hi):
        for y in ys[::5]:
            if min(abs(y - l), abs(y - h)) < 1e-7:
                continue
            assert r.contains(x, y) == (l <= y <= h)


def test_intersect_identity_and_empty():
    a = lens()
    strip = full_strip(constant_arc("L", -100.0, -3, 3), constant_arc("U", 100.0, -3, 3))
    both = intersect_regions(strip, a)
    assert [round(v.x, 9) for v in both.vertices] == [round(v.x, 9) for v in a.vertices]
    far = sandwich([parabola("lo2", 1, 0, 10)], [parabola("up2", -1, 0, 12)])
    assert intersect_regions(a, far).empty


def test_intersect_grid_conjunction():
    a = lens()
    b = sandwich([constant_arc("b0", 0.5, -3, 3)], [MonotoneArc("b1", -3, 3, lambda x: 1.5 + 0.3 * x, s=1)])
    c = intersect_regions(a, b)
    for x in np.linspace(-2.9, 2.9, 59):
        for y in np.linspace(-1, 3, 41):
            if c.contains(x, y) != (a.contains(x, y) and b.contains(x, y)):
                # only on a boundary within numerical tolerance
                assert c.contains(x, y, 1e-9) or not (a.contains(x, y, -1e-9) and b.contains(x, y, -1e-9))


def test_intersection_points_cases():
    a = parabola("a", 1, 0, 0)
    with pytest.raises(DegenerateOverlap) as ei:
        intersection_points(a, parabola("b", 1, 0, 0))
    assert ei.value.code == "degenerate-overlap"
    assert intersection_points(a, parabola("c", 1, 0, -1)) == []
    pts = intersection_points(a, parabola("d", -1, 0, 2))
    assert pts == pytest.approx([-1.0, 1.0])


def test_crossing_bound():
    a = MonotoneArc("sin", 0, 10, np.sin, s=2)
    b = constant_arc("zero", 0.1, 0, 10)
    with pytest.raises(CrossingBoundViolated):
        intersection_points(a, b)
