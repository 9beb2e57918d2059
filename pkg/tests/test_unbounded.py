import math

import numpy as np
import pytest

from conftest import cube, make_scene, z_axis
from stabbing.geometry import NotDisjoint, Polyhedron
from stabbing.linespace import sigma_eval_many
from stabbing.oracle import grid_region_check
from stabbing.scenes import gen_random_scene
from stabbing.unbounded import MixedBoundedness, region_unbounded_case, upper_envelope_EU


def _max_sigma(scene, theta, phis):
    vals = [sigma_eval_many(P, theta, phis, scene.pivot)[0] for P in scene.polyhedra]
    vals = np.array(vals)
    out = np.full(vals.shape[1], np.nan)
    ok = ~np.all(np.isnan(vals), axis=0)
    out[ok] = np.nanmax(vals[:, ok], axis=0)
    return out


def test_single_body_envelope_is_its_sigma():
    scene = gen_random_scene(1, 8, seed=3)
    env = upper_envelope_EU(scene)
    P = scene.polyhedra[0]
    for theta in np.linspace(0.1, 6.2, 17):
        phis = np.linspace(0.1, math.pi - 0.1, 23)
        lo, _ = sigma_eval_many(P, float(theta), phis, scene.pivot)
        val, own = env.values(float(theta), phis)
        ok = np.isfinite(lo)
        assert np.allclose(val[ok], lo[ok])
        assert np.all(own[ok] == 0)


def test_overshadowing_slice_crosses_twice():
    P = Polyhedron.box((1, -0.5, 0), (5, 0.5, 1))
    Q = Polyhedron.box((2, -0.3, -0.5), (3, 0.3, -0.3))
    scene = make_scene([P, Q])
    from stabbing.unbounded import EnvelopeSlice

    sl = EnvelopeSlice.build(scene, 0.0)
    assert sl.overshadows(1, 0)
    assert len(sl.crossings[(0, 1)]) == 2
    assert sl.crossings[(0, 1)] == pytest.approx([-0.5, 0.25])
    u = np.linspace(-3, 3, 6000)
    d = sl.sigma(0, u) - sl.sigma(1, u)
    assert np.count_nonzero(np.sign(d[1:]) != np.sign(d[:-1])) == 2


@pytest.mark.parametrize("seed", [0, 1])
def test_envelope_pointwise_max(seed):
    scene = gen_random_scene(3, 8, seed=seed, flags={"pivot_disjoint": True})
    env = upper_envelope_EU(scene)
    phis = np.linspace(0.02, math.pi - 0.02, 100)
    for theta in np.linspace(0.0, 2 * math.pi, 100, endpoint=False):
        want = _max_sigma(scene, float(theta), phis)
        got, _ = env.values(float(theta), phis)
        ok = np.isfinite(want)
        assert np.allclose(got[ok], want[ok], atol=1e-9)


def test_one_prism_region_above_sigma():
    scene = gen_random_scene(1, 8, seed=2, flags={"unbounded_parallel": True})
    reg = region_unbounded_case(scene)
    P = scene.polyhedra[0]
    for theta in np.linspace(0.05, 6.2, 11):
        phis = np.linspace(0.1, math.pi - 0.1, 13)
        lo, _ = sigma_eval_many(P, float(theta), phis, scene.pivot)
        blo, bhi = reg.bounds(float(theta), phis)
        assert np.allclose(blo, lo, equal_nan=True)
        assert np.all(np.isinf(bhi))


def test_two_prisms_grid_agreement():
    scene = gen_random_scene(2, 8, seed=4, flags={"unbounded_parallel": True})
    reg = region_unbounded_case(scene)
    ext = make_scene([P.extended(reg.envelope.sweep_length) for P in scene.polyhedra], pivot=scene.pivot)
    # z over the original bodies only: far above them the extension's cap matters
    from stabbing.oracle import grid_axes

    _, _, zs = grid_axes(scene, 24)
    rep = grid_region_check(ext, 24, reg, band=1e-6, z_range=(zs[0], zs[-1]))
    assert rep.count > 0
    assert rep.unexplained == []


def test_mixed_boundedness():
    scene = gen_random_scene(2, 8, seed=4, flags={"unbounded_parallel": True})
    mixed = make_scene([scene.polyhedra[0], cube((50, 50, 50), (51, 51, 51))], pivot=scene.pivot)
    with pytest.raises(MixedBoundedness) as ei:
        region_unbounded_case(mixed)
    assert ei.value.code == "mixed-boundedness"


def test_reversed_unbounded_direction_reverses_pivot():
    scene = gen_random_scene(2, 8, seed=4, flags={"unbounded_parallel": True})
    rev = scene.with_pivot(scene.pivot.reversed())
    reg = region_unbounded_case(rev)
    assert "pivot-reversed" in reg.diagnostics
    assert len(reg.vertices) == len(region_unbounded_case(scene).vertices)


def test_envelope_needs_disjoint_bodies():
    with pytest.raises(NotDisjoint):
        upper_envelope_EU(make_scene([cube(), cube((0, 0, 0), (2, 2, 2))]))
