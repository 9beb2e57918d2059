"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Reference values come from independent oracles (brute-force enumeration,
direct stabbing tests, sampled orders); nothing is compared against
constants except the lower-bound slope threshold and the runtime budgets.
"""

import math
import time

import numpy as np

from conftest import make_scene, record
from stabbing.cli import run
from stabbing.engine import extremal_lines_through_line
from stabbing.extremal import match_sets
from stabbing.geometry import (
    batch_transversals,
    clip_interval,
    separating_plane_bodies,
    transversals_to_four_lines,
    GeometryError,
    PluckerLine,
)
from stabbing.linespace import (
    ParallelSlice,
    edge_frame,
    gamma_profile,
    legal_domain,
    sigma_eval_many,
)
from stabbing.oracle import brute_force_extremal_lines, grid_axes, grid_region_check, transversal_grid
from stabbing.permutations import (
    enumerate_permutations,
    label_conflicts,
    permutation_of,
    sample_transversals,
)
from stabbing.regions import pairwise_region, region_disjoint_case, region_through_line
from stabbing.scenes import gen_lower_bound_scene, gen_random_scene, save_scene
from stabbing.sphere import (
    OnBoundary,
    ParallelDirection,
    atomic_intervals,
    build_arrangement,
    classify_partition,
    hemisphere_order,
    scene_separators,
)
from stabbing.unbounded import region_unbounded_case

EPS = 1e-9
BAND = 1e3 * EPS  # boundary band, in the units of the quantity being compared

MIXED_FLAGS = [
    {"pivot_disjoint": False},
    {"pivot_disjoint": True},
    {"unbounded_parallel": True},
    {"scattered": True},
]


def _mixed_scene(seed: int):
    k = 2 + seed % 4
    flags = MIXED_FLAGS[(seed // 4) % len(MIXED_FLAGS)]
    return gen_random_scene(k, min(12, 60 // k), seed=seed, flags=flags)


# 1 -------------------------------------------------------------------------------------


def test_oracle_equivalence():
    bad, slow, worst = [], [], 0.0
    for seed in range(50):
        scene = _mixed_scene(seed)
        assert scene.n <= 60
        t0 = time.perf_counter()
        orc = brute_force_extremal_lines(scene)
        for mode in ("structured", "randomized_dc"):
            eng = extremal_lines_through_line(scene, mode, seed=seed)
            if match_sets(eng, orc) != ([], []):
                bad.append((seed, mode))
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        if dt >= 60:
            slow.append(seed)
    ok = not bad and not slow
    record(1, ok, f"50 scenes, mismatches={bad}, over 60 s={slow}, slowest={worst:.1f} s")
    assert ok


# 2 -------------------------------------------------------------------------------------


def test_four_lines_solver():
    rng = np.random.default_rng(2024)
    N = 100_000
    P = rng.normal(size=(N, 4, 3)) * 5
    D = rng.normal(size=(N, 4, 3))
    D /= np.linalg.norm(D, axis=2, keepdims=True)
    M = np.cross(P, D)
    t0 = time.perf_counter()
    d, m, valid = batch_transversals(D, M)
    dt = time.perf_counter() - t0
    # side operator of each solution against each input line (all unit directions)
    side = np.einsum("nsi,nli->nsl", d, M) + np.einsum("nsi,nli->nsl", m, D)
    scale = np.maximum(1.0, np.linalg.norm(P, axis=2).max(axis=1))
    res = np.abs(side).max(axis=2) / scale[:, None]
    count = valid.sum(axis=1)
    worst = float(res[valid].max()) if valid.any() else 0.0
    # the scalar solver, with its degeneracy checks, agrees on solution counts
    agree = all(
        len(transversals_to_four_lines(*[PluckerLine(D[i, j], M[i, j]) for j in range(4)])) == count[i]
        for i in range(500)
    )
    ok = int(count.max()) <= 2 and worst <= 1e-9 and dt < 10 and agree
    record(2, ok, f"1e5 quadruples, max solutions={count.max()}, max scaled residual={worst:.2e}, {dt:.2f} s")
    assert ok


# 3 -------------------------------------------------------------------------------------


def _order_status(L, P, q, label):
    iv = clip_interval(L, P, 0.0)
    if iv is None:
        return False, math.inf
    tq = float((q - L.point()) @ L.unit_direction())
    if label == "on":
        return iv[0] <= tq <= iv[1], min(abs(tq - iv[0]), abs(tq - iv[1]))
    if label == "after":
        return iv[0] > tq, abs(iv[0] - tq)
    return iv[1] < tq, abs(iv[1] - tq)


def _iff_violations(scene, samples: int, seed: int):
    rng = np.random.default_rng(seed)
    seps = scene_separators(scene)
    A = build_arrangement(seps.planes)
    ai = atomic_intervals(scene)
    p0, u = scene.pivot.point(), scene.pivot.unit_direction()
    edges = [(k, e.index) for k, P in enumerate(scene.polyhedra) for e in P.edges]
    frames, profiles = {}, {}
    checked = violations = hits = 0
    while checked < samples:
        k0, e0 = edges[int(rng.integers(len(edges)))]
        if (k0, e0) not in frames:
            try:
                frames[(k0, e0)] = edge_frame(scene.polyhedra[k0], e0, scene.pivot, k0)
            except GeometryError:
                frames[(k0, e0)] = None
        fr = frames[(k0, e0)]
        if fr is None:
            continue
        theta = float(rng.uniform(0, fr.theta0))
        try:
            lo, hi = legal_domain(fr, theta)
            q = fr.to_world(fr.q(theta))
        except ParallelSlice:
            continue
        phi = float(rng.uniform(lo, hi))
        if min(phi - lo, hi - phi) <= BAND:
            continue
        L = fr.line(theta, phi)
        t = float((q - p0) @ u)
        if np.any(np.abs(ai.breaks - t) <= BAND * scene.scale):
            continue
        try:
            cell = A.locate(L.unit_direction())
        except OnBoundary:
            continue
        on, after, before = classify_partition(A, cell, ai, ai.locate(t), seps)
        for k, P in enumerate(scene.polyhedra):
            if k == k0:
                continue
            label = "on" if k in on else ("after" if k in after else "before")
            key = (k0, e0, k, label)
            if key not in profiles:
                profiles[key] = gamma_profile(P, fr, label, k)
            g = profiles[key]
            if g.piece_at(theta) is None:
                continue
            glo, ghi = g.evaluate(theta)
            if min(abs(phi - glo), abs(phi - ghi)) <= BAND:
                continue
            status, margin = _order_status(L, P, q, label)
            if margin <= BAND * scene.scale:
                continue
            inside = glo <= phi <= ghi
            checked += 1
            hits += inside
            violations += status != inside
    return checked, violations, hits


def test_gamma_iff_property():
    results = []
    for seed, flags in [(0, {"pivot_disjoint": False}), (1, {"pivot_disjoint": True}), (2, {"pivot_disjoint": False}),
                        (3, {"scattered": True})]:
        scene = gen_random_scene(3, 8, seed=seed, flags=flags)
        results.append(_iff_violations(scene, 10_000, seed))
    ok = all(v == 0 for _, v, _ in results)
    record(3, ok, f"4 scenes x 1e4 (e0, cell, theta, phi) samples, violations={[v for _, v, _ in results]}, "
                  f"inside gamma={[h for _, _, h in results]}")
    assert ok


# 4 -------------------------------------------------------------------------------------


def test_region_membership_grid():
    unexplained, total_in = [], 0
    for seed in range(20):
        scene = gen_random_scene(2 + seed % 3, 10, seed=seed, flags={"pivot_disjoint": bool(seed % 2)})
        reg = region_through_line(scene)
        rep = grid_region_check(scene, 50, reg)
        total_in += rep.count
        unexplained.append(len(rep.unexplained))
    ok = sum(unexplained) == 0 and total_in > 0
    record(4, ok, f"20 scenes on a 50^3 grid, {total_in} transversal grid points, outside-band disagreements={sum(unexplained)}")
    assert ok


# 5 -------------------------------------------------------------------------------------


def test_lower_bound_reproduction():
    scene = gen_lower_bound_scene(3, 12)
    eng = extremal_lines_through_line(scene)
    orc = brute_force_extremal_lines(scene)
    exact = len(eng) == len(orc) and match_sets(eng, orc) == ([], [])
    xs, ys = [], []
    for pairs in (2, 3, 4):
        for drum in (8, 12, 16):
            xs.append(pairs * drum)
            ys.append(len(extremal_lines_through_line(gen_lower_bound_scene(pairs, drum))))
    slope, _ = np.polyfit(xs, ys, 1)
    ok = exact and slope > 0.5
    record(5, ok, f"(3, 12): engine {len(eng)} vs oracle {len(orc)}; counts {ys}; slope {slope:.2f} per pairs*drum")
    assert ok


# 6 -------------------------------------------------------------------------------------


def test_permutation_labels():
    conflicts, over, seen = 0, [], []
    for seed in range(20):
        m = 2 + seed % 4  # bodies besides the pivot: k - 1
        scene = gen_random_scene(m, 8, seed=seed, flags={"scattered": True})
        samples = sample_transversals(scene, 10_000, seed=seed)
        c, _, _ = label_conflicts(scene, samples)
        conflicts += len(c)
        perms = {permutation_of(L, scene, check_disjoint=False).undirected() for _, L in samples}
        perms |= enumerate_permutations(scene)
        bound = 2 * m * (math.comb(m, 2) + 1)
        seen.append(f"{len(perms)}/{bound}")
        if len(perms) > bound:
            over.append((seed, len(perms), bound))
    ok = conflicts == 0 and not over
    record(6, ok, f"20 scenes x 1e4 transversals, label conflicts={conflicts}, permutation counts over bound={over}, "
                  f"counts/bounds {seen}")
    assert ok


# 7 -------------------------------------------------------------------------------------


def test_hemisphere_ordering():
    violations = checked = 0
    for seed in range(10):
        scene = gen_random_scene(2, 8, seed=seed, flags={"pivot_disjoint": bool(seed % 2)})
        P, Q = scene.polyhedra
        h = separating_plane_bodies(P, Q)
        for _, L in sample_transversals(scene, 1000, seed=seed):
            ip, iq = clip_interval(L, P, 0.0), clip_interval(L, Q, 0.0)
            if ip is None or iq is None:
                continue
            try:
                want = hemisphere_order(h, L.unit_direction())
            except ParallelDirection:
                continue
            checked += 1
            violations += want != ("P_first" if ip[1] < iq[0] else "Q_first")
    ok = violations == 0 and checked >= 9000
    record(7, ok, f"{checked} transversals of 10 disjoint pairs, violations={violations}")
    assert ok


# 8 -------------------------------------------------------------------------------------


def _max_sigma(polys, pivot, theta, phis):
    vals = np.array([sigma_eval_many(P, theta, phis, pivot)[0] for P in polys])
    out = np.full(vals.shape[1], np.nan)
    ok = ~np.all(np.isnan(vals), axis=0)
    out[ok] = np.nanmax(vals[:, ok], axis=0)
    return out


def test_unbounded_case():
    unexplained = env_bad = inside = 0
    for seed in range(10):
        scene = gen_random_scene(2 + seed % 3, 8, seed=seed, flags={"unbounded_parallel": True})
        reg = region_unbounded_case(scene)
        ext = make_scene([P.extended(reg.envelope.sweep_length) for P in scene.polyhedra], pivot=scene.pivot)
        thetas, phis, _ = grid_axes(scene, 100)
        _, _, zs = grid_axes(scene, 20)
        truth = transversal_grid(ext, thetas, phis, zs)
        flags, margins = reg.membership_grid(thetas, phis, zs)
        inside += int(truth.sum())
        unexplained += int(np.count_nonzero((flags != truth) & (np.abs(margins) > BAND * scene.scale)))
        for theta in thetas:
            want = _max_sigma(scene.polyhedra, scene.pivot, float(theta), phis)
            got, _ = reg.envelope.values(float(theta), phis)
            fin = np.isfinite(want)
            if not np.array_equal(fin, np.isfinite(got)) or not np.allclose(got[fin], want[fin], rtol=0, atol=1e-9):
                env_bad += 1
    ok = unexplained == 0 and env_bad == 0 and inside > 0
    record(8, ok, f"10 prism scenes on 100x100x20, {inside} inside, outside-band disagreements={unexplained}, "
                  f"envelope mismatched slices={env_bad}")
    assert ok


# 9 -------------------------------------------------------------------------------------


def test_disjoint_case():
    bad, sizes = [], []
    for seed in range(10):
        scene = gen_random_scene(2 + seed % 4, 8, seed=seed, flags={"pivot_disjoint": True})
        assert scene.flags["pivot_disjoint"]
        a = region_disjoint_case(scene).vertices
        b = extremal_lines_through_line(scene, "structured")
        sizes.append(len(b))
        if match_sets(a, b) != ([], []):
            bad.append(seed)
    ok = not bad
    record(9, ok, f"10 pivot-disjoint scenes, vertex counts {sizes}, mismatches={bad}")
    assert ok


# 10 ------------------------------------------------------------------------------------


def test_pairwise_linearity():
    sizes = (16, 32, 64, 128)
    seeds = range(3)
    counts = {}
    for n in sizes:
        vs = []
        for seed in seeds:
            scene = gen_random_scene(2, n // 2, seed=seed, flags={"pivot_disjoint": False})
            assert scene.n == n
            vs.append(len(pairwise_region(*scene.polyhedra, scene.pivot, keep_patches=False).vertices))
        counts[n] = float(np.mean(vs))
    C = counts[16] / 16
    ok = C > 0 and all(counts[n] <= 1.5 * C * n for n in sizes)
    record(10, ok, f"mean vertex counts {counts}, C={C:.2f}, ratios {[round(counts[n] / (C * n), 2) for n in sizes]}")
    assert ok


# 11 ------------------------------------------------------------------------------------


def test_runtime(tmp_path, capsys):
    big = gen_random_scene(5, 20, seed=11, flags={"pivot_disjoint": False})
    glob = gen_random_scene(3, 12, seed=11)
    assert big.n == 100 and glob.n == 36
    f1, f2 = tmp_path / "big.json", tmp_path / "glob.json"
    save_scene(big, f1)
    save_scene(glob, f2)
    t0 = time.perf_counter()
    s1 = run(["through-line", str(f1), "--out", str(tmp_path / "t.json")])
    t1 = time.perf_counter() - t0
    t0 = time.perf_counter()
    s2 = run(["global", str(f2), "--out", str(tmp_path / "g.json")])
    t2 = time.perf_counter() - t0
    capsys.readouterr()
    ok = s1 == 0 and s2 == 0 and t1 < 10 and t2 < 120
    record(11, ok, f"through-line k=5 n=100 {t1:.1f} s (< 10), global k=3 n=36 {t2:.1f} s (< 120)")
    assert ok
