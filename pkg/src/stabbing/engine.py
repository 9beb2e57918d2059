"""Extremal stabbing lines through a pivot line.

For every edge ``e0`` of every polyhedron ``P0`` the lines through the pivot
that touch ``P0`` at ``e0`` form a two-parameter family ``(theta, phi)``
(see :class:`stabbing.linespace.EdgeFrame`).  The ``theta`` range is cut at
the angles where the combinatorics of the other polyhedra's sections
change; on each piece the ``phi`` range is split into cells by the
directions parallel to the separating planes, so that every other
polyhedron is met either after or before the pivot point throughout the
cell.  Inside a cell the stabbing lines form a sandwich region between
tangent arcs, and its vertices are the extremal stabbing lines defined by
three polyhedra.  Lines defined by one or two polyhedra are enumerated
from vertex and facet pencils.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .envelope import (
    DegenerateOverlap,
    MonotoneArc,
    CrossingBoundViolated,
    Region2D,
    intersect_regions,
    sandwich,
)
from .extremal import ExtremalStabbingLine, canonical, certify_candidates
from .geometry import (
    EPS,
    DegenerateQuadruple,
    GeometryError,
    Plane,
    PluckerLine,
    Polyhedron,
    _unit,
    line_at_infinity,
    plucker_from_points,
    transversals_to_four_lines,
)
from .linespace import (
    CoplanarEdge,
    EdgeFrame,
    ParallelSlice,
    axis_arc_fn,
    edge_arc_fn,
    edge_frame,
    parallel_arc_fn,
    point_arc_fn,
    slice_interval,
    slice_points,
)
from .sphere import AtomicIntervals, Separators, atomic_intervals, label_of_direction, scene_separators

MODES = ("structured", "randomized-dc")


class UnknownMode(GeometryError):
    code = "unknown-mode"


@dataclass
class SweepStats:
    edges: int = 0
    intervals: int = 0
    cells: int = 0
    candidates: int = 0
    boundary_events: int = 0
    skipped_edges: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "edges": self.edges,
            "intervals": self.intervals,
            "cells": self.cells,
            "candidates": self.candidates,
            "boundary_events": self.boundary_events,
            "skipped_edges": [list(x) for x in self.skipped_edges],
            "diagnostics": list(self.diagnostics),
            "seconds": self.seconds,
        }


@dataclass
class RegionPatch:
    """Sandwich region of one ``(P0, e0)`` sweep piece and one cell."""

    polyhedron: int
    edge: int
    theta_range: tuple[float, float]
    cell: int
    region: Region2D


def _theta_of_line(fr: EdgeFrame, L: PluckerLine) -> float:
    p = fr.to_local(L.point())
    d = fr.R @ L.unit_direction()
    S = max(1.0, float(np.linalg.norm(p)))
    x = max((p, p + S * d, p - S * d), key=lambda v: math.hypot(v[0], v[1]))
    return fr.theta_of_point(x)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _angular_extremes(origin, pts, b1, b2):
    """Indices of the two points seen from ``origin`` at extreme in-plane angles."""
    W = pts - origin
    ang = np.arctan2(W @ b2, W @ b1)
    c = W.mean(axis=0)
    ref = math.atan2(c @ b2, c @ b1)
    rel = _wrap(ang - ref)
    return int(np.argmin(rel)), int(np.argmax(rel))


# one edge sweep --------------------------------------------------------------------


class EdgeSweep:
    """Region of lines through the pivot touching ``P0`` at ``e0`` and stabbing the rest."""

    def __init__(self, scene, k0: int, e0: int, seps: Separators, intervals: AtomicIntervals, mode: str = "structured",
                 seed: int = 0, eps: float = EPS, pivot_segment=None, keep_regions: bool = False,
                 others=None, stats: SweepStats | None = None):
        self.scene = scene
        self.k0, self.e0 = k0, e0
        self.P0 = scene.polyhedra[k0]
        self.pivot = scene.pivot.normalized()
        self.seps, self.intervals = seps, intervals
        self.mode = mode
        self.seed = seed
        self.eps = eps
        self.segment = pivot_segment
        self.keep_regions = keep_regions
        self.others = [k for k in range(scene.k) if k != k0] if others is None else list(others)
        self.stats = stats if stats is not None else SweepStats()
        self.fr = edge_frame(self.P0, e0, self.pivot, k0, eps)
        self.L0 = self.P0.edge_lines[e0].normalized()
        self.regions: list[RegionPatch] = []
        self._solve_cache: dict = {}
        self._arc_cache: dict = {}
        self._pl = self.pivot.point()
        self._pu = self.pivot.unit_direction()

    # events ---------------------------------------------------------------

    def _pivot_point_theta(self, q_world) -> np.ndarray:
        loc = self.fr.to_local(q_world)
        return np.mod(np.arctan2(loc[..., 1], loc[..., 0]), np.pi)

    def events(self) -> np.ndarray:
        fr = self.fr
        pp, pd = fr.piv_p, fr.piv_d
        th = [0.0, fr.theta0]
        zhat = np.array([0.0, 0.0, 1.0])
        for k in self.others:
            P = self.scene.polyhedra[k]
            V = fr.to_local(P.vertices)
            th.extend(np.mod(np.arctan2(V[:, 1], V[:, 0]), np.pi))
            # pivot crossings of facet planes
            N = P.normals @ fr.R.T
            off = P.offsets - P.normals @ fr.origin
            den = N @ pd
            ok = np.abs(den) > 1e-13
            t = (off[ok] - N[ok] @ pp) / den[ok]
            Q = pp[None, :] + t[:, None] * pd[None, :]
            th.extend(np.mod(np.arctan2(Q[:, 1], Q[:, 0]), np.pi))
            # the line through q parallel to e0 meets an edge line
            E = np.array([e.vertices for e in P.edges])
            A, B = V[E[:, 0]], V[E[:, 1]]
            C = np.cross(zhat[None, :], B - A)
            den = C @ pd
            ok = np.abs(den) > 1e-13
            t = -np.einsum("ij,ij->i", pp[None, :] - A[ok], C[ok]) / den[ok]
            Q = pp[None, :] + t[:, None] * pd[None, :]
            th.extend(np.mod(np.arctan2(Q[:, 1], Q[:, 0]), np.pi))
        # cell boundaries: reaching the edge endpoints, and meeting each other
        Hn = np.array([fr.R @ h.normal for h in self.seps.planes]).reshape(-1, 3)
        for s_axis in (0.0, fr.length):
            X = np.array([0.0, 0.0, s_axis])
            den = Hn @ pd
            ok = np.abs(den) > 1e-13
            t = ((X - pp) @ Hn[ok].T) / den[ok]
            Q = pp[None, :] + t[:, None] * pd[None, :]
            th.extend(np.mod(np.arctan2(Q[:, 1], Q[:, 0]), np.pi))
        for i in range(len(Hn)):
            D = np.cross(Hn[i][None, :], Hn[i + 1:])
            good = np.linalg.norm(D, axis=1) > 1e-12
            th.extend(np.mod(np.arctan2(D[good, 1], D[good, 0]), np.pi))
        th.append(fr.theta_star)
        for iv in self.intervals.breaks:
            th.append(float(self._pivot_point_theta(self._pl + iv * self._pu)))
        if self.segment is not None:
            for t in self.segment:
                th.append(float(self._pivot_point_theta(self._pl + t * self._pu)))
        th = np.array([x for x in th if np.isfinite(x) and 0.0 <= x <= fr.theta0])
        th = np.unique(th)
        keep = np.concatenate([[True], np.diff(th) > 1e-12])
        return th[keep]

    # arcs -------------------------------------------------------------------

    def _tangent_arc(self, k: int, feat, lo: float, hi: float) -> MonotoneArc:
        P = self.scene.polyhedra[k]
        if feat[0] == "e":
            key = ("t", k, feat[1])
            fn = self._arc_cache.get(key)
            if fn is None:
                a, b = self.fr.to_local(P.edge_points[feat[1]])
                fn = self._arc_cache[key] = edge_arc_fn(self.fr, a, b)
            return MonotoneArc(key, lo, hi, fn)
        key = ("tv", k, feat[1])
        return MonotoneArc(key, lo, hi, point_arc_fn(self.fr, self.fr.to_local(P.vertices[feat[1]])))

    def _bound_arc(self, which: int, lo: float, hi: float) -> MonotoneArc:
        s_axis = 0.0 if which == 0 else self.fr.length
        return MonotoneArc(("w", which), lo, hi, axis_arc_fn(self.fr, s_axis))

    def _plane_arc(self, i: int, lo: float, hi: float) -> MonotoneArc:
        n = self.fr.R @ self.seps.planes[i].normal
        return MonotoneArc(("h", i), lo, hi, parallel_arc_fn(self.fr, n))

    def _extra_line(self, label) -> PluckerLine | None:
        if label[0] == "t":
            return self.scene.polyhedra[label[1]].edge_lines[label[2]].normalized()
        if label[0] == "h":
            return line_at_infinity(self.seps.planes[label[1]].normal)
        return None

    def _solve(self, la, lb):
        key = (la, lb) if la <= lb else (lb, la)
        if key not in self._solve_cache:
            A, B = self._extra_line(key[0]), self._extra_line(key[1])
            try:
                self._solve_cache[key] = transversals_to_four_lines(self.pivot, self.L0, A, B, self.eps)
            except DegenerateQuadruple:
                self._solve_cache[key] = None
        return self._solve_cache[key]

    def crossings(self, a: MonotoneArc, b: MonotoneArc, lo: float, hi: float):
        ka, kb = a.label[0], b.label[0]
        if ka in ("h", "w") and kb in ("h", "w"):
            return []
        if ka == "tv" or kb == "tv":
            return None
        if "w" in (ka, kb):
            w, t = (a, b) if ka == "w" else (b, a)
            if t.label[0] != "t":
                return None
            X = self._w_point(w.label[1], t.label)
            if X is None:
                return []
            ths = [self.fr.theta_of_point(self.fr.to_local(X))]
        else:
            sols = self._solve(a.label, b.label)
            if sols is None:
                return None
            ths = [_theta_of_line(self.fr, L) for L in sols]
        out = []
        for x in ths:
            if lo < x < hi:
                va, vb = a.value(x), b.value(x)
                if abs(va - vb) <= 1e-6:
                    out.append(x)
        return out

    def _w_point(self, which: int, tlabel):
        """Crossing of an edge line with the plane through an ``e0`` endpoint and the pivot."""
        A = self.fr.to_world(np.array([0.0, 0.0, 0.0 if which == 0 else self.fr.length]))
        n = np.cross(self._pu, A - self._pl)
        nn = np.linalg.norm(n)
        if nn < 1e-14:
            return None
        h = Plane(n / nn, float(n.dot(A)) / nn)
        L = self._extra_line(tlabel)
        return h.intersect_line(L)

    # exact lines -------------------------------------------------------------

    def exact_line(self, la, lb, theta: float, phi: float) -> PluckerLine:
        approx = canonical(self.fr.line(theta, phi))
        sols = self._solve(la, lb) if la[0] == "t" and lb[0] == "t" else None
        if not sols:
            return approx
        best = min(sols, key=lambda L: _line_gap(canonical(L), approx))
        if _line_gap(canonical(best), approx) > 1e-3 * max(1.0, self.scene.scale):
            return approx
        return best

    # the sweep ----------------------------------------------------------------

    def _nonempty_slices(self, theta: float) -> bool:
        n = self.fr.dir_to_world(self.fr.normal(theta))
        for k in self.others:
            P = self.scene.polyhedra[k]
            s = (P.vertices - self.fr.origin) @ n
            if s.min() > 0 or s.max() < 0:
                return False
        return True

    def run(self) -> list[PluckerLine]:
        fr = self.fr
        ev = self.events()
        cands: list[PluckerLine] = []
        st = self.stats
        st.edges += 1
        for j, (t0, t1) in enumerate(zip(ev, ev[1:])):
            if t1 - t0 < 1e-11:
                continue
            tm = 0.5 * (t0 + t1)
            if not self._nonempty_slices(tm):
                continue
            try:
                qloc = fr.q(tm)
            except ParallelSlice:
                continue
            qw = fr.to_world(qloc)
            tq = float((qw - self._pl) @ self._pu)
            if self.segment is not None and not (self.segment[0] < tq < self.segment[1]):
                continue
            st.intervals += 1
            pad = 1e-11 * max(1.0, t1 - t0)
            lo, hi = t0 + pad, t1 - pad
            cands.extend(self._interval(j, lo, hi, tm, qloc, tq))
        st.candidates += len(cands)
        return cands

    def _interval(self, j, lo, hi, tm, qloc, tq):
        fr = self.fr
        rq, zq = fr.plane_coords(tm, qloc)
        iv_index = self.intervals.locate(tq)
        mask = self.intervals.masks[iv_index]
        # cell boundaries: directions parallel to the relevant separating planes
        cuts = []
        seen = set()
        for k in self.others:
            if mask[k]:
                continue
            pi = self.seps.plane_for(k, tq)
            if pi is None or pi in seen:
                continue
            seen.add(pi)
            n = fr.R @ self.seps.planes[pi].normal
            if abs(n[2]) < 1e-12:
                continue
            s_h = float(qloc @ n) / n[2]
            if 0.0 < s_h < fr.length:
                cuts.append((math.atan2(abs(rq), s_h - zq), ("h", pi)))
        cuts.sort()
        bounds = [(None, ("w", 1))] + cuts + [(None, ("w", 0))]
        phi_lo = math.atan2(abs(rq), fr.length - zq)
        phi_hi = math.atan2(abs(rq), -zq)
        vals = [phi_lo] + [c[0] for c in cuts] + [phi_hi]
        out = []
        for c in range(len(bounds) - 1):
            if vals[c + 1] - vals[c] <= 0:
                continue
            out.extend(self._cell(j, c, lo, hi, tm, tq, bounds[c][1], bounds[c + 1][1], 0.5 * (vals[c] + vals[c + 1])))
        return out

    def _make_bound(self, label, lo, hi):
        if label[0] == "w":
            return self._bound_arc(label[1], lo, hi)
        return self._plane_arc(label[1], lo, hi)

    def _cell(self, j, c, lo, hi, tm, tq, low_label, up_label, phi_m):
        fr = self.fr
        st = self.stats
        st.cells += 1
        d = fr.line(tm, phi_m).unit_direction()
        labels = label_of_direction(self.seps, self.intervals, tq, d)
        low_b = self._make_bound(low_label, lo, hi)
        up_b = self._make_bound(up_label, lo, hi)
        per_body = []
        for k in self.others:
            if labels[k] == "on":
                continue
            iv = slice_interval(fr, self.scene.polyhedra[k], tm, labels[k])
            if iv is None:
                return []
            a_lo = None if iv[2] is None else self._tangent_arc(k, iv[2], lo, hi)
            a_hi = None if iv[3] is None else self._tangent_arc(k, iv[3], lo, hi)
            per_body.append((k, a_lo, a_hi))
        try:
            region = self._region(j, c, low_b, up_b, per_body, lo, hi)
        except (DegenerateOverlap, CrossingBoundViolated) as exc:
            st.diagnostics.append(f"edge ({self.k0},{self.e0}) piece {j} cell {c}: {exc.code}")
            return []
        if self.keep_regions and not region.empty:
            self.regions.append(RegionPatch(self.k0, self.e0, (lo, hi), c, region))
        out = []
        for v in region.vertices:
            if v.kind == "end":
                continue
            la, lb = v.labels
            if la is None or lb is None:
                continue
            if la[0] in ("t", "tv") and lb[0] in ("t", "tv"):
                if la[1] != lb[1]:
                    out.append(self.exact_line(la, lb, v.x, v.value))
            elif {la[0], lb[0]} & {"t", "tv"} and "h" in (la[0], lb[0]):
                st.boundary_events += 1
        return out

    def _region(self, j, c, low_b, up_b, per_body, lo, hi) -> Region2D:
        if self.mode == "structured":
            lows = [low_b] + [a for _, a, _ in per_body if a is not None]
            ups = [up_b] + [b for _, _, b in per_body if b is not None]
            return sandwich(lows, ups, self.crossings, domain=(lo, hi))
        # divide and conquer over a seeded random order of the bodies
        rng = np.random.default_rng([self.seed, self.k0, self.e0, j, c])
        order = rng.permutation(len(per_body))
        base = sandwich([low_b], [up_b], self.crossings, domain=(lo, hi))
        if not per_body:
            return base
        parts = []
        for i in order:
            _, a, b = per_body[i]
            parts.append(sandwich([low_b] + ([a] if a else []), [up_b] + ([b] if b else []), self.crossings, domain=(lo, hi)))

        def rec(items):
            if len(items) == 1:
                return items[0]
            m = len(items) // 2
            left, right = rec(items[:m]), rec(items[m:])
            if left.empty or right.empty:
                return Region2D([], left.tol)
            return intersect_regions(left, right, self.crossings)

        return rec(parts)


def _line_gap(a: PluckerLine, b: PluckerLine) -> float:
    return float(np.linalg.norm(a.direction - b.direction) + np.linalg.norm(a.point() - b.point()))


# lines defined by one or two polyhedra --------------------------------------------


def _plane_basis(n):
    n = _unit(n)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    b1 = _unit(axis - axis.dot(n) * n)
    return b1, np.cross(n, b1)


def vertex_pencil_candidates(scene, k: int, i: int, eps: float = EPS) -> list[PluckerLine]:
    """Lines through vertex ``i`` of polyhedron ``k`` and the pivot at the ends of the stabbing intervals."""
    P = scene.polyhedra[k]
    v = P.vertices[i]
    p0, u = scene.pivot.point(), scene.pivot.unit_direction()
    n = np.cross(u, v - p0)
    scale = scene.scale
    if np.linalg.norm(n) <= 1e3 * eps * scale:
        return []
    plane = Plane.through(v, n)
    b1, b2 = _plane_basis(plane.normal)
    out = []
    for kk, Q in enumerate(scene.polyhedra):
        pts, _ = slice_points(Q, plane, 1e-12 * scale)
        if kk == k:
            pts = pts[np.linalg.norm(pts - v, axis=1) > 1e-9 * scale] if len(pts) else pts
        elif Q.contains_point(v, 1e-12 * scale):
            continue
        if len(pts) == 0:
            continue
        for idx in set(_angular_extremes(v, pts, b1, b2)):
            try:
                out.append(plucker_from_points(v, pts[idx]))
            except GeometryError:
                pass
    return out


def facet_pencil_candidates(scene, k: int, f: int, eps: float = EPS) -> list[PluckerLine]:
    """Lines in the plane of facet ``f`` of polyhedron ``k`` through its pivot crossing."""
    P = scene.polyhedra[k]
    plane = P.planes[f]
    q = plane.intersect_line(scene.pivot)
    if q is None:
        return []
    scale = scene.scale
    out = []
    for vi in P.facets[f]:
        try:
            out.append(plucker_from_points(q, P.vertices[vi]))
        except GeometryError:
            pass
    b1, b2 = _plane_basis(plane.normal)
    for kk, Q in enumerate(scene.polyhedra):
        if kk == k or Q.contains_point(q, 1e-12 * scale):
            continue
        pts, _ = slice_points(Q, plane, 1e-12 * scale)
        if len(pts) == 0:
            continue
        for idx in set(_angular_extremes(q, pts, b1, b2)):
            try:
                out.append(plucker_from_points(q, pts[idx]))
            except GeometryError:
                pass
    return out


def vertex_pair_candidates(scene, eps: float = EPS) -> list[PluckerLine]:
    """Lines through two vertices of different polyhedra that meet the pivot."""
    p0, u = scene.pivot.point(), scene.pivot.unit_direction()
    owner = np.concatenate([np.full(len(P.vertices), k) for k, P in enumerate(scene.polyhedra)]) if scene.k else np.zeros(0)
    if len(owner) < 2:
        return []
    V = np.vstack([P.vertices for P in scene.polyhedra]) - p0
    N = np.cross(u[None, :], V)
    M = V @ N.T  # M[j, i]: vertex j against the plane through vertex i and the pivot
    tol = 1e3 * eps * scene.scale * np.linalg.norm(N, axis=1)[None, :]
    out = []
    ii, jj = np.where((np.abs(M) <= tol) & (owner[:, None] != owner[None, :]))
    for j, i in zip(jj, ii):
        if i < j:
            try:
                out.append(plucker_from_points(V[i] + p0, V[j] + p0))
            except GeometryError:
                pass
    return out


def degenerate_candidates(scene, eps: float = EPS) -> list[PluckerLine]:
    out = []
    for k, P in enumerate(scene.polyhedra):
        for i in range(len(P.vertices)):
            out.extend(vertex_pencil_candidates(scene, k, i, eps))
        for f in range(P.n_facets):
            out.extend(facet_pencil_candidates(scene, k, f, eps))
    out.extend(vertex_pair_candidates(scene, eps))
    return out


# entry points -------------------------------------------------------------------


def _check_mode(mode: str) -> str:
    mode = mode.replace("_", "-")
    if mode not in MODES:
        raise UnknownMode(f"unknown mode {mode!r}")
    return mode


def sweep_candidates(scene, mode: str = "structured", seed: int | None = None, eps: float = EPS,
                     pivot_segment=None, keep_regions: bool = False, stats: SweepStats | None = None):
    """Candidate lines from all edge sweeps, plus the region patches when requested."""
    mode = _check_mode(mode)
    seed = scene.seed if seed is None else seed
    stats = stats if stats is not None else SweepStats()
    seps = scene_separators(scene, eps)
    intervals = atomic_intervals(scene)
    cands, patches = [], []
    for k0, P0 in enumerate(scene.polyhedra):
        for e in P0.edges:
            try:
                sw = EdgeSweep(scene, k0, e.index, seps, intervals, mode, seed, eps, pivot_segment, keep_regions, stats=stats)
            except CoplanarEdge:
                stats.skipped_edges.append((k0, e.index))
                continue
            cands.extend(sw.run())
            patches.extend(sw.regions)
    return cands, patches


def extremal_lines_through_line(scene, mode: str = "structured", seed: int | None = None, eps: float = EPS,
                                stats: SweepStats | None = None) -> list[ExtremalStabbingLine]:
    """Extremal stabbing lines of the scene among the lines meeting its pivot."""
    t0 = time.perf_counter()
    stats = stats if stats is not None else SweepStats()
    if scene.k == 0:
        return []
    cands, _ = sweep_candidates(scene, mode, seed, eps, stats=stats)
    cands.extend(degenerate_candidates(scene, eps))
    out = certify_candidates(cands, scene, min_codim=3, max_depth=0, pivot=scene.pivot, eps=eps)
    stats.seconds += time.perf_counter() - t0
    return out
