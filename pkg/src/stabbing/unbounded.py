"""Upper envelope of the lower tangency heights and the region above it.

Within one pivot plane (fixed azimuth ``theta``) every polyhedron leaves a
convex section polygon and ``sigma-`` is, as a function of ``u = cot phi``,
the concave function ``min_i (z_i - r_i u)`` over the section's vertices
``(r_i, z_i)``.  Two such functions cross exactly at the common lower
tangents of the two sections: at most once, or twice when one section
overshadows the other.  The envelope owner at ``u`` is the one polyhedron
that no other lies above, which is read off from those crossings and the
behaviour at ``u -> +inf`` (the section reaching farther in ``r`` is lower).

The vertices of the envelope are the extremal stabbing lines of the scene
with every polyhedron swept upward along the pivot: such a solid is stabbed
exactly by the lines with ``z >= sigma-``.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .engine import SweepStats
from .extremal import ExtremalStabbingLine
from .geometry import EPS, GeometryError, NotDisjoint, Overlapping, clip_interval, separating_plane_bodies
from .linespace import PivotFrame, coords_of_line, slice_points
from .regions import StabbingRegion, region_through_line


class MixedBoundedness(GeometryError):
    code = "mixed-boundedness"


def _lower_chain(P, fr: PivotFrame, theta: float):
    """Section vertices ``(r, z)`` of ``P`` in the pivot plane at ``theta``, or None."""
    pts, _ = slice_points(P, fr.slice_plane(theta))
    if len(pts) == 0:
        return None
    loc = fr.to_local(pts)
    rz = np.stack([loc[:, :2] @ np.array([math.cos(theta), math.sin(theta)]), loc[:, 2]], axis=1)
    if len(rz) >= 3:
        try:
            rz = rz[ConvexHull(rz).vertices]
        except QhullError:
            pass
    return rz


def _sigma(rz, u):
    u = np.asarray(u, float)
    return (rz[None, :, 1] - np.multiply.outer(u, rz[:, 0])).min(axis=-1)


def _vertical_extent(rz, r: float):
    """``(low, high)`` of the section polygon on the vertical line at ``r``."""
    zs = []
    m = len(rz)
    for i in range(m):
        a, b = rz[i], rz[(i + 1) % m]
        if (a[0] - r) * (b[0] - r) <= 0 and a[0] != b[0]:
            t = (r - a[0]) / (b[0] - a[0])
            zs.append(a[1] + t * (b[1] - a[1]))
        elif a[0] == r:
            zs.append(a[1])
    return (min(zs), max(zs)) if zs else (np.nan, np.nan)


@dataclass
class EnvelopeSlice:
    """Lower tangency heights of every polyhedron within one pivot plane."""

    theta: float
    chains: dict[int, np.ndarray]
    crossings: dict[tuple[int, int], np.ndarray]
    diagnostics: list = field(default_factory=list)

    @classmethod
    def build(cls, scene, theta: float, tol: float = 1e-9) -> "EnvelopeSlice":
        fr = PivotFrame(scene.pivot)
        chains = {}
        for k, P in enumerate(scene.polyhedra):
            rz = _lower_chain(P, fr, theta)
            if rz is not None:
                chains[k] = rz
        out = cls(theta, chains, {})
        for p, q in itertools.combinations(sorted(chains), 2):
            out.crossings[(p, q)] = out._common_lower_tangents(p, q, tol * scene.scale)
        return out

    def _common_lower_tangents(self, p: int, q: int, tol: float) -> np.ndarray:
        A, B = self.chains[p], self.chains[q]
        dr = A[:, None, 0] - B[None, :, 0]
        dz = A[:, None, 1] - B[None, :, 1]
        ok = np.abs(dr) > 1e-15
        u = (dz[ok] / dr[ok]).ravel()
        if len(u) == 0:
            return np.zeros(0)
        ia, ib = np.nonzero(ok)
        za = A[ia, 1] - A[ia, 0] * u
        good = (np.abs(_sigma(A, u) - za) <= tol * (1 + np.abs(u))) & (np.abs(_sigma(B, u) - za) <= tol * (1 + np.abs(u)))
        u = np.sort(u[good])
        keep = [x for i, x in enumerate(u) if i == 0 or x - u[i - 1] > 1e-9 * (1 + abs(x))]
        if len(keep) > 2:
            self.diagnostics.append(("crossing-bound", self.theta, p, q, len(keep)))
        return np.array(keep)

    def sigma(self, k: int, u) -> np.ndarray:
        return _sigma(self.chains[k], u)

    def below(self, p: int, q: int, u) -> np.ndarray:
        """Whether ``sigma_p < sigma_q`` at each ``u``, from the crossings alone."""
        u = np.atleast_1d(np.asarray(u, float))
        a, b = (p, q) if p < q else (q, p)
        cr = self.crossings[(a, b)]
        # for u -> +inf the section reaching farther along r is lower
        start = self.chains[p][:, 0].max() > self.chains[q][:, 0].max()
        flips = len(cr) - np.searchsorted(cr, u, side="right")
        return np.where(flips % 2 == 0, start, not start)

    def owners(self, u) -> np.ndarray:
        """Index of the envelope owner at each ``u`` (-1 when no section is present)."""
        u = np.atleast_1d(np.asarray(u, float))
        ks = sorted(self.chains)
        out = np.full(u.shape, -1, int)
        if not ks:
            return out
        covered = {k: np.zeros(u.shape, bool) for k in ks}
        for p, q in itertools.combinations(ks, 2):
            b = self.below(p, q, u)
            covered[p] |= b
            covered[q] |= ~b
        for k in ks:
            free = ~covered[k]
            out[free & (out < 0)] = k
        return out

    def values(self, u) -> tuple[np.ndarray, np.ndarray]:
        """``(E_U, owner)`` at each ``u``."""
        u = np.atleast_1d(np.asarray(u, float))
        own = self.owners(u)
        val = np.full(u.shape, -np.inf)
        for k in np.unique(own[own >= 0]):
            m = own == k
            val[m] = self.sigma(int(k), u[m])
        return val, own

    def overshadows(self, p: int, q: int) -> bool:
        """``p < q``: ``q``'s r-projection strictly contains ``p``'s and ``q`` lies above ``p``."""
        if p not in self.chains or q not in self.chains:
            return False
        A, B = self.chains[p], self.chains[q]
        if not (B[:, 0].min() < A[:, 0].min() and A[:, 0].max() < B[:, 0].max()):
            return False
        r = 0.5 * (A[:, 0].min() + A[:, 0].max())
        return _vertical_extent(B, r)[0] > _vertical_extent(A, r)[1]


@dataclass
class UpperEnvelopeEU:
    """Upper envelope of the partially defined functions ``sigma-``.

    ``vertices`` are the envelope's vertices: lines through the pivot lying
    on the envelope that are extremal for the upward-swept scene.
    """

    scene: object
    vertices: list[ExtremalStabbingLine]
    sweep_length: float
    stats: SweepStats | None = None
    diagnostics: list = field(default_factory=list)

    def slice(self, theta: float) -> EnvelopeSlice:
        return EnvelopeSlice.build(self.scene, theta)

    def values(self, theta: float, phis, require_all: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """``(E_U, owner)`` over polar angles at one azimuth.

        With ``require_all`` the value is nan wherever some polyhedron has an
        empty section (no line there stabs every polyhedron).
        """
        phis = np.asarray(phis, float)
        sl = self.slice(theta)
        if require_all and len(sl.chains) < self.scene.k:
            return np.full(phis.shape, np.nan), np.full(phis.shape, -1, int)
        return sl.values(1.0 / np.tan(phis))

    def overshadow_pairs(self, theta: float) -> list[tuple[int, int]]:
        sl = self.slice(theta)
        return [(p, q) for p, q in itertools.permutations(sorted(sl.chains), 2) if sl.overshadows(p, q)]

    def three_surface_violations(self) -> list[ExtremalStabbingLine]:
        """Vertices on three surfaces where every surface is overshadowed by one of the other two."""
        bad = []
        for v in self.vertices:
            ks = sorted({f[0] for f in v.features})
            if len(ks) < 3 or v.coords is None:
                continue
            sl = self.slice(v.coords.theta)
            if not any(all(not sl.overshadows(p, q) for q in ks if q != p) for p in ks):
                bad.append(v)
        return bad

    def to_dict(self) -> dict:
        return {
            "vertices": [v.to_dict() for v in self.vertices],
            "vertex_count": len(self.vertices),
            "sweep_length": self.sweep_length,
            "diagnostics": list(self.diagnostics),
        }


def _check_disjoint(polys, eps: float) -> None:
    for P, Q in itertools.combinations(polys, 2):
        try:
            separating_plane_bodies(P, Q, eps)
        except Overlapping as exc:
            raise NotDisjoint("polyhedra are not pairwise disjoint") from exc


def _swept_scene(scene, length: float):
    from .scenes import Scene

    w = scene.pivot.unit_direction()
    return Scene([P.extended(length, direction=w) for P in scene.polyhedra], scene.pivot, scene.seed, {})


def _default_length(scene) -> float:
    fr = PivotFrame(scene.pivot)
    zz = np.concatenate([fr.to_local(P.vertices)[:, 2] for P in scene.polyhedra])
    return 20.0 * (float(zz.max() - zz.min()) + scene.scale)


def _touches_cap(line, swept, top: float, fr: PivotFrame, eps: float) -> bool:
    for P in swept.polyhedra:
        iv = clip_interval(line, P, 1e3 * eps * P.scale)
        if iv is None:
            continue
        x = line.point() + 0.5 * (iv[0] + iv[1]) * line.unit_direction()
        if fr.to_local(x)[2] > top:
            return True
    return False


def _swept_vertices(scene, length: float, mode: str, seed, eps: float, stats: SweepStats):
    swept = _swept_scene(scene, length)
    reg = region_through_line(swept, mode, seed, eps)
    for name in ("edges", "intervals", "cells", "candidates", "boundary_events"):
        setattr(stats, name, getattr(stats, name) + getattr(reg.stats, name))
    fr = PivotFrame(scene.pivot)
    zz = np.concatenate([fr.to_local(P.vertices)[:, 2] for P in scene.polyhedra])
    top = float(zz.max()) + 0.5 * length
    return [v for v in reg.vertices if not _touches_cap(v.line, swept, top, fr, eps)], reg.diagnostics


def _on_envelope(scene, cands, L: float, stats: SweepStats, diags, eps: float) -> UpperEnvelopeEU:
    env = UpperEnvelopeEU(scene, [], L, stats, list(diags))
    for v in cands:
        c = v.coords or coords_of_line(v.line, scene.pivot, eps)
        val, _ = env.values(c.theta, np.array([c.phi]))
        if abs(c.z - val[0]) <= 1e3 * eps * scene.scale * (1.0 + abs(1.0 / math.tan(c.phi))):
            env.vertices.append(v)
    return env


def upper_envelope_EU(scene, mode: str = "structured", seed: int | None = None, eps: float = EPS,
                      sweep_length: float | None = None) -> UpperEnvelopeEU:
    """Upper envelope ``E_U = max sigma-`` of a scene of pairwise disjoint polyhedra."""
    t0 = time.perf_counter()
    _check_disjoint(scene.polyhedra, eps)
    stats = SweepStats()
    if scene.k == 0:
        return UpperEnvelopeEU(scene, [], 0.0, stats)
    L = _default_length(scene) if sweep_length is None else float(sweep_length)
    cands, diags = _swept_vertices(scene, L, mode, seed, eps, stats)
    env = _on_envelope(scene, cands, L, stats, diags, eps)
    stats.seconds = time.perf_counter() - t0
    return env


@dataclass
class UnboundedRegion(StabbingRegion):
    """Region ``z >= E_U`` of a scene unbounded upward along the pivot."""

    envelope: UpperEnvelopeEU | None = None

    def bounds(self, theta: float, phis):
        lo, _ = self.envelope.values(theta, phis, require_all=True)
        return lo, np.full(np.shape(lo), np.inf)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["envelope_vertices"] = len(self.envelope.vertices) if self.envelope else 0
        return out


def region_unbounded_case(scene, mode: str = "structured", seed: int | None = None, eps: float = EPS,
                          sweep_length: float | None = None) -> UnboundedRegion:
    """Stabbing region of polyhedra that are all unbounded along the pivot.

    Every polyhedron must carry an ``unbounded_dir`` parallel to the pivot,
    all pointing the same way.  When they point against the pivot, the pivot
    is reversed and a diagnostic records it.
    """
    w = scene.pivot.unit_direction()
    dots = [None if P.unbounded_dir is None else float(P.unbounded_dir @ w) for P in scene.polyhedra]
    if any(d is None or abs(abs(d) - 1.0) > 1e-9 for d in dots):
        raise MixedBoundedness("every polyhedron must be unbounded along the pivot")
    if len({d > 0 for d in dots}) > 1:
        raise MixedBoundedness("polyhedra are unbounded in opposite directions")
    diags = []
    if dots and dots[0] < 0:
        scene = scene.with_pivot(scene.pivot.reversed())
        diags.append("pivot-reversed")
    if scene.k == 0:
        return UnboundedRegion(scene, [], [], True, SweepStats(), diags, envelope=UpperEnvelopeEU(scene, [], 0.0))
    L = _default_length(scene) if sweep_length is None else float(sweep_length)
    _check_disjoint([P.extended(L) for P in scene.polyhedra], eps)
    t0 = time.perf_counter()
    stats = SweepStats()
    verts, d2 = _swept_vertices(scene, L, mode, seed, eps, stats)
    env = _on_envelope(scene, verts, L, stats, d2, eps)
    stats.seconds = time.perf_counter() - t0
    return UnboundedRegion(scene, verts, [], True, stats, diags + list(d2), envelope=env)
