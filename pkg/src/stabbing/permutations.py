"""Geometric permutations of transversals through the pivot and their (wedge, interval) labels.

Each body ``C`` gets a plane ``h_C`` through the pivot that misses it; these
planes cut space into at most ``2k`` wedges around the pivot.  Each pair of
bodies gets a separating plane ``h_{C,C'}`` meeting the pivot at
``z_{C,C'}``; these points cut the pivot into at most ``C(k, 2) + 1``
intervals.  A directed line through the pivot is labelled by the wedge that
holds its forward ray and the interval that holds its intercept, and all
transversals sharing a label meet the bodies in the same order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    EPS,
    GeometryError,
    NotDisjoint,
    NotSeparable,
    Overlapping,
    Plane,
    PluckerLine,
    clip_interval,
    contact_tolerance,
    line_distance,
    separating_plane_bodies,
    separating_planes_line_body,
)
from .linespace import LineCoords, PivotFrame, coords_of_line, line_from_coords, sigma_eval_many

TWO_PI = 2 * math.pi
PIVOT = -1  # marks the pivot inside a permutation


class NotTransversal(GeometryError):
    code = "not-transversal"


class OnLabelBoundary(GeometryError):
    code = "on-label-boundary"


@dataclass(frozen=True)
class GeometricPermutation:
    """Bodies in the order an oriented line meets them; ``PIVOT`` marks the pivot."""

    order: tuple[int, ...]

    def reversed(self) -> "GeometricPermutation":
        return GeometricPermutation(tuple(reversed(self.order)))

    def undirected(self) -> "GeometricPermutation":
        """Orientation-free representative (the lexicographically smaller of the two)."""
        return min(self, self.reversed(), key=lambda p: p.order)

    @property
    def bodies(self) -> tuple[int, ...]:
        return tuple(i for i in self.order if i != PIVOT)

    def __str__(self):
        return "(" + " ".join("L0" if i == PIVOT else str(i) for i in self.order) + ")"


@dataclass(frozen=True)
class WedgeIntervalLabel:
    wedge: int
    interval: int


def permutation_of(line: PluckerLine, scene, eps: float = EPS, check_disjoint: bool = True) -> GeometricPermutation:
    """Order in which the oriented ``line`` meets the bodies (and the pivot, if it meets it)."""
    if check_disjoint:
        _require_disjoint(scene, eps)
    u = line.unit_direction()
    p0 = line.point()
    starts = []
    for k, P in enumerate(scene.polyhedra):
        iv = clip_interval(line, P, contact_tolerance(P, line, eps))
        if iv is None:
            raise NotTransversal(f"line misses polyhedron {k}")
        starts.append((0.5 * (iv[0] + iv[1]), k))
    # the pivot's position: parameter of the line's closest point to it
    w = scene.pivot.unit_direction()
    b = float(u @ w)
    if 1.0 - b * b > 1e-12 and line_distance(line, scene.pivot) <= 1e3 * eps * scene.scale:
        r = scene.pivot.point() - p0
        starts.append(((float(r @ u) - b * float(r @ w)) / (1.0 - b * b), PIVOT))
    starts.sort()
    return GeometricPermutation(tuple(k for _, k in starts))


def _require_disjoint(scene, eps: float) -> None:
    for P, Q in itertools.combinations(scene.polyhedra, 2):
        try:
            separating_plane_bodies(P, Q, eps)
        except Overlapping as exc:
            raise NotDisjoint("bodies are not pairwise disjoint") from exc


# labels ------------------------------------------------------------------------------


def _slack(h: Plane, C, D) -> tuple[float, float]:
    """Offsets ``[a, b]`` of planes with normal ``h.normal`` separating ``C`` (below) from ``D``."""
    return float((C.vertices @ h.normal).max()), float((D.vertices @ h.normal).min())


@dataclass
class Labeler:
    """Wedge and interval partition of a scene of pairwise disjoint bodies."""

    scene: object
    wedge_cuts: np.ndarray  # sorted azimuths of the half-planes of every h_C
    pair_planes: dict[tuple[int, int], Plane]
    intercepts: np.ndarray  # sorted z_{C,C'}
    eps: float = EPS
    diagnostics: list = field(default_factory=list)

    @classmethod
    def build(cls, scene, eps: float = EPS) -> "Labeler":
        fr = PivotFrame(scene.pivot)
        w = fr.w
        cuts = []
        for k, P in enumerate(scene.polyhedra):
            if clip_interval(scene.pivot, P, 0.0) is not None:
                raise NotDisjoint(f"the pivot meets polyhedron {k}")
            try:
                h = separating_planes_line_body(scene.pivot, P, eps)[0]
            except NotSeparable as exc:
                raise NotDisjoint(f"polyhedron {k} cannot be separated from the pivot") from exc
            a = float(fr.azimuth(fr.origin + h.normal))
            cuts.extend([(a + 0.5 * math.pi) % TWO_PI, (a - 0.5 * math.pi) % TWO_PI])
        diags: list = []
        planes: dict[tuple[int, int], Plane] = {}
        for i, j in itertools.combinations(range(scene.k), 2):
            C, D = scene.polyhedra[i], scene.polyhedra[j]
            try:
                h = separating_plane_bodies(C, D, eps)
            except Overlapping as exc:
                raise NotDisjoint(f"polyhedra {i} and {j} overlap") from exc
            if abs(float(h.normal @ w)) <= 1e3 * eps:
                h = _tilted(h, C, D, w)
                diags.append(("tilted", i, j))
            planes[(i, j)] = h
        lab = cls(scene, np.sort(np.array(cuts)), planes, np.zeros(0), eps, diags)
        lab._place_intercepts()
        return lab

    def _intercept(self, h: Plane) -> float:
        o, w = self.scene.pivot.point(), self.scene.pivot.unit_direction()
        return float((h.offset - h.normal @ o) / (h.normal @ w))

    def _place_intercepts(self) -> None:
        tol = 1e3 * self.eps * self.scene.scale
        used: list[float] = []
        for (i, j), h in sorted(self.pair_planes.items()):
            a, b = _slack(h, self.scene.polyhedra[i], self.scene.polyhedra[j])
            z = self._intercept(h)
            for frac in (0.5, 0.3, 0.7, 0.4, 0.6, 0.2, 0.8):
                z = self._intercept(Plane(h.normal, a + frac * (b - a)))
                if all(abs(z - y) > tol for y in used):
                    if frac != 0.5:
                        self.diagnostics.append(("intercept-shifted", i, j, frac))
                    h = Plane(h.normal, a + frac * (b - a))
                    break
            else:
                self.diagnostics.append(("intercept-collision", i, j))
            self.pair_planes[(i, j)] = h
            used.append(z)
        self.intercepts = np.sort(np.array(used))

    @property
    def wedge_count(self) -> int:
        return max(1, len(self.wedge_cuts))

    @property
    def interval_count(self) -> int:
        return len(self.intercepts) + 1

    @property
    def label_count(self) -> int:
        return self.wedge_count * self.interval_count

    def wedge_of_azimuth(self, theta: float) -> int:
        cuts = self.wedge_cuts
        if len(cuts) == 0:
            return 0
        d = np.abs((theta - cuts + math.pi) % TWO_PI - math.pi)
        if d.min() <= 1e3 * self.eps:
            raise OnLabelBoundary("forward ray lies on a wedge boundary")
        # wedge i spans (cuts[i-1], cuts[i]); the wrap-around wedge is 0
        return int(np.searchsorted(cuts, theta % TWO_PI)) % len(cuts)

    def interval_of_height(self, z: float) -> int:
        if len(self.intercepts) and np.abs(self.intercepts - z).min() <= 1e3 * self.eps * self.scene.scale:
            raise OnLabelBoundary("intercept lies on an interval boundary")
        return int(np.searchsorted(self.intercepts, z))

    def label(self, line: PluckerLine) -> WedgeIntervalLabel:
        c = coords_of_line(line, self.scene.pivot, self.eps)
        return self.label_coords(c)

    def label_coords(self, c: LineCoords) -> WedgeIntervalLabel:
        return WedgeIntervalLabel(self.wedge_of_azimuth(c.theta), self.interval_of_height(c.z))

    def wedge_range(self, wedge: int) -> tuple[float, float]:
        """Azimuth range ``(lo, hi)`` of a wedge, ``hi`` possibly above 2 pi."""
        cuts = self.wedge_cuts
        if len(cuts) == 0:
            return 0.0, TWO_PI
        if wedge == 0:
            return float(cuts[-1]), float(cuts[0]) + TWO_PI
        return float(cuts[wedge - 1]), float(cuts[wedge])

    def interval_range(self, interval: int) -> tuple[float, float]:
        zs = self.intercepts
        lo = -np.inf if interval == 0 else float(zs[interval - 1])
        hi = np.inf if interval == len(zs) else float(zs[interval])
        return lo, hi


def _tilted(h: Plane, C, D, w) -> Plane:
    """A separating plane close to ``h`` that is not parallel to ``w``."""
    for delta in (1e-3, 1e-2, 5e-2, 0.1, 0.2):
        for sgn in (1.0, -1.0):
            n = h.normal + sgn * delta * w
            n /= np.linalg.norm(n)
            a, b = float((C.vertices @ n).max()), float((D.vertices @ n).min())
            if a < b:
                return Plane(n, 0.5 * (a + b))
    return h


def label_of(line: PluckerLine, scene, eps: float = EPS, labeler: Labeler | None = None) -> WedgeIntervalLabel:
    """(wedge, interval) label of a directed line through the pivot."""
    lab = labeler or Labeler.build(scene, eps)
    return lab.label(line)


# sampling and enumeration --------------------------------------------------------------


def _height_bounds(scene, theta: float, phis):
    lo = np.full(len(phis), -np.inf)
    hi = np.full(len(phis), np.inf)
    for P in scene.polyhedra:
        a, b = sigma_eval_many(P, theta, phis, scene.pivot)
        lo, hi = np.maximum(lo, a), np.minimum(hi, b)
    return lo, hi


def sample_transversals(scene, count: int, seed: int = 0, resolution: int = 128, max_rounds: int = 100_000):
    """Random transversals through the pivot, as ``(LineCoords, PluckerLine)`` pairs.

    A coarse ``resolution`` scan of directions finds the cells that hold
    transversals; directions are then drawn uniformly inside those cells
    and the height uniformly between ``max sigma-`` and ``min sigma+``.
    """
    rng = np.random.default_rng(seed)
    dt, dp = TWO_PI / resolution, math.pi / resolution
    cells = []
    for i in range(resolution):
        phis = (np.arange(resolution) + 0.5) * dp
        lo, hi = _height_bounds(scene, (i + 0.5) * dt, phis)
        cells.extend((i, j) for j in np.where(hi > lo)[0])
    out = []
    if not cells:
        return out
    # cells next to feasible ones may hold transversals the centers missed
    grow = {(a % resolution, b) for i, j in cells for a in (i - 1, i, i + 1) for b in (j - 1, j, j + 1) if 0 <= b < resolution}
    cells = sorted(grow)
    rounds = 0
    while len(out) < count and rounds < max_rounds:
        rounds += 1
        i, j = cells[int(rng.integers(len(cells)))]
        theta = float((i + rng.uniform()) * dt)
        phis = (j + rng.uniform(size=16)) * dp
        lo, hi = _height_bounds(scene, theta, phis)
        for phi, a, b in zip(phis, lo, hi):
            if np.isfinite(a) and np.isfinite(b) and b > a:
                c = LineCoords(theta, float(phi), float(rng.uniform(a, b)))
                out.append((c, line_from_coords(c, scene.pivot)))
    return out[:count]


def enumerate_permutations(scene, eps: float = EPS, resolution: int = 48, vertices=None,
                           labeler: Labeler | None = None) -> set[GeometricPermutation]:
    """Orientation-free geometric permutations of transversals through the pivot.

    One representative transversal is searched per (wedge, interval) label on
    a ``resolution`` grid of directions; the region's vertices (computed
    unless given) contribute their permutations too.
    """
    from .regions import region_through_line

    lab = labeler or Labeler.build(scene, eps)
    if vertices is None:
        vertices = region_through_line(scene, eps=eps).vertices
    out: set[GeometricPermutation] = set()
    for v in vertices:
        try:
            out.add(permutation_of(v.line, scene, eps, check_disjoint=False).undirected())
        except NotTransversal:
            pass
    for c in _label_representatives(scene, lab, resolution).values():
        L = line_from_coords(c, scene.pivot)
        out.add(permutation_of(L, scene, eps, check_disjoint=False).undirected())
    return out


def _label_representatives(scene, lab: Labeler, resolution: int) -> dict[WedgeIntervalLabel, LineCoords]:
    """Deepest grid transversal per realized label."""
    best: dict[WedgeIntervalLabel, tuple[float, LineCoords]] = {}
    phis = (np.arange(resolution) + 0.5) * (math.pi / resolution)
    for wedge in range(lab.wedge_count):
        a, b = lab.wedge_range(wedge)
        for theta in a + (np.arange(resolution) + 0.5) * ((b - a) / resolution):
            theta = float(theta % TWO_PI)
            lo, hi = _height_bounds(scene, theta, phis)
            for phi, zl, zh in zip(phis, lo, hi):
                if not (np.isfinite(zl) and np.isfinite(zh) and zh > zl):
                    continue
                for iv in range(lab.interval_count):
                    il, ih = lab.interval_range(iv)
                    l2, h2 = max(zl, il), min(zh, ih)
                    if h2 <= l2:
                        continue
                    key = WedgeIntervalLabel(wedge, iv)
                    if key not in best or h2 - l2 > best[key][0]:
                        best[key] = (h2 - l2, LineCoords(theta, float(phi), 0.5 * (l2 + h2)))
    return {k: v[1] for k, v in best.items()}


def label_conflicts(scene, samples, eps: float = EPS, labeler: Labeler | None = None):
    """Pairs of sampled transversals with equal labels but different permutations.

    Returns ``(conflicts, labelled, skipped)``; samples on a label boundary
    are skipped.
    """
    lab = labeler or Labeler.build(scene, eps)
    seen: dict[WedgeIntervalLabel, GeometricPermutation] = {}
    conflicts, skipped = [], 0
    for c, L in samples:
        try:
            key = lab.label_coords(c)
        except OnLabelBoundary:
            skipped += 1
            continue
        perm = permutation_of(L, scene, eps, check_disjoint=False)
        if key in seen and seen[key] != perm:
            conflicts.append((key, seen[key], perm))
        seen.setdefault(key, perm)
    return conflicts, len(seen), skipped
