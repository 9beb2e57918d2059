"""Great-circle arrangements of separating planes and the order labels they induce."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .geometry import EPS, GeometryError, Plane, PluckerLine, Polyhedron, clip_interval, separating_planes_line_body


class OnBoundary(GeometryError):
    code = "on-boundary"


class ParallelDirection(GeometryError):
    code = "parallel-direction"


@dataclass(frozen=True)
class GreatCircle:
    normal: np.ndarray

    def contains(self, d, eps: float = EPS) -> bool:
        return abs(float(np.dot(d, self.normal))) <= eps


@dataclass
class SphericalCellComplex:
    """Cells of the arrangement keyed by their sign vectors over the circle normals."""

    circles: list[GreatCircle]
    cells: list[tuple[int, ...]]
    vertices: np.ndarray  # (V, 3) arrangement vertices
    vertex_circles: list[tuple[int, ...]]
    circle_of_plane: list[int]
    diagnostics: list[str] = field(default_factory=list)
    eps: float = EPS

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.cells)}

    @property
    def normals(self) -> np.ndarray:
        return np.array([c.normal for c in self.circles]).reshape(-1, 3)

    def sign_vector(self, d) -> tuple[int, ...]:
        s = self.normals @ np.asarray(d, float)
        if np.any(np.abs(s) <= self.eps):
            raise OnBoundary("direction lies on a circle of the arrangement")
        return tuple(int(x) for x in np.sign(s))

    def locate(self, d) -> int:
        return self._index[self.sign_vector(d)]

    def cell_of_signs(self, signs) -> int:
        return self._index[tuple(signs)]

    def antipodal(self, cell: int) -> int:
        return self._index[tuple(-x for x in self.cells[cell])]

    def plane_sign(self, cell: int, plane_index: int) -> int:
        ci = self.circle_of_plane[plane_index]
        sgn = 1 if ci >= 0 else -1
        return sgn * self.cells[cell][abs(ci) - 1]

    def cell_vertices(self, cell: int) -> np.ndarray:
        """Arrangement vertices on the closure of a cell."""
        if len(self.vertices) == 0:
            return np.zeros((0, 3))
        s = np.sign(np.where(np.abs(self.vertices @ self.normals.T) <= 1e-12, 0.0, self.vertices @ self.normals.T))
        want = np.array(self.cells[cell])
        ok = np.all((s == 0) | (s == want), axis=1)
        return self.vertices[ok]

    def edge_count(self) -> int:
        m = len(self.circles)
        if m == 0:
            return 0
        if len(self.vertices) == 0:
            return m  # one closed loop per circle
        return sum(len([v for v in self.vertex_circles if c in v]) for c in range(m))

    def euler_characteristic(self) -> int:
        m = len(self.circles)
        if m == 0:
            # empty graph: count one virtual vertex so the sphere gives 2
            return 1 + len(self.cells)
        nv = len(self.vertices)
        if nv == 0:
            # a single circle: count it as one vertex and one closed edge
            return 1 - 1 + len(self.cells)
        return nv - self.edge_count() + len(self.cells)


def build_arrangement(H, eps: float = EPS) -> SphericalCellComplex:
    """Arrangement of the great circles parallel to the planes ``H``.

    Parallel planes share a circle; the merge is recorded in ``diagnostics``
    and ``circle_of_plane`` maps plane ``i`` to ``+-(circle index + 1)``.
    """
    circles: list[GreatCircle] = []
    circle_of_plane: list[int] = []
    diagnostics: list[str] = []
    for i, h in enumerate(H):
        n = h.normal if isinstance(h, Plane) else np.asarray(h, float) / np.linalg.norm(h)
        for ci, c in enumerate(circles):
            cr = np.linalg.norm(np.cross(c.normal, n))
            if cr <= 1e3 * eps:
                circle_of_plane.append((ci + 1) * (1 if c.normal.dot(n) > 0 else -1))
                diagnostics.append(f"plane {i} is parallel to circle {ci}; merged")
                break
        else:
            circles.append(GreatCircle(n))
            circle_of_plane.append(len(circles))
    m = len(circles)
    N = np.array([c.normal for c in circles]).reshape(-1, 3)
    if m == 0:
        return SphericalCellComplex(circles, [()], np.zeros((0, 3)), [], circle_of_plane, diagnostics, eps)
    if m == 1:
        return SphericalCellComplex(circles, [(1,), (-1,)], np.zeros((0, 3)), [], circle_of_plane, diagnostics, eps)
    # arrangement vertices, merging concurrent triples
    verts: list[np.ndarray] = []
    vcirc: list[set[int]] = []
    for i, j in itertools.combinations(range(m), 2):
        v = np.cross(N[i], N[j])
        v /= np.linalg.norm(v)
        for w in (v, -v):
            for k, u in enumerate(verts):
                if np.linalg.norm(u - w) <= 1e3 * eps:
                    vcirc[k].update((i, j))
                    break
            else:
                verts.append(w)
                vcirc.append({i, j})
    V = np.array(verts)
    cells: set[tuple[int, ...]] = set()
    # sample around every vertex, at a radius below the distance to other circles
    for v, cs in zip(V, vcirc):
        dots = np.abs(N @ v)
        others = [dots[k] for k in range(m) if k not in cs]
        r = 0.25 * min(others) if others else 0.1
        r = min(r, 0.1)
        t1 = np.cross(v, N[min(cs)])
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(v, t1)
        for a in np.linspace(0, 2 * np.pi, 8 * len(cs), endpoint=False) + np.pi / (8 * len(cs)):
            p = v + r * (np.cos(a) * t1 + np.sin(a) * t2)
            s = N @ p
            if np.all(np.abs(s) > 1e-14):
                cells.add(tuple(int(x) for x in np.sign(s)))
    order = sorted(cells)
    return SphericalCellComplex(circles, order, V, [tuple(sorted(c)) for c in vcirc], circle_of_plane, diagnostics, eps)


def hemisphere_order(h: Plane, d, eps: float = EPS) -> str:
    """Which of two bodies an oriented line of direction ``d`` meets first.

    ``h`` has ``P`` on its negative and ``Q`` on its positive side.  Returns
    ``"P_first"`` when ``d`` points into the positive hemisphere.
    """
    s = float(np.dot(h.normal, d)) / np.linalg.norm(d)
    if abs(s) <= eps:
        raise ParallelDirection("direction is parallel to the separating plane")
    return "P_first" if s > 0 else "Q_first"


# pivot partition ---------------------------------------------------------------


@dataclass
class AtomicIntervals:
    """Partition of the pivot (arc-length parameter from ``pivot.point()``)."""

    breaks: np.ndarray
    masks: list[tuple[bool, ...]]

    def __len__(self):
        return len(self.masks)

    def bounds(self, i: int) -> tuple[float, float]:
        lo = -np.inf if i == 0 else float(self.breaks[i - 1])
        hi = np.inf if i == len(self.breaks) else float(self.breaks[i])
        return lo, hi

    def midpoint(self, i: int) -> float:
        lo, hi = self.bounds(i)
        if np.isinf(lo) and np.isinf(hi):
            return 0.0
        if np.isinf(lo):
            return hi - 1.0
        if np.isinf(hi):
            return lo + 1.0
        return 0.5 * (lo + hi)

    def locate(self, t: float) -> int:
        return int(np.searchsorted(self.breaks, t))


def atomic_intervals(scene) -> AtomicIntervals:
    pivot = scene.pivot
    p0, u = pivot.point(), pivot.unit_direction()
    breaks = []
    for P in scene.polyhedra:
        iv = clip_interval(pivot, P, 0.0)
        if iv is not None:
            breaks.extend(iv)
    breaks = np.array(sorted(breaks))
    ai = AtomicIntervals(breaks, [])
    masks = []
    for i in range(len(breaks) + 1):
        x = p0 + ai.midpoint(i) * u
        masks.append(tuple(P.contains_point(x) for P in scene.polyhedra))
    ai.masks = masks
    return ai


@dataclass
class Separators:
    """Separating planes between the pivot's components and each polyhedron.

    ``planes[i]`` has its normal pointing away from ``owner[i]``; ``span[i]``
    is the range of pivot parameters on the separated side.
    """

    planes: list[Plane]
    owner: list[int]
    span: list[tuple[float, float]]

    def plane_for(self, P: int, t: float) -> int | None:
        for i, (o, (lo, hi)) in enumerate(zip(self.owner, self.span)):
            if o == P and lo <= t <= hi:
                return i
        return None


def scene_separators(scene, eps: float = EPS) -> Separators:
    pivot = scene.pivot
    planes, owner, span = [], [], []
    for k, P in enumerate(scene.polyhedra):
        hs = separating_planes_line_body(pivot, P, eps)
        iv = clip_interval(pivot, P, 0.0)
        if iv is None:
            planes.append(hs[0])
            owner.append(k)
            span.append((-np.inf, np.inf))
        else:
            planes.extend(hs)
            owner.extend([k, k])
            span.extend([(-np.inf, iv[0]), (iv[1], np.inf)])
    return Separators(planes, owner, span)


def classify_partition(complex_: SphericalCellComplex, cell: int, intervals: AtomicIntervals, interval: int, seps: Separators):
    """Split the polyhedra into those containing, following and preceding the pivot point.

    Returns ``(on, minus, plus)``: ``on`` contains the pivot point, ``minus``
    is met after the pivot point along the oriented line and ``plus`` before
    it.
    """
    t = intervals.midpoint(interval)
    on, minus, plus = set(), set(), set()
    for k, inside in enumerate(intervals.masks[interval]):
        if inside:
            on.add(k)
            continue
        pi = seps.plane_for(k, t)
        s = complex_.plane_sign(cell, pi)
        (minus if s < 0 else plus).add(k)
    return on, minus, plus


def label_of_direction(seps: Separators, intervals: AtomicIntervals, t: float, d) -> list[str]:
    """Per-polyhedron ``"on"``, ``"after"`` or ``"before"`` for direction ``d`` at pivot parameter ``t``."""
    i = intervals.locate(t)
    out = []
    for k, inside in enumerate(intervals.masks[i]):
        if inside:
            out.append("on")
            continue
        h = seps.planes[seps.plane_for(k, t)]
        out.append("after" if float(np.dot(h.normal, d)) < 0 else "before")
    return out
