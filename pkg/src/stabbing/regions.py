"""Stabbing regions through a pivot line, reguli of two-edge tangents, and the global vertex set."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    RegionPatch,
    SweepStats,
    _check_mode,
    degenerate_candidates,
    sweep_candidates,
)
from .extremal import ExtremalStabbingLine, certify_candidates
from .extremal import depth as _depth
from .geometry import (
    EPS,
    GeometryError,
    PluckerLine,
    Polyhedron,
    batch_transversals,
    line_at_infinity,
    plucker_from_points,
    separating_planes_line_body,
)
from .linespace import CoplanarEdge, EdgeFrame, PivotFrame, edge_arc_fn, edge_frame, sigma_eval_many

TWO_PI = 2 * math.pi


class PreconditionViolated(GeometryError):
    code = "precondition-violated"


def depth(line: PluckerLine, scene, eps: float = EPS) -> int:
    """Number of polyhedra of the scene that ``line`` misses."""
    return _depth(line, scene, eps)


# regions ---------------------------------------------------------------------------


@dataclass
class StabbingRegion:
    """Lines through the pivot stabbing every polyhedron of a scene.

    Membership follows the tangency heights: a line with direction
    ``(theta, phi)`` meeting the pivot at height ``z`` is inside when
    ``max sigma- <= z <= min sigma+`` over the polyhedra, every section being
    nonempty.  With ``unbounded_above`` the upper bounds are dropped.
    """

    scene: object
    vertices: list[ExtremalStabbingLine]
    patches: list[RegionPatch] = field(default_factory=list)
    unbounded_above: bool = False
    stats: SweepStats | None = None
    diagnostics: list = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.vertices and all(p.region.empty for p in self.patches)

    def bounds(self, theta: float, phis) -> tuple[np.ndarray, np.ndarray]:
        """``(max sigma-, min sigma+)`` over the polyhedra; nan where some section is empty."""
        phis = np.asarray(phis, float)
        lo = np.full(phis.shape, -np.inf)
        hi = np.full(phis.shape, np.inf)
        for P in self.scene.polyhedra:
            a, b = sigma_eval_many(P, theta, phis, self.scene.pivot)
            lo = np.maximum(lo, a)
            if not self.unbounded_above:
                hi = np.minimum(hi, b)
        return lo, hi

    def membership_grid(self, thetas, phis, zs):
        """Membership flags and signed margins (positive inside) on a grid."""
        zs = np.asarray(zs, float)
        flags = np.zeros((len(thetas), len(phis), len(zs)), bool)
        margins = np.full(flags.shape, -np.inf)
        for i, t in enumerate(thetas):
            lo, hi = self.bounds(float(t), phis)
            m = np.minimum(zs[None, :] - lo[:, None], hi[:, None] - zs[None, :])
            m = np.where(np.isnan(m), -np.inf, m)
            margins[i] = m
            flags[i] = m >= 0
        return flags, margins

    def contains(self, theta: float, phi: float, z: float, tol: float = 0.0) -> bool:
        lo, hi = self.bounds(theta, np.array([phi]))
        return bool(lo[0] - tol <= z <= hi[0] + tol)

    def component_count(self, resolution: int = 32, z_range=None) -> int:
        """Connected components of the membership grid (azimuth wraps around)."""
        from scipy import ndimage

        from .oracle import grid_axes

        thetas, phis, zs = grid_axes(self.scene, resolution, z_range)
        flags, _ = self.membership_grid(thetas, phis, zs)
        lab, n = ndimage.label(flags)
        if n == 0:
            return 0
        # glue the first and last azimuth slices
        parent = list(range(n + 1))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        a, b = lab[0], lab[-1]
        for x, y in zip(a[(a > 0) & (b > 0)], b[(a > 0) & (b > 0)]):
            parent[find(int(x))] = find(int(y))
        return len({find(i) for i in range(1, n + 1)})

    def to_dict(self) -> dict:
        out = {
            "vertices": [v.to_dict() for v in self.vertices],
            "vertex_count": len(self.vertices),
            "patches": len(self.patches),
            "unbounded_above": self.unbounded_above,
            "diagnostics": list(self.diagnostics),
        }
        if self.stats is not None:
            out["stats"] = self.stats.to_dict()
        return out


def region_through_line(scene, mode: str = "structured", seed: int | None = None, eps: float = EPS) -> StabbingRegion:
    """Full stabbing region through the scene's pivot, with its sweep patches and vertices."""
    stats = SweepStats()
    t0 = time.perf_counter()
    if scene.k == 0:
        return StabbingRegion(scene, [], stats=stats)
    cands, patches = sweep_candidates(scene, mode, seed, eps, keep_regions=True, stats=stats)
    cands.extend(degenerate_candidates(scene, eps))
    verts = certify_candidates(cands, scene, min_codim=3, max_depth=0, pivot=scene.pivot, eps=eps)
    stats.seconds = time.perf_counter() - t0
    return StabbingRegion(scene, verts, patches, stats=stats, diagnostics=list(stats.diagnostics))


def pairwise_region(P: Polyhedron, Q: Polyhedron, pivot: PluckerLine, eps: float = EPS, keep_patches: bool = True) -> StabbingRegion:
    """Stabbing region of two polyhedra through ``pivot``."""
    from .scenes import Scene

    scene = Scene([P, Q], pivot, 0, {})
    stats = SweepStats()
    t0 = time.perf_counter()
    cands, patches = sweep_candidates(scene, "structured", 0, eps, keep_regions=keep_patches, stats=stats)
    cands.extend(degenerate_candidates(scene, eps))
    verts = certify_candidates(cands, scene, min_codim=3, max_depth=0, pivot=pivot, eps=eps)
    stats.seconds = time.perf_counter() - t0
    return StabbingRegion(scene, verts, patches, stats=stats, diagnostics=list(stats.diagnostics))


# reguli ----------------------------------------------------------------------------


@dataclass
class Regulus:
    """Connected family of lines through the pivot tangent at two fixed edges.

    The lines are parametrized by the plane angle ``theta`` of the frame of
    ``edge0``; for each ``theta`` the line runs from the pivot crossing
    through the point where the plane meets ``edge``.
    """

    edge0: tuple[int, int]
    edge: tuple[int, int]
    owners: tuple[int, int]
    interval: tuple[float, float]
    frame: EdgeFrame
    a: np.ndarray  # local endpoints of ``edge``
    b: np.ndarray

    def phi(self, theta):
        return edge_arc_fn(self.frame, self.a, self.b)(np.atleast_1d(np.asarray(theta, float)))

    def line_at(self, theta: float) -> PluckerLine:
        return self.frame.line(theta, float(self.phi(theta)[0]))

    def sample(self, n: int = 16) -> list[PluckerLine]:
        lo, hi = self.interval
        ts = lo + (hi - lo) * (np.arange(n) + 0.5) / n
        return [self.line_at(float(t)) for t in ts]


def _theta_of_world_point(fr: EdgeFrame, x) -> float:
    return fr.theta_of_point(fr.to_local(x))


def _regulus_events(fr: EdgeFrame, P: Polyhedron, j: int) -> np.ndarray:
    a, b = P.edge_points[j]
    la, lb = fr.to_local(a), fr.to_local(b)
    ev = [0.0, fr.theta0, fr.theta_star, fr.theta_of_point(la), fr.theta_of_point(lb)]
    pp, pd = fr.piv_p, fr.piv_d
    D = lb - la
    for s in (0.0, fr.length):
        p = np.array([0.0, 0.0, s])
        n = np.cross(pd, p - pp)
        den = n @ D
        if abs(den) > 1e-14:
            lam = n @ (p - la) / den
            ev.append(fr.theta_of_point(la + lam * D))
    for f in P.edges[j].facets:
        q = P.planes[f].intersect_line(fr.pivot)
        if q is not None:
            ev.append(_theta_of_world_point(fr, q))
    ev = np.array(ev)
    return np.unique(ev[(ev >= 0.0) & (ev <= fr.theta0)])


def _regulus_valid(fr: EdgeFrame, la, lb, n1, n2, theta: float) -> bool:
    """Line through the pivot crossing and edge ``ab`` at ``theta``: meets both segments and is tangent at ``ab``."""
    nt = fr.normal(theta)
    D = lb - la
    den = nt @ D
    if abs(den) < 1e-14:
        return False
    lam = -(nt @ la) / den
    if not (0.0 < lam < 1.0):
        return False
    x = la + lam * D
    try:
        q = fr.q(theta)
    except GeometryError:
        return False
    rq, zq = fr.plane_coords(theta, q)
    rx, zx = fr.plane_coords(theta, x)
    if abs(rq - rx) < 1e-14:
        return False
    # height where the line q -> x crosses the edge axis (rho = 0)
    s = zq + (zx - zq) * rq / (rq - rx)
    if not (0.0 < s < fr.length):
        return False
    d = fr.dir_to_world(x - q)
    return float(d @ n1) * float(d @ n2) < 0.0


def reguli_for_edge(e0, scene, eps: float = EPS) -> list[Regulus]:
    """Maximal families of lines through the pivot tangent at ``e0`` and at one edge of another polyhedron.

    ``e0`` is ``(polyhedron index, edge index)``.
    """
    k0, j0 = e0
    P0 = scene.polyhedra[k0]
    try:
        fr = edge_frame(P0, j0, scene.pivot.normalized(), k0, eps)
    except CoplanarEdge:
        return []
    out = []
    for k, P in enumerate(scene.polyhedra):
        if k == k0:
            continue
        for e in P.edges:
            a, b = P.edge_points[e.index]
            la, lb = fr.to_local(a), fr.to_local(b)
            n1, n2 = P.normals[e.facets[0]], P.normals[e.facets[1]]
            ev = _regulus_events(fr, P, e.index)
            run = None
            for t0, t1 in zip(ev, ev[1:]):
                if t1 - t0 < 1e-12:
                    continue
                ok = _regulus_valid(fr, la, lb, n1, n2, 0.5 * (t0 + t1))
                if ok:
                    run = (run[0], t1) if run is not None else (t0, t1)
                elif run is not None:
                    out.append(Regulus((k0, j0), (k, e.index), (k0, k), run, fr, la, lb))
                    run = None
            if run is not None:
                out.append(Regulus((k0, j0), (k, e.index), (k0, k), run, fr, la, lb))
    return out


def all_reguli(scene, eps: float = EPS) -> list[Regulus]:
    return [r for k, P in enumerate(scene.polyhedra) for e in P.edges for r in reguli_for_edge((k, e.index), scene, eps)]


# pivot disjoint from every polyhedron --------------------------------------------


@dataclass
class DisjointCaseReport:
    reguli: int = 0
    solves: int = 0
    plane_crossings: int = 0
    planes: int = 0
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _check_disjoint(scene, eps):
    from .geometry import NotSeparable, clip_interval, contact_tolerance, separating_plane_bodies

    for P in scene.polyhedra:
        if clip_interval(scene.pivot, P, contact_tolerance(P, scene.pivot, eps)) is not None:
            raise PreconditionViolated("the pivot meets a polyhedron")
    for P, Q in itertools.combinations(scene.polyhedra, 2):
        try:
            separating_plane_bodies(P, Q, eps)
        except NotSeparable as exc:
            raise PreconditionViolated("two polyhedra intersect") from exc


def _pivot_planes(scene, eps):
    """One plane containing the pivot and separating it from each polyhedron."""
    return [separating_planes_line_body(scene.pivot, P, eps)[0] for P in scene.polyhedra]


def region_disjoint_case(scene, eps: float = EPS, report: DisjointCaseReport | None = None) -> StabbingRegion:
    """Vertices of the stabbing region when the pivot misses every polyhedron, by tracing reguli.

    Every vertex defined by three polyhedra lies on a regulus of two-edge
    tangents and on the line of a third edge, so it is one of the at most
    two lines meeting the pivot and three edge lines.  Crossings of the
    reguli with the planes through the pivot that separate it from the
    polyhedra are counted as diagnostics.
    """
    t0 = time.perf_counter()
    rep = report if report is not None else DisjointCaseReport()
    if scene.k == 0:
        return StabbingRegion(scene, [])
    _check_disjoint(scene, eps)
    piv = scene.pivot.normalized()
    H = _pivot_planes(scene, eps)
    rep.planes = len(H)
    lines = [(k, e.index, P.edge_lines[e.index].normalized()) for k, P in enumerate(scene.polyhedra) for e in P.edges]
    LD = np.array([L.direction for _, _, L in lines])
    LM = np.array([L.moment for _, _, L in lines])
    cands: list[PluckerLine] = []
    for k0, P0 in enumerate(scene.polyhedra):
        for e in P0.edges:
            regs = reguli_for_edge((k0, e.index), scene, eps)
            rep.reguli += len(regs)
            if not regs:
                continue
            L0 = P0.edge_lines[e.index].normalized()
            for r in regs:
                Le = scene.polyhedra[r.edge[0]].edge_lines[r.edge[1]].normalized()
                keep = np.array([not ((k == k0 and j == e.index) or (k, j) == r.edge) for k, j, _ in lines])
                n = int(keep.sum())
                D = np.empty((n, 4, 3))
                M = np.empty((n, 4, 3))
                D[:, 0], M[:, 0] = piv.direction, piv.moment
                D[:, 1], M[:, 1] = L0.direction, L0.moment
                D[:, 2], M[:, 2] = Le.direction, Le.moment
                D[:, 3], M[:, 3] = LD[keep], LM[keep]
                dirs, moms, valid = batch_transversals(D, M)
                rep.solves += n
                for i, s in zip(*np.where(valid)):
                    L = PluckerLine(dirs[i, s], moms[i, s])
                    if _on_regulus(r, L):
                        cands.append(L)
                for h in H:
                    # h contains the pivot: the only line of h meeting both edge lines
                    x0, xe = h.intersect_line(L0), h.intersect_line(Le)
                    if x0 is None or xe is None:
                        continue
                    try:
                        rep.plane_crossings += int(_on_regulus(r, plucker_from_points(x0, xe)))
                    except GeometryError:
                        continue
    cands.extend(degenerate_candidates(scene, eps))
    verts = certify_candidates(cands, scene, min_codim=3, max_depth=0, pivot=scene.pivot, eps=eps)
    rep.seconds = time.perf_counter() - t0
    return StabbingRegion(scene, verts, diagnostics=[f"plane crossings: {rep.plane_crossings}"])


def _on_regulus(r: Regulus, L: PluckerLine, tol: float = 1e-9) -> bool:
    fr = r.frame
    from .engine import _theta_of_line

    th = _theta_of_line(fr, L)
    lo, hi = r.interval
    if not (lo - tol <= th <= hi + tol):
        return False
    try:
        ref = r.line_at(min(max(th, lo), hi))
    except GeometryError:
        return False
    a, b = ref.normalized(), L.normalized()
    if float(a.direction @ b.direction) < 0:
        b = b.reversed()
    scale = max(1.0, float(np.linalg.norm(a.point())))
    return bool(np.linalg.norm(a.direction - b.direction) <= 1e-6 and np.linalg.norm(a.point() - b.point()) <= 1e-6 * scale)


# all lines, not only those through a pivot ----------------------------------------


def _edge_line_arrays(P):
    Ls = [L.normalized() for L in P.edge_lines]
    return np.array([L.direction for L in Ls]), np.array([L.moment for L in Ls]), Ls


def _global_degenerate_candidates(scene, eps) -> list[PluckerLine]:
    """Lines whose contacts come from at most two polyhedra, each contributing two or more conditions."""
    polys = scene.polyhedra
    out: list[PluckerLine] = []

    def add(p, q):
        try:
            out.append(plucker_from_points(p, q))
        except GeometryError:
            pass

    # edge lines and facet diagonals of one polyhedron
    for P in polys:
        for f in P.facets:
            for i, j in itertools.combinations(f, 2):
                add(P.vertices[i], P.vertices[j])
    for (ip, P), (iq, Q) in itertools.permutations(enumerate(polys), 2):
        Dq, Mq, EQ = _edge_line_arrays(Q)
        pairs_q = np.array(list(itertools.combinations(range(len(EQ)), 2)))
        if ip < iq:
            # two edges of each polyhedron
            Dp, Mp, _ = _edge_line_arrays(P)
            pairs_p = np.array(list(itertools.combinations(range(len(Dp)), 2)))
            I = np.array(np.meshgrid(np.arange(len(pairs_p)), np.arange(len(pairs_q)), indexing="ij")).reshape(2, -1).T
            for s in range(0, len(I), 100_000):
                J = I[s:s + 100_000]
                a, b = pairs_p[J[:, 0]].T
                c, d = pairs_q[J[:, 1]].T
                D = np.stack([Dp[a], Dp[b], Dq[c], Dq[d]], axis=1)
                M = np.stack([Mp[a], Mp[b], Mq[c], Mq[d]], axis=1)
                dirs, moms, valid = batch_transversals(D, M)
                for i, r in zip(*np.where(valid)):
                    out.append(PluckerLine(dirs[i, r], moms[i, r]))
            # two vertices; two facet planes
            for v in P.vertices:
                for w in Q.vertices:
                    add(v, w)
            for hp in P.planes:
                for hq in Q.planes:
                    d = np.cross(hp.normal, hq.normal)
                    if np.linalg.norm(d) < 1e-12:
                        continue
                    x = np.linalg.solve(np.array([hp.normal, hq.normal, d]), np.array([hp.offset, hq.offset, 0.0]))
                    out.append(PluckerLine.from_point_direction(x, d))
        # a vertex of P and two edges of Q: the line through the vertex meeting both
        P0 = np.array([L.point() for L in EQ])
        for v in P.vertices:
            N = np.cross(Dq, v[None, :] - P0)
            dd = np.cross(N[pairs_q[:, 0]], N[pairs_q[:, 1]])
            for x in dd[np.linalg.norm(dd, axis=1) > 1e-12]:
                out.append(PluckerLine.from_point_direction(v, x))
        # a facet plane of P with two edges of Q, or with a facet vertex and one edge of Q
        for fi, h in enumerate(P.planes):
            X = [x for x in (h.intersect_line(L) for L in EQ) if x is not None]
            for x, y in itertools.combinations(X, 2):
                add(x, y)
            for vi in P.facets[fi]:
                for x in X:
                    add(P.vertices[vi], x)
    return out


def extremal_lines_global(scene, eps: float = EPS, stats: SweepStats | None = None) -> list[ExtremalStabbingLine]:
    """Extremal transversals of the scene among all lines.

    Lines tangent to some polyhedron ``P0`` at the relative interior of an
    edge ``e0`` are extremal lines of the other polyhedra among the lines
    through the line of ``e0``, restricted to those crossing the segment;
    the rest touch at most two polyhedra and are enumerated directly.
    """
    from .scenes import Scene

    stats = stats if stats is not None else SweepStats()
    t0 = time.perf_counter()
    if scene.k == 0:
        return []
    cands: list[PluckerLine] = []
    for k0, P0 in enumerate(scene.polyhedra):
        others = [P for k, P in enumerate(scene.polyhedra) if k != k0]
        for e in P0.edges:
            L0 = P0.edge_lines[e.index].normalized()
            sub = Scene(others, L0, scene.seed, {})
            a, b = P0.edge_points[e.index]
            p0, u = L0.point(), L0.unit_direction()
            ta, tb = sorted((float((a - p0) @ u), float((b - p0) @ u)))
            if not others:
                continue
            c, _ = sweep_candidates(sub, "structured", scene.seed, eps, pivot_segment=(ta, tb), stats=stats)
            c.extend(degenerate_candidates(sub, eps))
            cands.extend(c)
    cands.extend(_global_degenerate_candidates(scene, eps))
    out = certify_candidates(cands, scene, min_codim=4, max_depth=0, pivot=None, eps=eps)
    stats.seconds += time.perf_counter() - t0
    return out
