"""Brute-force ground truth: exhaustive feature combinations and grid membership.

This module shares only the extremality definition with the engine
(:func:`stabbing.extremal.certify_candidates`); candidate generation is a
plain enumeration of every feature combination that can pin down a line
through the pivot.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .extremal import ExtremalStabbingLine, certify_candidates
from .geometry import EPS, GeometryError, Plane, PluckerLine, batch_transversals, contact_tolerance, plucker_from_points
from .linespace import PivotFrame, slice_points

MAX_COMBINATIONS = 10**7
_CHUNK = 100_000


class TooLarge(GeometryError):
    code = "too-large"


def _edges(P):
    A = P.edge_points[:, 0]
    B = P.edge_points[:, 1]
    return A, B


def combination_count(scene) -> int:
    ne = [len(P.edges) for P in scene.polyhedra]
    nv = [len(P.vertices) for P in scene.polyhedra]
    nf = [P.n_facets for P in scene.polyhedra]
    triples = sum(a * b * c for a, b, c in itertools.combinations(ne, 3))
    return triples + sum(nv) * sum(ne) + sum(nf) * sum(ne) + sum(nv) ** 2


def _segment_hits(dirs, moms, A, B, tol):
    """Whether each line (rows of dirs/moms) meets segment AB within ``tol``; and the parameter."""
    # closest points between the line and the segment's line
    p = np.cross(dirs, moms)
    D = B - A
    w = A - p
    dd = np.einsum("ij,ij->i", D, D)
    du = np.einsum("ij,ij->i", D, dirs)
    den = dd - du * du
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (np.einsum("ij,ij->i", w, dirs) * du - np.einsum("ij,ij->i", w, D)) / den
    s = np.where(np.abs(den) > 1e-300, s, 0.5)
    X = A + s[:, None] * D
    r = X - p
    r = r - np.einsum("ij,ij->i", r, dirs)[:, None] * dirs
    dist = np.linalg.norm(r, axis=1)
    L = np.sqrt(dd)
    return (s >= -tol / L) & (s <= 1 + tol / L) & (dist <= tol)


def _triple_candidates(scene, eps) -> list[PluckerLine]:
    piv = scene.pivot.normalized()
    out = []
    tol = 1e3 * eps * scene.scale
    data = []
    for P in scene.polyhedra:
        A, B = _edges(P)
        Ls = [L.normalized() for L in P.edge_lines]
        data.append((A, B, np.array([L.direction for L in Ls]), np.array([L.moment for L in Ls])))
    for a, b, c in itertools.combinations(range(scene.k), 3):
        na, nb, nc = (len(data[i][0]) for i in (a, b, c))
        I = np.array(np.meshgrid(np.arange(na), np.arange(nb), np.arange(nc), indexing="ij")).reshape(3, -1).T
        for s in range(0, len(I), _CHUNK):
            J = I[s:s + _CHUNK]
            n = len(J)
            D = np.empty((n, 4, 3))
            M = np.empty((n, 4, 3))
            D[:, 0], M[:, 0] = piv.direction, piv.moment
            for col, poly in enumerate((a, b, c)):
                D[:, col + 1] = data[poly][2][J[:, col]]
                M[:, col + 1] = data[poly][3][J[:, col]]
            dirs, moms, valid = batch_transversals(D, M)
            for r in range(2):
                ok = valid[:, r].copy()
                for col, poly in enumerate((a, b, c)):
                    A, B = data[poly][0][J[:, col]], data[poly][1][J[:, col]]
                    ok &= _segment_hits(dirs[:, r], moms[:, r], A, B, tol)
                for i in np.where(ok)[0]:
                    out.append(PluckerLine(dirs[i, r], moms[i, r]))
    return out


def _vertex_edge_candidates(scene, eps) -> list[PluckerLine]:
    p0, u = scene.pivot.point(), scene.pivot.unit_direction()
    out = []
    for k, P in enumerate(scene.polyhedra):
        for kk, Q in enumerate(scene.polyhedra):
            if kk == k:
                continue
            A, B = _edges(Q)
            D = B - A
            for v in P.vertices:
                n = np.cross(u, v - p0)
                if np.linalg.norm(n) < 1e-12:
                    continue
                den = D @ n
                with np.errstate(divide="ignore", invalid="ignore"):
                    lam = ((v - A) @ n) / den
                for i in np.where((np.abs(den) > 1e-14) & (lam >= 0) & (lam <= 1))[0]:
                    try:
                        out.append(plucker_from_points(v, A[i] + lam[i] * D[i]))
                    except GeometryError:
                        pass
    return out


def _facet_candidates(scene, eps) -> list[PluckerLine]:
    out = []
    for k, P in enumerate(scene.polyhedra):
        for f, h in enumerate(P.planes):
            q = h.intersect_line(scene.pivot)
            if q is None:
                continue
            for vi in P.facets[f]:
                try:
                    out.append(plucker_from_points(q, P.vertices[vi]))
                except GeometryError:
                    pass
            for kk, Q in enumerate(scene.polyhedra):
                if kk == k:
                    continue
                A, B = _edges(Q)
                dA, dB = h.signed_distance(A), h.signed_distance(B)
                for i in np.where(dA * dB < 0)[0]:
                    X = A[i] + (dA[i] / (dA[i] - dB[i])) * (B[i] - A[i])
                    try:
                        out.append(plucker_from_points(q, X))
                    except GeometryError:
                        pass
    return out


def _vertex_vertex_candidates(scene, eps) -> list[PluckerLine]:
    piv = scene.pivot.normalized()
    out = []
    tol = 1e3 * eps * scene.scale
    for (k, P), (kk, Q) in itertools.combinations(enumerate(scene.polyhedra), 2):
        for v in P.vertices:
            for w in Q.vertices:
                try:
                    L = plucker_from_points(v, w).normalized()
                except GeometryError:
                    continue
                num = abs(L.direction.dot(piv.moment) + piv.direction.dot(L.moment))
                s = np.linalg.norm(np.cross(L.direction, piv.direction))
                if s > 1e-12 and num / s <= tol:
                    out.append(L)
    return out


def oracle_candidates(scene, eps: float = EPS, limit: int = MAX_COMBINATIONS) -> list[PluckerLine]:
    count = combination_count(scene)
    if count > limit:
        raise TooLarge(f"{count} candidate combinations exceed the limit {limit}")
    return (
        _triple_candidates(scene, eps)
        + _vertex_edge_candidates(scene, eps)
        + _facet_candidates(scene, eps)
        + _vertex_vertex_candidates(scene, eps)
    )


def brute_force_extremal_lines(scene, max_depth: int = 0, eps: float = EPS, limit: int = MAX_COMBINATIONS) -> list[ExtremalStabbingLine]:
    """Extremal lines through the pivot missing at most ``max_depth`` polyhedra, by exhaustive enumeration."""
    if scene.k == 0:
        return []
    return certify_candidates(oracle_candidates(scene, eps, limit), scene, 3, max_depth, scene.pivot, eps)


# grid membership ------------------------------------------------------------------


@dataclass
class GridReport:
    thetas: np.ndarray
    phis: np.ndarray
    zs: np.ndarray
    inside: np.ndarray  # (nt, np, nz) transversal-of-all flags
    disagreements: list = field(default_factory=list)  # (i, j, l, oracle flag, region flag, margin)
    banded: int = 0

    @property
    def count(self) -> int:
        return int(self.inside.sum())

    @property
    def unexplained(self) -> list:
        return [d for d in self.disagreements if not d[-1]]

    def to_dict(self) -> dict:
        return {
            "resolution": [len(self.thetas), len(self.phis), len(self.zs)],
            "transversal_points": self.count,
            "disagreements": len(self.disagreements),
            "outside_band": len(self.unexplained),
        }


def grid_axes(scene, resolution: int, z_range=None):
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    thetas = (np.arange(resolution) + 0.5) * (2 * math.pi / resolution)
    phis = (np.arange(resolution) + 0.5) * (math.pi / resolution)
    if z_range is None:
        fr = PivotFrame(scene.pivot)
        zz = np.concatenate([fr.to_local(P.vertices)[:, 2] for P in scene.polyhedra]) if scene.k else np.zeros(1)
        pad = 0.25 * (zz.max() - zz.min()) + 1e-3 * scene.scale
        z_range = (zz.min() - pad, zz.max() + pad)
    zs = np.linspace(z_range[0], z_range[1], resolution)
    return thetas, phis, zs


def transversal_grid(scene, thetas, phis, zs, eps: float = EPS) -> np.ndarray:
    """Direct stabbing test of every grid line against every polyhedron."""
    fr = PivotFrame(scene.pivot)
    T, F = np.meshgrid(thetas, phis, indexing="ij")
    dloc = np.stack([np.sin(F) * np.cos(T), np.sin(F) * np.sin(T), np.cos(F)], axis=-1)
    dirs = dloc @ fr.R  # (nt, np, 3)
    inside = np.ones((len(thetas), len(phis), len(zs)), bool)
    for P in scene.polyhedra:
        tol = contact_tolerance(P, None, eps)
        a = dirs @ P.normals.T  # (nt, np, F)
        c0 = P.normals @ fr.origin - P.offsets  # (F,)
        cw = P.normals @ fr.w  # (F,)
        c = c0[None, :] + zs[:, None] * cw[None, :]  # (nz, F)
        par = np.abs(a) < 1e-13
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (tol - c[None, None, :, :]) / a[:, :, None, :]  # (nt, np, nz, F)
        pos = (a > 0)[:, :, None, :]
        neg = ((a < 0))[:, :, None, :]
        hi = np.where(pos, t, np.inf).min(axis=3)
        lo = np.where(neg, t, -np.inf).max(axis=3)
        blocked = np.any(par[:, :, None, :] & (c[None, None, :, :] > tol), axis=3)
        inside &= (lo <= hi) & ~blocked
    return inside


def grid_region_check(scene, resolution: int = 50, region=None, band: float | None = None, eps: float = EPS,
                      z_range=None) -> GridReport:
    """Transversal flags on a (theta, phi, z) grid, compared with ``region`` when given.

    A disagreement is explained when the region's boundary margin at that
    point is within ``band``.
    """
    thetas, phis, zs = grid_axes(scene, resolution, z_range)
    inside = transversal_grid(scene, thetas, phis, zs, eps)
    rep = GridReport(thetas, phis, zs, inside)
    if region is None:
        return rep
    if band is None:
        band = 1e3 * eps * scene.scale
    flags, margins = region.membership_grid(thetas, phis, zs)
    for i, j, l in zip(*np.where(flags != inside)):
        m = float(margins[i, j, l])
        rep.disagreements.append((int(i), int(j), int(l), bool(inside[i, j, l]), bool(flags[i, j, l]), m, abs(m) <= band))
    rep.banded = sum(1 for d in rep.disagreements if d[-1])
    return rep


# all lines, not only those through a pivot ------------------------------------------


def _all_edge_lines(scene):
    A = np.vstack([P.edge_points[:, 0] for P in scene.polyhedra])
    B = np.vstack([P.edge_points[:, 1] for P in scene.polyhedra])
    Ls = [L.normalized() for P in scene.polyhedra for L in P.edge_lines]
    return A, B, np.array([L.direction for L in Ls]), np.array([L.moment for L in Ls])


def global_combination_count(scene) -> int:
    E = sum(len(P.edges) for P in scene.polyhedra)
    V = sum(len(P.vertices) for P in scene.polyhedra)
    F = sum(P.n_facets for P in scene.polyhedra)
    return math.comb(E, 4) + (V + F) * math.comb(E, 2) + V * V + F * F


def brute_force_global(scene, eps: float = EPS, limit: int = MAX_COMBINATIONS) -> list[ExtremalStabbingLine]:
    """Extremal transversals among all lines, by enumerating every codimension-four contact combination.

    Families: four edge lines; a vertex and two edge lines; a facet plane and
    two edge lines; a facet plane, one of its vertices and an edge line; two
    vertices (edge lines and facet diagonals included); two facet planes.
    """
    if scene.k == 0:
        return []
    count = global_combination_count(scene)
    if count > limit:
        raise TooLarge(f"{count} candidate combinations exceed the limit {limit}")
    tol = 1e3 * eps * scene.scale
    A, B, LD, LM = _all_edge_lines(scene)
    nE = len(A)
    out: list[PluckerLine] = []
    combos = np.array(list(itertools.combinations(range(nE), 4)), dtype=int).reshape(-1, 4)
    for s in range(0, len(combos), _CHUNK):
        J = combos[s:s + _CHUNK]
        dirs, moms, valid = batch_transversals(LD[J], LM[J])
        for r in range(2):
            ok = valid[:, r].copy()
            for c in range(4):
                ok &= _segment_hits(dirs[:, r], moms[:, r], A[J[:, c]], B[J[:, c]], tol)
            out.extend(PluckerLine(dirs[i, r], moms[i, r]) for i in np.where(ok)[0])
    pairs = list(itertools.combinations(range(nE), 2))
    P0 = np.cross(LD, LM)  # closest points of the edge lines to the origin
    verts = np.vstack([P.vertices for P in scene.polyhedra])
    for v in verts:
        N = np.cross(LD, v[None, :] - P0)
        for i, j in pairs:
            d = np.cross(N[i], N[j])
            if np.linalg.norm(d) > 1e-12:
                out.append(PluckerLine.from_point_direction(v, d))
    planes = [(P, f, h) for P in scene.polyhedra for f, h in enumerate(P.planes)]
    for P, f, h in planes:
        dA, dB = h.signed_distance(A), h.signed_distance(B)
        hit = np.where(dA * dB < 0)[0]
        X = [A[i] + (dA[i] / (dA[i] - dB[i])) * (B[i] - A[i]) for i in hit]
        for x, y in itertools.combinations(X, 2):
            try:
                out.append(plucker_from_points(x, y))
            except GeometryError:
                pass
        for vi in P.facets[f]:
            for x in X:
                try:
                    out.append(plucker_from_points(P.vertices[vi], x))
                except GeometryError:
                    pass
    for v, w in itertools.combinations(verts, 2):
        try:
            out.append(plucker_from_points(v, w))
        except GeometryError:
            pass
    for (_, _, h1), (_, _, h2) in itertools.combinations(planes, 2):
        d = np.cross(h1.normal, h2.normal)
        if np.linalg.norm(d) < 1e-12:
            continue
        x = np.linalg.solve(np.array([h1.normal, h2.normal, d]), np.array([h1.offset, h2.offset, 0.0]))
        out.append(PluckerLine.from_point_direction(x, d))
    return certify_candidates(out, scene, 4, 0, None, eps)


# lines parallel to a plane -------------------------------------------------------------


def brute_force_in_plane(scene, h, eps: float = EPS) -> list[ExtremalStabbingLine]:
    """Extremal transversals among the lines meeting the pivot and parallel to ``h``.

    A plane ``h`` not parallel to the pivot: every pair of edges from two
    polyhedra is tested by sweeping the planes parallel to ``h``; inside the
    plane at offset ``c`` the pivot, and the two edge lines, leave three
    points whose collinearity is a quadratic condition on ``c``.  A plane
    parallel to the pivot: every pair of section points of two polyhedra in
    the pivot plane parallel to ``h``.
    """
    n = np.asarray(h.normal if hasattr(h, "normal") else h, float)
    n = n / np.linalg.norm(n)
    o = scene.pivot.point()
    w = scene.pivot.unit_direction()
    out: list[PluckerLine] = []
    if abs(float(n @ w)) <= eps:
        plane = Plane.through(o, n)
        secs = []
        for P in scene.polyhedra:
            pts, _ = slice_points(P, plane)
            if len(pts) == 0:
                return []
            secs.append(pts)
        for X, Y in itertools.combinations(secs, 2):
            for x in X:
                for y in Y:
                    try:
                        out.append(plucker_from_points(x, y))
                    except GeometryError:
                        pass
    else:
        nw = float(n @ w)
        p0, p1 = o - (n @ o) / nw * w, w / nw
        segs = []
        for k, P in enumerate(scene.polyhedra):
            A, B = _edges(P)
            D = B - A
            nd = D @ n
            ok = np.abs(nd) > 1e-12 * np.linalg.norm(D, axis=1)
            A, D, nd = A[ok], D[ok], nd[ok]
            # point of each edge line on the plane x.n = c is q0 + c q1
            segs.append((A - ((A @ n) / nd)[:, None] * D - p0, D / nd[:, None] - p1))
        for (a0, a1), (b0, b1) in itertools.combinations(segs, 2):
            I, J = np.meshgrid(np.arange(len(a0)), np.arange(len(b0)), indexing="ij")
            I, J = I.ravel(), J.ravel()
            c0 = np.cross(a0[I], b0[J]) @ n
            c1 = (np.cross(a0[I], b1[J]) + np.cross(a1[I], b0[J])) @ n
            c2 = np.cross(a1[I], b1[J]) @ n
            for i in range(len(I)):
                for c in np.roots([c2[i], c1[i], c0[i]]):
                    if abs(c.imag) > 1e-9 * max(1.0, abs(c.real)):
                        continue
                    c = float(c.real)
                    p = p0 + c * p1
                    q = p + a0[I[i]] + c * a1[I[i]]
                    r = p + b0[J[i]] + c * b1[J[i]]
                    far = q if np.linalg.norm(q - p) >= np.linalg.norm(r - p) else r
                    try:
                        out.append(plucker_from_points(p, far))
                    except GeometryError:
                        pass
    return certify_candidates(out, scene, min_codim=2, max_depth=0, pivot=scene.pivot, eps=eps, min_bodies=2)
