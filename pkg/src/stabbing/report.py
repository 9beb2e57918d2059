"""JSON reports and SVG plots of two-dimensional parameter regions."""

from __future__ import annotations

import io
import json
import re
from collections import Counter
from xml.sax.saxutils import escape

import numpy as np

from .envelope import Region2D
from .extremal import MATCH_TOL

SCHEMA = "stabbing-report/1"

# keys that change between identical runs; ignored by report comparison
VOLATILE = ("timings",)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, float) and not np.isfinite(x):
        return None if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def depth_histogram(vertices) -> dict:
    return {str(d): c for d, c in sorted(Counter(v.depth for v in vertices).items())}


def build_report(command: dict, scene=None, vertices=(), counts: dict | None = None, timings: dict | None = None,
                 diagnostics=(), extra: dict | None = None) -> dict:
    """Assemble a report; ``counts`` always includes the vertex count and depth histogram."""
    vertices = list(vertices)
    recs = sorted((_rounded(v.to_dict()) for v in vertices), key=_record_key)
    c = {"vertices": len(recs), "depth_histogram": depth_histogram(vertices)}
    c.update(counts or {})
    out = {
        "schema": SCHEMA,
        "command": dict(command),
        "scene": None if scene is None else {"digest": scene.digest(), "k": scene.k, "n": scene.n,
                                             "flags": dict(scene.flags)},
        "counts": c,
        "vertices": recs,
        "timings": dict(timings or {}),
        "diagnostics": list(diagnostics),
    }
    if extra:
        out.update(extra)
    return _jsonable(out)


def _rounded(x, digits: int = 10):
    if isinstance(x, dict):
        return {k: _rounded(v, digits) for k, v in x.items()}
    if isinstance(x, list):
        return [_rounded(v, digits) for v in x]
    if isinstance(x, float):
        return round(x, digits) + 0.0
    return x


def _record_key(rec: dict) -> tuple:
    row = _canon(np.r_[rec["point"], rec["direction"]])
    return tuple(np.round(row[3:], 6)) + tuple(np.round(row[:3], 6))


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def check_report(report: dict) -> list[str]:
    """Violated report invariants (empty when the report is consistent)."""
    bad = []
    if report.get("schema") != SCHEMA:
        bad.append("schema")
    c = report.get("counts", {})
    if c.get("vertices") != len(report.get("vertices", [])):
        bad.append("counts.vertices")
    hist = c.get("depth_histogram", {})
    if sum(hist.values()) != len(report.get("vertices", [])):
        bad.append("counts.depth_histogram")
    for key in ("permutations", "patches", "issues"):
        if key in c and isinstance(report.get(key), list) and c[key] != len(report[key]):
            bad.append(f"counts.{key}")
    return bad


def _vertex_array(report: dict):
    pts = [np.r_[v["point"], v["direction"]] for v in report.get("vertices", [])]
    return np.array(pts).reshape(-1, 6)


def _canon(row):
    p, d = row[:3], row[3:]
    i = int(np.argmax(np.abs(d) > 1e-6))
    if d[i] < 0:
        d = -d
    return np.r_[p, d]


def compare_reports(a: dict, b: dict, tol: float = MATCH_TOL) -> tuple[bool, dict]:
    """Vertex-set equality of two reports, up to line orientation and ``tol``."""
    A = [_canon(r) for r in _vertex_array(a)]
    B = [_canon(r) for r in _vertex_array(b)]
    used = set()
    missing = []
    for i, x in enumerate(A):
        j = next((j for j, y in enumerate(B) if j not in used and np.linalg.norm(x - y) <= tol), None)
        if j is None:
            missing.append(i)
        else:
            used.add(j)
    extra = [j for j in range(len(B)) if j not in used]
    return not missing and not extra, {"only_in_first": missing, "only_in_second": extra,
                                       "first": len(A), "second": len(B)}


# SVG ---------------------------------------------------------------------------------


def _vertex_title(v) -> str:
    labs = ", ".join(str(l) for l in v.labels if l is not None)
    return f"{v.kind} ({v.x:.6g}, {v.value:.6g}): {labs}"


def emit_svg(region: Region2D, path, density: int = 64, xlabel: str = "theta", ylabel: str = "phi",
             title: str | None = None, limits=None) -> list[dict]:
    """Plot a region: slab fill, boundary arcs and marked vertices.

    Arcs are sampled at ``density`` points per slab.  Every vertex marker
    sits in a group ``vertex-<i>`` carrying a ``<title>`` tooltip with its
    coordinates and defining arcs.  Returns one record per vertex with its
    data coordinates and its position in SVG user units.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5), dpi=72)
    try:
        for xs, lv, uv in region.sample_boundary(density):
            lo = np.where(np.isfinite(lv), lv, np.nan)
            hi = np.where(np.isfinite(uv), uv, np.nan)
            if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
                ax.fill_between(xs, lo, hi, color="tab:blue", alpha=0.25, lw=0)
            ax.plot(xs, lo, color="tab:red", lw=1)
            ax.plot(xs, hi, color="tab:green", lw=1)
        verts = region.vertices if not region.empty else []
        for i, v in enumerate(verts):
            (m,) = ax.plot([v.x], [v.value], "o", ms=4, color="k")
            m.set_gid(f"vertex-{i}")
        if limits is not None:
            ax.set_xlim(*limits[0])
            ax.set_ylim(*limits[1])
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.canvas.draw()
        height = fig.get_size_inches()[1] * 72
        recs = []
        for i, v in enumerate(verts):
            px, py = ax.transData.transform((v.x, v.value))
            recs.append({"x": float(v.x), "y": float(v.value), "kind": v.kind,
                         "labels": [None if l is None else str(l) for l in v.labels],
                         "svg": [float(px), float(height - py)]})
        buf = io.StringIO()
        fig.savefig(buf, format="svg")
    finally:
        plt.close(fig)
    text = buf.getvalue()
    for i, v in enumerate(verts):
        text = text.replace(f'<g id="vertex-{i}">', f'<g id="vertex-{i}">\n   <title>{escape(_vertex_title(v))}</title>', 1)
    with open(path, "w") as fh:
        fh.write(text)
    return recs


def svg_vertex_positions(text: str) -> dict[int, tuple[float, float]]:
    """Marker positions of the ``vertex-<i>`` groups of an SVG written by :func:`emit_svg`."""
    out = {}
    for m in re.finditer(r'<g id="vertex-(\d+)">(.*?)</g>', text, re.S):
        u = re.search(r'<use[^>]*x="([-\d.e]+)"[^>]*y="([-\d.e]+)"', m.group(2))
        if u:
            out[int(m.group(1))] = (float(u.group(1)), float(u.group(2)))
    return out


def emit_envelope_svg(envelope, path, resolution: int = 96, vertices=()) -> None:
    """Heat map of ``E_U`` over ``(theta, phi)`` with the envelope vertices marked."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    thetas = np.linspace(0.0, 2 * np.pi, resolution)
    phis = np.linspace(1e-3, np.pi - 1e-3, resolution)
    Z = np.array([envelope.values(float(t), phis)[0] for t in thetas]).T
    fig, ax = plt.subplots(figsize=(6, 4.5), dpi=72)
    try:
        Zm = np.ma.masked_invalid(np.where(np.isfinite(Z), Z, np.nan))
        if Zm.count():
            mesh = ax.pcolormesh(thetas, phis, Zm, shading="auto", cmap="viridis")
            fig.colorbar(mesh, ax=ax, label="E_U")
        for i, v in enumerate(vertices):
            if v.coords is not None:
                (m,) = ax.plot([v.coords.theta], [v.coords.phi], "o", ms=4, color="r")
                m.set_gid(f"vertex-{i}")
        ax.set_xlabel("theta")
        ax.set_ylabel("phi")
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
