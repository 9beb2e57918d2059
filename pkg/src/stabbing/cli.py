"""Command-line interface: batch computations with JSON reports and SVG plots."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .geometry import EPS, GeometryError, Plane
from .linespace import coords_of_line
from .report import build_report, compare_reports, dumps_report, emit_envelope_svg, emit_svg

COMMANDS = ("pairwise", "through-line", "in-plane", "global", "envelope", "disjoint", "unbounded",
            "permutations", "oracle", "gen-scene", "audit", "compare")

# exit statuses
EXIT_OK, EXIT_FINDINGS, EXIT_ERROR, EXIT_USAGE = 0, 1, 2, 64


class CliError(Exception):
    def __init__(self, code: str, message: str, status: int = EXIT_ERROR):
        super().__init__(message)
        self.code = code
        self.status = status


def _with_coords(vertices, pivot, eps):
    for v in vertices:
        if v.coords is None:
            try:
                v.coords = coords_of_line(v.line, pivot, eps)
            except GeometryError:
                pass
    return vertices


def _echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _load(args):
    from .scenes import load_scene

    try:
        return load_scene(args.scene)
    except OSError as exc:
        raise CliError("io-error", str(exc)) from exc


def _svg_dir(args) -> Path | None:
    if not args.svg_out:
        return None
    d = Path(args.svg_out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _patch_svgs(patches, args, prefix: str) -> list[dict]:
    """One SVG per nonempty sweep patch; records its file and vertex marks."""
    d = _svg_dir(args)
    out = []
    for p in patches:
        if p.region.empty:
            continue
        rec = {"polyhedron": p.polyhedron, "edge": p.edge, "cell": p.cell,
               "theta_range": [float(x) for x in p.theta_range]}
        if d is not None and len(out) < args.svg_limit:
            name = f"{prefix}_P{p.polyhedron}_e{p.edge}_c{p.cell}_{len(out)}.svg"
            rec["svg"] = name
            rec["marks"] = emit_svg(p.region, d / name, density=args.svg_density,
                                    title=f"P{p.polyhedron} edge {p.edge} cell {p.cell}")
        out.append(rec)
    return out


def _region_report(args, scene, reg, t, prefix, extra_counts=None):
    patches = _patch_svgs(reg.patches, args, prefix)
    counts = {"patches": len(patches), "arcs": _arc_count(reg.patches)}
    if args.components:
        counts["components"] = reg.component_count(args.components)
    counts.update(extra_counts or {})
    stats = reg.stats.to_dict() if reg.stats is not None else {}
    return build_report(_echo(args), scene, _with_coords(reg.vertices, scene.pivot, args.eps), counts,
                        {"total": t}, list(reg.diagnostics), {"patches": patches, "stats": stats})


def _arc_count(patches) -> int:
    labs = set()
    for p in patches:
        for s in p.region.slabs:
            for a in (s.lower, s.upper):
                if a is not None:
                    labs.add((p.polyhedron, p.edge, p.cell, repr(a.label)))
    return len(labs)


# commands ----------------------------------------------------------------------------


def cmd_pairwise(args):
    from .regions import pairwise_region

    scene = _load(args)
    i, j = args.pair
    if not (0 <= i < scene.k and 0 <= j < scene.k and i != j):
        raise CliError("invalid-input", f"pair {i} {j} out of range for {scene.k} polyhedra", EXIT_USAGE)
    t0 = time.perf_counter()
    reg = pairwise_region(scene.polyhedra[i], scene.polyhedra[j], scene.pivot, args.eps)
    return _region_report(args, scene, reg, time.perf_counter() - t0, "pairwise")


def cmd_through_line(args):
    from .regions import region_through_line

    scene = _load(args)
    t0 = time.perf_counter()
    reg = region_through_line(scene, args.mode, args.seed, args.eps)
    return _region_report(args, scene, reg, time.perf_counter() - t0, "through")


def _normal(args, scene):
    if args.normal is None:
        rng = np.random.default_rng(args.seed)
        n = rng.normal(size=3)
    else:
        n = np.asarray(args.normal, float)
    if np.linalg.norm(n) == 0:
        raise CliError("invalid-input", "normal must be nonzero", EXIT_USAGE)
    return n / np.linalg.norm(n)


def cmd_in_plane(args):
    from .inplane import extremal_lines_in_plane, region_in_plane

    scene = _load(args)
    n = _normal(args, scene)
    t0 = time.perf_counter()
    reg = region_in_plane(scene, n, args.eps)
    verts = extremal_lines_in_plane(scene, n, args.eps)
    t = time.perf_counter() - t0
    xname = "theta" if reg.param == "theta" else "phi"
    marks = []
    d = _svg_dir(args)
    if d is not None:
        marks = emit_svg(reg.region, d / "in_plane.svg", density=args.svg_density, xlabel=xname, ylabel="z")
    counts = {"components": reg.region.components(), "arcs": len(reg.lower_arcs) + len(reg.upper_arcs),
              "region_vertices": len(reg.region.vertices)}
    extra = {"normal": n.tolist(), "param": reg.param, "theta_h": reg.theta_h, "marks": marks,
             "region_vertices": [{"x": v.x, "z": v.value, "kind": v.kind} for v in reg.region.vertices]}
    return build_report(_echo(args), scene, _with_coords(verts, scene.pivot, args.eps), counts, {"total": t},
                        reg.diagnostics, extra)


def cmd_global(args):
    from .engine import SweepStats
    from .regions import extremal_lines_global

    scene = _load(args)
    stats = SweepStats()
    t0 = time.perf_counter()
    verts = extremal_lines_global(scene, args.eps, stats)
    return build_report(_echo(args), scene, verts, {}, {"total": time.perf_counter() - t0}, stats.diagnostics,
                        {"stats": stats.to_dict()})


def cmd_envelope(args):
    from .unbounded import upper_envelope_EU

    scene = _load(args)
    t0 = time.perf_counter()
    env = upper_envelope_EU(scene, args.mode, args.seed, args.eps)
    t = time.perf_counter() - t0
    d = _svg_dir(args)
    if d is not None:
        emit_envelope_svg(env, d / "envelope.svg", vertices=env.vertices)
    viol = env.three_surface_violations()
    return build_report(_echo(args), scene, _with_coords(env.vertices, scene.pivot, args.eps),
                        {"three_surface_violations": len(viol)}, {"total": t}, env.diagnostics,
                        {"sweep_length": env.sweep_length})


def cmd_disjoint(args):
    from .regions import DisjointCaseReport, region_disjoint_case

    scene = _load(args)
    rep = DisjointCaseReport()
    t0 = time.perf_counter()
    reg = region_disjoint_case(scene, args.eps, rep)
    out = _region_report(args, scene, reg, time.perf_counter() - t0, "disjoint")
    out["disjoint_case"] = rep.to_dict()
    return out


def cmd_unbounded(args):
    from .unbounded import region_unbounded_case

    scene = _load(args)
    t0 = time.perf_counter()
    reg = region_unbounded_case(scene, args.mode, args.seed, args.eps)
    t = time.perf_counter() - t0
    d = _svg_dir(args)
    if d is not None and reg.envelope is not None:
        emit_envelope_svg(reg.envelope, d / "unbounded.svg", vertices=reg.vertices)
    ev = len(reg.envelope.vertices) if reg.envelope else 0
    return build_report(_echo(args), scene, _with_coords(reg.vertices, reg.scene.pivot, args.eps),
                        {"envelope_vertices": ev}, {"total": t}, reg.diagnostics)


def cmd_permutations(args):
    from .permutations import Labeler, enumerate_permutations
    from .regions import region_through_line

    scene = _load(args)
    t0 = time.perf_counter()
    lab = Labeler.build(scene, args.eps)
    reg = region_through_line(scene, args.mode, args.seed, args.eps)
    perms = sorted(enumerate_permutations(scene, args.eps, args.grid, reg.vertices, lab), key=lambda p: p.order)
    t = time.perf_counter() - t0
    k = scene.k
    bound = 2 * k * (k * (k - 1) // 2 + 1)
    counts = {"permutations": len(perms), "labels": lab.label_count, "wedges": lab.wedge_count,
              "intervals": lab.interval_count, "label_bound": bound}
    extra = {"permutations": [list(p.order) for p in perms]}
    return build_report(_echo(args), scene, _with_coords(reg.vertices, scene.pivot, args.eps), counts,
                        {"total": t}, list(reg.diagnostics) + list(lab.diagnostics), extra)


def cmd_oracle(args):
    from . import oracle

    scene = _load(args)
    t0 = time.perf_counter()
    extra = {"kind": args.kind}
    if args.kind == "through-line":
        verts = oracle.brute_force_extremal_lines(scene, eps=args.eps)
        grid = oracle.grid_region_check(scene, args.grid, eps=args.eps)
        extra["grid"] = grid.to_dict()
        counts = {"combinations": oracle.combination_count(scene), "grid_points": grid.count}
    elif args.kind == "global":
        verts = oracle.brute_force_global(scene, args.eps)
        counts = {"combinations": oracle.global_combination_count(scene)}
    else:
        n = _normal(args, scene)
        verts = oracle.brute_force_in_plane(scene, n, args.eps)
        extra["normal"] = n.tolist()
        counts = {}
    verts = _with_coords(verts, scene.pivot, args.eps)
    return build_report(_echo(args), scene, verts, counts, {"total": time.perf_counter() - t0}, [], extra)


def _flags(text: str | None) -> dict:
    if not text:
        return {}
    return {f.strip(): True for f in text.split(",") if f.strip()}


def cmd_gen_scene(args):
    from . import scenes

    t0 = time.perf_counter()
    if args.kind == "random":
        scene = scenes.gen_random_scene(args.k, args.n, args.box, args.seed, _flags(args.flags))
    elif args.kind == "prism":
        scene = scenes.gen_random_scene(args.k, args.n, args.box, args.seed, {"unbounded_parallel": True})
    elif args.kind == "scattered":
        scene = scenes.gen_random_scene(args.k, args.n, args.box, args.seed, {"scattered": True})
    elif args.kind == "lower-bound":
        scene = scenes.gen_lower_bound_scene(args.pairs, args.drum_facets, args.seed)
    else:
        try:
            scene = scenes.gen_paraboloid_scene(args.k, seed=args.seed)
        except ValueError as exc:
            raise CliError("invalid-input", str(exc), EXIT_USAGE) from exc
    if args.scene_out:
        try:
            scenes.save_scene(scene, args.scene_out)
        except OSError as exc:
            raise CliError("io-error", str(exc)) from exc
    issues = scenes.audit_general_position(scene, args.eps)
    extra = {"issues": [i.to_dict() for i in issues], "scene_file": args.scene_out}
    return build_report(_echo(args), scene, [], {"issues": len(issues)}, {"total": time.perf_counter() - t0}, [],
                        extra)


def cmd_audit(args):
    from .scenes import audit_general_position

    scene = _load(args)
    t0 = time.perf_counter()
    issues = audit_general_position(scene, args.eps, thorough=args.thorough)
    rep = build_report(_echo(args), scene, [], {"issues": len(issues)}, {"total": time.perf_counter() - t0}, [],
                       {"issues": [i.to_dict() for i in issues]})
    return rep, (EXIT_FINDINGS if issues else EXIT_OK)


def cmd_compare(args):
    reps = []
    for p in (args.first, args.second):
        try:
            reps.append(json.loads(Path(p).read_text()))
        except OSError as exc:
            raise CliError("io-error", str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise CliError("parse-error", f"{p}: {exc}") from exc
    same, detail = compare_reports(reps[0], reps[1], args.tol)
    rep = build_report(_echo(args), None, [], {"equal": int(same)}, {}, [], {"comparison": detail})
    return rep, (EXIT_OK if same else EXIT_FINDINGS)


# parser ------------------------------------------------------------------------------


def _common(p, scene: bool = True):
    if scene:
        p.add_argument("scene", help="scene JSON file")
    p.add_argument("--eps", type=float, default=EPS, help="numeric tolerance (default 1e-9)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--grid", type=int, default=50, help="grid resolution for oracle checks (default 50)")
    p.add_argument("--mode", default="structured", help="structured or randomized-dc")
    p.add_argument("--svg-out", default=None, help="directory for SVG plots")
    p.add_argument("--svg-limit", type=int, default=50, help="maximum number of patch plots")
    p.add_argument("--svg-density", type=int, default=64, help="samples per plotted arc")
    p.add_argument("--out", default="-", help="report path, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stabbing", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pairwise", help="stabbing region of two polyhedra through the pivot")
    _common(p)
    p.add_argument("--pair", type=int, nargs=2, default=(0, 1), metavar=("I", "J"))
    p.add_argument("--components", type=int, default=0, help="grid resolution for a component count (0: skip)")
    p.set_defaults(func=cmd_pairwise)

    p = sub.add_parser("through-line", help="extremal lines and region through the pivot")
    _common(p)
    p.add_argument("--components", type=int, default=0, help="grid resolution for a component count (0: skip)")
    p.set_defaults(func=cmd_through_line)

    p = sub.add_parser("in-plane", help="transversals meeting the pivot and parallel to a plane")
    _common(p)
    p.add_argument("--normal", type=float, nargs=3, default=None, metavar=("X", "Y", "Z"),
                   help="plane normal (default: seeded random)")
    p.set_defaults(func=cmd_in_plane)

    p = sub.add_parser("global", help="extremal lines among all lines")
    _common(p)
    p.set_defaults(func=cmd_global)

    p = sub.add_parser("envelope", help="upper envelope of the lower tangency heights")
    _common(p)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("disjoint", help="region through a pivot disjoint from every polyhedron")
    _common(p)
    p.add_argument("--components", type=int, default=0, help="grid resolution for a component count (0: skip)")
    p.set_defaults(func=cmd_disjoint)

    p = sub.add_parser("unbounded", help="region of polyhedra unbounded along the pivot")
    _common(p)
    p.set_defaults(func=cmd_unbounded)

    p = sub.add_parser("permutations", help="geometric permutations and their labels")
    _common(p)
    p.set_defaults(func=cmd_permutations)

    p = sub.add_parser("oracle", help="brute-force reference computations")
    _common(p)
    p.add_argument("--kind", choices=("through-line", "global", "in-plane"), default="through-line")
    p.add_argument("--normal", type=float, nargs=3, default=None, metavar=("X", "Y", "Z"))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen-scene", help="generate a scene file")
    p.add_argument("kind", choices=("random", "prism", "scattered", "lower-bound", "paraboloid"))
    _common(p, scene=False)
    p.add_argument("--k", type=int, default=3, help="number of polyhedra")
    p.add_argument("--n", type=int, default=12, help="facets per polyhedron")
    p.add_argument("--box", type=float, default=10.0, help="bounding box size")
    p.add_argument("--flags", default=None, help="comma-separated scene flags")
    p.add_argument("--pairs", type=int, default=3)
    p.add_argument("--drum-facets", type=int, default=12)
    p.add_argument("--scene-out", default=None, help="scene file to write")
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("audit", help="general-position audit of a scene")
    _common(p)
    p.add_argument("--thorough", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("compare", help="compare the vertex sets of two reports")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)
    return ap


def _write(report: dict, out: str) -> None:
    text = dumps_report(report)
    if out == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n")


def _diagnostic(code: str, message: str, command: str | None) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message, "command": command}) + "\n")


def run(argv=None) -> int:
    """Run one command; returns the exit status."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            _diagnostic("usage", "invalid arguments", None)
            return EXIT_USAGE
        return EXIT_OK
    try:
        res = args.func(args)
        report, status = res if isinstance(res, tuple) else (res, EXIT_OK)
        _write(report, args.out)
        return status
    except CliError as exc:
        _diagnostic(exc.code, str(exc), args.command)
        return exc.status
    except GeometryError as exc:
        _diagnostic(exc.code, str(exc), args.command)
        return EXIT_ERROR
    except OSError as exc:
        _diagnostic("io-error", str(exc), args.command)
        return EXIT_ERROR
    except ValueError as exc:
        _diagnostic("invalid-input", str(exc), args.command)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
