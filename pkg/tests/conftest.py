import numpy as np
import pytest

from stabbing.geometry import PluckerLine, Polyhedron
from stabbing.scenes import Scene


def z_axis() -> PluckerLine:
    return PluckerLine.from_point_direction([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])


def cube(lo=(-1, -1, -1), hi=(1, 1, 1)) -> Polyhedron:
    return Polyhedron.box(lo, hi)


def make_scene(polys, pivot=None, flags=None, seed=0) -> Scene:
    return Scene(list(polys), pivot if pivot is not None else z_axis(), seed, dict(flags or {}))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one pass/fail line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for c in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[c])
