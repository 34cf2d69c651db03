import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from ocean_recipes.fixtures import (
    data_dir,
    synthetic_dyes,
    synthetic_reference,
    synthetic_scatterer,
    write_fixture_library,
)

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []
SUITE_BUDGET_S = 60.0
_started = {}


def _line(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.fixture
def criterion():
    """Record one acceptance line; returns ``ok`` so the caller can assert on it."""

    def record(name, ok, detail):
        ACCEPTANCE_LINES.append(_line(name, bool(ok), detail))
        return bool(ok)

    return record


def pytest_sessionstart(session):
    _started["t"] = time.perf_counter()


@pytest.hookimpl(tryfirst=True)
def pytest_sessionfinish(session, exitstatus):
    # the runtime budget applies to the whole suite, so only judge complete runs
    here = Path(__file__).parent
    every = {p.resolve() for p in here.glob("test_*.py")}
    ran = {Path(str(item.fspath)).resolve() for item in getattr(session, "items", [])}
    if not every or not every <= ran or session.config.option.keyword:
        return
    elapsed = time.perf_counter() - _started.get("t", time.perf_counter())
    ok = elapsed < SUITE_BUDGET_S
    ACCEPTANCE_LINES.append(_line("full suite runtime", ok, f"{elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"))
    if not ok and session.exitstatus == 0:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def dyes():
    return synthetic_dyes()


@pytest.fixture(scope="session")
def scatterer():
    return synthetic_scatterer()


@pytest.fixture(scope="session")
def ref_3c():
    return synthetic_reference("synthetic-3C")


@pytest.fixture(scope="session")
def shipped():
    return data_dir()


@pytest.fixture
def library(tmp_path):
    return write_fixture_library(tmp_path / "lib")


@pytest.fixture
def workspace(library, tmp_path):
    """Fixture library plus a small scene and decomposition inputs, as CLI arguments expect."""
    from ocean_recipes.fixtures import scatterer_spectrum, synthetic_reference
    from ocean_recipes.render import write_ppm
    from ocean_recipes.spectral import write_spectrum_csv

    ws = dict(library)
    ws["dir"] = tmp_path
    rng = np.random.default_rng(7)
    image = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
    write_ppm(tmp_path / "scene.ppm", image)
    dist = np.outer(np.linspace(0, 3, 64), np.ones(64))
    np.savetxt(tmp_path / "distance.csv", dist, delimiter=",", fmt="%.6g")
    ref = synthetic_reference("synthetic-3C")
    write_spectrum_csv(ref.attenuation, tmp_path / "c.csv")
    write_spectrum_csv(scatterer_spectrum(), tmp_path / "shape.csv")
    ws.update(image=tmp_path / "scene.ppm", distance=tmp_path / "distance.csv",
              attenuation=tmp_path / "c.csv", shape=tmp_path / "shape.csv")
    return ws

