from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from mreelab.config import Config
from mreelab.generate import edgeworth_cd, random_economy, two_state_edgeworth

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ROOT_SPECS = __import__("pathlib").Path(__file__).resolve().parents[1] / "specs"


@pytest.fixture
def cfg() -> Config:
    return Config()


@pytest.fixture
def edgeworth():
    return edgeworth_cd(0.6, 0.5)


@pytest.fixture
def two_state():
    return two_state_edgeworth((0.6, 0.5))


@pytest.fixture(params=range(6))
def small_random(request):
    return random_economy(request.param)


@pytest.fixture
def specs_dir():
    return ROOT_SPECS


def rng(seed=0):
    return np.random.default_rng(seed)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
