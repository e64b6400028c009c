import glob
import json
import os

import numpy as np
import pytest

from wpcj.harness.fixtures import load_fixture
from wpcj.model import SystemConfig

HERE = os.path.dirname(__file__)
FIXTURE_DIR = os.path.join(HERE, "fixtures")


def fixture_paths():
    return sorted(glob.glob(os.path.join(FIXTURE_DIR, "mn2_*.json")))


@pytest.fixture(scope="session")
def frozen_oracle():
    with open(os.path.join(FIXTURE_DIR, "oracle_values.json"), encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture
def base_cfg():
    return SystemConfig(M=8, N=4, p_bs_max=10.0, p_harvested=2.5e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def load(path):
    return load_fixture(path)


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def record_criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
