from pathlib import Path

import numpy as np
import pytest

from epr_teleport.config import load_config, normalize_config, config_from_dict
from epr_teleport.physconst import species_preset

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

_ACCEPTANCE = []


@pytest.fixture
def li():
    return species_preset("Li+")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def li_raw():
    return normalize_config(load_config(CONFIGS / "li_design.json"))


@pytest.fixture
def li_config(li_raw):
    return config_from_dict(li_raw)


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
