import sys

import numpy as np
import pytest

from nlthermo import gk
from nlthermo.fields import Grid
from nlthermo.thermo_laws import trig_field


def gk_random_state(grid: Grid, seed: int = 0, theta=1.0, amp=0.3) -> gk.GkState:
    rng = np.random.default_rng(seed)
    th = theta * (1.0 + 0.1 * trig_field(grid, rng))
    q = np.stack([amp * trig_field(grid, rng) for _ in range(grid.dims)])
    return gk.GkState(grid, th, q)


@pytest.fixture(autouse=True)
def _output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("NLT_OUTPUT_DIR", str(tmp_path / "runs"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.lines():
        terminalreporter.write_line(line)
