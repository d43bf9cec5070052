import re

import numpy as np
import pytest

from qtomo.grids import disk_phantom, shepp_logan
from qtomo.interp import build_interp_matrix
from qtomo.qsim import DilatedHamiltonian
from qtomo.radon import forward_radon


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def sino_sl16():
    return forward_radon(shepp_logan(16), 16, 16)


@pytest.fixture(scope="session")
def sino_sl32():
    return forward_radon(shepp_logan(32), 32, 32)


@pytest.fixture(scope="session")
def sino_disk32():
    return forward_radon(disk_phantom(32, 0, 0, 0.5, 1.0), 32, 32)


@pytest.fixture(scope="session")
def sino_disk128():
    return forward_radon(disk_phantom(128, 0, 0, 0.5, 1.0), 128, 128)


@pytest.fixture(scope="session")
def sino_sl128():
    return forward_radon(shepp_logan(128), 128, 128)


@pytest.fixture(scope="session")
def ham16():
    return DilatedHamiltonian(build_interp_matrix(16, 16, 16, "bilinear"))


@pytest.fixture(scope="session")
def ham32():
    return DilatedHamiltonian(build_interp_matrix(32, 32, 32, "bilinear"))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "xfailed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", nodeid)
            if m and getattr(rep, "when", "call") in ("call", "setup"):
                if outcome == "passed" and rep.when != "call":
                    continue
                lines.append((int(m.group(1)), m.group(2), "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, name, status in sorted(lines):
            terminalreporter.write_line(f"criterion {num:2d} {name:<40s} {status}")
