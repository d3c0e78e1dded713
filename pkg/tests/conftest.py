import numpy as np
import pytest

from softimpact.bath import BathParams, load_or_fit
from softimpact.model import SystemParams


@pytest.fixture(scope="session")
def bath():
    return BathParams()


@pytest.fixture(scope="session")
def noise_model(bath, tmp_path_factory):
    cache = tmp_path_factory.mktemp("noisecache")
    return load_or_fit(bath, 3, cache_dir=str(cache))


@pytest.fixture
def params():
    return SystemParams(x_wall=0.5, F=1.82)


# Acceptance criteria report: each criterion test records its sub-check
# outcomes here; the terminal summary prints one PASS/FAIL line per
# criterion regardless of output capturing.
_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_report():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        desc, ok, lines = _ACCEPTANCE[num]
        tr.write_line(f"CRITERION {num} ({desc}): {'PASS' if ok else 'FAIL'}")
        for line in lines:
            tr.write_line(f"  {line}")
