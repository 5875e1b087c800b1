import numpy as np
import pytest
from hypothesis import settings

from ftqlab.codes import load_code

settings.register_profile("ftqlab", max_examples=60, deadline=None)
settings.load_profile("ftqlab")


@pytest.fixture(scope="session")
def bitflip():
    return load_code("bitflip3")


@pytest.fixture(scope="session")
def toric3():
    return load_code("toric_L3")


@pytest.fixture(scope="session")
def surface5():
    return load_code("surface_d5")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """record(criterion, ok, detail): one verdict line per acceptance criterion."""
    table = request.config.stash[_ACCEPTANCE_KEY]

    def record(criterion: int, ok: bool, detail: str) -> None:
        prev = table.get(criterion)
        table[criterion] = (bool(ok) and (prev is None or prev[0]), detail if prev is None else f"{prev[1]}; {detail}")
    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_ACCEPTANCE_KEY, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(table):
        ok, detail = table[k]
        terminalreporter.write_line(f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} - {detail}")
