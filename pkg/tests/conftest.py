import warnings

import pytest

from optodde import membrane
from optodde.fields import MembraneConfig, OpticalParams

warnings.filterwarnings("ignore", message=".*TBB.*")

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(label: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append((label, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(_ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(f"{label}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def params():
    return OpticalParams()


@pytest.fixture(scope="session")
def lever_cfg():
    # k_m w0 ~ 0.1: deep in the tilting-mirror regime
    return MembraneConfig(w0=25e-6)


@pytest.fixture(scope="session")
def lever_fields(lever_cfg, params):
    return membrane.optical_lever_scenario(lever_cfg, params)


@pytest.fixture(scope="session")
def far(params):
    def get(m, n=1, **kw):
        return membrane.far_fields(MembraneConfig(m=m, n=n, **kw), params)
    return get
