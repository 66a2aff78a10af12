import numpy as np
import pytest
from hypothesis import strategies as st

from mtevans.model import BoundaryCondition, ModelParams, endstate_from_c, fig3_params
from mtevans.profile import solve_profile


@pytest.fixture(scope="session")
def fig3():
    return fig3_params()


@pytest.fixture(scope="session")
def fig3_bc():
    return BoundaryCondition.dirichlet(0.2, 0.2, 0.2)


@pytest.fixture(scope="session")
def zero_endstate(fig3):
    return endstate_from_c(fig3, 0.0)


@pytest.fixture(scope="session")
def fig3_profile(fig3, fig3_bc, zero_endstate):
    return solve_profile(fig3, fig3_bc, zero_endstate)


def random_params(rng, low=0.1, high=3.0):
    vals = rng.uniform(low, high, size=7)
    return ModelParams(*vals)


def random_physical_endstate(rng, params, max_fraction=0.95):
    c_max = np.sqrt(params.nu_minus * params.f_cat / (params.u_plus * params.omega))
    return endstate_from_c(params, rng.uniform(0.0, max_fraction) * c_max)


positive = st.floats(min_value=0.05, max_value=5.0, allow_nan=False, allow_infinity=False)


@st.composite
def params_strategy(draw):
    return ModelParams(*(draw(positive) for _ in range(7)))


@st.composite
def physical_pair(draw):
    p = draw(params_strategy())
    frac = draw(st.floats(min_value=0.0, max_value=0.95))
    c_max = np.sqrt(p.nu_minus * p.f_cat / (p.u_plus * p.omega))
    return p, endstate_from_c(p, frac * c_max)


# ---------------------------------------------------------------- acceptance report

_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed_setup = report.when == "setup" and report.outcome != "passed"
    if report.when == "call" or failed_setup:
        detail = dict(item.user_properties).get("detail", "")
        _CRITERIA[marker.args[0]] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
