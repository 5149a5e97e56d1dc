import numpy as np
import pytest

from tripnet import data, kernels


@pytest.fixture(scope="session")
def synthetic_raw():
    return data.synthesize(600, seed=3, noise_sd=0.02)


@pytest.fixture(scope="session")
def synthetic_ds(synthetic_raw):
    cleaned, _ = data.clean(synthetic_raw)
    return data.assemble(cleaned, target_name="person_trips")


@pytest.fixture(scope="session")
def scaled_ds(synthetic_ds):
    return data.apply_scaler(synthetic_ds, data.fit_scaler(synthetic_ds))


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance criteria report: tests marked ``criterion(n, title)`` get one
# PASS/FAIL line each in the terminal summary, plus any "detail" property.

def pytest_runtest_logreport(report):
    if report.when != "call" or not hasattr(report, "criterion"):
        return
    number, title = report.criterion
    detail = dict(report.user_properties).get("detail", "")
    status = "PASS" if report.passed else "FAIL"
    _CRITERIA.append((number, f"{status}  criterion {number:>2}  {title}"
                              + (f"  [{detail}]" if detail else "")))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)


_CRITERIA = []
