
import numpy as np
import pytest

LUMA = np.array([0.299, 0.587, 0.114])


def _half(a):
    h, w = a.shape[0] // 2, a.shape[1] // 2
    return a[: 2 * h, : 2 * w].reshape(h, 2, w, 2, *a.shape[2:]).mean(axis=(1, 3))


@pytest.fixture(scope="session")
def camera256():
    skdata = pytest.importorskip("skimage.data")
    return _half(skdata.camera().astype(np.float64))


@pytest.fixture(scope="session")
def astronaut256():
    skdata = pytest.importorskip("skimage.data")
    return _half(skdata.astronaut().astype(np.float64) @ LUMA)


@pytest.fixture(scope="session")
def astronaut_color512():
    skdata = pytest.importorskip("skimage.data")
    return skdata.astronaut().astype(np.float64)


# ---------------------------------------------------------------- acceptance report

_REPORT = []


@pytest.fixture(scope="session")
def acceptance_report():
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in _REPORT:
        terminalreporter.write_line(line)
