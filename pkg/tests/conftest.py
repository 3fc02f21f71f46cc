import numpy as np
import pytest

from picardo.bench.data import DatasetSpec, gen_synthetic
from picardo.linalg import whiten

_CRITERIA = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = call.excinfo is None
    detail = getattr(item, "criterion_detail", "")
    if not passed:
        detail = (detail + " | " if detail else "") + str(call.excinfo.value).splitlines()[0][:200]
    _CRITERIA[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} :: {detail}")


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance report of this test."""

    def _set(text):
        request.node.criterion_detail = text

    return _set


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_skew(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a - a.T) / 2.0


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def mixture(seed, n=10, t=10_000, ar_coef=0.0, mixing="random_gaussian_matrix"):
    spec = DatasetSpec(
        n_uniform=n // 2, n_laplace=n - n // 2, n_samples=t, seed=seed, ar_coef=ar_coef, mixing=mixing
    )
    return gen_synthetic(spec)


def white_sources(seed, n=4, t=10_000):
    """Whitened independent sources (half uniform, half Laplace)."""
    return whiten(mixture(seed, n=n, t=t, mixing="identity").x).y
