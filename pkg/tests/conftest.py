import numpy as np
import pytest

from malurl.data_io import Dataset, generate_synthetic
from malurl.parallel import set_threads


@pytest.fixture(autouse=True)
def _single_thread():
    set_threads(1)
    yield
    set_threads(1)


def make_dataset(X, y, mask=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] < 13:
        X = np.hstack([X, np.zeros((X.shape[0], 13 - X.shape[1]))])
    return Dataset(X, np.zeros(X.shape, bool) if mask is None else mask, np.asarray(y))


@pytest.fixture(scope="session")
def synth_1000():
    return generate_synthetic(1000, 0.25, seed=1)


@pytest.fixture(scope="session")
def prepared_1000(synth_1000):
    from malurl.preprocess import fit_transform
    return fit_transform(synth_1000)[1]


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
