import sys

import numpy as np
import pytest
from hypothesis import settings

from csigait.csi_data import SynthConfig, synthesize
from csigait.preprocess import preprocess

# fixed example streams keep the suite reproducible run to run
settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def two_person():
    """2-person trial at 20 dB with its ground truth and normalised tensor."""
    trial, truth = synthesize(SynthConfig(persons=2, snr_db=20.0, seed=1))
    return trial, truth, preprocess(trial)


def random_symmetric(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) * scale
    return (a + a.T) / 2


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, (title, ok, detail) in sorted(results.items(), key=lambda kv: str(kv[0])):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
