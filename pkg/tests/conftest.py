import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fig2_model():
    from dynsync.models import SpinChainParams, build_spin1_chain

    return build_spin1_chain(SpinChainParams.homogeneous(3, 1.0, anisotropy=0.5, dephasing_rate=2.0))


@pytest.fixture(scope="session")
def fig2_spectrum(fig2_model):
    from dynsync.liouville import build_superoperator, spectrum

    return spectrum(build_superoperator(fig2_model))


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
