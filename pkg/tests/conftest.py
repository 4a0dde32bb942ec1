import logging

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _quiet_jitter_warnings():
    logger = logging.getLogger("bfselect.posterior")
    level = logger.level
    logger.setLevel(logging.ERROR)
    yield
    logger.setLevel(level)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance  # noqa: F401  (only present when collected)

    verdicts = getattr(test_acceptance, "VERDICTS", {})
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for name in sorted(verdicts):
            terminalreporter.write_line(verdicts[name])
