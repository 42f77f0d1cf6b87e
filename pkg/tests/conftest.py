import os

import pytest
from hypothesis import HealthCheck, settings

from zeckgaps import SequenceTable, validate

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("ZECKGAPS_OPTIN") == "1":
        return
    skip = pytest.mark.skip(reason="opt-in run; set ZECKGAPS_OPTIN=1")
    for item in items:
        if "optin" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def fib():
    return SequenceTable.build(validate([1, 1]), 220)


@pytest.fixture(scope="session")
def two_four():
    return SequenceTable.build(validate([2, 4]), 220)


def table(coeffs, N=60):
    return SequenceTable.build(validate(coeffs), N)
