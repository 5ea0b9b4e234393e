import dataclasses

import pytest

from rfneuron import CircuitParams


@pytest.fixture(scope="session")
def default_params() -> CircuitParams:
    return CircuitParams()


@pytest.fixture(scope="session")
def symmetric_params() -> CircuitParams:
    """Both exponential branches on the shared 47 fA process current."""
    return dataclasses.replace(CircuitParams(), I_n0_beta=None)
