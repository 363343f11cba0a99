import pytest

from vvstream import default_config


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def sweep_d():
    return (2000.0, 4000.0, 6000.0, 8000.0, 10000.0)
