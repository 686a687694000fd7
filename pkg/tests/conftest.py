import pytest

from fltwave.critical_speeds import critical_speeds
from fltwave.reaction import ModelParams


@pytest.fixture(scope="session")
def fkpp():
    return ModelParams()


@pytest.fixture(scope="session")
def crit(fkpp):
    return critical_speeds(fkpp)
