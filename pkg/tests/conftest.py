import pytest

from skyadmit.model import ModelParams


@pytest.fixture
def base():
    return ModelParams()
