import pytest

from ergolab.system import doubling_map, full_grid, s3_carpet


@pytest.fixture(scope="session")
def s3():
    return s3_carpet()


@pytest.fixture(scope="session")
def doubling():
    return doubling_map()


@pytest.fixture(scope="session")
def grid23():
    return full_grid(2, 3)


@pytest.fixture(scope="session")
def skewed():
    return s3_carpet(("1/2", "1/3", "1/6"))
