import pytest

from toricbranes.cohomology import as_stack
from toricbranes.fanio import builtin_names, load_fan

ALL_FANS = builtin_names()


@pytest.fixture(scope="session")
def fans():
    return {name: load_fan(name) for name in ALL_FANS}


@pytest.fixture(scope="session")
def line(fans):
    return fans["line"]


@pytest.fixture(scope="session")
def p2(fans):
    return fans["local_p2"]


@pytest.fixture(scope="session")
def c3z3(fans):
    return fans["c3_z3"]


@pytest.fixture(params=ALL_FANS)
def any_fan(request, fans):
    return fans[request.param]


def stack_of(fan):
    return as_stack(fan)
