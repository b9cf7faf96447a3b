import pytest
import stopmax as smx


@pytest.fixture(scope="module")
def uniform01():
    return smx.parse_dist_spec("uniform:0,1")


@pytest.fixture(scope="module")
def d10():
    return smx.parse_dist_spec("duniform:1..10")


@pytest.fixture(scope="module")
def spread2():
    return smx.parse_dist_spec("spread:alpha=0.5,k=2,eps=1")


@pytest.fixture(scope="module")
def d10_half(d10):
    return smx.solve_discrete(d10, smx.GameSpec(n=2, alpha=0.5))
