import pytest

from omnisurf import (
    Antenna,
    ElementPatternParams,
    ElementResponseTable,
    IosGrid,
    Scenario,
    Vec3,
)

LAMBDA_36 = 299_792_458.0 / 3.6e9


@pytest.fixture(scope="session")
def table():
    return ElementResponseTable.bundled()


@pytest.fixture
def make_scenario(table):
    def _make(rows=3, cols=3, pitch=0.5, n=1.0, bs=((0.3, 0.1, 1.0),), users=((-0.4, 0.2, -0.8),),
              tab=None, **kw):
        lam = LAMBDA_36
        return Scenario(3.6e9, IosGrid(rows, cols, pitch * lam, pitch * lam),
                        tuple(Antenna(Vec3(*p)) for p in bs), tuple(Antenna(Vec3(*p)) for p in users),
                        ElementPatternParams(1.0, 1.0, n), tab or table, **kw)
    return _make
