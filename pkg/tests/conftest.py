import pytest

from sitnikov.connection import connect
from sitnikov.periodic import minimize_periodic
from sitnikov.symbolic import ConnectionSpec, PeriodicSymbols

WORD = "+++---++"

# homoclinic: one extra "---+++" pair of blocks spliced into the base word
INSERT = dict(b_minus=WORD, b_plus=WORD, middle="---+++---+++---", K_minus=9, K_plus=23)
# homoclinic: the leading "---" block of a period turned into "+++"
FLIP = dict(b_minus=WORD, b_plus=WORD, middle="+++", K_minus=3, K_plus=5)
# heteroclinic: period-8 word to period-6 word
HET = dict(b_minus=WORD, b_plus="++---+", middle="++---+", K_minus=0, K_plus=5)


@pytest.fixture(scope="session")
def word():
    return PeriodicSymbols.parse(WORD)


@pytest.fixture(scope="session")
def orbit64(word):
    return minimize_periodic(word, 64, refine=0, y0=1.0)


@pytest.fixture(scope="session")
def insert_spec():
    return ConnectionSpec.build(**INSERT)


@pytest.fixture(scope="session")
def flip_spec():
    return ConnectionSpec.build(**FLIP)


@pytest.fixture(scope="session")
def het_spec():
    return ConnectionSpec.build(**HET)


@pytest.fixture(scope="session")
def insert64(insert_spec):
    return connect(insert_spec, 64, refine=0)


@pytest.fixture(scope="session")
def flip64(flip_spec):
    return connect(flip_spec, 64, refine=0)


@pytest.fixture(scope="session")
def het64(het_spec):
    return connect(het_spec, 64, refine=0)
