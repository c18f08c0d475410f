import numpy as np
import pytest

from dyadica import AtomBasis, RootBox, build_family
from dyadica.tlnorm import TestDictionary


@pytest.fixture(scope="session")
def family3():
    return build_family(3)


@pytest.fixture(scope="session")
def family2():
    return build_family(2)


@pytest.fixture(scope="session")
def haar():
    return build_family(1, refine=6)


@pytest.fixture(scope="session")
def root8():
    return RootBox(d=1, L=0, J=-8)


@pytest.fixture(scope="session")
def basis8(family3, root8):
    return AtomBasis(family3, root8)


@pytest.fixture(scope="session")
def dict8(basis8):
    return TestDictionary(basis8, size=6)


@pytest.fixture(scope="session")
def root_small():
    return RootBox(d=1, L=0, J=-6)


@pytest.fixture(scope="session")
def basis_small(family3, root_small):
    return AtomBasis(family3, root_small)


@pytest.fixture(scope="session")
def dict_small(basis_small):
    return TestDictionary(basis_small, size=4)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
