import numpy as np
import pytest

from cornervanish.eigensolver import EtaSpec, Medium, Pacman, default_basis, refine_and_extract

# quarter-disk pacman dips found by scanning [5.5, 6.5] (eta = 1) and [2, 9] (eta = 0)
QUARTER_K_ETA1 = 5.986643
QUARTER_K_ETA0 = 6.120329


@pytest.fixture(scope="session")
def quarter():
    return Pacman.symmetric(np.pi / 2, 1.0)


@pytest.fixture(scope="session")
def pair_eta1(quarter):
    med = Medium(3.0, EtaSpec(1.0))
    return refine_and_extract(QUARTER_K_ETA1, quarter, med, default_basis(quarter), step=0.02)


@pytest.fixture(scope="session")
def pair_eta0(quarter):
    med = Medium(3.0, EtaSpec(0.0))
    return refine_and_extract(QUARTER_K_ETA0, quarter, med, default_basis(quarter), step=0.02)
