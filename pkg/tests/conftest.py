import numpy as np
import pytest

from zenolab import continuous
from zenolab.model import DetectorParams, SystemParams, Tolerances


@pytest.fixture(scope="session")
def sys1():
    return SystemParams(1.0)


@pytest.fixture(scope="session")
def tol():
    return Tolerances()


@pytest.fixture(scope="session")
def det_sigma0():
    return DetectorParams(lam=3.0, sigma=0.0)


@pytest.fixture(scope="session")
def det_sigma3():
    return DetectorParams(lam=3.0, sigma=3.0)


@pytest.fixture(scope="session")
def det_sigma40():
    return DetectorParams(lam=3.0, sigma=40.0)


@pytest.fixture(scope="session")
def table_sigma0(sys1, det_sigma0, tol):
    return continuous.build_spectral_table(sys1, det_sigma0, tol)


@pytest.fixture(scope="session")
def table_sigma3(sys1, det_sigma3, tol):
    return continuous.build_spectral_table(sys1, det_sigma3, tol)


@pytest.fixture(scope="session")
def table_sigma40(sys1, det_sigma40, tol):
    return continuous.build_spectral_table(sys1, det_sigma40, tol)


@pytest.fixture(scope="session")
def sigma40_noclick(sys1, det_sigma40, tol, table_sigma40):
    """Full no-click curve for the (lam=3, sigma=40) detector on [0, 10]."""
    times = np.linspace(0.0, 10.0, 11)
    curve = continuous.noclick(times, sys1, det_sigma40, tol, table_sigma40)
    return times, curve.values
