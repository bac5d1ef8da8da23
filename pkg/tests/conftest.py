import numpy as np
import pytest

import walklab as wl


@pytest.fixture(scope="session")
def srw1():
    return wl.srw_kernel(1)


@pytest.fixture(scope="session")
def srw2():
    return wl.srw_kernel(2)


@pytest.fixture(scope="session")
def srw3():
    return wl.srw_kernel(3)


@pytest.fixture(scope="session")
def parity2():
    return wl.parity_kernel_2d()


@pytest.fixture(scope="session")
def lazy2():
    return wl.lazy_srw_kernel(2)


@pytest.fixture(scope="session")
def triangle2():
    # centered non-symmetric step set: +e1, +e2, and the joint back-step
    return wl.homogeneous_kernel([(1, 0), (0, 1), (-1, -1)],
                                 ["1/3", "1/3", "1/3"])


@pytest.fixture(scope="session")
def halfspace1():
    return wl.half_space(1)


@pytest.fixture(scope="session")
def halfspace2():
    return wl.half_space(2)


@pytest.fixture(scope="session")
def cone2():
    return wl.cone_domain(2)


def interval_interior(n):
    """Interior {1, ..., n-1} of the 1D gambler's-ruin chain."""
    return np.arange(1, n).reshape(-1, 1)
