import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_spd(rng, n, min_eig=0.2):
    g = rng.normal(size=(n, n))
    return g @ g.T + min_eig * np.eye(n)


def random_det_positive(rng, n):
    while True:
        a = rng.normal(size=(n, n))
        d = np.linalg.det(a)
        if abs(d) > 1e-3:
            if d < 0:
                a[0] = -a[0]
            return a


def oracle_polar(a, sigma0):
    """Independent reference via numpy.linalg.eigh / scipy."""
    w, q = np.linalg.eigh(sigma0)
    r = (q * np.sqrt(w)) @ q.T
    ri = (q / np.sqrt(w)) @ q.T
    s1 = a @ sigma0 @ a.T
    wm, qm = np.linalg.eigh(r @ s1 @ r)
    return ri @ (qm * np.sqrt(wm)) @ qm.T @ ri


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
