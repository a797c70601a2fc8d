import numpy as np
import pytest

from nhgeom import nv_family


@pytest.fixture(scope="session")
def family():
    return nv_family()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260826)


def nv_axis_energies(q2):
    """Closed-form eigenvalues of H(0, q2): {3, (3 +/- sqrt(17-8 q2^2))/2}."""
    root = np.sqrt(complex(17.0 - 8.0 * q2 * q2))
    return np.array([3.0, (3.0 + root) / 2.0, (3.0 - root) / 2.0])


def sorted_complex(w):
    """Lexicographic (Re, Im) sort for multiset comparison of spectra.

    Keys are rounded to 10 decimals so round-off does not flip the order
    of nearly equal real parts (e.g. conjugate pairs).
    """
    w = np.asarray(w, dtype=complex)
    return w[np.lexsort((np.round(w.imag, 10), np.round(w.real, 10)))]
