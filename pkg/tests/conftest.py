"""Shared test oracles and helpers.

The correlation oracles below are deliberately written as plain Python
loops over Python complex numbers, independent of the package's numpy
implementations, so the two can disagree.
"""

import numpy as np
import pytest


def oracle_pccf(a, b):
    """Periodic cross-correlation by the direct definition, O(N^2)."""
    a = [complex(v) for v in a]
    b = [complex(v) for v in b]
    assert len(a) == len(b)
    n = len(a)
    out = []
    for k in range(n):
        acc = 0j
        for i in range(n):
            acc += a[i] * b[(i - k) % n].conjugate()
        out.append(acc)
    return out


def oracle_pacf(a):
    return oracle_pccf(a, a)


def oracle_ccf(a, b):
    """Aperiodic cross-correlation, lags -(Nb-1) .. (Na-1)."""
    a = [complex(v) for v in a]
    b = [complex(v) for v in b]
    out = []
    for k in range(-(len(b) - 1), len(a)):
        acc = 0j
        for i in range(len(a)):
            j = i - k
            if 0 <= j < len(b):
                acc += a[i] * b[j].conjugate()
        out.append(acc)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_complex(rng, n, scale=1.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
