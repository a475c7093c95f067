import numpy as np
import pytest


def finite_difference(f, arrays, h=1e-5):
    """Central finite-difference gradient of scalar f w.r.t. each array.

    f takes the list of arrays and returns a scalar. Independent oracle
    for all analytic-gradient checks.
    """
    grads = [np.zeros_like(a) for a in arrays]
    for a, g in zip(arrays, grads):
        flat_a = a.ravel()
        flat_g = g.ravel()
        for i in range(flat_a.size):
            orig = flat_a[i]
            flat_a[i] = orig + h
            up = f(arrays)
            flat_a[i] = orig - h
            down = f(arrays)
            flat_a[i] = orig
            flat_g[i] = (up - down) / (2.0 * h)
    return grads


def relative_error(analytic, numeric):
    """Max elementwise relative error with an absolute floor."""
    analytic = np.concatenate([np.ravel(a) for a in analytic])
    numeric = np.concatenate([np.ravel(a) for a in numeric])
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
