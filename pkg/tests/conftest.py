import numpy as np
import pytest
from scipy.special import roots_legendre


def brute_force_top(kernel, n=600, scale=30.0):
    """Top eigenvalue of a half-line kernel by Gauss-Legendre on x = scale*tan(theta).

    Independent of the package's panel grids: a single global rule after an
    algebraic map of [0, pi/2) onto [0, inf).
    """
    u, w = roots_legendre(n)
    th = 0.25 * np.pi * (u + 1.0)
    x = scale * np.tan(th)
    wx = 0.25 * np.pi * w * scale / np.cos(th) ** 2
    k = kernel(x[:, None], x[None, :])
    sw = np.sqrt(wx)
    m = sw[:, None] * k * sw[None, :]
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[-1])


@pytest.fixture(scope="session")
def brute():
    return brute_force_top
