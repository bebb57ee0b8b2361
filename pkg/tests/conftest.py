import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def naive_bspline(u, i, k, t):
    """Recursive Cox-de Boor value of the i-th degree-k B-spline on knots t.

    Right-continuous at interior knots; u equal to the last knot is
    assigned to the last nondegenerate span.
    """
    if k == 0:
        if t[i] <= u < t[i + 1]:
            return 1.0
        last = max(j for j in range(len(t) - 1) if t[j] < t[j + 1])
        return 1.0 if (u == t[-1] and i == last) else 0.0
    left = 0.0 if t[i + k] == t[i] else (u - t[i]) / (t[i + k] - t[i]) * naive_bspline(u, i, k - 1, t)
    right = 0.0 if t[i + k + 1] == t[i + 1] else (
        (t[i + k + 1] - u) / (t[i + k + 1] - t[i + 1]) * naive_bspline(u, i + 1, k - 1, t))
    return left + right
