import numpy as np
import pytest

from capguard.control import ControllerParams
from capguard.kinematics import load_robot_model


@pytest.fixture(scope="session")
def iiwa():
    return load_robot_model("iiwa14")


@pytest.fixture()
def params(iiwa):
    return ControllerParams().with_model_defaults(iiwa)


def random_capsule_endpoints(rng, scale=1.0):
    a = rng.uniform(-scale, scale, 3)
    b = rng.uniform(-scale, scale, 3)
    return a, b


def grid_min_axis_distance(a0, a1, b0, b1, n=2000):
    """Exact minimum distance over the n x n (u, v) lattice.

    The squared distance between points of two segments is a quadratic in
    (u, v), convex along each axis, so for every lattice value of u the
    lattice minimum over v sits at the lattice neighbours of the
    unconstrained vertex.  Scanning all u therefore reproduces the full
    n x n brute-force minimum without evaluating n^2 points.
    """
    a0, a1, b0, b1 = (np.asarray(x, float) for x in (a0, a1, b0, b1))
    da = a1 - a0
    db = b1 - b0
    r0 = a0 - b0
    A = da @ da
    B = db @ db
    C = da @ db
    D0 = r0 @ r0
    E = r0 @ da
    F = r0 @ db

    us = np.linspace(0.0, 1.0, n)

    def f(u, v):
        return D0 + u * u * A + v * v * B + 2 * u * E - 2 * v * F - 2 * u * v * C

    if B < 1e-15:
        best = np.min(f(us, 0.0))
        return float(np.sqrt(max(best, 0.0)))

    v_star = (F + us * C) / B
    j = np.clip(v_star * (n - 1), 0.0, n - 1)
    j_lo = np.floor(j) / (n - 1)
    j_hi = np.ceil(j) / (n - 1)
    best = np.min(np.minimum(f(us, j_lo), f(us, j_hi)))
    return float(np.sqrt(max(best, 0.0)))
