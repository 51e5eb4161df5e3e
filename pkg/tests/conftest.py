from importlib.resources import files

import numpy as np
import pytest

from ssadmit.model import Model, read_model

DATA = files("ssadmit") / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def ex1():
    return read_model(DATA / "example1.json")


@pytest.fixture(scope="session")
def ex2():
    return read_model(DATA / "example2.json")


def random_generator(N, rng, kind):
    if kind == "discrete":
        T = rng.random((N, N)) + 0.05
        return T / T.sum(axis=1, keepdims=True)
    T = rng.random((N, N)) * 2
    np.fill_diagonal(T, 0.0)
    np.fill_diagonal(T, -T.sum(axis=1))
    return T


def random_model(rng, kind, n=None, N=None, r=None, impulsive_mode=None):
    """Random model with a common restricted form (range C(i) inside range E).

    Built in restricted coordinates so the fast block A22 is generically
    invertible, or exactly singular in ``impulsive_mode``.
    """
    n = n or int(rng.integers(1, 4))
    N = N or int(rng.integers(1, 3))
    r = r if r is not None else int(rng.integers(1, n + 1))
    Minv = rng.standard_normal((n, n)) + 2 * np.eye(n)
    Ninv = rng.standard_normal((n, n)) + 2 * np.eye(n)
    D = np.zeros((n, n))
    D[:r, :r] = np.eye(r)
    E = Minv @ D @ Ninv
    A, C = [], []
    for i in range(N):
        ab = rng.standard_normal((n, n))
        if i == impulsive_mode and r < n:
            ab[r:, r:] = 0.0
        if kind == "continuous":
            ab[:r, :r] -= rng.uniform(0.0, 3.0) * np.eye(r)
        else:
            ab *= rng.uniform(0.1, 0.8)
        cb = np.zeros((n, n))
        cb[:r] = rng.standard_normal((r, n)) * rng.uniform(0.0, 0.6)
        A.append(Minv @ ab @ Ninv)
        C.append(Minv @ cb @ Ninv)
    return Model(kind, E, tuple(A), tuple(C), random_generator(N, rng, kind))


@pytest.fixture(scope="session")
def ex1_mc(ex1):
    from ssadmit.dynamics import SimConfig, simulate

    return simulate(ex1, SimConfig(paths=10_000, horizon=5.0, dt=1e-3, seed=7))


def scalar_model(kind, a, c=0.0, e=1.0):
    trans = [[0.0]] if kind == "continuous" else [[1.0]]
    return Model(kind, [[e]], ([[a]],), ([[c]],), trans)
