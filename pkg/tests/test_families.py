import numpy as np
from hypothesis import given, strategies as st

from gaussflow import families
from gaussflow.measure import Grid1D, build_gaussian

MU = build_gaussian(10.0, 512)


@given(st.integers(0, 10_000))
def test_random_hermite_positive_and_seeded(seed):
    f = families.random_hermite(MU, np.random.default_rng(seed))
    g = families.random_hermite(MU, np.random.default_rng(seed))
    assert np.array_equal(f, g)
    assert np.min(f) >= families.POSITIVE_MIN - 1e-12
    assert np.all(np.isfinite(f))


def test_random_set_reproducible():
    a = families.random_hermite_set(MU, 5, seed=3)
    b = families.random_hermite_set(MU, 5, seed=3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_hermite_series_orthonormal():
    y = MU.nodes
    H = np.array([families.hermite_series(y, np.eye(4)[k]) for k in range(4)])
    gram = (H * MU.weights) @ H.T
    assert np.allclose(gram, np.eye(4), atol=1e-12)


def test_flow_datum_bounds():
    w = families.random_flow_datum(MU, np.random.default_rng(0))
    assert np.min(w) >= 0.5 - 1e-12


def test_bump_support():
    g = Grid1D(10.0, 1001)
    b = families.bump(g, center=1.0, radius=2.0)
    assert np.all(b[np.abs(g.nodes - 1.0) >= 2.0] == 0)
    assert b.max() == np.exp(-1.0)


def test_mixed_family():
    assert np.allclose(families.mixed_family(MU, 0.1, 0.2),
                       1 + 0.1 * MU.nodes + 0.2 * (MU.nodes ** 2 - 1))
