import numpy as np
import pytest

from abctorus import kernels
from abctorus.torus_maps import cat_shear, fiber_map, shear

pytestmark = pytest.mark.skipif(kernels.numba_impl is None, reason="numba unavailable")

MAPS = [cat_shear(0.05), cat_shear(0.05).inverse(), shear(0.3).inverse(), fiber_map(0.2, 0.1)]


@pytest.mark.parametrize("F", MAPS)
def test_apply_parity(F):
    X = np.random.default_rng(0).random((200, 2)) * 2 - 0.5
    Ya, Ja, _ = kernels.apply_jac(F.program, X, "numba")
    Yb, Jb, _ = kernels.apply_jac(F.program, X, "numpy")
    assert np.max(np.abs(Ya - Yb)) < 1e-13
    assert np.max(np.abs(Ja - Jb)) < 1e-12


def test_orbit_parity():
    F = fiber_map(0.2, 0.1)
    X = np.random.default_rng(1).random((50, 2))
    Da, _ = kernels.orbit_displacements(F.program, X, [10, 100], "numba")
    Db, _ = kernels.orbit_displacements(F.program, X, [10, 100], "numpy")
    assert np.max(np.abs(Da - Db)) < 1e-10


def test_torus_orbit_and_lyapunov_parity():
    F = cat_shear(0.05)
    X = np.random.default_rng(2).random((20, 2))
    Ya, _ = kernels.torus_orbit(F.program, X, 5, "numba")
    Yb, _ = kernels.torus_orbit(F.program, X, 5, "numpy")
    assert np.max(np.abs(Ya - Yb)) < 1e-9
    La, _ = kernels.lyapunov(F.program, X, [1.0, 0.3], 5, 20, "numba")
    Lb, _ = kernels.lyapunov(F.program, X, [1.0, 0.3], 5, 20, "numpy")
    assert np.max(np.abs(La - Lb)) < 1e-6


def test_bilinear_and_circle_parity():
    rng = np.random.default_rng(3)
    V = rng.random((16, 16, 2))
    P = rng.random((100, 2)) * 3 - 1
    assert np.max(np.abs(kernels.bilinear(V, P, "numba") - kernels.bilinear(V, P, "numpy"))) < 1e-14
    fa, ia = kernels.circle_orbit(0.4, [1.0], [0.05], [0.0], [0.1, 0.7], 100, "numba")
    fb, ib = kernels.circle_orbit(0.4, [1.0], [0.05], [0.0], [0.1, 0.7], 100, "numpy")
    assert np.array_equal(ia, ib) and np.max(np.abs(fa - fb)) < 1e-10


def test_bilinear_reproduces_nodes():
    V = np.random.default_rng(4).random((8, 8))
    g = np.arange(8) / 8
    P = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    assert np.allclose(kernels.bilinear(V, P), V.ravel())
