"""The numba and numpy kernels must agree; both paths are always exercised."""
import numpy as np
import pytest

from sparsetomo import _accel, kernels
from sparsetomo.fock import enumerate_configs
from sparsetomo.lattice import LatticeSpec, propagator

from oracles import brute_permanent

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 8])
def test_numpy_permanent(n):
    a = np.random.default_rng(n).standard_normal((n, n)) + 0.5j
    assert abs(kernels.permanent_np(a) - brute_permanent(a)) < 1e-10 * max(1, abs(brute_permanent(a)))


@needs_numba
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 8, 10])
def test_numba_matches_numpy_permanent(n):
    a = np.random.default_rng(10 + n).standard_normal((n, n)) * (1 - 0.3j)
    assert abs(kernels.permanent_nb(a) - kernels.permanent_np(a)) < 1e-10 * max(1, abs(kernels.permanent_np(a)))


@needs_numba
@pytest.mark.parametrize("nw,n", [(6, 3), (10, 4), (20, 3), (5, 5)])
def test_transfer_columns_paths_agree(nw, n):
    w = propagator(LatticeSpec(nw, coupling=1.0, beta=0.1, z=2.2)).matrix
    idx = enumerate_configs(nw, n)
    sel = idx.modes[:: max(1, len(idx) // 25)]
    norm = idx.norm[:: max(1, len(idx) // 25)]
    a = kernels.transfer_columns_nb(w, idx.modes, sel, idx.norm, norm)
    b = kernels.transfer_columns_np(w, idx.modes, sel, idx.norm, norm)
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_dispatch_follows_flag():
    if _accel.USE_NUMBA:
        assert kernels.transfer_columns is kernels.transfer_columns_nb
    else:
        assert kernels.transfer_columns is kernels.transfer_columns_np
