import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpnr_lab import _kernels_py, kernels

cython = pytest.importorskip("mpnr_lab._kernels")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@given(n=st.integers(1, 64), dim=st.integers(1, 80))
def test_occupancy_backends_agree(n, dim):
    a = np.asarray(cython.occupancy_table(n, dim))
    b = _kernels_py.occupancy_table(n, dim)
    assert a.shape == b.shape == (n + 1, dim)
    assert np.abs(a - b).max() < 1e-13


@given(pis=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=10), dim=st.integers(1, 40))
def test_weighted_occupancy_backends_agree(pis, dim):
    pis = np.asarray(pis)
    if pis.sum() > 0:
        pis = pis / pis.sum()
    a = np.asarray(cython.weighted_occupancy(pis, dim))
    b = _kernels_py.weighted_occupancy(pis, dim)
    assert np.abs(a - b).max() < 1e-13


def test_weighted_reduces_to_balanced():
    n, dim = 7, 30
    w = _kernels_py.weighted_occupancy(np.full(n, 1 / n), dim)
    assert np.allclose(w.T, _kernels_py.occupancy_table(n, dim), atol=1e-14)


def test_pure_python_selected_by_env(monkeypatch):
    import importlib

    monkeypatch.setenv("MPNR_LAB_PURE_PYTHON", "1")
    try:
        mod = importlib.reload(kernels)
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("MPNR_LAB_PURE_PYTHON")
        importlib.reload(kernels)
