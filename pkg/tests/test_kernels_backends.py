import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlthermo import _kernels
from nlthermo.fields import Grid, div, div_backward, grad, grad_forward, laplacian

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not importable")


@pytest.fixture
def restore_backend():
    before = _kernels.backend()
    yield
    _kernels.set_backend(before)


def _both(fn):
    out = {}
    for name in ("numpy", "numba"):
        _kernels.set_backend(name)
        out[name] = fn()
    return out["numpy"], out["numba"]


@given(st.sampled_from([Grid.regular(16), Grid.regular(9, 2.0), Grid((12, 10), (1.0, 3.0))]), st.integers(0, 2**31 - 1), st.integers(0, 2))
@settings(max_examples=30, deadline=None)
def test_backends_agree_bitwise(grid, seed, rank):
    before = _kernels.backend()
    try:
        f = np.random.default_rng(seed).standard_normal(grid.field_shape(rank))
        for op in (grad, grad_forward, laplacian):
            if op is not laplacian and rank == 2:
                continue
            a, b = _both(lambda: op(f, grid))
            np.testing.assert_array_equal(a, b)
        if rank >= 1:
            for op in (div, div_backward):
                a, b = _both(lambda: op(f, grid))
                np.testing.assert_array_equal(a, b)
    finally:
        _kernels.set_backend(before)


def test_set_backend_validates(restore_backend):
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")
    _kernels.set_backend("numpy")
    assert _kernels.backend() == "numpy"


def test_environment_flag_disables_numba(monkeypatch):
    monkeypatch.setenv("NLT_DISABLE_NUMBA", "1")
    assert not _kernels._numba_requested()
    monkeypatch.setenv("NLT_DISABLE_NUMBA", "0")
    assert _kernels._numba_requested()
