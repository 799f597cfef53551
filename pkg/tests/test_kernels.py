import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgap import _kernels, _parallel
from specgap.eigensolver import TOL, eigh_batch

compiled = pytest.mark.skipif("cython" not in _kernels.available_backends(), reason="extension not built")


def _stack(seed, batch, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((batch, n, n)) + 1j * rng.standard_normal((batch, n, n))
    return 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))


def test_get_kernel_names():
    assert _kernels.get_kernel("python") is _kernels._python_batch
    assert _kernels.get_kernel() is _kernels.jacobi_batch
    with pytest.raises(ValueError):
        _kernels.get_kernel("fortran")


def test_pure_python_switch():
    code = "from specgap import _kernels; print(_kernels.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code], env={"SPECGAP_PURE_PYTHON": "1", "PATH": ""},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@compiled
@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.integers(1, 12))
@settings(max_examples=40, deadline=None)
def test_backends_agree(seed, n, batch):
    stack = _stack(seed, batch, n)
    wp, vp = eigh_batch(stack, True, kernel=_kernels.get_kernel("python"))
    wc, vc = eigh_batch(stack, True, kernel=_kernels.get_kernel("cython"))
    scale = np.abs(stack).max()
    assert np.allclose(wp, wc, atol=1e-12 * scale, rtol=0)
    for v in (vp, vc):
        gram = np.conj(np.swapaxes(v, 1, 2)) @ v
        assert np.abs(gram - np.eye(n)).max() <= TOL


def test_kernel_reports_sweeps_and_offnorm():
    a = _stack(5, 3, 6).astype(np.complex128)
    v = np.ascontiguousarray(np.broadcast_to(np.eye(6, dtype=np.complex128), a.shape)).copy()
    off, sweeps = np.zeros(3), np.zeros(3, dtype=np.int32)
    _kernels.jacobi_batch(a, v, np.full(3, 1e-10), 30, off, sweeps)
    assert np.all(off <= 1e-10) and np.all((sweeps >= 1) & (sweeps < 30))


def test_worker_count(monkeypatch):
    monkeypatch.setenv("SPECGAP_THREADS", "3")
    assert _parallel.worker_count() == 3
    monkeypatch.setenv("SPECGAP_THREADS", "0")
    assert _parallel.worker_count() == 1
    monkeypatch.setenv("SPECGAP_THREADS", "many")
    assert 1 <= _parallel.worker_count() <= 4


@pytest.mark.parametrize("threads", ["1", "4"])
def test_ordered_map_keeps_order(monkeypatch, threads):
    monkeypatch.setenv("SPECGAP_THREADS", threads)
    assert _parallel.ordered_map(lambda x: x * x, range(50)) == [x * x for x in range(50)]
