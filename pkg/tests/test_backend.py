import os
import subprocess
import sys

import numpy as np
import pytest

from nonlocal_spectral import _pykernels
from nonlocal_spectral._backend import BACKEND, worker_count

ck = pytest.importorskip("nonlocal_spectral._ckernels")


def test_compiled_backend_selected_by_default():
    assert BACKEND == "cython"


def test_spline_eval_matches(rng):
    x = np.cumsum(rng.uniform(0.1, 1.0, 50))
    y = rng.normal(size=50)
    y2 = rng.normal(size=50)
    q = rng.uniform(x[0], x[-1], 500)
    q[:2] = x[0], x[-1]
    assert np.allclose(ck.spline_eval(x, y, y2, q), _pykernels.spline_eval(x, y, y2, q), rtol=1e-15, atol=1e-15)


def test_stencil_apply_matches(rng):
    u = rng.normal(size=300)
    a = rng.normal(size=9)
    assert np.allclose(ck.stencil_apply(u, a), _pykernels.stencil_apply(u, a), rtol=1e-14, atol=1e-13)


def test_hypsum_terminating_series_identical():
    # 1F1-like: (-3)_k / (2)_k z^k / k! at z = -5/2
    args = ([-3], [1], [2], [1], -5, 2, 80, 0, 100)
    assert ck.hypsum_fixed(*args) == _pykernels.hypsum_fixed(*args)


def _backend_in_subprocess(env_extra):
    env = dict(os.environ, **env_extra)
    out = subprocess.run([sys.executable, "-c", "from nonlocal_spectral._backend import BACKEND; print(BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    return out.stdout.strip()


def test_pure_python_switch():
    assert _backend_in_subprocess({"NONLOCAL_PURE_PYTHON": "1"}) == "python"
    assert _backend_in_subprocess({"NONLOCAL_PURE_PYTHON": "0"}) == "cython"


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("NONLOCAL_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("NONLOCAL_THREADS", "junk")
    assert worker_count() >= 1
