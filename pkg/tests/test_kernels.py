import os
import subprocess
import sys

import numpy as np
import pytest

from bleachtext import _kernels

needs_numba = pytest.mark.skipif(_kernels.numba is None, reason="numba not installed")


def random_csr(n, d, nnz, seed):
    rng = np.random.default_rng(seed)
    indptr = np.zeros(n + 1, dtype=np.int64)
    idx, val = [], []
    for i in range(n):
        k = int(rng.integers(0, nnz + 1))
        idx.append(np.sort(rng.choice(d, size=k, replace=False)))
        val.append(rng.normal(size=k))
        indptr[i + 1] = indptr[i] + k
    return indptr, np.concatenate(idx).astype(np.int64), np.concatenate(val), rng


@pytest.mark.parametrize("flag,expected", [("1", "False"), ("0", "True"), ("", "True")])
@needs_numba
def test_env_flag(flag, expected):
    env = dict(os.environ, BLEACHTEXT_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from bleachtext import _kernels; print(_kernels.USE_NUMBA)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == expected


def test_numpy_backend_selected_explicitly():
    assert _kernels.get_backend(False) == (_kernels.dcd_epoch_numpy, _kernels.csr_margins_numpy)


@needs_numba
@pytest.mark.parametrize("seed", range(4))
def test_epoch_and_margins_agree(seed):
    indptr, indices, data, rng = random_csr(50, 30, 6, seed)
    y = np.where(rng.random(50) < 0.5, 1.0, -1.0)
    sq = np.zeros(50)
    for i in range(50):
        sq[i] = np.sum(data[indptr[i]:indptr[i + 1]] ** 2)
    qii = sq + 1.0 + 0.5
    perm = rng.permutation(50).astype(np.int64)
    states = []
    for fn in (_kernels.dcd_epoch_numpy, _kernels.dcd_epoch_numba):
        alpha, w = np.zeros(50), np.zeros(31)
        for _ in range(3):
            pg = fn(indptr, indices, data, y, qii, 0.5, alpha, w, perm)
        states.append((alpha, w, pg))
    (a1, w1, pg1), (a2, w2, pg2) = states
    assert np.allclose(a1, a2, atol=1e-12) and np.allclose(w1, w2, atol=1e-12)
    assert np.allclose(pg1, pg2, atol=1e-12)
    m1 = _kernels.csr_margins_numpy(indptr, indices, data, w1)
    m2 = _kernels.csr_margins_numba(indptr, indices, data, w1)
    assert np.allclose(m1, m2, atol=1e-12)
    assert np.allclose(m1, [w1[indices[indptr[i]:indptr[i + 1]]] @ data[indptr[i]:indptr[i + 1]] + w1[-1]
                            for i in range(50)], atol=1e-12)
