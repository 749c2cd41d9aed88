"""Inner loops of the SVM trainer.

Every kernel exists twice: a scalar-loop version compiled with numba and a
numpy version that works row by row. The numba path is used when numba is
importable and ``BLEACHTEXT_DISABLE_NUMBA`` is unset (or ``0``).

Both paths are deterministic, but they sum in different orders, so results
agree only to rounding error, not bit for bit.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

DISABLED_BY_ENV = os.environ.get("BLEACHTEXT_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = numba is not None and not DISABLED_BY_ENV

_PG_EPS = 1e-12


# -- numpy path -------------------------------------------------------------

def dcd_epoch_numpy(indptr, indices, data, y, qii, diag, alpha, w, perm):
    """One pass of dual coordinate descent over the examples in ``perm``.

    ``w`` carries the bias as its last entry (constant feature 1). ``alpha``
    and ``w`` are updated in place. Returns the max and min projected gradient.
    """
    bias = w.shape[0] - 1
    max_pg, min_pg = -np.inf, np.inf
    for i in perm:
        a, b = indptr[i], indptr[i + 1]
        idx = indices[a:b]
        val = data[a:b]
        g = y[i] * (np.dot(w[idx], val) + w[bias]) - 1.0 + diag * alpha[i]
        pg = 0.0 if (alpha[i] == 0.0 and g > 0.0) else g
        max_pg = max(max_pg, pg)
        min_pg = min(min_pg, pg)
        if abs(pg) > _PG_EPS:
            old = alpha[i]
            alpha[i] = max(old - g / qii[i], 0.0)
            d = (alpha[i] - old) * y[i]
            w[idx] += d * val
            w[bias] += d
    return max_pg, min_pg


def csr_margins_numpy(indptr, indices, data, w):
    bias = w.shape[0] - 1
    prod = w[indices] * data
    n = len(indptr) - 1
    out = np.full(n, w[bias])
    nonempty = indptr[1:] > indptr[:-1]
    if prod.size:
        sums = np.add.reduceat(prod, indptr[:-1][nonempty])
        out[nonempty] += sums
    return out


# -- numba path ---------------------------------------------------------------

def _dcd_epoch_loops(indptr, indices, data, y, qii, diag, alpha, w, perm):
    bias = w.shape[0] - 1
    max_pg = -np.inf
    min_pg = np.inf
    for t in range(perm.shape[0]):
        i = perm[t]
        s = w[bias]
        for p in range(indptr[i], indptr[i + 1]):
            s += w[indices[p]] * data[p]
        g = y[i] * s - 1.0 + diag * alpha[i]
        pg = g
        if alpha[i] == 0.0 and g > 0.0:
            pg = 0.0
        if pg > max_pg:
            max_pg = pg
        if pg < min_pg:
            min_pg = pg
        if abs(pg) > _PG_EPS:
            old = alpha[i]
            new = old - g / qii[i]
            if new < 0.0:
                new = 0.0
            alpha[i] = new
            d = (new - old) * y[i]
            for p in range(indptr[i], indptr[i + 1]):
                w[indices[p]] += d * data[p]
            w[bias] += d
    return max_pg, min_pg


def _csr_margins_loops(indptr, indices, data, w):
    bias = w.shape[0] - 1
    n = indptr.shape[0] - 1
    out = np.empty(n)
    for i in range(n):
        s = w[bias]
        for p in range(indptr[i], indptr[i + 1]):
            s += w[indices[p]] * data[p]
        out[i] = s
    return out


if numba is not None:
    dcd_epoch_numba = numba.njit(cache=True)(_dcd_epoch_loops)
    csr_margins_numba = numba.njit(cache=True)(_csr_margins_loops)
else:  # pragma: no cover
    dcd_epoch_numba = csr_margins_numba = None


def get_backend(use_numba=None):
    """Return ``(dcd_epoch, csr_margins)`` for the requested backend."""
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        if numba is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        return dcd_epoch_numba, csr_margins_numba
    return dcd_epoch_numpy, csr_margins_numpy
