"""Independent reference implementations used only by the tests."""
import itertools

import numpy as np
from numba import njit


@njit(cache=True)
def _primal_gd(Xa, y, C, step, n_iter):
    # full-gradient descent on the augmented primal
    n, d = Xa.shape
    w = np.zeros(d)
    g = np.zeros(d)
    for _ in range(n_iter):
        g[:] = w
        for i in range(n):
            m = 0.0
            for j in range(d):
                m += Xa[i, j] * w[j]
            xi = 1.0 - y[i] * m
            if xi > 0.0:
                for j in range(d):
                    g[j] -= 2.0 * C * xi * y[i] * Xa[i, j]
        for j in range(d):
            w[j] -= step * g[j]
    return w


def reference_svm(X, y, C=1.0, n_iter=1_000_000):
    """Minimize 0.5*|w_aug|^2 + C*sum(max(0, 1 - y*(Xw + b))^2); returns (w, b, objective)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Xa = np.hstack([X, np.ones((len(X), 1))])
    # the objective is C^1 with gradient Lipschitz constant L below, so step 1/L converges
    L = 1.0 + 2.0 * C * np.linalg.eigvalsh(Xa.T @ Xa).max()
    wa = _primal_gd(Xa, y, C, 1.0 / L, n_iter)
    return wa[:-1], wa[-1], primal(wa[:-1], wa[-1], X, y, C)


def primal(w, b, X, y, C):
    xi = np.maximum(0.0, 1.0 - y * (X @ w + b))
    return 0.5 * (w @ w + b * b) + C * xi @ xi


def toy_dataset(seed, n=20, d=2):
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = rng.normal(size=(n, d)) + 0.8 * y[:, None]
    return X, y


def brute_force_procrustes_2x2(X, Y, steps=1000):
    """Best Frobenius residual over a grid of rotations and reflections."""
    best = np.inf
    for theta, flip in itertools.product(np.linspace(0, 2 * np.pi, steps, endpoint=False), (1, -1)):
        c, s = np.cos(theta), np.sin(theta)
        W = np.array([[c, -s], [s, c]]) @ np.diag([1.0, flip])
        best = min(best, np.linalg.norm(X @ W - Y))
    return best


def fleiss_reference(counts):
    """Direct transcription of the kappa definition with Python floats."""
    rows = [list(map(int, r)) for r in counts]
    N, n = len(rows), sum(rows[0])
    p_items = [(sum(c * c for c in r) - n) / (n * (n - 1)) for r in rows]
    p_bar = sum(p_items) / N
    k = len(rows[0])
    p_j = [sum(r[j] for r in rows) / (N * n) for j in range(k)]
    p_e = sum(p * p for p in p_j)
    return (p_bar - p_e) / (1 - p_e)
