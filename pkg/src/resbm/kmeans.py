"""Seeded k-means with batched k-means++ restarts.

All restarts run as one tensor computation, which matters for the many
repeated low-dimensional clustering calls inside permutation resampling
where per-call overhead would otherwise dominate.  Deterministic given its
generator.
"""

import numpy as np


def _batch_plus_plus(x: np.ndarray, k: int, n_init: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ starting centers for every restart, shape (R, k, d)."""
    n = x.shape[0]
    centers = np.empty((n_init, k, x.shape[1]))
    centers[:, 0] = x[rng.integers(n, size=n_init)]
    d2 = ((x[None, :, :] - centers[:, None, 0, :]) ** 2).sum(axis=2)
    for j in range(1, k):
        totals = d2.sum(axis=1)
        u = rng.random(n_init) * np.where(totals > 0, totals, 1.0)
        cdf = np.cumsum(d2, axis=1)
        idx = np.minimum((cdf < u[:, None]).sum(axis=1), n - 1)
        idx = np.where(totals > 0, idx, rng.integers(n, size=n_init))
        centers[:, j] = x[idx]
        d2 = np.minimum(d2, ((x[None, :, :] - centers[:, None, j, :]) ** 2).sum(axis=2))
    return centers


def kmeans(x: np.ndarray, k: int, rng: np.random.Generator, n_init: int = 20, max_iter: int = 300) -> np.ndarray:
    """Cluster rows of ``x`` into k groups; returns integer labels.

    Runs ``n_init`` k-means++ restarts in one batch and keeps the lowest
    within-cluster sum of squares; empty clusters are reseeded with the
    point farthest from its center.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if k <= 1:
        return np.zeros(n, dtype=int)
    centers = _batch_plus_plus(x, k, n_init, rng)
    x2 = (x**2).sum(axis=1)
    labels = np.full((n_init, n), -1)
    rows = np.arange(n_init)[:, None]
    for _ in range(max_iter):
        d2 = x2[None, :, None] - 2 * np.matmul(x[None], centers.transpose(0, 2, 1)) + (centers**2).sum(axis=2)[:, None, :]
        new_labels = np.argmin(d2, axis=2)
        counts = np.zeros((n_init, k), dtype=int)
        np.add.at(counts, (rows, new_labels), 1)
        for r in np.flatnonzero((counts == 0).any(axis=1)):
            for j in np.flatnonzero(counts[r] == 0):
                far = int(np.argmax(d2[r, np.arange(n), new_labels[r]]))
                new_labels[r, far] = j
                centers[r, j] = x[far]
                d2[r, far, j] = 0.0
                counts = np.zeros((n_init, k), dtype=int)
                np.add.at(counts, (rows, new_labels), 1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        onehot = np.zeros((n_init, n, k))
        onehot[rows, np.arange(n)[None, :], labels] = 1.0
        sums = np.matmul(onehot.transpose(0, 2, 1), np.broadcast_to(x, (n_init, n, x.shape[1])))
        sizes = onehot.sum(axis=1)
        centers = sums / np.where(sizes > 0, sizes, 1.0)[:, :, None]
    d2 = x2[None, :, None] - 2 * np.matmul(x[None], centers.transpose(0, 2, 1)) + (centers**2).sum(axis=2)[:, None, :]
    inertia = np.maximum(d2[rows, np.arange(n)[None, :], labels], 0.0).sum(axis=1)
    return labels[int(np.argmin(inertia))]
