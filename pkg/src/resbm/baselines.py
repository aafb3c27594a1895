"""Comparison estimators: per-member, mean-adjacency and kernel-averaged
spectral clustering."""

from typing import List

import numpy as np
from scipy.linalg import eigh

from . import rng as streams
from .errors import EstimationError, ValidationError
from .graphs import laplacian
from .kmeans import kmeans
from .types import HardAssignment, NetworkSample


def normalized_operator(w: np.ndarray) -> np.ndarray:
    """D^{-1/2} W D^{-1/2} for a symmetric non-negative weight matrix.

    Zero-degree rows/columns stay zero; used for mean adjacency matrices
    whose entries are fractional.
    """
    w = np.asarray(w, dtype=float)
    deg = w.sum(axis=1)
    inv_sqrt = np.where(deg > 0, deg, 1.0) ** -0.5
    inv_sqrt[deg == 0] = 0.0
    return (w * inv_sqrt[:, None]) * inv_sqrt[None, :]


def top_eigenvectors(sym: np.ndarray, k: int) -> np.ndarray:
    """The k eigenvectors of a symmetric matrix with largest eigenvalues.

    Signs are fixed so each vector's largest-magnitude entry is positive,
    keeping downstream clustering reproducible.
    """
    sym = np.asarray(sym, dtype=float)
    n = sym.shape[0]
    if k > n:
        raise ValidationError(f"k={k} exceeds node count {n}")
    try:
        _, vecs = eigh(sym, subset_by_index=[n - k, n - 1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise EstimationError(f"eigendecomposition failed: {exc}") from exc
    vecs = vecs[:, ::-1]
    flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(k)])
    flip[flip == 0] = 1.0
    return vecs * flip


def _row_normalize(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return v / safe[:, None]


def cluster_operator(sym: np.ndarray, k: int, generator: np.random.Generator) -> HardAssignment:
    """Top-k eigenvectors of ``sym``, row normalization, seeded k-means."""
    v = top_eigenvectors(sym, k)
    labels = kmeans(_row_normalize(v), k, generator)
    return HardAssignment.from_labels(labels, k)


def spectral_single(a: np.ndarray, k: int, seed: int) -> HardAssignment:
    """Spectral clustering of one network via its normalized Laplacian."""
    return cluster_operator(laplacian(a), k, streams.substream(seed, streams.KMEANS))


def ind_spectral(sample: NetworkSample, k: int, seed: int) -> List[HardAssignment]:
    """Independent spectral clustering of every member network.

    Labels are arbitrary per member; identical members yield identical
    partitions because the k-means stream is shared.
    """
    return [spectral_single(sample.member(m), k, seed) for m in range(sample.n_members)]


def mean_spectral(sample: NetworkSample, k: int, seed: int) -> HardAssignment:
    """Spectral clustering of the mean adjacency matrix."""
    mean_adj = sample.adjacency.mean(axis=0)
    op = normalized_operator(mean_adj)
    return cluster_operator(op, k, streams.substream(seed, streams.KMEANS))


def spectral_k(sample: NetworkSample, k: int, seed: int) -> HardAssignment:
    """Mean community detection from averaged spectral projection kernels.

    Each member contributes the projector onto its top-k Laplacian
    eigenspace; the averaged kernel is then clustered like an affinity
    matrix.
    """
    n = sample.n
    kernel = np.zeros((n, n))
    for m in range(sample.n_members):
        v = top_eigenvectors(laplacian(sample.member(m)), k)
        kernel += v @ v.T
    kernel /= sample.n_members
    return cluster_operator(kernel, k, streams.substream(seed, streams.KMEANS))
