"""Graph primitives: normalized Laplacian, degrees, density, thresholding."""

import numpy as np

from .errors import ValidationError


def _check_adjacency(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"adjacency must be square, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValidationError("adjacency must be symmetric")
    if np.any(np.diag(a) != 0):
        raise ValidationError("adjacency diagonal must be zero")
    if not np.isin(a, (0.0, 1.0)).all():
        raise ValidationError("adjacency entries must be 0 or 1")
    return a


def degrees(a: np.ndarray) -> np.ndarray:
    """Row sums of a validated binary adjacency matrix."""
    a = _check_adjacency(a)
    return a.sum(axis=1).astype(int)


def density(a: np.ndarray) -> float:
    """Fraction of node pairs joined by an edge: 2E / (n(n-1))."""
    a = _check_adjacency(a)
    n = a.shape[0]
    if n < 2:
        return 0.0
    return float(a.sum() / (n * (n - 1)))


def laplacian(a: np.ndarray) -> np.ndarray:
    """Degree-normalized adjacency D^{-1/2} A D^{-1/2}.

    Rows and columns of isolated nodes are left at zero so thresholded data
    with disconnected nodes stays usable downstream.
    """
    a = _check_adjacency(a)
    deg = a.sum(axis=1)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, deg, 1.0) ** -0.5
    inv_sqrt[deg == 0] = 0.0
    return (a * inv_sqrt[:, None]) * inv_sqrt[None, :]


def threshold_correlation(r: np.ndarray, tau: float, absolute: bool = False) -> np.ndarray:
    """Binarize a correlation matrix: edge iff r_ij > tau, zero diagonal.

    The inequality is strict.  Signed correlations are compared as-is by
    default; ``absolute=True`` thresholds on magnitude instead.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValidationError(f"correlation matrix must be square, got shape {r.shape}")
    if not np.allclose(r, r.T, rtol=0, atol=1e-8):
        raise ValidationError("correlation matrix must be symmetric within 1e-8")
    if not np.allclose(np.diag(r), 1.0, rtol=0, atol=1e-8):
        raise ValidationError("correlation matrix must have unit diagonal")
    if not 0.0 <= tau <= 1.0:
        raise ValidationError(f"threshold tau={tau} outside [0, 1]")
    values = np.abs(r) if absolute else r
    a = (values > tau).astype(float)
    a = np.minimum(a, a.T)  # guard against asymmetry within tolerance
    np.fill_diagonal(a, 0.0)
    return a
