"""Evaluation metrics: NMI, label alignment, transition error, consistency,
ROC/AUC model fit."""

from typing import List, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .types import HardAssignment, ResbmFit


def _contingency(z1: HardAssignment, z2: HardAssignment) -> np.ndarray:
    if z1.n != z2.n:
        raise ValidationError("partitions must cover the same nodes")
    return z1.matrix.T @ z2.matrix


def nmi(z1: HardAssignment, z2: HardAssignment) -> float:
    """Normalized mutual information between two partitions, in [0, 1].

    Normalization is by the arithmetic mean of the two label entropies;
    two single-cluster partitions compare as 1 by convention.
    """
    c = _contingency(z1, z2)
    n = z1.n
    p = c / n
    p1 = p.sum(axis=1)
    p2 = p.sum(axis=0)
    nz = p > 0
    mi = float(np.sum(p[nz] * np.log(p[nz] / np.outer(p1, p2)[nz])))
    h1 = float(-np.sum(p1[p1 > 0] * np.log(p1[p1 > 0])))
    h2 = float(-np.sum(p2[p2 > 0] * np.log(p2[p2 > 0])))
    if h1 == 0.0 and h2 == 0.0:
        return 1.0
    denom = 0.5 * (h1 + h2)
    if denom == 0.0:
        return 0.0
    return max(0.0, min(1.0, mi / denom))


def _lsap_max(cost: np.ndarray) -> int:
    row, col = linear_sum_assignment(cost, maximize=True)
    return int(round(cost[row, col].sum()))


def align_labels(reference: HardAssignment, candidate: HardAssignment) -> Tuple[np.ndarray, HardAssignment]:
    """Best label permutation of ``candidate`` onto ``reference``.

    Maximizes the total overlap count with an exact assignment solver and
    returns ``(perm, relabeled)`` where relabeled column q is candidate
    column perm[q].  Ties are broken to the lexicographically smallest
    permutation so results are reproducible.
    """
    if reference.k != candidate.k:
        raise ValidationError("partitions must have the same number of communities")
    overlap = _contingency(reference, candidate).astype(int)
    k = reference.k
    best = _lsap_max(overlap)
    perm: List[int] = []
    remaining = list(range(k))
    target = best
    for q in range(k):
        for c in sorted(remaining):
            rest = [x for x in remaining if x != c]
            tail = _lsap_max(overlap[np.ix_(range(q + 1, k), rest)]) if rest else 0
            if overlap[q, c] + tail == target:
                perm.append(c)
                remaining = rest
                target -= overlap[q, c]
                break
    perm_arr = np.asarray(perm, dtype=int)
    return perm_arr, candidate.relabel(perm_arr)


def align_fit(fit: ResbmFit, reference: HardAssignment) -> ResbmFit:
    """Relabel every field of a fit so its z_bar best matches ``reference``."""
    perm, _ = align_labels(reference, fit.z_bar)
    return fit.relabel(perm)


def correct_classification_rate(z1: HardAssignment, z2: HardAssignment) -> float:
    """Fraction of nodes agreeing after optimal label alignment."""
    _, aligned = align_labels(z1, z2)
    return float(np.mean(z1.labels == aligned.labels))


def t_error(t_hat: np.ndarray, t_true: np.ndarray) -> float:
    """Frobenius-norm difference between two transition matrices."""
    t_hat = np.asarray(t_hat, dtype=float)
    t_true = np.asarray(t_true, dtype=float)
    if t_hat.shape != t_true.shape:
        raise ValidationError("transition matrices must have equal shape")
    return float(np.linalg.norm(t_hat - t_true, "fro"))


def t_median_abs(t_hat: np.ndarray, t_true: np.ndarray) -> float:
    """Median absolute elementwise difference between transition matrices."""
    t_hat = np.asarray(t_hat, dtype=float)
    t_true = np.asarray(t_true, dtype=float)
    if t_hat.shape != t_true.shape:
        raise ValidationError("transition matrices must have equal shape")
    return float(np.median(np.abs(t_hat - t_true)))


def module_consistency(z_members) -> np.ndarray:
    """Fraction of members co-clustering each node pair; unit diagonal."""
    members = list(z_members)
    if not members:
        raise ValidationError("need at least one member assignment")
    n = members[0].n
    c = np.zeros((n, n))
    for z in members:
        c += z.matrix @ z.matrix.T
    c /= len(members)
    np.fill_diagonal(c, 1.0)
    return c


def roc_auc(a: np.ndarray, p_hat: np.ndarray) -> Tuple[np.ndarray, float]:
    """ROC curve and AUC of edge-probability scores against a network.

    Scores and outcomes are taken over unordered node pairs i < j.  AUC uses
    the rank statistic with midranks for ties; the curve is returned as
    (fpr, tpr) rows from (0, 0) to (1, 1).
    """
    from scipy.stats import rankdata

    a = np.asarray(a, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    if a.shape != p_hat.shape:
        raise ValidationError("adjacency and score matrix must have equal shape")
    iu = np.triu_indices(a.shape[0], k=1)
    y = a[iu]
    s = p_hat[iu]
    if np.any(s < 0) or np.any(s > 1):
        raise ValidationError("edge scores must lie in [0, 1]")
    pos = int(y.sum())
    neg = y.size - pos
    if pos == 0 or neg == 0:
        raise ValidationError("AUC undefined: network has no edges or no non-edges")
    ranks = rankdata(s)
    auc = (ranks[y == 1].sum() - pos * (pos + 1) / 2) / (pos * neg)
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1 - y_sorted)
    boundary = np.r_[np.diff(s_sorted) != 0, True]
    curve = np.column_stack([fp[boundary] / neg, tp[boundary] / pos])
    curve = np.vstack([[0.0, 0.0], curve])
    return curve, float(auc)
