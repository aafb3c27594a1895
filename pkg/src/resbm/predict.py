"""Out-of-sample prediction and group discrimination.

The fitted expected assignment Z̄T is the prediction for any new member of
the population; held-out subjects are clustered independently, aligned to
the fitted mean structure, and compared against that prediction.
"""

import warnings
from dataclasses import dataclass
import numpy as np

from . import rng as streams
from .baselines import spectral_single
from .errors import ResbmError, ValidationError
from .metrics import align_labels
from .twostep import osntf_single
from .types import HardAssignment, NetworkSample, ResbmFit, SoftAssignment

SINGLE_METHODS = ("spectral", "osntf")
LOG_CLAMP = 1e-9


def expected_assignment(fit: ResbmFit) -> SoftAssignment:
    """Per-node community probabilities Z̄T for a random group member."""
    probs = fit.z_bar.matrix @ fit.t.matrix
    probs = probs / probs.sum(axis=1, keepdims=True)
    return SoftAssignment(probs)


def assignment_covariance(fit: ResbmFit) -> np.ndarray:
    """Per-node covariance of the one-hot member assignment, shape (n, k, k).

    For a node with mean community q this is diag(T_q) - T_q^T T_q.
    """
    rows = fit.z_bar.matrix @ fit.t.matrix
    return np.stack([np.diag(r) - np.outer(r, r) for r in rows])


def _cluster_subject(a: np.ndarray, k: int, single_method: str, seed: int) -> HardAssignment:
    if single_method == "spectral":
        return spectral_single(a, k, seed)
    if single_method == "osntf":
        return osntf_single(a, k, seed)
    raise ValidationError(f"unknown single-network method {single_method!r}; expected one of {SINGLE_METHODS}")


def prediction_error(
    fit: ResbmFit,
    test_sample: NetworkSample,
    k: int,
    single_method: str = "osntf",
    seed: int = 0,
) -> float:
    """Median absolute difference between predicted and observed assignments.

    Each held-out subject is clustered on its own, aligned to the fitted
    mean partition, and the subject-average one-hot assignments are compared
    entrywise against Z̄T.  Subjects whose clustering fails are dropped with
    a warning.
    """
    if test_sample.n_members == 0:
        raise ValidationError("test sample is empty")
    if test_sample.n != fit.n:
        raise ValidationError("test sample and fit disagree on the node set")
    predicted = expected_assignment(fit).matrix
    total = np.zeros_like(predicted)
    kept = 0
    for m in range(test_sample.n_members):
        try:
            z = _cluster_subject(test_sample.member(m), k, single_method, streams.stream_seed(seed, streams.PREDICT, m))
            _, aligned = align_labels(fit.z_bar, z)
        except ResbmError as exc:
            warnings.warn(f"subject {m} dropped from prediction error: {exc}")
            continue
        total += aligned.matrix
        kept += 1
    if kept == 0:
        raise ValidationError("every test subject failed to cluster")
    mean_assignment = total / kept
    return float(np.median(np.abs(mean_assignment - predicted)))


@dataclass(frozen=True)
class Classification:
    """Group decision with per-group scores; ties flag the A default."""

    label: str
    tie: bool
    score_a: float
    score_b: float


def _loglik_score(u_aligned: HardAssignment, fit: ResbmFit) -> float:
    probs = np.clip(expected_assignment(fit).matrix, LOG_CLAMP, None)
    return float((u_aligned.matrix * np.log(probs)).sum())


def _muv_distance(u: HardAssignment, fit: ResbmFit) -> float:
    zt = fit.z_bar.matrix @ fit.t.matrix
    group = zt @ zt.T
    subject = u.matrix @ u.matrix.T
    return float(np.linalg.norm(group - subject, "fro") ** 2)


def classify_subject(
    u: HardAssignment, fit_a: ResbmFit, fit_b: ResbmFit, rule: str = "loglik"
) -> Classification:
    """Assign a new subject's partition to population A or B.

    The log-likelihood rule scores sum_i u_i' log(Z̄T)_i against each group
    after aligning the subject's labels to that group; the co-membership
    rule compares squared distances between the subject's co-membership
    matrix and each group's expected one (smaller wins).
    """
    if rule not in ("loglik", "muv"):
        raise ValidationError(f"unknown rule {rule!r}; expected 'loglik' or 'muv'")
    if u.n != fit_a.n or u.n != fit_b.n:
        raise ValidationError("subject and fits disagree on the node set")
    _, u_a = align_labels(fit_a.z_bar, u)
    _, u_b = align_labels(fit_b.z_bar, u)
    if rule == "loglik":
        score_a = _loglik_score(u_a, fit_a)
        score_b = _loglik_score(u_b, fit_b)
        if score_a == score_b:
            return Classification("A", True, score_a, score_b)
        return Classification("A" if score_a > score_b else "B", False, score_a, score_b)
    score_a = _muv_distance(u_a, fit_a)
    score_b = _muv_distance(u_b, fit_b)
    if score_a == score_b:
        return Classification("A", True, score_a, score_b)
    return Classification("A" if score_a < score_b else "B", False, score_a, score_b)
