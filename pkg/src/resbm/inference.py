"""Two-sample tests for differences in community structure.

Network-level statistics compare group co-membership structures; the node
statistic compares expected per-node assignment vectors after label
alignment.  Null distributions come from refitting on label-permuted
regroupings of the pooled sample; p-values use the add-one estimator
(1 + #{null >= observed}) / (1 + resamples) so they are never zero.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import rng as streams
from .errors import InferenceError, ResbmError, ValidationError
from .fitting import METHODS, fit_resbm
from .metrics import align_labels
from .types import HardAssignment, NetworkSample, ResbmFit, TransitionMatrix

OBSERVED_A = 101
OBSERVED_B = 102

STATISTICS = ("muv", "sine", "muv-node")


def default_workers() -> int:
    """Worker count from RESBM_WORKERS, defaulting to 1."""
    value = os.environ.get("RESBM_WORKERS", "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _partition_projector(z: HardAssignment) -> np.ndarray:
    sizes = z.sizes()
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise InferenceError(f"community {int(empty[0])} is empty; subspace distance undefined")
    return (z.matrix / sizes[None, :]) @ z.matrix.T


def sine_statistic(zbar_a: HardAssignment, zbar_b: HardAssignment) -> float:
    """Squared subspace distance between two partition subspaces.

    Equals half the squared Frobenius distance between the partition
    projectors, i.e. the squared sines of the canonical angles; invariant
    to community labels and bounded by k.
    """
    if zbar_a.n != zbar_b.n:
        raise ValidationError("partitions must cover the same nodes")
    return 0.5 * float(
        np.linalg.norm(_partition_projector(zbar_a) - _partition_projector(zbar_b), "fro") ** 2
    )


def _comembership(zbar: HardAssignment, t: TransitionMatrix) -> np.ndarray:
    zt = zbar.matrix @ t.matrix
    return zt @ zt.T


def muv_statistic(
    zbar_a: HardAssignment,
    t_a: TransitionMatrix,
    zbar_b: HardAssignment,
    t_b: TransitionMatrix,
) -> float:
    """Squared Frobenius distance between expected co-membership structures."""
    if zbar_a.n != zbar_b.n:
        raise ValidationError("partitions must cover the same nodes")
    return float(np.linalg.norm(_comembership(zbar_a, t_a) - _comembership(zbar_b, t_b), "fro") ** 2)


def muv_node_statistic(
    zbar_a: HardAssignment,
    t_a: TransitionMatrix,
    zbar_b: HardAssignment,
    t_b: TransitionMatrix,
    alignment: Sequence[int],
) -> np.ndarray:
    """Per-node squared difference of expected assignment vectors.

    ``alignment`` maps group A labels to group B labels (entry q names the B
    community matched to A community q); group B is relabeled accordingly
    before the rows are compared.
    """
    perm = np.asarray(alignment, dtype=int)
    if sorted(perm.tolist()) != list(range(zbar_b.k)):
        raise ValidationError("alignment must be a permutation of the communities")
    zb = zbar_b.relabel(perm)
    tb = t_b.relabel(perm)
    diff = zbar_a.matrix @ t_a.matrix - zb.matrix @ tb.matrix
    return (diff**2).sum(axis=1)


def _statistic_from_fits(fit_a: ResbmFit, fit_b: ResbmFit, statistic: str):
    if statistic == "muv":
        return muv_statistic(fit_a.z_bar, fit_a.t, fit_b.z_bar, fit_b.t)
    if statistic == "sine":
        return sine_statistic(fit_a.z_bar, fit_b.z_bar)
    if statistic == "muv-node":
        perm, _ = align_labels(fit_a.z_bar, fit_b.z_bar)
        return muv_node_statistic(fit_a.z_bar, fit_a.t, fit_b.z_bar, fit_b.t, perm)
    raise ValidationError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")


@dataclass(frozen=True)
class TestResult:
    """Observed statistic, resampled null, p-value(s) and bookkeeping."""

    statistic: Union[float, np.ndarray]
    null_samples: np.ndarray
    p_value: Union[float, np.ndarray]
    n_resamples: int
    n_skipped: int
    seed: int
    corrected: Optional[dict] = None

    def with_correction(self, method: str, adjusted: np.ndarray) -> "TestResult":
        corrected = dict(self.corrected or {})
        corrected[method] = adjusted
        return TestResult(
            self.statistic,
            self.null_samples,
            self.p_value,
            self.n_resamples,
            self.n_skipped,
            self.seed,
            corrected,
        )


# Shared state for pool workers, installed once per worker by the
# initializer so tasks only carry an integer index.
_JOB_CTX = None


def _install_ctx(ctx) -> None:
    global _JOB_CTX
    _JOB_CTX = ctx


def _resample_once(ctx, r: int, attempt: int):
    pooled, m1, k, method, statistic, seed, fit_kwargs = ctx
    gen = streams.substream(seed, streams.RESAMPLE, r, attempt)
    order = gen.permutation(pooled.n_members)
    group_a = pooled.subset(order[:m1])
    group_b = pooled.subset(order[m1:])
    fit_a = fit_resbm(group_a, k, method, seed=streams.stream_seed(seed, streams.RESAMPLE, r, attempt, 0), **fit_kwargs)
    fit_b = fit_resbm(group_b, k, method, seed=streams.stream_seed(seed, streams.RESAMPLE, r, attempt, 1), **fit_kwargs)
    return _statistic_from_fits(fit_a, fit_b, statistic)


def _resample_job(r: int):
    ctx = _JOB_CTX
    for attempt in (0, 1):
        try:
            return r, _resample_once(ctx, r, attempt), False
        except ResbmError:
            continue
    return r, None, True


def permutation_test(
    sample_a: NetworkSample,
    sample_b: NetworkSample,
    k: int,
    estimator: str = "varem",
    statistic: str = "muv",
    n_resamples: int = 1000,
    seed: int = 0,
    parallelism: Optional[int] = None,
    **fit_kwargs,
) -> TestResult:
    """Permutation test for a difference between two network populations.

    The pooled members are repeatedly split (without replacement) into
    groups of the original sizes; the chosen estimator is refit on both and
    the statistic recomputed.  Each resample uses its own substream so the
    result is identical no matter how work is scheduled.  A resample whose
    fit fails is retried once with a fresh substream and then skipped, with
    the p-value denominator shrunk accordingly.
    """
    if estimator not in METHODS:
        raise ValidationError(f"unknown estimator {estimator!r}; expected one of {METHODS}")
    if statistic not in STATISTICS:
        raise ValidationError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")
    m1, m2 = sample_a.n_members, sample_b.n_members
    if m1 < 2 or m2 < 2:
        raise ValidationError("both groups need at least two member networks")
    if sample_a.n != sample_b.n:
        raise ValidationError("groups must share the node set")
    if n_resamples < 1:
        raise ValidationError("n_resamples must be positive")

    fit_a = fit_resbm(sample_a, k, estimator, seed=streams.stream_seed(seed, OBSERVED_A), **fit_kwargs)
    fit_b = fit_resbm(sample_b, k, estimator, seed=streams.stream_seed(seed, OBSERVED_B), **fit_kwargs)
    observed = _statistic_from_fits(fit_a, fit_b, statistic)

    pooled = NetworkSample(np.concatenate([sample_a.adjacency, sample_b.adjacency]))
    ctx = (pooled, m1, k, estimator, statistic, seed, fit_kwargs)

    workers = default_workers() if parallelism is None else max(1, int(parallelism))
    results = {}
    if workers == 1:
        _install_ctx(ctx)
        for r in range(n_resamples):
            idx, value, skipped = _resample_job(r)
            results[idx] = (value, skipped)
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_install_ctx, initargs=(ctx,)
        ) as pool:
            for idx, value, skipped in pool.map(_resample_job, range(n_resamples), chunksize=8):
                results[idx] = (value, skipped)

    null_values = [results[r][0] for r in sorted(results) if not results[r][1]]
    n_skipped = n_resamples - len(null_values)
    if not null_values:
        raise InferenceError("every resample failed; cannot form a null distribution")

    null = np.asarray(null_values, dtype=float)
    denom = 1 + len(null_values)
    if statistic == "muv-node":
        p_value = (1 + (null >= np.asarray(observed)[None, :]).sum(axis=0)) / denom
    else:
        p_value = float((1 + (null >= observed).sum()) / denom)
    return TestResult(
        statistic=observed,
        null_samples=null,
        p_value=p_value,
        n_resamples=n_resamples,
        n_skipped=n_skipped,
        seed=seed,
    )


def adjust_pvalues(
    p: Sequence[float], method: str = "bh-fdr", level: float = 0.05
) -> Tuple[np.ndarray, np.ndarray]:
    """Multiplicity-adjusted p-values and the rejection mask at ``level``.

    ``bh-fdr`` is the step-up false discovery rate procedure, ``holm-fwer``
    the step-down family-wise procedure; both return adjusted values that
    are monotone in the input ranks.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError("p must be a non-empty vector")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValidationError("p-values must lie in (0, 1]")
    if not 0 < level < 1:
        raise ValidationError("level must lie in (0, 1)")
    n = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    if method == "bh-fdr":
        scaled = ranked * n / np.arange(1, n + 1)
        adjusted_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
        threshold = level * np.arange(1, n + 1) / n
        passing = np.flatnonzero(ranked <= threshold)
        cutoff = passing.max() + 1 if passing.size else 0
        reject_sorted = np.arange(n) < cutoff
    elif method == "holm-fwer":
        scaled = ranked * (n - np.arange(n))
        adjusted_sorted = np.minimum(1.0, np.maximum.accumulate(scaled))
        reject_sorted = np.zeros(n, dtype=bool)
        for i in range(n):
            if adjusted_sorted[i] <= level:
                reject_sorted[i] = True
            else:
                break
    else:
        raise ValidationError(f"unknown correction {method!r}")
    adjusted = np.empty(n)
    adjusted[order] = adjusted_sorted
    reject = np.zeros(n, dtype=bool)
    reject[order] = reject_sorted
    return adjusted, reject
