"""Two-step estimation: joint non-negative tri-factorization of member
Laplacians (or its spectral counterpart) followed by conditional maximum
likelihood for the transition matrix.

The factorization step minimizes

    sum_m ||L_m - U_m S_m U_m^T||_F^2 + lambda_m (k - ||U_m^T U*||_F^2)

over entrywise non-negative factors via multiplicative updates with
exponent 1/2; orthogonality of the factors is handled through eliminated
Lagrange multipliers and tracked as a diagnostic rather than enforced by
projection.
"""

from typing import List, Optional, Sequence, Union

import numpy as np

from . import rng as streams
from .errors import EstimationError, ValidationError
from .graphs import laplacian
from .kmeans import kmeans
from .metrics import align_labels
from .types import HardAssignment, NetworkSample, ResbmFit, SoftAssignment, TransitionMatrix

DEN_FLOOR = 1e-12


class FactorState:
    """Factor matrices and diagnostics for the joint tri-factorization."""

    def __init__(self, u_members, s_members, u_star, lam):
        self.u_members = [np.asarray(u, dtype=float) for u in u_members]
        self.s_members = [np.asarray(s, dtype=float) for s in s_members]
        self.u_star = np.asarray(u_star, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        for mat in (*self.u_members, *self.s_members, self.u_star):
            if np.any(mat < 0):
                raise ValidationError("factor matrices must be non-negative")
        if np.any(self.lam < 0):
            raise ValidationError("regularization weights must be non-negative")
        self.objective_trace: List[float] = []
        self.orthogonality_gap: List[float] = []

    @property
    def n_members(self) -> int:
        return len(self.u_members)

    def record_orthogonality(self) -> None:
        k = self.u_star.shape[1]
        eye = np.eye(k)
        gaps = [float(np.linalg.norm(u.T @ u - eye, "fro")) for u in self.u_members]
        gaps.append(float(np.linalg.norm(self.u_star.T @ self.u_star - eye, "fro")))
        self.orthogonality_gap = gaps


def co_osntf_objective(state: FactorState, laplacians: Sequence[np.ndarray]) -> float:
    """Evaluate the joint factorization objective exactly as defined."""
    if len(laplacians) != state.n_members:
        raise ValidationError("one Laplacian per member is required")
    k = state.u_star.shape[1]
    total = 0.0
    for m, lap in enumerate(laplacians):
        u, s = state.u_members[m], state.s_members[m]
        if lap.shape[0] != u.shape[0]:
            raise ValidationError("Laplacian and factor dimensions disagree")
        total += np.linalg.norm(lap - u @ s @ u.T, "fro") ** 2
        total += state.lam[m] * (k - np.linalg.norm(u.T @ state.u_star, "fro") ** 2)
    return float(total)


_BACKTRACK_EXPONENTS = (0.5, 0.25, 0.125, 0.0625, 0.03125)


def _mur_ratio(num: np.ndarray, den: np.ndarray, factor: np.ndarray, objective=None) -> np.ndarray:
    """Damped multiplicative step factor * (num / den)^eta.

    Starts at eta = 1/2 and halves the exponent while the step would raise
    ``objective`` (a callable scoring a candidate factor); falls back to the
    unchanged factor if no damping helps.  The raw rule descends the
    multiplier-augmented objective, which can transiently raise the plain
    one; the safeguard makes the traced objective non-increasing without
    moving any fixed point.
    """
    if np.any((den == 0) & (num > 0) & (factor > 0)):
        raise EstimationError("zero denominator in multiplicative update")
    ratio = num / np.maximum(den, DEN_FLOOR)
    if objective is None:
        out = factor * np.sqrt(ratio)
        if not np.isfinite(out).all():
            raise EstimationError("multiplicative update produced a non-finite value")
        return out
    current = objective(factor)
    bound = current + 1e-12 * max(abs(current), 1.0)
    for eta in _BACKTRACK_EXPONENTS:
        out = factor * ratio**eta
        if not np.isfinite(out).all():
            raise EstimationError("multiplicative update produced a non-finite value")
        if objective(out) <= bound:
            return out
    return factor


def update_s(state: FactorState, laplacians: Sequence[np.ndarray], m: int) -> np.ndarray:
    """One safeguarded multiplicative update of member m's middle factor."""
    u, s = state.u_members[m], state.s_members[m]
    gram = u.T @ u
    num = u.T @ laplacians[m] @ u
    den = gram @ s @ gram

    def objective(candidate):
        return np.linalg.norm(laplacians[m] - u @ candidate @ u.T, "fro") ** 2

    return _mur_ratio(num, den, s, objective)


def update_u_member(state: FactorState, laplacians: Sequence[np.ndarray], m: int) -> np.ndarray:
    """One safeguarded multiplicative update of member m's loading factor."""
    u, s, us = state.u_members[m], state.s_members[m], state.u_star
    k = us.shape[1]
    lus = laplacians[m] @ u @ s
    pull = us @ (us.T @ u)
    num = lus + state.lam[m] * pull
    den = u @ (u.T @ lus) + state.lam[m] * (u @ (u.T @ pull))

    def objective(candidate):
        fidelity = np.linalg.norm(laplacians[m] - candidate @ s @ candidate.T, "fro") ** 2
        coreg = state.lam[m] * (k - np.linalg.norm(candidate.T @ us, "fro") ** 2)
        return fidelity + coreg

    return _mur_ratio(num, den, u, objective)


def update_u_star(state: FactorState) -> np.ndarray:
    """One safeguarded multiplicative update of the consensus factor.

    Skipped (returned unchanged) when every regularization weight is zero,
    since the consensus is then unconstrained by the objective.
    """
    us = state.u_star
    if np.all(state.lam == 0):
        return us
    k = us.shape[1]
    num = np.zeros_like(us)
    cross = np.zeros((k, k))
    for m in range(state.n_members):
        proj = state.u_members[m].T @ us
        num += state.lam[m] * (state.u_members[m] @ proj)
        cross += state.lam[m] * (proj.T @ proj)
    den = us @ cross

    def objective(candidate):
        total = 0.0
        for m in range(state.n_members):
            total += state.lam[m] * (
                k - np.linalg.norm(state.u_members[m].T @ candidate, "fro") ** 2
            )
        return total

    return _mur_ratio(num, den, us, objective)


def _indicator_factor(z: HardAssignment, gen: Optional[np.random.Generator], jitter: float) -> np.ndarray:
    """Column-normalized partition indicator mixed with positive noise.

    Near-orthonormal and argmax-consistent with the partition, with every
    entry strictly positive so multiplicative updates can still move it.
    """
    base = z.matrix.copy()
    if gen is not None:
        base = (1.0 - jitter) * base + max(jitter, 0.02) * gen.random(base.shape)
    norms = np.linalg.norm(base, axis=0)
    base = base / np.where(norms > 0, norms, 1.0)
    return np.maximum(base, DEN_FLOOR)


def _spectral_partitions(laps, k: int, seed: int):
    """Per-Laplacian spectral partitions plus a consensus, label-aligned."""
    from .baselines import cluster_operator, top_eigenvectors

    gen = streams.substream(seed, streams.KMEANS)
    n = laps[0].shape[0]
    kernel = np.zeros((n, n))
    for lap in laps:
        v = top_eigenvectors(lap, k)
        kernel += v @ v.T
    kernel /= len(laps)
    consensus = cluster_operator(kernel, k, gen)
    members = []
    for m, lap in enumerate(laps):
        z = cluster_operator(lap, k, streams.substream(seed, streams.KMEANS, m))
        _, aligned = align_labels(consensus, z)
        members.append(aligned)
    return consensus, members


def _init_state(laps, k, lam_arr, consensus, member_partitions, gen, jitter: float) -> FactorState:
    u_members = [_indicator_factor(z, gen, jitter) for z in member_partitions]
    s_members = [np.maximum(u.T @ lap @ u, 1e-6) for u, lap in zip(u_members, laps)]
    u_star = _indicator_factor(consensus, gen, jitter)
    return FactorState(u_members, s_members, u_star, lam_arr)


def _sweep(state: FactorState, laplacians: Sequence[np.ndarray]) -> None:
    for m in range(state.n_members):
        state.s_members[m] = update_s(state, laplacians, m)
    for m in range(state.n_members):
        state.u_members[m] = update_u_member(state, laplacians, m)
    state.u_star = update_u_star(state)


def _normalize_rows(u: np.ndarray) -> np.ndarray:
    sums = u.sum(axis=1)
    out = np.where(sums[:, None] > 0, u / np.where(sums > 0, sums, 1.0)[:, None], 1.0 / u.shape[1])
    return out


def _member_lambdas(lam: Union[float, Sequence[float]], n_members: int) -> np.ndarray:
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_members, float(arr))
    if arr.shape != (n_members,):
        raise ValidationError("lam must be a scalar or one value per member")
    return arr


def conditional_mle(z_bar: HardAssignment, z_members: Sequence[HardAssignment]) -> TransitionMatrix:
    """Exact transition frequencies between the mean and member assignments.

    Entry (q, l) is the fraction of (member, node) events in which a node
    with mean community q sits in community l, conditioned on q.
    """
    members = list(z_members)
    if not members:
        raise ValidationError("need at least one member assignment")
    sizes = z_bar.sizes()
    for q in np.flatnonzero(sizes == 0):
        raise ValidationError(f"mean community {int(q)} is empty; transition row undefined")
    total = np.zeros((z_bar.k, z_bar.k))
    for z in members:
        if z.n != z_bar.n or z.k != z_bar.k:
            raise ValidationError("member assignments must match z_bar dimensions")
        total += z_bar.matrix.T @ z.matrix
    row_sums = total.sum(axis=1)
    return TransitionMatrix(total / row_sums[:, None])


def _assemble_two_step_fit(
    z_bar: HardAssignment,
    member_assignments: Sequence[HardAssignment],
    soft_members: Optional[Sequence[np.ndarray]],
    soft_z_bar: Optional[np.ndarray],
    trace,
    converged: bool,
    iterations: int,
    blocks=None,
) -> ResbmFit:
    aligned_members = []
    aligned_soft = []
    for m, z in enumerate(member_assignments):
        perm, aligned = align_labels(z_bar, z)
        aligned_members.append(aligned)
        if soft_members is not None:
            aligned_soft.append(SoftAssignment(soft_members[m][:, perm]))
        else:
            aligned_soft.append(SoftAssignment(aligned.matrix))
    t = conditional_mle(z_bar, aligned_members)
    return ResbmFit(
        z_bar=z_bar,
        t=t,
        z_members=tuple(aligned_members),
        soft_z_bar=SoftAssignment(soft_z_bar if soft_z_bar is not None else z_bar.matrix),
        soft_members=tuple(aligned_soft),
        blocks=blocks,
        objective_trace=tuple(trace),
        converged=converged,
        iterations=iterations,
    )


def fit_co_osntf(
    sample: NetworkSample,
    k: int,
    lam: Union[float, Sequence[float]] = 0.01,
    max_iter: int = 2000,
    tol: float = 1e-7,
    seed: int = 0,
    restarts: int = 5,
) -> ResbmFit:
    """Joint tri-factorization fit of a network sample.

    Runs seeded restarts of the multiplicative updates on the member
    Laplacians, keeps the best objective, extracts hard assignments by
    row argmax, aligns member labels to the consensus and estimates the
    transition matrix by conditional maximum likelihood.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    if k > sample.n:
        raise ValidationError(f"k={k} exceeds node count {sample.n}")
    laps = [laplacian(sample.member(m)) for m in range(sample.n_members)]
    lam_arr = _member_lambdas(lam, sample.n_members)

    consensus, member_partitions = _spectral_partitions(laps, k, seed)
    best_state, best_obj, best_iters, best_conv = None, np.inf, 0, False
    for r in range(max(1, restarts)):
        gen = streams.substream(seed, streams.INIT, r)
        state = _init_state(
            laps, k, lam_arr, consensus, member_partitions, gen, jitter=0.02 if r == 0 else 0.3
        )
        prev = co_osntf_objective(state, laps)
        state.objective_trace.append(prev)
        converged = False
        sweeps = 0
        for sweeps in range(1, max_iter + 1):
            _sweep(state, laps)
            cur = co_osntf_objective(state, laps)
            state.objective_trace.append(cur)
            if abs(prev - cur) <= tol * max(abs(prev), DEN_FLOOR):
                converged = True
                prev = cur
                break
            prev = cur
        state.record_orthogonality()
        if prev < best_obj:
            best_state, best_obj, best_iters, best_conv = state, prev, sweeps, converged

    z_bar = HardAssignment.from_labels(np.argmax(best_state.u_star, axis=1), k)
    member_assignments = [
        HardAssignment.from_labels(np.argmax(u, axis=1), k) for u in best_state.u_members
    ]
    soft_members = [_normalize_rows(u) for u in best_state.u_members]
    soft_z_bar = _normalize_rows(best_state.u_star)
    return _assemble_two_step_fit(
        z_bar,
        member_assignments,
        soft_members,
        soft_z_bar,
        best_state.objective_trace,
        best_conv,
        best_iters,
    )


def osntf_single(a: np.ndarray, k: int, seed: int = 0, max_iter: int = 2000, tol: float = 1e-7, restarts: int = 3) -> HardAssignment:
    """Single-network tri-factorization clustering (the lambda = 0 path)."""
    sample = NetworkSample(np.asarray(a, dtype=float)[None, :, :])
    laps = [laplacian(sample.member(0))]
    consensus, member_partitions = _spectral_partitions(laps, k, seed)
    best_labels, best_obj = None, np.inf
    for r in range(max(1, restarts)):
        gen = streams.substream(seed, streams.INIT, r)
        state = _init_state(
            laps, k, np.zeros(1), consensus, member_partitions, gen, jitter=0.02 if r == 0 else 0.3
        )
        prev = co_osntf_objective(state, laps)
        for _ in range(max_iter):
            state.s_members[0] = update_s(state, laps, 0)
            state.u_members[0] = update_u_member(state, laps, 0)
            cur = co_osntf_objective(state, laps)
            if abs(prev - cur) <= tol * max(abs(prev), DEN_FLOOR):
                prev = cur
                break
            prev = cur
        if prev < best_obj:
            best_obj = prev
            best_labels = np.argmax(state.u_members[0], axis=1)
    return HardAssignment.from_labels(best_labels, k)


def fit_co_spectral(
    sample: NetworkSample,
    k: int,
    gamma: Union[float, Sequence[float]] = 0.05,
    max_iter: int = 200,
    tol: float = 1e-7,
    seed: int = 0,
) -> ResbmFit:
    """Centroid co-regularized spectral clustering plus conditional MLE.

    Alternates exact eigenvector updates that maximize
    sum_m tr(U_m^T L_m U_m) + gamma_m ||U_m^T U*||_F^2, then k-means on the
    rows of the consensus and member eigenvector matrices.
    """
    from .baselines import top_eigenvectors

    if k < 1:
        raise ValidationError("k must be at least 1")
    if k > sample.n:
        raise ValidationError(f"k={k} exceeds node count {sample.n}")
    laps = [laplacian(sample.member(m)) for m in range(sample.n_members)]
    gamma_arr = _member_lambdas(gamma, sample.n_members)

    u_members = [top_eigenvectors(lap, k) for lap in laps]
    u_star = np.zeros((sample.n, k))
    trace = []
    prev = -np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        consensus = np.zeros((sample.n, sample.n))
        for m, u in enumerate(u_members):
            consensus += gamma_arr[m] * (u @ u.T)
        u_star = top_eigenvectors(consensus, k)
        u_members = [
            top_eigenvectors(laps[m] + gamma_arr[m] * (u_star @ u_star.T), k)
            for m in range(sample.n_members)
        ]
        cur = 0.0
        for m, u in enumerate(u_members):
            cur += float(np.trace(u.T @ laps[m] @ u))
            cur += gamma_arr[m] * float(np.linalg.norm(u.T @ u_star, "fro") ** 2)
        trace.append(cur)
        if np.isfinite(prev) and abs(cur - prev) <= tol * max(abs(prev), DEN_FLOOR):
            converged = True
            break
        prev = cur

    gen = streams.substream(seed, streams.KMEANS)
    z_bar = HardAssignment.from_labels(kmeans(u_star, k, gen), k)
    member_assignments = [
        HardAssignment.from_labels(kmeans(u, k, streams.substream(seed, streams.KMEANS, m)), k)
        for m, u in enumerate(u_members)
    ]
    return _assemble_two_step_fit(
        z_bar, member_assignments, None, None, trace, converged, iterations
    )
