"""Variational EM estimation of the random effects block model.

The variational family factorizes over nodes: each node i carries a
mean-community distribution tau_bar_i and, per member m, conditional
member-community distributions eps[m, i, q, :] given mean community q.
The member-community marginal is tau[m, i, l] = sum_q tau_bar[i, q] *
eps[m, i, q, l].

A variational sweep visits nodes sequentially and updates (eps_i,
tau_bar_i, tau_i) jointly given every other node's current marginals; each
visit exactly maximizes the evidence lower bound over that node's block of
parameters, so the bound is non-decreasing across sweeps by construction.
The M step is the closed-form maximizer: transition rows from expected
label co-occurrences, the mean-community prior from tau_bar, and block
probabilities from expected edge counts with the diagonal pooled across
members to keep the model identifiable.
"""

from typing import List, Optional, Tuple, Union

import numpy as np

from . import rng as streams
from .baselines import ind_spectral, spectral_k
from .errors import EstimationError, ValidationError
from .metrics import align_labels
from .types import (
    BlockParams,
    HardAssignment,
    NetworkSample,
    ResbmFit,
    SoftAssignment,
    TransitionMatrix,
)

PROB_CLAMP = 1e-9


def bernoulli_kernel(a_ij: float, pi_ql: float) -> float:
    """Edge likelihood term: pi if the edge is present, 1 - pi otherwise.

    The probability is clamped to [1e-9, 1 - 1e-9] first so logs stay
    finite for degenerate blocks.
    """
    p = min(max(float(pi_ql), PROB_CLAMP), 1.0 - PROB_CLAMP)
    return p if a_ij == 1 else 1.0 - p


class VariationalState:
    """Variational parameters, model parameters and the bound trace."""

    def __init__(self, tau_bar, eps, tau, t, alpha, pi, freeze_transition=False):
        self.tau_bar = np.asarray(tau_bar, dtype=float)
        self.eps = np.asarray(eps, dtype=float)
        self.tau = np.asarray(tau, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.pi = np.asarray(pi, dtype=float)
        self.freeze_transition = bool(freeze_transition)
        self.elbo_trace: List[float] = []
        self.flags: List[str] = []

    @property
    def n(self) -> int:
        return self.tau_bar.shape[0]

    @property
    def k(self) -> int:
        return self.tau_bar.shape[1]

    @property
    def n_members(self) -> int:
        return self.tau.shape[0]

    def copy(self) -> "VariationalState":
        out = VariationalState(
            self.tau_bar.copy(),
            self.eps.copy(),
            self.tau.copy(),
            self.t.copy(),
            self.alpha.copy(),
            self.pi.copy(),
            self.freeze_transition,
        )
        out.elbo_trace = list(self.elbo_trace)
        out.flags = list(self.flags)
        return out


def _log_probs(p: np.ndarray) -> np.ndarray:
    return np.log(np.clip(p, PROB_CLAMP, None))


def _log_block(pi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    p = np.clip(pi, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return np.log(p), np.log1p(-p)


def _edge_stats(adjacency: np.ndarray, tau: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Running sums used by the sweep: X1[m, i, p] = sum_j A_ij tau_jp and
    the member-wise column totals of tau."""
    x1 = np.matmul(adjacency, tau)
    totals = tau.sum(axis=1)
    return x1, totals


def ve_step(state: VariationalState, sample: NetworkSample) -> VariationalState:
    """One full variational sweep over the nodes.

    Per node the updates run in the order eps -> tau_bar -> tau, each
    renormalized, with max-subtraction before exponentiation.
    """
    out = state.copy()
    adjacency = sample.adjacency
    tau, tau_bar, eps = out.tau, out.tau_bar, out.eps
    log_b1, log_b0 = _log_block(out.pi)
    log_t = _log_probs(out.t)
    log_alpha = _log_probs(out.alpha)
    x1, totals = _edge_stats(adjacency, tau)

    n = out.n
    for i in range(n):
        x1_i = x1[:, i, :]
        x0_i = totals - tau[:, i, :] - x1_i
        w = (
            np.matmul(log_b1, x1_i[:, :, None])[:, :, 0]
            + np.matmul(log_b0, x0_i[:, :, None])[:, :, 0]
        )
        logits = log_t[None, :, :] + w[:, None, :]
        logits -= logits.max(axis=2, keepdims=True)
        e = np.exp(logits)
        e /= e.sum(axis=2, keepdims=True)
        eps[:, i] = e

        with np.errstate(divide="ignore"):
            log_e = np.where(e > 0, np.log(np.where(e > 0, e, 1.0)), 0.0)
        inner = log_t[None, :, :] - log_e + w[:, None, :]
        score = log_alpha + (e * inner).sum(axis=(0, 2))
        score -= score.max()
        tb = np.exp(score)
        tb /= tb.sum()
        tau_bar[i] = tb

        t_new = np.matmul(tb, e)
        t_new /= t_new.sum(axis=1, keepdims=True)
        delta = t_new - tau[:, i, :]
        tau[:, i, :] = t_new
        if np.abs(delta).max() > 1e-15:
            x1 += adjacency[:, :, i, None] * delta[:, None, :]
            totals += delta

    if not (np.isfinite(tau).all() and np.isfinite(tau_bar).all() and np.isfinite(eps).all()):
        raise EstimationError("variational update produced a non-finite value")
    return out


def _block_moments(adjacency: np.ndarray, tau: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Expected edge counts and pair counts per block and member."""
    n_members, _, k = tau.shape
    n1 = np.empty((n_members, k, k))
    pairs = np.empty((n_members, k, k))
    for m in range(n_members):
        n1[m] = tau[m].T @ adjacency[m] @ tau[m]
        s = tau[m].sum(axis=0)
        pairs[m] = np.outer(s, s) - tau[m].T @ tau[m]
    n1 = 0.5 * (n1 + np.transpose(n1, (0, 2, 1)))
    pairs = 0.5 * (pairs + np.transpose(pairs, (0, 2, 1)))
    return n1, pairs


def m_step(state: VariationalState, sample: NetworkSample) -> VariationalState:
    """Closed-form parameter updates given the variational distribution."""
    out = state.copy()
    k = out.k

    if not out.freeze_transition:
        r = np.einsum("iq,miql->ql", out.tau_bar, out.eps)
        row = r.sum(axis=1, keepdims=True)
        t = np.where(row > PROB_CLAMP, r / np.where(row > 0, row, 1.0), 1.0 / k)
        out.t = t / t.sum(axis=1, keepdims=True)
    out.alpha = out.tau_bar.mean(axis=0)

    n1, pairs = _block_moments(sample.adjacency, out.tau)
    degenerate = pairs < 1e-12
    if degenerate.any():
        out.flags.append(f"{int(degenerate.sum())} block(s) with no effective mass")
    pi = np.where(degenerate, PROB_CLAMP, n1 / np.where(degenerate, 1.0, pairs))
    diag_num = n1[:, np.arange(k), np.arange(k)].sum(axis=0)
    diag_den = pairs[:, np.arange(k), np.arange(k)].sum(axis=0)
    pooled = np.where(diag_den < 1e-12, PROB_CLAMP, diag_num / np.where(diag_den < 1e-12, 1.0, diag_den))
    pi[:, np.arange(k), np.arange(k)] = pooled[None, :]
    out.pi = np.clip(pi, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return out


def elbo(state: VariationalState, sample: NetworkSample) -> float:
    """Evidence lower bound: expected complete-data log-likelihood plus the
    entropy of the variational distribution."""

    def xlogx(p):
        return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)

    log_alpha = _log_probs(state.alpha)
    total = float((state.tau_bar * log_alpha[None, :]).sum() - xlogx(state.tau_bar).sum())

    log_t = _log_probs(state.t)
    joint = state.tau_bar[None, :, :, None] * state.eps
    total += float((joint * log_t[None, None, :, :]).sum())
    total -= float((state.tau_bar[None, :, :, None] * xlogx(state.eps)).sum())

    log_b1, log_b0 = _log_block(state.pi)
    n1, pairs = _block_moments(sample.adjacency, state.tau)
    total += 0.5 * float((n1 * log_b1).sum() + ((pairs - n1) * log_b0).sum())
    if not np.isfinite(total):
        raise EstimationError("evidence lower bound is not finite")
    return total


def _soften(z: HardAssignment, weight: float = 0.9) -> np.ndarray:
    k = z.k
    if k == 1:
        return np.ones((z.n, 1))
    off = (1.0 - weight) / (k - 1)
    return np.where(z.matrix > 0, weight, off)


def _initial_state(
    sample: NetworkSample,
    tau_members: np.ndarray,
    tau_bar: np.ndarray,
    freeze_transition: bool,
) -> VariationalState:
    n_members, n, k = tau_members.shape
    eps = np.broadcast_to(tau_members[:, :, None, :], (n_members, n, k, k)).copy()
    state = VariationalState(
        tau_bar=tau_bar,
        eps=eps,
        tau=tau_members.copy(),
        t=np.full((k, k), 1.0 / k) if not freeze_transition else np.eye(k),
        alpha=np.full(k, 1.0 / k),
        pi=np.full((n_members, k, k), 0.5),
        freeze_transition=freeze_transition,
    )
    return m_step(state, sample)


def _spectral_start(sample: NetworkSample, k: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    z_bar = spectral_k(sample, k, seed)
    members = ind_spectral(sample, k, seed)
    tau_members = np.empty((sample.n_members, sample.n, k))
    for m, z in enumerate(members):
        _, aligned = align_labels(z_bar, z)
        tau_members[m] = _soften(aligned)
    return tau_members, _soften(z_bar)


def _perturb(base: np.ndarray, gen: np.random.Generator, weight: float = 0.25) -> np.ndarray:
    noise = gen.dirichlet(np.ones(base.shape[-1]), size=base.shape[:-1])
    mixed = (1.0 - weight) * base + weight * noise
    return mixed / mixed.sum(axis=-1, keepdims=True)


def fit_varem(
    sample: NetworkSample,
    k: int,
    init: Union[str, ResbmFit] = "spectral",
    max_iter: int = 500,
    tol: float = 1e-6,
    restarts: int = 5,
    seed: int = 0,
    freeze_transition: bool = False,
) -> ResbmFit:
    """Best-bound variational EM fit over seeded restarts.

    ``init`` is either "spectral" (per-member spectral clustering aligned to
    a kernel-mean consensus, softened to 0.9-style rows) or an existing fit
    to warm-start from.  Restarts beyond the first perturb the starting
    point.  With ``freeze_transition`` the transition matrix is pinned to
    the identity, which forces a single shared community structure across
    members.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    if k > sample.n:
        raise ValidationError(f"k={k} exceeds node count {sample.n}")
    if sample.adjacency.sum() == 0:
        raise EstimationError("every member network is empty")

    if isinstance(init, ResbmFit):
        if init.k != k or init.n != sample.n or init.n_members != sample.n_members:
            raise ValidationError("warm-start fit does not match the sample")
        base_members = np.stack([s.matrix for s in init.soft_members])
        base_members = np.clip(base_members, PROB_CLAMP, None)
        base_members /= base_members.sum(axis=2, keepdims=True)
        base_bar = np.clip(init.soft_z_bar.matrix, PROB_CLAMP, None)
        base_bar /= base_bar.sum(axis=1, keepdims=True)
    elif init == "spectral":
        base_members, base_bar = _spectral_start(sample, k, seed)
    else:
        raise ValidationError(f"unknown initialization {init!r}")

    best_state: Optional[VariationalState] = None
    best_elbo = -np.inf
    best_iters, best_conv = 0, False
    for r in range(max(1, restarts)):
        if r == 0:
            tau_members, tau_bar = base_members, base_bar
        else:
            gen = streams.substream(seed, streams.INIT, r)
            tau_members = _perturb(base_members, gen)
            tau_bar = _perturb(base_bar, gen)
        state = _initial_state(sample, tau_members, tau_bar, freeze_transition)
        prev = -np.inf
        converged = False
        iterations = 0
        for iterations in range(1, max_iter + 1):
            try:
                state = ve_step(state, sample)
                state = m_step(state, sample)
                cur = elbo(state, sample)
            except EstimationError as exc:
                raise EstimationError(f"iteration {iterations}: {exc}") from exc
            state.elbo_trace.append(cur)
            if np.isfinite(prev) and abs(cur - prev) <= tol * max(1.0, abs(prev)):
                converged = True
                prev = cur
                break
            prev = cur
        if prev > best_elbo:
            best_state, best_elbo = state, prev
            best_iters, best_conv = iterations, converged

    st = best_state
    tau_bar_soft = SoftAssignment(st.tau_bar / st.tau_bar.sum(axis=1, keepdims=True))
    soft_members = tuple(
        SoftAssignment(st.tau[m] / st.tau[m].sum(axis=1, keepdims=True))
        for m in range(st.n_members)
    )
    t_rows = st.t / st.t.sum(axis=1, keepdims=True)
    pi = 0.5 * (st.pi + np.transpose(st.pi, (0, 2, 1)))
    blocks = BlockParams(np.clip(pi, 0.0, 1.0), st.alpha / st.alpha.sum())
    return ResbmFit(
        z_bar=tau_bar_soft.harden(),
        t=TransitionMatrix(t_rows),
        z_members=tuple(s.harden() for s in soft_members),
        soft_z_bar=tau_bar_soft,
        soft_members=soft_members,
        blocks=blocks,
        objective_trace=tuple(st.elbo_trace),
        converged=best_conv,
        iterations=best_iters,
    )
