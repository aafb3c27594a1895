"""Seeded generation of network samples from the random effects block model.

Members perturb a shared mean assignment through a transition matrix, then
draw edges from per-member block probabilities with a shared diagonal.  All
draws use named substreams (see :mod:`resbm.rng`), so per-member generation
can be parallelized without changing the output.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import rng as streams
from .errors import ValidationError
from .types import BlockParams, HardAssignment, NetworkSample, ResbmFit, SoftAssignment, TransitionMatrix


@dataclass(frozen=True)
class SimConfig:
    """Generator settings.

    kappa is the per-node probability of leaving the mean community;
    diagonal block probabilities are drawn from U(a, b) once and shared
    across members, off-diagonals from U(a/rho, b/rho) per member.  When
    ``degree_target`` is set, all block probabilities are rescaled by a
    common constant so the expected average degree (computed from the mean
    assignment's community sizes) matches it.
    """

    n: int
    k: int
    n_members: int
    kappa: float = 0.0
    a: float = 0.4
    b: float = 0.6
    rho: float = 2.0
    degree_target: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.k < 1 or self.n_members < 1:
            raise ValidationError("n, k and n_members must be positive")
        if self.k > self.n:
            raise ValidationError("k cannot exceed n")
        if not 0.0 <= self.kappa < 1.0:
            raise ValidationError("kappa must lie in [0, 1)")
        if not 0.0 < self.a <= self.b <= 1.0:
            raise ValidationError("need 0 < a <= b <= 1")
        if self.rho < 1.0:
            raise ValidationError("rho must be >= 1")
        if self.b / self.rho > 1.0:
            raise ValidationError("b/rho must not exceed 1")
        if self.degree_target is not None and self.degree_target <= 0:
            raise ValidationError("degree_target must be positive")


def draw_zbar(config: SimConfig) -> HardAssignment:
    """Mean community labels, i.i.d. uniform over the k communities."""
    gen = streams.substream(config.seed, streams.ZBAR)
    labels = gen.integers(0, config.k, size=config.n)
    return HardAssignment.from_labels(labels, config.k)


def perturb_members(
    z_bar: HardAssignment, t: TransitionMatrix, n_members: int, seed: int
) -> List[HardAssignment]:
    """Draw each member's assignment row-wise from Z̄_i T.

    One substream per (member, node) keeps members independent and
    schedule-free.
    """
    if t.k != z_bar.k:
        raise ValidationError("transition matrix size must match assignment width")
    cdf = np.cumsum(z_bar.matrix @ t.matrix, axis=1)
    members = []
    for m in range(n_members):
        labels = np.empty(z_bar.n, dtype=int)
        for i in range(z_bar.n):
            u = streams.substream(seed, streams.ASSIGN, m, i).random()
            labels[i] = int(np.searchsorted(cdf[i], u, side="right"))
        labels = np.minimum(labels, z_bar.k - 1)
        members.append(HardAssignment.from_labels(labels, z_bar.k))
    return members


def expected_average_degree(z_bar: HardAssignment, pi: np.ndarray) -> float:
    """Closed-form mean expected degree under given block probabilities.

    For node i in community q: sum_l pi_ql * n_l - pi_qq, averaged over
    nodes and members.
    """
    sizes = z_bar.sizes()
    per_member = []
    for m in range(pi.shape[0]):
        deg_q = pi[m] @ sizes - np.diag(pi[m])
        per_member.append(float(z_bar.sizes() @ deg_q) / z_bar.n)
    return float(np.mean(per_member))


def draw_block_params(config: SimConfig, z_bar: Optional[HardAssignment] = None) -> BlockParams:
    """Block probabilities: shared diagonal U(a, b), per-member symmetric
    off-diagonals U(a/rho, b/rho), optionally rescaled to a degree target."""
    k, m_count = config.k, config.n_members
    diag = streams.substream(config.seed, streams.BLOCK_DIAG).uniform(config.a, config.b, size=k)
    pi = np.zeros((m_count, k, k))
    for m in range(m_count):
        gen = streams.substream(config.seed, streams.BLOCK_OFF, m)
        lower = gen.uniform(config.a / config.rho, config.b / config.rho, size=k * (k - 1) // 2)
        mat = np.zeros((k, k))
        if k > 1:
            iu = np.triu_indices(k, 1)
            mat[iu] = lower
            mat = mat + mat.T
        np.fill_diagonal(mat, diag)
        pi[m] = mat
    if config.degree_target is not None:
        if z_bar is None:
            z_bar = draw_zbar(config)
        base = expected_average_degree(z_bar, pi)
        if base <= 0:
            raise ValidationError("expected degree is zero; cannot scale to target")
        c = config.degree_target / base
        if c * diag.max() > 1.0:
            max_target = config.degree_target / (c * diag.max())
            raise ValidationError(
                f"degree_target={config.degree_target} needs a diagonal block probability "
                f"above 1; maximum feasible target is {max_target:.4g}"
            )
        pi = np.minimum(pi * c, 1.0)
    alpha = np.full(k, 1.0 / k)
    return BlockParams(pi, alpha)


def draw_edges(z_members: List[HardAssignment], blocks: BlockParams, seed: int) -> NetworkSample:
    """Bernoulli edges for each member given its assignment and block slice."""
    if len(z_members) != blocks.n_members:
        raise ValidationError("one block slice per member is required")
    n = z_members[0].n
    iu = np.triu_indices(n, 1)
    adj = np.zeros((len(z_members), n, n))
    for m, z in enumerate(z_members):
        p = z.matrix @ blocks.pi[m] @ z.matrix.T
        u = streams.substream(seed, streams.EDGES, m).random(iu[0].size)
        upper = (u < p[iu]).astype(float)
        a = np.zeros((n, n))
        a[iu] = upper
        adj[m] = a + a.T
    return NetworkSample(adj)


def simulate(config: SimConfig) -> Tuple[NetworkSample, ResbmFit]:
    """Full generator: mean labels, member perturbations, block draws, edges.

    Returns the sample plus the ground truth packaged as a fit.
    """
    z_bar = draw_zbar(config)
    t = TransitionMatrix.from_retention(config.k, config.kappa)
    z_members = perturb_members(z_bar, t, config.n_members, config.seed)
    blocks = draw_block_params(config, z_bar)
    sample = draw_edges(z_members, blocks, config.seed)
    truth = ResbmFit(
        z_bar=z_bar,
        t=t,
        z_members=tuple(z_members),
        soft_z_bar=SoftAssignment(z_bar.matrix),
        soft_members=tuple(SoftAssignment(z.matrix) for z in z_members),
        blocks=blocks,
        objective_trace=(),
        converged=True,
        iterations=0,
    )
    return sample, truth
