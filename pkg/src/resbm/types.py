"""Domain types shared by every estimator and test in the package.

All types are immutable after construction (arrays are copied and marked
read-only) and validate their invariants eagerly, so downstream code can
assume well-formed data.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ValidationError

PROB_ATOL = 1e-10


def _frozen(a: np.ndarray, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


def _check_symmetric_binary(a: np.ndarray, what: str) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{what}: expected a square matrix, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValidationError(f"{what}: matrix is not symmetric")
    if np.any(np.diag(a) != 0):
        raise ValidationError(f"{what}: diagonal entries must be zero")
    if not np.isin(a, (0.0, 1.0)).all():
        raise ValidationError(f"{what}: entries must be 0 or 1")


@dataclass(frozen=True)
class NetworkSample:
    """A sample of M undirected binary networks on a shared node set.

    ``adjacency`` has shape (M, n, n); each slice is symmetric with a zero
    diagonal and entries in {0, 1}.
    """

    adjacency: np.ndarray
    node_labels: Optional[tuple] = None
    member_ids: Optional[tuple] = None

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=float)
        if adj.ndim == 2:
            adj = adj[None, :, :]
        if adj.ndim != 3:
            raise ValidationError(f"adjacency must be (M, n, n), got shape {adj.shape}")
        for m in range(adj.shape[0]):
            _check_symmetric_binary(adj[m], f"member {m}")
        object.__setattr__(self, "adjacency", _frozen(adj))
        if self.node_labels is not None:
            labels = tuple(str(x) for x in self.node_labels)
            if len(labels) != adj.shape[1]:
                raise ValidationError("node_labels length does not match node count")
            object.__setattr__(self, "node_labels", labels)
        if self.member_ids is not None:
            ids = tuple(str(x) for x in self.member_ids)
            if len(ids) != adj.shape[0]:
                raise ValidationError("member_ids length does not match member count")
            object.__setattr__(self, "member_ids", ids)

    @property
    def n(self) -> int:
        return self.adjacency.shape[1]

    @property
    def n_members(self) -> int:
        return self.adjacency.shape[0]

    def member(self, m: int) -> np.ndarray:
        return self.adjacency[m]

    def subset(self, indices: Sequence[int]) -> "NetworkSample":
        idx = list(indices)
        ids = None
        if self.member_ids is not None:
            ids = tuple(self.member_ids[i] for i in idx)
        return NetworkSample(self.adjacency[idx], node_labels=self.node_labels, member_ids=ids)


def as_network_sample(X: Union[NetworkSample, np.ndarray, Sequence[np.ndarray]]) -> NetworkSample:
    """Validate and coerce estimator input into a :class:`NetworkSample`.

    Accepts an existing sample, an (M, n, n) array, a single (n, n) matrix,
    or a sequence of (n, n) matrices.
    """
    if isinstance(X, NetworkSample):
        return X
    if isinstance(X, np.ndarray):
        return NetworkSample(X)
    return NetworkSample(np.stack([np.asarray(a, dtype=float) for a in X]))


@dataclass(frozen=True)
class HardAssignment:
    """An n-by-k binary matrix with exactly one 1 per row."""

    matrix: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.matrix, dtype=float)
        if z.ndim != 2:
            raise ValidationError(f"assignment matrix must be 2-d, got shape {z.shape}")
        if not np.isin(z, (0.0, 1.0)).all():
            raise ValidationError("assignment entries must be 0 or 1")
        if not np.array_equal(z.sum(axis=1), np.ones(z.shape[0])):
            raise ValidationError("each row must contain exactly one 1")
        object.__setattr__(self, "matrix", _frozen(z))

    @classmethod
    def from_labels(cls, labels: Sequence[int], k: Optional[int] = None) -> "HardAssignment":
        lab = np.asarray(labels, dtype=int)
        if lab.ndim != 1:
            raise ValidationError("labels must be a 1-d sequence")
        if k is None:
            k = int(lab.max()) + 1 if lab.size else 0
        if lab.size and (lab.min() < 0 or lab.max() >= k):
            raise ValidationError(f"labels out of range for k={k}")
        z = np.zeros((lab.size, k))
        z[np.arange(lab.size), lab] = 1.0
        return cls(z)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.matrix, axis=1)

    def sizes(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def relabel(self, perm: Sequence[int]) -> "HardAssignment":
        """Return a copy whose new column q is old column perm[q]."""
        return HardAssignment(self.matrix[:, list(perm)])


@dataclass(frozen=True)
class SoftAssignment:
    """An n-by-k matrix of per-node community probabilities."""

    matrix: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.matrix, dtype=float)
        if p.ndim != 2:
            raise ValidationError(f"soft assignment must be 2-d, got shape {p.shape}")
        if np.any(p < 0):
            raise ValidationError("soft assignment entries must be non-negative")
        if not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=PROB_ATOL):
            raise ValidationError("soft assignment rows must sum to 1 within 1e-10")
        object.__setattr__(self, "matrix", _frozen(p))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    def harden(self) -> HardAssignment:
        """Row-argmax hard assignment; ties break to the lowest index."""
        return HardAssignment.from_labels(np.argmax(self.matrix, axis=1), self.k)


@dataclass(frozen=True)
class TransitionMatrix:
    """A k-by-k row-stochastic community transition matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.matrix, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValidationError(f"transition matrix must be square, got shape {t.shape}")
        if np.any(t < 0):
            raise ValidationError("transition matrix entries must be non-negative")
        if not np.allclose(t.sum(axis=1), 1.0, rtol=0, atol=PROB_ATOL):
            raise ValidationError("transition matrix rows must sum to 1 within 1e-10")
        object.__setattr__(self, "matrix", _frozen(t))

    @classmethod
    def from_retention(cls, k: int, kappa: float) -> "TransitionMatrix":
        """Diagonal 1 - kappa, off-diagonals kappa split evenly over k - 1."""
        if not 0 <= kappa < 1:
            raise ValidationError("kappa must lie in [0, 1)")
        if k == 1:
            return cls(np.ones((1, 1)))
        t = np.full((k, k), kappa / (k - 1))
        np.fill_diagonal(t, 1.0 - kappa)
        return cls(t)

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def retention(self) -> np.ndarray:
        return np.diag(self.matrix)

    def relabel(self, perm: Sequence[int]) -> "TransitionMatrix":
        p = list(perm)
        return TransitionMatrix(self.matrix[np.ix_(p, p)])


@dataclass(frozen=True)
class BlockParams:
    """Per-member block edge probabilities plus the mean-community prior.

    ``pi`` has shape (M, k, k); every slice is symmetric with entries in
    [0, 1] and the diagonal vector is shared across members (the
    identifiability constraint).  ``alpha`` is a length-k probability vector.
    """

    pi: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        if pi.ndim == 2:
            pi = pi[None, :, :]
        if pi.ndim != 3 or pi.shape[1] != pi.shape[2]:
            raise ValidationError(f"pi must be (M, k, k), got shape {pi.shape}")
        if np.any(pi < 0) or np.any(pi > 1):
            raise ValidationError("pi entries must lie in [0, 1]")
        for m in range(pi.shape[0]):
            if not np.allclose(pi[m], pi[m].T, rtol=0, atol=PROB_ATOL):
                raise ValidationError(f"pi slice {m} is not symmetric")
        diags = np.stack([np.diag(pi[m]) for m in range(pi.shape[0])])
        if not np.allclose(diags, diags[0], rtol=0, atol=PROB_ATOL):
            raise ValidationError("diagonal block probabilities must be identical across members")
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.shape != (pi.shape[1],):
            raise ValidationError("alpha length must equal k")
        if np.any(alpha < 0) or not np.isclose(alpha.sum(), 1.0, rtol=0, atol=PROB_ATOL):
            raise ValidationError("alpha must be a probability vector")
        object.__setattr__(self, "pi", _frozen(pi))
        object.__setattr__(self, "alpha", _frozen(alpha))

    @property
    def n_members(self) -> int:
        return self.pi.shape[0]

    @property
    def k(self) -> int:
        return self.pi.shape[1]

    def relabel(self, perm: Sequence[int]) -> "BlockParams":
        p = list(perm)
        return BlockParams(self.pi[:, p][:, :, p], self.alpha[p])


@dataclass(frozen=True)
class ResbmFit:
    """Everything an estimator produces: assignments, transition matrix,
    optional block parameters and convergence diagnostics."""

    z_bar: HardAssignment
    t: TransitionMatrix
    z_members: tuple
    soft_z_bar: SoftAssignment
    soft_members: tuple
    blocks: Optional[BlockParams] = None
    objective_trace: tuple = field(default_factory=tuple)
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "z_members", tuple(self.z_members))
        object.__setattr__(self, "soft_members", tuple(self.soft_members))
        object.__setattr__(self, "objective_trace", tuple(float(x) for x in self.objective_trace))
        n, k = self.z_bar.n, self.z_bar.k
        if self.t.k != k:
            raise ValidationError("transition matrix size does not match assignment width")
        if len(self.soft_members) != len(self.z_members):
            raise ValidationError("soft_members and z_members must have equal length")
        for z in self.z_members:
            if z.n != n or z.k != k:
                raise ValidationError("member assignments must share n and k with z_bar")
        for s in self.soft_members:
            if s.n != n or s.k != k:
                raise ValidationError("soft member assignments must share n and k with z_bar")
        if self.soft_z_bar.n != n or self.soft_z_bar.k != k:
            raise ValidationError("soft_z_bar must share n and k with z_bar")
        if self.blocks is not None:
            if self.blocks.k != k or self.blocks.n_members != len(self.z_members):
                raise ValidationError("block parameters do not match fit dimensions")

    @property
    def n(self) -> int:
        return self.z_bar.n

    @property
    def k(self) -> int:
        return self.z_bar.k

    @property
    def n_members(self) -> int:
        return len(self.z_members)

    def relabel(self, perm: Sequence[int]) -> "ResbmFit":
        """Apply one community relabeling consistently to every field."""
        p = list(perm)
        return ResbmFit(
            z_bar=self.z_bar.relabel(p),
            t=self.t.relabel(p),
            z_members=tuple(z.relabel(p) for z in self.z_members),
            soft_z_bar=SoftAssignment(self.soft_z_bar.matrix[:, p]),
            soft_members=tuple(SoftAssignment(s.matrix[:, p]) for s in self.soft_members),
            blocks=self.blocks.relabel(p) if self.blocks is not None else None,
            objective_trace=self.objective_trace,
            converged=self.converged,
            iterations=self.iterations,
        )
