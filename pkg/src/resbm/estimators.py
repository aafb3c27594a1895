"""Estimator-style wrappers so the fits compose with scikit-learn tooling.

``X`` everywhere is a sample of networks: a NetworkSample, an (M, n, n)
array, or a sequence of (n, n) adjacency matrices.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import rng as streams
from .errors import ValidationError
from .fitting import METHODS, fit_resbm
from .metrics import align_labels
from .predict import _cluster_subject, classify_subject, expected_assignment
from .types import as_network_sample


class ResbmEstimator(BaseEstimator):
    """Joint community detection across a sample of networks.

    Parameters mirror the functional interface: ``method`` picks the
    estimator, ``n_communities`` the block count.  After ``fit``, ``labels_``
    holds the mean-structure communities, ``member_labels_`` the per-member
    ones, and ``result_`` the full fit object.
    """

    def __init__(
        self,
        n_communities=2,
        method="varem",
        seed=0,
        restarts=None,
        max_iter=None,
        tol=None,
        co_lambda=None,
        co_gamma=None,
        freeze_transition=False,
        single_method="spectral",
    ):
        self.n_communities = n_communities
        self.method = method
        self.seed = seed
        self.restarts = restarts
        self.max_iter = max_iter
        self.tol = tol
        self.co_lambda = co_lambda
        self.co_gamma = co_gamma
        self.freeze_transition = freeze_transition
        self.single_method = single_method

    def _kwargs(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; expected one of {METHODS}")
        kwargs = {}
        if self.restarts is not None and self.method in ("varem", "co-osntf"):
            kwargs["restarts"] = self.restarts
        if self.max_iter is not None and self.method != "spectralk":
            kwargs["max_iter"] = self.max_iter
        if self.tol is not None and self.method != "spectralk":
            kwargs["tol"] = self.tol
        if self.co_lambda is not None and self.method == "co-osntf":
            kwargs["lam"] = self.co_lambda
        if self.co_gamma is not None and self.method == "co-spectral":
            kwargs["gamma"] = self.co_gamma
        if self.freeze_transition and self.method == "varem":
            kwargs["freeze_transition"] = True
        return kwargs

    def fit(self, X, y=None):
        sample = as_network_sample(X)
        self.result_ = fit_resbm(
            sample, self.n_communities, self.method, seed=self.seed, **self._kwargs()
        )
        self.labels_ = self.result_.z_bar.labels
        self.member_labels_ = np.stack([z.labels for z in self.result_.z_members])
        self.transition_ = np.asarray(self.result_.t.matrix)
        self.expected_assignment_ = expected_assignment(self.result_).matrix
        self.n_iter_ = self.result_.iterations
        self.converged_ = self.result_.converged
        return self

    def fit_predict(self, X, y=None):
        """Fit and return the per-member community labels, shape (M, n)."""
        return self.fit(X).member_labels_

    def predict(self, X):
        """Community labels for new subject networks, aligned to the fitted
        mean structure; shape (M_new, n)."""
        check_is_fitted(self, "result_")
        sample = as_network_sample(X)
        if sample.n != self.result_.n:
            raise ValidationError("new networks must share the fitted node set")
        out = np.empty((sample.n_members, sample.n), dtype=int)
        for m in range(sample.n_members):
            z = _cluster_subject(
                sample.member(m),
                self.n_communities,
                self.single_method,
                streams.stream_seed(self.seed, streams.PREDICT, m),
            )
            _, aligned = align_labels(self.result_.z_bar, z)
            out[m] = aligned.labels
        return out


class TwoPopulationClassifier(BaseEstimator, ClassifierMixin):
    """Assigns subject networks to one of two fitted populations.

    ``fit`` takes the pooled networks with binary group labels and fits one
    model per group; ``predict`` clusters each new subject and applies the
    chosen discrimination rule.
    """

    def __init__(
        self,
        n_communities=2,
        method="co-osntf",
        rule="loglik",
        single_method="osntf",
        seed=0,
    ):
        self.n_communities = n_communities
        self.method = method
        self.rule = rule
        self.single_method = single_method
        self.seed = seed

    def fit(self, X, y):
        sample = as_network_sample(X)
        y = np.asarray(y)
        if y.shape != (sample.n_members,):
            raise ValidationError("y must assign one group label per network")
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValidationError("exactly two groups are required")
        group_a = sample.subset(np.flatnonzero(y == self.classes_[0]))
        group_b = sample.subset(np.flatnonzero(y == self.classes_[1]))
        self.fit_a_ = fit_resbm(
            group_a, self.n_communities, self.method,
            seed=streams.stream_seed(self.seed, 0),
        )
        self.fit_b_ = fit_resbm(
            group_b, self.n_communities, self.method,
            seed=streams.stream_seed(self.seed, 1),
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_a_")
        sample = as_network_sample(X)
        out = []
        for m in range(sample.n_members):
            u = _cluster_subject(
                sample.member(m),
                self.n_communities,
                self.single_method,
                streams.stream_seed(self.seed, streams.PREDICT, m),
            )
            result = classify_subject(u, self.fit_a_, self.fit_b_, rule=self.rule)
            out.append(self.classes_[0] if result.label == "A" else self.classes_[1])
        return np.asarray(out)

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))


__all__ = ["ResbmEstimator", "TwoPopulationClassifier"]
