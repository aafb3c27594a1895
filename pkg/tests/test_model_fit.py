"""Model-fit diagnostics: edge-probability scores from a fit vs the data."""

import numpy as np

from resbm import SimConfig, fit_varem, roc_auc, simulate


def test_fitted_edge_probabilities_beat_chance():
    cfg = SimConfig(n=120, k=2, n_members=3, kappa=0.1, a=0.4, b=0.6, rho=3.0, seed=5)
    sample, _ = simulate(cfg)
    fit = fit_varem(sample, 2, restarts=1, seed=5)
    aucs = []
    for m in range(sample.n_members):
        z = fit.z_members[m].matrix
        p_hat = z @ fit.blocks.pi[m] @ z.T
        np.fill_diagonal(p_hat, 0.0)
        _, auc = roc_auc(sample.member(m), p_hat)
        aucs.append(auc)
    assert min(aucs) > 0.55
    assert np.mean(aucs) > 0.6
