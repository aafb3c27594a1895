import numpy as np
import pytest

from resbm import (
    HardAssignment,
    NetworkSample,
    ResbmFit,
    SimConfig,
    SoftAssignment,
    TransitionMatrix,
    assignment_covariance,
    classify_subject,
    expected_assignment,
    prediction_error,
    simulate,
)


def make_fit(mean_labels, t, k=2, n_members=1):
    z = HardAssignment.from_labels(mean_labels, k)
    soft = SoftAssignment(z.matrix)
    return ResbmFit(
        z_bar=z,
        t=TransitionMatrix(t),
        z_members=(z,) * n_members,
        soft_z_bar=soft,
        soft_members=(soft,) * n_members,
    )


def test_expected_assignment_identity_and_uniform():
    fit = make_fit([0, 0, 1], np.eye(2))
    assert np.array_equal(expected_assignment(fit).matrix, fit.z_bar.matrix)
    fit = make_fit([0, 0, 1], np.full((2, 2), 0.5))
    assert np.allclose(expected_assignment(fit).matrix, 0.5)


def test_assignment_covariance():
    fit = make_fit([0, 1], np.array([[0.8, 0.2], [0.3, 0.7]]))
    cov = assignment_covariance(fit)
    assert cov.shape == (2, 2, 2)
    row = np.array([0.8, 0.2])
    expected = np.diag(row) - np.outer(row, row)
    assert np.allclose(cov[0], expected)
    assert cov[0, 0, 0] == pytest.approx(0.16)
    assert cov[0, 1, 1] == pytest.approx(0.16)


def two_block_network(n, rng, p_in=0.9, p_out=0.05):
    half = n // 2
    labels = np.array([0] * half + [1] * (n - half))
    p = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    a = (rng.random((n, n)) < p).astype(float)
    a = np.triu(a, 1)
    return a + a.T, labels


def test_prediction_error_exact_match_is_zero():
    rng = np.random.default_rng(0)
    nets, labels = [], None
    for _ in range(3):
        a, labels = two_block_network(40, rng)
        nets.append(a)
    fit = make_fit(labels, np.eye(2))
    err = prediction_error(fit, NetworkSample(np.stack(nets)), 2, single_method="spectral", seed=1)
    assert err == pytest.approx(0.0, abs=1e-12)


def test_prediction_error_high_snr_holdout():
    cfg = SimConfig(n=120, k=2, n_members=6, kappa=0.0, a=0.4, b=0.6, rho=4.0, seed=9)
    sample, truth = simulate(cfg)
    train = NetworkSample(sample.adjacency[:4])
    test = NetworkSample(sample.adjacency[4:])
    from resbm import fit_co_osntf

    fit = fit_co_osntf(train, 2, seed=9, restarts=1)
    err = prediction_error(fit, test, 2, single_method="osntf", seed=9)
    assert err < 0.05


def test_classify_subject_rules():
    fit_a = make_fit([0, 0, 1, 1], np.eye(2))
    fit_b = make_fit([0, 1, 0, 1], np.eye(2))
    u = fit_a.z_bar
    for rule in ("loglik", "muv"):
        out = classify_subject(u, fit_a, fit_b, rule=rule)
        assert out.label == "A"
        assert not out.tie


def test_classify_subject_tie_flag():
    fit = make_fit([0, 0, 1, 1], np.array([[0.9, 0.1], [0.2, 0.8]]))
    u = fit.z_bar
    for rule in ("loglik", "muv"):
        out = classify_subject(u, fit, fit, rule=rule)
        assert out.label == "A"
        assert out.tie


def test_classify_subject_label_permutation_invariant():
    fit_a = make_fit([0, 0, 1, 1], np.array([[0.9, 0.1], [0.2, 0.8]]))
    fit_b = make_fit([0, 1, 0, 1], np.array([[0.8, 0.2], [0.3, 0.7]]))
    u = HardAssignment.from_labels([0, 0, 1, 0], 2)
    base = classify_subject(u, fit_a, fit_b, rule="loglik")
    flipped = classify_subject(u, fit_a.relabel([1, 0]), fit_b, rule="loglik")
    assert base.label == flipped.label
    assert base.score_a == pytest.approx(flipped.score_a)


def test_two_population_discrimination_beats_chance():
    rng = np.random.default_rng(7)
    correct = total = 0
    for rep in range(15):
        cfg_a = SimConfig(n=60, k=2, n_members=8, kappa=0.15, a=0.5, b=0.6, rho=3.0, seed=100 + rep)
        sample_a, truth_a = simulate(cfg_a)
        flipped = truth_a.z_bar.labels.copy()
        n_flip = int(0.3 * 60)
        flip_idx = rng.permutation(60)[:n_flip]
        flipped[flip_idx] = 1 - flipped[flip_idx]
        from resbm import draw_block_params, draw_edges, perturb_members

        z_b = HardAssignment.from_labels(flipped, 2)
        cfg_b = SimConfig(n=60, k=2, n_members=8, kappa=0.15, a=0.5, b=0.6, rho=3.0, seed=200 + rep)
        members_b = perturb_members(z_b, truth_a.t, 8, seed=200 + rep)
        sample_b = draw_edges(members_b, draw_block_params(cfg_b, z_b), seed=200 + rep)

        from resbm import fit_spectralk
        from resbm.baselines import spectral_single

        fit_a = fit_spectralk(sample_a.subset(range(6)), 2, seed=rep)
        fit_b = fit_spectralk(sample_b.subset(range(6)), 2, seed=rep)
        for sample, want in ((sample_a, "A"), (sample_b, "B")):
            for m in (6, 7):
                u = spectral_single(sample.member(m), 2, seed=rep)
                out = classify_subject(u, fit_a, fit_b, rule="loglik")
                correct += out.label == want
                total += 1
    assert correct / total > 0.5
