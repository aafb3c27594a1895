import numpy as np
import pytest

from resbm import (
    FactorState,
    HardAssignment,
    NetworkSample,
    SimConfig,
    TransitionMatrix,
    ValidationError,
    co_osntf_objective,
    conditional_mle,
    fit_co_osntf,
    fit_co_spectral,
    nmi,
    osntf_single,
    simulate,
    spectral_single,
    update_s,
    update_u_member,
    update_u_star,
)
from resbm.graphs import laplacian


def orthonormal_indicator(labels, k):
    z = HardAssignment.from_labels(labels, k).matrix
    return z / np.sqrt(z.sum(axis=0))


def exact_instance():
    """A Laplacian-like matrix with an exact orthogonal tri-factorization."""
    u = orthonormal_indicator([0, 0, 1, 1, 1], 2)
    s = np.array([[0.8, 0.1], [0.1, 0.6]])
    lap = u @ s @ u.T
    return lap, u, s


# -- objective ---------------------------------------------------------------


def test_objective_zero_at_exact_factorization():
    lap, u, s = exact_instance()
    state = FactorState([u], [s], u.copy(), [0.0])
    assert co_osntf_objective(state, [lap]) == pytest.approx(0.0, abs=1e-24)


def test_objective_zero_when_consensus_matches():
    u = orthonormal_indicator([0, 1, 0, 1], 2)
    state = FactorState([u, u], [np.zeros((2, 2)), np.zeros((2, 2))], u.copy(), [1.0, 1.0])
    zero = np.zeros((4, 4))
    assert co_osntf_objective(state, [zero, zero]) == pytest.approx(0.0, abs=1e-12)


def test_objective_matches_naive_double_loop():
    rng = np.random.default_rng(1)
    n, k, m_count = 10, 3, 2
    laps = [np.abs(rng.random((n, n))) for _ in range(m_count)]
    laps = [(a + a.T) / 2 for a in laps]
    us = [np.abs(rng.random((n, k))) for _ in range(m_count)]
    ss = [np.abs(rng.random((k, k))) for _ in range(m_count)]
    u_star = np.abs(rng.random((n, k)))
    lam = [0.3, 0.7]
    state = FactorState(us, ss, u_star, lam)

    total = 0.0
    for m in range(m_count):
        resid = laps[m] - us[m] @ ss[m] @ us[m].T
        total += sum(resid[i, j] ** 2 for i in range(n) for j in range(n))
        cross = us[m].T @ u_star
        total += lam[m] * (k - sum(cross[i, j] ** 2 for i in range(k) for j in range(k)))
    assert co_osntf_objective(state, laps) == pytest.approx(total, abs=1e-12)


def test_objective_rejects_dimension_mismatch():
    lap, u, s = exact_instance()
    state = FactorState([u], [s], u.copy(), [0.0])
    with pytest.raises(ValidationError):
        co_osntf_objective(state, [lap, lap])


# -- multiplicative updates ---------------------------------------------------


def test_update_s_fixed_point():
    lap, u, s = exact_instance()
    state = FactorState([u], [s], u.copy(), [0.0])
    assert np.allclose(update_s(state, [lap], 0), s, atol=1e-12)


def test_update_s_scalar_case():
    state = FactorState([np.ones((1, 1))], [np.ones((1, 1))], np.ones((1, 1)), [0.0])
    lap = np.array([[2.0]])
    assert update_s(state, [lap], 0)[0, 0] == pytest.approx(np.sqrt(2.0))


def test_update_s_scaling():
    lap, u, s = exact_instance()
    state = FactorState([u], [2.0 * s], u.copy(), [0.0])
    assert np.allclose(update_s(state, [2.0 * lap], 0), 2.0 * s, atol=1e-12)


def test_update_u_member_fixed_points():
    lap, u, s = exact_instance()
    state = FactorState([u], [s], u.copy(), [0.0])
    assert np.allclose(update_u_member(state, [lap], 0), u, atol=1e-12)
    state = FactorState([u], [s], u.copy(), [0.5])
    assert np.allclose(update_u_member(state, [lap], 0), u, atol=1e-12)


def test_update_u_member_stays_non_negative():
    rng = np.random.default_rng(3)
    n, k = 8, 2
    a = (rng.random((n, n)) < 0.4).astype(float)
    a = np.triu(a, 1)
    lap = laplacian(a + a.T)
    u = np.abs(rng.random((n, k)))
    state = FactorState([u], [np.abs(rng.random((k, k)))], np.abs(rng.random((n, k))), [0.01])
    out = update_u_member(state, [lap], 0)
    assert np.all(out >= 0)


def test_update_u_star_fixed_point_and_skip():
    lap, u, s = exact_instance()
    state = FactorState([u], [s], u.copy(), [1.0])
    assert np.allclose(update_u_star(state), u, atol=1e-12)
    state = FactorState([u], [s], u.copy(), [0.0])
    assert update_u_star(state) is state.u_star


def test_update_u_star_does_not_increase_objective():
    rng = np.random.default_rng(5)
    n, k = 8, 2
    for _ in range(10):
        a = (rng.random((n, n)) < 0.5).astype(float)
        a = np.triu(a, 1)
        lap = laplacian(a + a.T)
        state = FactorState(
            [np.abs(rng.random((n, k)))],
            [np.abs(rng.random((k, k)))],
            np.abs(rng.random((n, k))),
            [0.5],
        )
        before = co_osntf_objective(state, [lap])
        state.u_star = update_u_star(state)
        after = co_osntf_objective(state, [lap])
        assert after <= before + 1e-9 * max(abs(before), 1.0)


def test_full_sweep_fixed_point_is_stable():
    lap, u, s = exact_instance()
    state = FactorState([u], [s], u.copy(), [0.5])
    s_new = update_s(state, [lap], 0)
    state.s_members[0] = s_new
    u_new = update_u_member(state, [lap], 0)
    state.u_members[0] = u_new
    star_new = update_u_star(state)
    assert np.linalg.norm(s_new - s, "fro") < 1e-10
    assert np.linalg.norm(u_new - u, "fro") < 1e-10
    assert np.linalg.norm(star_new - u, "fro") < 1e-10


# -- full fits -----------------------------------------------------------------


def test_fit_co_osntf_recovers_high_snr():
    cfg = SimConfig(n=200, k=2, n_members=3, kappa=0.0, a=0.4, b=0.6, rho=4.0, seed=1)
    sample, truth = simulate(cfg)
    fit = fit_co_osntf(sample, 2, seed=1, restarts=2)
    for z, zt in zip(fit.z_members, truth.z_members):
        assert nmi(z, zt) == pytest.approx(1.0)
    assert nmi(fit.z_bar, truth.z_bar) == pytest.approx(1.0)
    assert np.allclose(fit.t.matrix, np.eye(2), atol=1e-12)


def test_fit_co_osntf_objective_non_increasing():
    cfg = SimConfig(n=60, k=2, n_members=2, kappa=0.1, a=0.4, b=0.6, rho=2.5, seed=3)
    sample, _ = simulate(cfg)
    fit = fit_co_osntf(sample, 2, seed=3, restarts=1, max_iter=300)
    trace = np.array(fit.objective_trace)
    rel = np.diff(trace) / np.maximum(np.abs(trace[:-1]), 1e-12)
    assert rel.max() <= 1e-9


def test_fit_co_osntf_lambda_zero_decouples():
    cfg = SimConfig(n=100, k=2, n_members=2, kappa=0.0, a=0.4, b=0.6, rho=4.0, seed=5)
    sample, _ = simulate(cfg)
    fit = fit_co_osntf(sample, 2, lam=0.0, seed=5, restarts=1)
    singles = [osntf_single(sample.member(m), 2, seed=5) for m in range(2)]
    for z, single in zip(fit.z_members, singles):
        assert nmi(z, single) == pytest.approx(1.0)


def test_fit_co_osntf_node_permutation_equivariant():
    cfg = SimConfig(n=80, k=2, n_members=2, kappa=0.05, a=0.4, b=0.6, rho=3.0, seed=6)
    sample, _ = simulate(cfg)
    perm = np.random.default_rng(0).permutation(80)
    permuted = NetworkSample(sample.adjacency[:, perm][:, :, perm])
    fit = fit_co_osntf(sample, 2, seed=2, restarts=1)
    fit_perm = fit_co_osntf(permuted, 2, seed=2, restarts=1)
    reference = HardAssignment.from_labels(fit.z_bar.labels[perm], 2)
    assert nmi(fit_perm.z_bar, reference) == pytest.approx(1.0)


# -- co-spectral ----------------------------------------------------------------


def test_fit_co_spectral_single_member_zero_gamma():
    a = np.zeros((10, 10))
    a[:5, :5] = 1.0
    a[5:, 5:] = 1.0
    np.fill_diagonal(a, 0.0)
    sample = NetworkSample(a[None])
    fit = fit_co_spectral(sample, 2, gamma=0.0, seed=4)
    single = spectral_single(a, 2, seed=4)
    assert nmi(fit.z_members[0], single) == pytest.approx(1.0)


def test_fit_co_spectral_recovers_high_snr():
    cfg = SimConfig(n=200, k=2, n_members=3, kappa=0.0, a=0.4, b=0.6, rho=4.0, seed=7)
    sample, truth = simulate(cfg)
    fit = fit_co_spectral(sample, 2, seed=7)
    for z, zt in zip(fit.z_members, truth.z_members):
        assert nmi(z, zt) == pytest.approx(1.0)
    assert nmi(fit.z_bar, truth.z_bar) == pytest.approx(1.0)


def test_fit_co_spectral_identical_members():
    a = np.zeros((12, 12))
    a[:6, :6] = 1.0
    a[6:, 6:] = 1.0
    np.fill_diagonal(a, 0.0)
    sample = NetworkSample(np.stack([a, a, a]))
    fit = fit_co_spectral(sample, 2, seed=8)
    for z in fit.z_members:
        assert nmi(z, fit.z_bar) == pytest.approx(1.0)


# -- conditional MLE ---------------------------------------------------------------


def test_conditional_mle_identity():
    z = HardAssignment.from_labels([0, 0, 1, 1], 2)
    t = conditional_mle(z, [z, z, z])
    assert np.array_equal(t.matrix, np.eye(2))


def test_conditional_mle_hand_example():
    z_bar = HardAssignment.from_labels([0, 0, 1, 1], 2)
    member = HardAssignment.from_labels([0, 1, 1, 1], 2)
    t = conditional_mle(z_bar, [member])
    assert np.allclose(t.matrix, [[0.5, 0.5], [0.0, 1.0]])


def test_conditional_mle_rejects_empty_community():
    z_bar = HardAssignment.from_labels([0, 0, 0], 2)
    member = HardAssignment.from_labels([0, 1, 0], 2)
    with pytest.raises(ValidationError, match="community 1"):
        conditional_mle(z_bar, [member])


def brute_force_transitions(z_bar, members):
    k = z_bar.k
    counts = np.zeros((k, k))
    for z in members:
        for i in range(z_bar.n):
            counts[z_bar.labels[i], z.labels[i]] += 1
    return counts / counts.sum(axis=1, keepdims=True)


def test_conditional_mle_matches_brute_force_bitwise():
    rng = np.random.default_rng(13)
    for _ in range(100):
        n = int(rng.integers(4, 25))
        k = int(rng.integers(1, 5))
        labels = rng.integers(0, k, n)
        labels[:k] = np.arange(k)  # every mean community non-empty
        z_bar = HardAssignment.from_labels(labels, k)
        members = [
            HardAssignment.from_labels(rng.integers(0, k, n), k)
            for _ in range(int(rng.integers(1, 5)))
        ]
        t = conditional_mle(z_bar, members)
        oracle = brute_force_transitions(z_bar, members)
        assert np.array_equal(t.matrix, oracle)


def test_conditional_mle_consistency():
    cfg = SimConfig(n=5000, k=3, n_members=20, kappa=0.25, seed=5)
    z_bar = HardAssignment.from_labels(
        np.random.default_rng(1).integers(0, 3, 5000), 3
    )
    t_true = TransitionMatrix.from_retention(3, 0.25)
    from resbm import perturb_members

    members = perturb_members(z_bar, t_true, 20, seed=5)
    t_hat = conditional_mle(z_bar, members)
    assert np.linalg.norm(t_hat.matrix - t_true.matrix, "fro") < 0.02
