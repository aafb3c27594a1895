import json

import numpy as np
import pytest

from resbm import (
    HardAssignment,
    IOFormatError,
    ResbmFit,
    SimConfig,
    SoftAssignment,
    TransitionMatrix,
    ValidationError,
    simulate,
)
from resbm.io import (
    read_edge_list,
    read_fit,
    read_matrix_csv,
    read_sample,
    write_fit,
    write_matrix_csv,
    write_sample,
)


def test_sample_round_trip_dense(tmp_path):
    sample, _ = simulate(SimConfig(n=12, k=2, n_members=3, kappa=0.1, seed=3))
    manifest = write_sample(sample, str(tmp_path / "s"))
    loaded = read_sample(manifest)
    assert np.array_equal(loaded.adjacency, sample.adjacency)
    assert loaded.member_ids == ("member0000", "member0001", "member0002")


def test_sample_round_trip_edge_list(tmp_path):
    sample, _ = simulate(SimConfig(n=10, k=2, n_members=2, kappa=0.0, seed=4))
    manifest = write_sample(sample, str(tmp_path / "s"), fmt="edge-list")
    loaded = read_sample(manifest)
    assert np.array_equal(loaded.adjacency, sample.adjacency)


def test_sample_correlation_source(tmp_path):
    rng = np.random.default_rng(0)
    r = rng.uniform(-1, 1, size=(6, 6))
    r = (r + r.T) / 2
    np.fill_diagonal(r, 1.0)
    d = tmp_path / "c"
    d.mkdir()
    write_matrix_csv(r, str(d / "subject.csv"))
    manifest = {
        "version": 1,
        "n": 6,
        "M": 1,
        "k_hint": 2,
        "node_labels": None,
        "source": "correlation",
        "tau": 0.2,
        "members": [{"id": "subject", "path": "subject.csv", "format": "dense-csv"}],
    }
    path = d / "manifest.json"
    path.write_text(json.dumps(manifest))
    loaded = read_sample(str(path))
    from resbm import threshold_correlation

    assert np.array_equal(loaded.adjacency[0], threshold_correlation(r, 0.2))


def test_read_sample_errors(tmp_path):
    sample, _ = simulate(SimConfig(n=8, k=2, n_members=1, seed=1))
    manifest_path = write_sample(sample, str(tmp_path / "s"))
    manifest = json.loads(open(manifest_path).read())

    manifest["members"][0]["format"] = "mystery"
    bad = tmp_path / "s" / "bad.json"
    bad.write_text(json.dumps(manifest))
    with pytest.raises(IOFormatError, match="format"):
        read_sample(str(bad))

    manifest["members"][0]["format"] = "dense-csv"
    manifest["n"] = 9
    bad.write_text(json.dumps(manifest))
    with pytest.raises(ValidationError, match="shape"):
        read_sample(str(bad))

    manifest["n"] = 8
    manifest["version"] = 99
    bad.write_text(json.dumps(manifest))
    with pytest.raises(IOFormatError, match="version"):
        read_sample(str(bad))


def test_matrix_csv_full_precision(tmp_path):
    rng = np.random.default_rng(5)
    m = rng.random((4, 4))
    path = str(tmp_path / "m.csv")
    write_matrix_csv(m, path)
    assert np.array_equal(read_matrix_csv(path), m)


def test_edge_list_rejects_bad_lines(tmp_path):
    path = tmp_path / "e.edges"
    path.write_text("0 1\n1 2 3\n")
    with pytest.raises(IOFormatError):
        read_edge_list(str(path), 4)
    path.write_text("0 9\n")
    with pytest.raises(IOFormatError, match="range"):
        read_edge_list(str(path), 4)


def random_fit(rng, n=7, k=3, m_count=2, with_blocks=True):
    z_bar = HardAssignment.from_labels(np.r_[np.arange(k), rng.integers(0, k, n - k)], k)
    t = TransitionMatrix(rng.dirichlet(np.ones(k), size=k))
    members = tuple(
        HardAssignment.from_labels(rng.integers(0, k, n), k) for _ in range(m_count)
    )
    soft = SoftAssignment(rng.dirichlet(np.ones(k), size=n))
    soft_members = tuple(SoftAssignment(rng.dirichlet(np.ones(k), size=n)) for _ in range(m_count))
    blocks = None
    if with_blocks:
        from resbm import BlockParams

        diag = rng.uniform(0.3, 0.7, k)
        pi = np.zeros((m_count, k, k))
        for m in range(m_count):
            off = rng.uniform(0.05, 0.25, (k, k))
            off = (off + off.T) / 2
            pi[m] = off
            pi[m][np.arange(k), np.arange(k)] = diag
        blocks = BlockParams(pi, rng.dirichlet(np.ones(k)))
    return ResbmFit(
        z_bar=z_bar,
        t=t,
        z_members=members,
        soft_z_bar=soft,
        soft_members=soft_members,
        blocks=blocks,
        objective_trace=tuple(rng.standard_normal(5)),
        converged=bool(rng.integers(0, 2)),
        iterations=int(rng.integers(1, 50)),
    )


def test_fit_round_trip_identity(tmp_path):
    rng = np.random.default_rng(11)
    for i in range(10):
        fit = random_fit(rng, with_blocks=i % 2 == 0)
        path = str(tmp_path / f"fit{i}.json")
        write_fit(fit, path)
        loaded = read_fit(path)
        assert np.array_equal(loaded.z_bar.matrix, fit.z_bar.matrix)
        assert np.array_equal(loaded.t.matrix, fit.t.matrix)
        for a, b in zip(loaded.z_members, fit.z_members):
            assert np.array_equal(a.matrix, b.matrix)
        assert np.array_equal(loaded.soft_z_bar.matrix, fit.soft_z_bar.matrix)
        for a, b in zip(loaded.soft_members, fit.soft_members):
            assert np.array_equal(a.matrix, b.matrix)
        if fit.blocks is None:
            assert loaded.blocks is None
        else:
            assert np.array_equal(loaded.blocks.pi, fit.blocks.pi)
            assert np.array_equal(loaded.blocks.alpha, fit.blocks.alpha)
        assert loaded.objective_trace == fit.objective_trace
        assert loaded.converged == fit.converged
        assert loaded.iterations == fit.iterations


def test_fit_version_and_missing_field_errors(tmp_path):
    rng = np.random.default_rng(2)
    fit = random_fit(rng)
    path = str(tmp_path / "fit.json")
    write_fit(fit, path)
    payload = json.loads(open(path).read())

    payload["version"] = 42
    bad = tmp_path / "v.json"
    bad.write_text(json.dumps(payload))
    with pytest.raises(IOFormatError, match="version"):
        read_fit(str(bad))

    payload["version"] = 1
    del payload["t"]
    bad.write_text(json.dumps(payload))
    with pytest.raises(IOFormatError, match="missing"):
        read_fit(str(bad))


def test_fit_rejects_non_fit_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"kind": "other"}))
    with pytest.raises(IOFormatError, match="not a fit"):
        read_fit(str(path))
