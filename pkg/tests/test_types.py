import numpy as np
import pytest

from resbm import (
    BlockParams,
    HardAssignment,
    NetworkSample,
    ResbmFit,
    SoftAssignment,
    TransitionMatrix,
    ValidationError,
    as_network_sample,
)


def test_network_sample_validates_members():
    good = np.zeros((2, 3, 3))
    good[0, 0, 1] = good[0, 1, 0] = 1.0
    sample = NetworkSample(good)
    assert sample.n == 3 and sample.n_members == 2

    bad = good.copy()
    bad[1, 0, 1] = 1.0  # asymmetric
    with pytest.raises(ValidationError):
        NetworkSample(bad)

    bad = good.copy()
    bad[0, 1, 1] = 1.0  # diagonal
    with pytest.raises(ValidationError):
        NetworkSample(bad)

    bad = good.copy()
    bad[0, 0, 2] = bad[0, 2, 0] = 0.5  # non-binary
    with pytest.raises(ValidationError):
        NetworkSample(bad)


def test_network_sample_is_immutable():
    sample = NetworkSample(np.zeros((1, 3, 3)))
    with pytest.raises(ValueError):
        sample.adjacency[0, 0, 1] = 1.0


def test_as_network_sample_coercions():
    a = np.zeros((3, 3))
    assert as_network_sample(a).n_members == 1
    assert as_network_sample([a, a]).n_members == 2
    sample = NetworkSample(a[None])
    assert as_network_sample(sample) is sample


def test_hard_assignment_round_trips_labels():
    z = HardAssignment.from_labels([0, 2, 1, 2], 3)
    assert np.array_equal(z.labels, [0, 2, 1, 2])
    assert np.array_equal(z.sizes(), [1, 1, 2])
    with pytest.raises(ValidationError):
        HardAssignment(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        HardAssignment(np.array([[0.5, 0.5], [0.0, 1.0]]))


def test_hard_assignment_relabel():
    z = HardAssignment.from_labels([0, 1, 2], 3)
    swapped = z.relabel([1, 0, 2])
    assert np.array_equal(swapped.labels, [1, 0, 2])


def test_soft_assignment_validation():
    SoftAssignment(np.array([[0.5, 0.5], [1.0, 0.0]]))
    with pytest.raises(ValidationError):
        SoftAssignment(np.array([[0.6, 0.5]]))
    with pytest.raises(ValidationError):
        SoftAssignment(np.array([[-0.1, 1.1]]))
    assert np.array_equal(
        SoftAssignment(np.array([[0.5, 0.5], [0.2, 0.8]])).harden().labels, [0, 1]
    )


def test_transition_matrix_validation():
    TransitionMatrix(np.array([[0.9, 0.1], [0.3, 0.7]]))
    with pytest.raises(ValidationError):
        TransitionMatrix(np.array([[0.9, 0.2], [0.3, 0.7]]))
    t = TransitionMatrix.from_retention(3, 0.3)
    assert np.allclose(np.diag(t.matrix), 0.7)
    assert np.allclose(t.matrix[0, 1:], 0.15)
    assert np.array_equal(
        TransitionMatrix.from_retention(1, 0.0).matrix, np.ones((1, 1))
    )


def test_block_params_shared_diagonal():
    pi = np.array(
        [
            [[0.5, 0.1], [0.1, 0.4]],
            [[0.5, 0.2], [0.2, 0.4]],
        ]
    )
    blocks = BlockParams(pi, np.array([0.5, 0.5]))
    assert blocks.n_members == 2 and blocks.k == 2

    bad = pi.copy()
    bad[1, 0, 0] = 0.45
    with pytest.raises(ValidationError):
        BlockParams(bad, np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        BlockParams(pi, np.array([0.7, 0.5]))


def test_fit_checks_dimensions():
    z_bar = HardAssignment.from_labels([0, 1], 2)
    t = TransitionMatrix(np.eye(2))
    soft = SoftAssignment(z_bar.matrix)
    fit = ResbmFit(
        z_bar=z_bar,
        t=t,
        z_members=(z_bar,),
        soft_z_bar=soft,
        soft_members=(soft,),
    )
    assert fit.n == 2 and fit.k == 2 and fit.n_members == 1

    with pytest.raises(ValidationError):
        ResbmFit(
            z_bar=z_bar,
            t=TransitionMatrix(np.eye(3)),
            z_members=(z_bar,),
            soft_z_bar=soft,
            soft_members=(soft,),
        )


def test_fit_relabel_is_consistent():
    z_bar = HardAssignment.from_labels([0, 0, 1], 2)
    t = TransitionMatrix(np.array([[0.8, 0.2], [0.3, 0.7]]))
    soft = SoftAssignment(np.array([[0.9, 0.1], [0.8, 0.2], [0.25, 0.75]]))
    fit = ResbmFit(
        z_bar=z_bar,
        t=t,
        z_members=(z_bar,),
        soft_z_bar=soft,
        soft_members=(soft,),
    )
    flipped = fit.relabel([1, 0])
    assert np.array_equal(flipped.z_bar.labels, [1, 1, 0])
    assert flipped.t.matrix[0, 0] == t.matrix[1, 1]
    assert flipped.soft_z_bar.matrix[0, 0] == soft.matrix[0, 1]
