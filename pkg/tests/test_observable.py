import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qreduce import (NotHermitianError, Observable, born_probability, diagonal_observable,
                     from_hermitian, from_vector, projection_of, random_density,
                     random_hermitian, random_observable)

PAULI_X = np.array([[0, 1], [1, 0]])
PAULI_Z = np.diag([1.0, -1.0])


def test_pauli_z():
    z = from_hermitian(PAULI_Z)
    assert z.outcomes == (-1.0, 1.0)
    np.testing.assert_allclose(z.projections[0], np.diag([0, 1]))
    np.testing.assert_allclose(z.projections[1], np.diag([1, 0]))


def test_fully_degenerate():
    obs = from_hermitian(np.eye(3))
    assert obs.outcomes == (1.0,)
    np.testing.assert_allclose(obs.projections[0], np.eye(3), atol=1e-12)


def test_reconstruction(rng):
    h = random_hermitian(4, rng)
    assert np.linalg.norm(from_hermitian(h).matrix() - h) <= 1e-10


def test_non_hermitian():
    with pytest.raises(NotHermitianError):
        from_hermitian(np.array([[1, 2], [0, 1]]))


def test_invalid_projections():
    with pytest.raises(ValueError):
        Observable((0.0, 1.0), (np.diag([1, 0]), np.diag([1, 0])))
    with pytest.raises(ValueError):
        Observable((1.0, 0.0), (np.diag([1, 0]), np.diag([0, 1])))


def test_projection_of():
    z = from_hermitian(PAULI_Z)
    np.testing.assert_allclose(projection_of(z, z.full()), np.eye(2))
    np.testing.assert_allclose(projection_of(z, z.empty()), np.zeros((2, 2)))
    x = from_hermitian(PAULI_X)
    np.testing.assert_allclose(projection_of(x, x.values([-1])), (np.eye(2) - PAULI_X) / 2,
                               atol=1e-15)


def test_outcome_set_interval_and_values():
    obs = diagonal_observable(np.arange(8))
    s = obs.interval(2, 5)
    assert s.indices == (2, 3, 4, 5)
    assert obs.values([2, 3, 4, 5]) == s
    assert (s | s.complement()) == obs.full()
    assert s.isdisjoint(s.complement())


def test_born_cases(rng):
    z = from_hermitian(PAULI_Z)
    rho = random_density(2, rng)
    assert born_probability(z, z.full(), rho) == pytest.approx(1.0, abs=1e-12)
    # e0 is the +1 eigenvector, which sits at index 1 after ascending sort
    e0 = from_vector([1, 0])
    assert born_probability(z, z.values([1.0]), e0) == 1.0
    assert born_probability(z, z.singleton(0), e0) == 0.0
    assert born_probability(z, z.values([1.0]), e0) == np.trace(
        projection_of(z, z.values([1.0])) @ e0).real


def test_born_eigenbasis_oracle(rng):
    obs = random_observable(4, 3, rng)
    rho = random_density(4, rng)
    s = obs.subset([0, 2])
    # rotate rho into an eigenbasis of obs and sum the diagonal over member blocks
    vecs, labels = [], []
    for a, p in enumerate(obs.projections):
        evals, evecs = np.linalg.eigh(p)
        for col in evecs[:, evals > 0.5].T:
            vecs.append(col)
            labels.append(a)
    basis = np.array(vecs).T
    diag = np.diag(basis.conj().T @ rho @ basis).real
    expected = sum(d for d, a in zip(diag, labels) if a in s.indices)
    assert born_probability(obs, s, rho) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_additivity_and_idempotence(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 6))
    obs = random_observable(dim, int(rng.integers(1, dim + 1)), rng)
    rho = random_density(dim, rng)
    mask = rng.random(len(obs)) < 0.5
    a = obs.subset(np.flatnonzero(mask))
    b = a.complement()
    assert abs(born_probability(obs, a, rho) + born_probability(obs, b, rho)
               - born_probability(obs, obs.full(), rho)) <= 1e-12
    p = projection_of(obs, a)
    assert np.linalg.norm(p @ p - p) <= 1e-10
