import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qreduce import (CPMap, Instrument, NullEventError, apply, choi_matrix, choi_distance,
                     controlled_posterior_instrument, from_hermitian, from_vector,
                     kraus_from_choi, outcome_distribution, posterior_family, random_density,
                     random_instrument, random_observable, selective_state, trace_distance,
                     transpose_map, validate, verify_axioms, von_neumann_instrument)
from qreduce.observable import born_probability

PAULI_Z = np.diag([1.0, -1.0])


def choi_from_kraus(kraus):
    """Independent Choi construction: sum_k vec(K) vec(K)^dag with row-major vec."""
    vecs = [np.asarray(k).reshape(-1) for k in kraus]
    return sum(np.outer(v, v.conj()) for v in vecs)


def random_setup(rng, dim=None, n_out=None):
    dim = int(rng.integers(2, 6)) if dim is None else dim
    n_out = int(rng.integers(2, min(4, dim) + 1)) if n_out is None else n_out
    obs = random_observable(dim, n_out, rng)
    return obs, random_instrument(obs, rng)


class TestApply:
    def test_von_neumann_dephasing(self, rng):
        obs = random_observable(3, 3, rng)
        ins = von_neumann_instrument(obs)
        rho = random_density(3, rng)
        expected = sum(p @ rho @ p for p in obs.projections)
        np.testing.assert_allclose(apply(ins, obs.full(), rho), expected, atol=1e-14)

    def test_empty_set(self, rng):
        obs, ins = random_setup(rng)
        rho = random_density(obs.dim, rng)
        assert np.array_equal(apply(ins, obs.empty(), rho), np.zeros_like(rho))

    def test_partition_additivity(self, rng):
        obs, ins = random_setup(rng, 4, 4)
        rho = random_density(4, rng)
        parts = [obs.subset([0, 3]), obs.subset([1]), obs.subset([2])]
        total = sum(apply(ins, s, rho) for s in parts)
        assert np.linalg.norm(total - apply(ins, obs.full(), rho)) <= 1e-12

    def test_trace_equals_born(self, rng):
        obs, ins = random_setup(rng)
        rho = random_density(obs.dim, rng)
        s = obs.subset([0])
        out = apply(ins, s, rho)
        assert abs(np.trace(out) - born_probability(obs, s, rho)) <= 1e-10
        assert np.linalg.eigvalsh(out)[0] >= -1e-12


class TestChoi:
    def test_identity_channel(self):
        evals = np.linalg.eigvalsh(choi_matrix(CPMap((np.eye(2),))))
        np.testing.assert_allclose(evals, [0, 0, 0, 2], atol=1e-14)

    def test_transpose_map_not_cp(self):
        # Choi of the transpose is the swap operator: eigenvalues -1, 1, 1, 1
        choi = choi_matrix(transpose_map(2))
        swap = np.eye(4)[[0, 2, 1, 3]]
        np.testing.assert_array_equal(choi, swap)
        assert np.linalg.eigvalsh(choi)[0] == pytest.approx(-1.0, abs=1e-14)

    def test_matches_kraus_oracle(self, rng):
        obs, ins = random_setup(rng)
        for atom in ins.atoms:
            np.testing.assert_allclose(choi_matrix(atom), choi_from_kraus(atom.kraus), atol=1e-12)
            assert np.linalg.eigvalsh(choi_matrix(atom))[0] >= -1e-10

    def test_kraus_round_trip(self, rng):
        _, ins = random_setup(rng)
        for atom in ins.atoms:
            choi = choi_matrix(atom)
            rebuilt = CPMap(tuple(kraus_from_choi(choi, atom.dim_in, atom.dim_out)))
            assert np.linalg.norm(choi_matrix(rebuilt) - choi) <= 1e-12


class TestAxioms:
    def test_von_neumann_pauli_z(self):
        rep = verify_axioms(von_neumann_instrument(from_hermitian(PAULI_Z)))
        assert rep.ok

    def test_scaled_kraus_breaks_compatibility(self, rng):
        obs, ins = random_setup(rng)
        first = ins.atoms[0]
        broken = CPMap((1.01 * first.kraus[0],) + first.kraus[1:])
        rep = verify_axioms(Instrument(obs, (broken,) + ins.atoms[1:]))
        assert rep.cp_ok and rep.additivity_ok and not rep.compat_ok

    def test_against_dense_oracle(self, rng):
        obs = random_observable(4, 3, rng)
        family = [random_density(4, rng) for _ in range(3)]
        ins = controlled_posterior_instrument(obs, family)
        rep = verify_axioms(ins)
        assert rep.ok
        oracle_cp = max(-np.linalg.eigvalsh(choi_from_kraus(a.kraus))[0] for a in ins.atoms)
        oracle_compat = max(np.abs(a.dual_effect() - p).max()
                            for a, p in zip(ins.atoms, obs.projections))
        assert oracle_cp <= 1e-10 and oracle_compat <= 1e-10
        assert rep.cp_violation == pytest.approx(max(oracle_cp, 0.0), abs=1e-12)
        assert rep.compat_violation <= 2 * oracle_compat + 1e-15


class TestStatistics:
    def test_eigenstate_point_mass(self, rng):
        obs = random_observable(3, 3, rng)
        ins = random_instrument(obs, rng)
        evals, evecs = np.linalg.eigh(obs.projections[1])
        rho = from_vector(evecs[:, -1])
        np.testing.assert_allclose(outcome_distribution(ins, rho), [0, 1, 0], atol=1e-12)
        fam = posterior_family(ins, rho)
        assert [state is None for _, state in fam] == [True, False, True]

    def test_maximally_mixed_pauli_z(self):
        ins = von_neumann_instrument(from_hermitian(PAULI_Z))
        np.testing.assert_allclose(outcome_distribution(ins, np.eye(2) / 2), [0.5, 0.5])

    def test_selective_von_neumann(self, rng):
        obs = random_observable(4, 2, rng)
        ins = von_neumann_instrument(obs)
        rho = random_density(4, rng)
        e = obs.projections[0]
        expected = e @ rho @ e / np.trace(e @ rho)
        np.testing.assert_allclose(selective_state(ins, obs.singleton(0), rho), expected,
                                   atol=1e-12)
        dephased = sum(p @ rho @ p for p in obs.projections)
        np.testing.assert_allclose(selective_state(ins, obs.full(), rho), dephased, atol=1e-12)

    def test_selective_is_mixture_of_atoms(self, rng):
        obs, ins = random_setup(rng, 4, 4)
        rho = random_density(4, rng)
        s = obs.subset([0, 2, 3])
        p = outcome_distribution(ins, rho)
        mix = sum(p[a] * selective_state(ins, obs.singleton(a), rho) for a in s.indices)
        mix /= sum(p[a] for a in s.indices)
        np.testing.assert_allclose(selective_state(ins, s, rho), mix, atol=1e-12)

    def test_null_event(self):
        ins = von_neumann_instrument(from_hermitian(PAULI_Z))
        with pytest.raises(NullEventError, match="conditioning on null event"):
            selective_state(ins, ins.singleton(0), np.diag([1.0, 0.0]))

    def test_reconstruction(self, rng):
        obs, ins = random_setup(rng)
        rho = random_density(obs.dim, rng)
        p = outcome_distribution(ins, rho)
        recon = sum(pa * state for pa, (_, state) in zip(p, posterior_family(ins, rho)))
        assert np.linalg.norm(recon - apply(ins, obs.full(), rho)) <= 1e-10


class TestControlledPosterior:
    def test_reset_family(self, rng):
        obs = random_observable(3, 2, rng)
        zero = np.diag([1.0, 0, 0]).astype(complex)
        ins = controlled_posterior_instrument(obs, [zero, zero])
        for _ in range(5):
            for _, state in posterior_family(ins, random_density(3, rng)):
                np.testing.assert_allclose(state, zero, atol=1e-12)

    def test_eigenprojector_family_matches_von_neumann(self, rng):
        obs = random_observable(3, 3, rng)
        ctrl = controlled_posterior_instrument(obs, list(obs.projections))
        vn = von_neumann_instrument(obs)
        rho = random_density(3, rng)
        for (_, a), (_, b) in zip(posterior_family(ctrl, rho), posterior_family(vn, rho)):
            assert trace_distance(a, b) <= 1e-10
        assert choi_distance(ctrl, vn) <= 1e-10

    def test_distribution_is_born(self, rng):
        obs = random_observable(4, 3, rng)
        ins = controlled_posterior_instrument(obs, [random_density(4, rng) for _ in range(3)])
        rho = random_density(4, rng)
        born = [born_probability(obs, obs.singleton(a), rho) for a in range(3)]
        np.testing.assert_allclose(outcome_distribution(ins, rho), born, atol=1e-10)

    def test_invalid_member(self, rng):
        obs = random_observable(2, 2, rng)
        with pytest.raises(ValueError):
            controlled_posterior_instrument(obs, [np.diag([1.5, -0.5]), np.eye(2) / 2])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_posterior_property(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 6))
        obs = random_observable(dim, int(rng.integers(1, dim + 1)), rng)
        family = [random_density(dim, rng, int(rng.integers(1, dim + 1))) for _ in obs.outcomes]
        ins = controlled_posterior_instrument(obs, family)
        rho = random_density(dim, rng)
        p = outcome_distribution(ins, rho)
        for a, (_, state) in enumerate(posterior_family(ins, rho)):
            if p[a] > 1e-6:
                assert trace_distance(state, family[a]) <= 1e-9
                assert validate(state)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_instrument_invariants(seed):
    rng = np.random.default_rng(seed)
    obs, ins = random_setup(rng)
    rho = random_density(obs.dim, rng)
    assert abs(np.trace(apply(ins, obs.full(), rho)) - 1) <= 1e-10
    for atom in ins.atoms:
        assert np.linalg.eigvalsh(choi_matrix(atom))[0] >= -1e-10
    mask = rng.random(len(obs)) < 0.5
    a = obs.subset(np.flatnonzero(mask))
    b = a.complement()
    whole = apply(ins, obs.full(), rho)
    assert np.linalg.norm(apply(ins, a, rho) + apply(ins, b, rho) - whole) <= 1e-12
