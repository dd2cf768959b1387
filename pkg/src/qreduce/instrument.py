"""Completely positive map valued measures ("instruments").

An :class:`Instrument` stores one Kraus-form CP map per outcome of the
measured observable. The map for an outcome set is the sum of its atoms, so
countable additivity holds by construction and is only re-checked
numerically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, NullEventError
from .observable import Observable, OutcomeSet
from .operators import as_operator, dag
from .policy import get_policy
from .states import check_density

__all__ = [
    "CPMap",
    "LinearMap",
    "transpose_map",
    "Instrument",
    "AxiomReport",
    "apply",
    "choi_matrix",
    "kraus_from_choi",
    "verify_axioms",
    "outcome_distribution",
    "selective_state",
    "posterior_family",
    "controlled_posterior_instrument",
    "von_neumann_instrument",
    "choi_distance",
]


@dataclass(frozen=True, eq=False)
class CPMap:
    """``rho -> sum_k K_k rho K_k^dag`` for a nonempty list of Kraus operators."""

    kraus: Tuple[np.ndarray, ...]

    def __post_init__(self):
        kraus = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not kraus:
            raise ValueError("a CP map needs at least one Kraus operator")
        shape = kraus[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in kraus):
            raise DimensionError("Kraus operators must be matrices of a common shape")
        object.__setattr__(self, "kraus", kraus)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ dag(k) for k in self.kraus)

    def dual_effect(self) -> np.ndarray:
        """``sum_k K_k^dag K_k``, the effect this map assigns to its outcome."""
        return sum(dag(k) @ k for k in self.kraus)


@dataclass(frozen=True)
class LinearMap:
    """Arbitrary linear map on matrices; used for negative tests such as the transpose."""

    func: Callable[[np.ndarray], np.ndarray]
    dim_in: int
    dim_out: int

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.func(rho)


def transpose_map(dim: int) -> LinearMap:
    return LinearMap(lambda rho: np.asarray(rho).T, dim, dim)


@dataclass(frozen=True, eq=False)
class Instrument:
    """Measured observable plus one CP map per outcome.

    Compatibility with the observable is *not* enforced here so that broken
    instruments can be built and diagnosed with :func:`verify_axioms`.
    """

    observable: Observable
    atoms: Tuple[CPMap, ...]

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if len(atoms) != len(self.observable):
            raise DimensionError(
                f"{len(atoms)} atoms for an observable with {len(self.observable)} outcomes")
        d = self.observable.dim
        for a in atoms:
            if a.dim_in != d or a.dim_out != d:
                raise DimensionError("atom maps must act on the observable's space")
        object.__setattr__(self, "atoms", atoms)

    @property
    def dim(self) -> int:
        return self.observable.dim

    @property
    def outcomes(self) -> Tuple[float, ...]:
        return self.observable.outcomes

    def full(self) -> OutcomeSet:
        return self.observable.full()

    def singleton(self, index: int) -> OutcomeSet:
        return self.observable.singleton(index)


def _check_rho(ins: Instrument, rho) -> np.ndarray:
    rho = as_operator(rho)
    if rho.shape[0] != ins.dim:
        raise DimensionError(f"state dim {rho.shape[0]} != instrument dim {ins.dim}")
    return rho


def apply(ins: Instrument, s: OutcomeSet, rho) -> np.ndarray:
    """``T_s(rho)``, the (unnormalized) operation for outcome set ``s``.

    ``rho`` may be any square operator of the right size; the map is linear.
    """
    rho = _check_rho(ins, rho)
    if not s.observable.same_as(ins.observable):
        raise ValueError("outcome set does not belong to the instrument's observable")
    out = np.zeros_like(rho)
    for i in s.indices:
        out = out + ins.atoms[i](rho)
    return out


def choi_matrix(m) -> np.ndarray:
    """``sum_ij T(|i><j|) (x) |i><j|`` with the output factor as the slow index.

    ``m`` is anything with ``dim_in``, ``dim_out`` and a linear ``__call__``:
    a :class:`CPMap` or a raw :class:`LinearMap`.
    """
    din, dout = m.dim_in, m.dim_out
    choi = np.zeros((dout * din, dout * din), dtype=complex)
    for i in range(din):
        for j in range(din):
            e = np.zeros((din, din), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(np.asarray(m(e), dtype=complex), e)
    return choi


def kraus_from_choi(choi, dim_in: int, dim_out: int,
                    cutoff: float | None = None) -> List[np.ndarray]:
    """Kraus operators from the eigendecomposition of a (PSD) Choi matrix.

    Eigenvalues at or below ``cutoff`` (policy ``rank_cutoff``) are dropped;
    a map with no surviving eigenvalue gets a single zero Kraus operator.
    """
    cutoff = get_policy().rank_cutoff if cutoff is None else cutoff
    choi = as_operator(choi, dim_in * dim_out)
    evals, evecs = np.linalg.eigh((choi + dag(choi)) / 2)
    kraus = [np.sqrt(lam) * evecs[:, k].reshape(dim_out, dim_in)
             for k, lam in enumerate(evals) if lam > cutoff]
    return kraus or [np.zeros((dim_out, dim_in), dtype=complex)]


def choi_distance(a: Instrument, b: Instrument) -> float:
    """Largest Frobenius distance between corresponding atoms' Choi matrices."""
    if not a.observable.same_as(b.observable):
        raise ValueError("instruments measure different observables")
    return max(float(np.linalg.norm(choi_matrix(x) - choi_matrix(y)))
               for x, y in zip(a.atoms, b.atoms))


@dataclass(frozen=True)
class AxiomReport:
    cp_ok: bool
    additivity_ok: bool
    compat_ok: bool
    cp_violation: float
    additivity_violation: float
    compat_violation: float

    @property
    def ok(self) -> bool:
        return self.cp_ok and self.additivity_ok and self.compat_ok


def _random_partition(rng: np.random.Generator, indices: Sequence[int]) -> List[List[int]]:
    n_parts = int(rng.integers(1, min(3, max(len(indices), 1)) + 1))
    labels = rng.integers(0, n_parts, size=len(indices))
    return [[i for i, l in zip(indices, labels) if l == p] for p in range(n_parts)]


def verify_axioms(ins: Instrument, seed: int = 0, repetitions: int = 32) -> AxiomReport:
    """Check complete positivity, additivity and compatibility with the observable.

    * CP: smallest eigenvalue of each atom's Choi matrix.
    * Additivity: ``T_s = sum_n T_{s_n}`` for ``repetitions`` random sets ``s``,
      random partitions and random density operators.
    * Compatibility: ``Tr T_a(|i><j|) = Tr E_a |i><j|`` on the full matrix-unit basis.
    """
    from .random_ops import random_density

    pol = get_policy()
    d = ins.dim

    cp_violation = 0.0
    for atom in ins.atoms:
        choi = choi_matrix(atom)
        lowest = np.linalg.eigvalsh((choi + dag(choi)) / 2)[0]
        cp_violation = max(cp_violation, float(-lowest))

    rng = np.random.default_rng(seed)
    obs = ins.observable
    additivity_violation = 0.0
    for _ in range(repetitions):
        members = rng.random(len(obs)) < 0.5
        s = OutcomeSet(obs, tuple(members))
        rho = random_density(d, rng)
        whole = apply(ins, s, rho)
        parts = sum((apply(ins, obs.subset(p), rho) for p in _random_partition(rng, s.indices)),
                    np.zeros_like(whole))
        additivity_violation = max(additivity_violation, float(np.linalg.norm(whole - parts)))

    compat_violation = 0.0
    for a, atom in enumerate(ins.atoms):
        effect = obs.projections[a]
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                lhs = np.trace(atom(e))
                rhs = np.trace(effect @ e)
                compat_violation = max(compat_violation, float(abs(lhs - rhs)))

    return AxiomReport(
        cp_ok=bool(cp_violation <= pol.psd),
        additivity_ok=bool(additivity_violation <= pol.additivity),
        compat_ok=bool(compat_violation <= pol.trace),
        cp_violation=max(cp_violation, 0.0),
        additivity_violation=additivity_violation,
        compat_violation=compat_violation,
    )


def outcome_distribution(ins: Instrument, rho) -> np.ndarray:
    """``p_a = Tr T_a(rho)`` for every outcome, in outcome order."""
    rho = _check_rho(ins, rho)
    return np.array([np.trace(atom(rho)).real for atom in ins.atoms])


def selective_state(ins: Instrument, s: OutcomeSet, rho) -> np.ndarray:
    """Normalized ``T_s(rho)``; raises :class:`NullEventError` below the probability floor."""
    out = apply(ins, s, rho)
    p = np.trace(out).real
    if p <= get_policy().probability_floor:
        raise NullEventError(p)
    return out / p


def posterior_family(ins: Instrument, rho) -> List[Tuple[float, Optional[np.ndarray]]]:
    """Posterior state for each outcome, ``None`` where the outcome has null probability."""
    rho = _check_rho(ins, rho)
    floor = get_policy().probability_floor
    family = []
    for a, atom in zip(ins.outcomes, ins.atoms):
        out = atom(rho)
        p = np.trace(out).real
        family.append((a, out / p if p > floor else None))
    return family


def _range_basis(p: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(p)
    return evecs[:, evals > 0.5]


def controlled_posterior_instrument(obs: Observable, family: Sequence) -> Instrument:
    """Instrument measuring ``obs`` that leaves the object in ``family[a]`` after outcome ``a``.

    Atom ``a`` is ``rho -> Tr[E_a rho] family[a]`` with Kraus operators
    ``sqrt(l_j) |f_j><a,m|`` from the eigendecomposition of ``family[a]`` and an
    orthonormal basis ``|a,m>`` of the range of ``E_a``.
    """
    if len(family) != len(obs):
        raise DimensionError("need one posterior state per outcome")
    cutoff = get_policy().rank_cutoff
    atoms = []
    for proj, target in zip(obs.projections, family):
        target = check_density(target, obs.dim)
        evals, evecs = np.linalg.eigh((target + dag(target)) / 2)
        basis = _range_basis(proj)
        kraus = [np.sqrt(lam) * np.outer(evecs[:, j], basis[:, m].conj())
                 for j, lam in enumerate(evals) if lam > cutoff
                 for m in range(basis.shape[1])]
        atoms.append(CPMap(tuple(kraus)))
    return Instrument(obs, tuple(atoms))


def von_neumann_instrument(obs: Observable) -> Instrument:
    """Projection-postulate instrument ``rho -> E_a rho E_a``."""
    return Instrument(obs, tuple(CPMap((p,)) for p in obs.projections))
