"""Seeded random states, unitaries, observables and instruments.

Every function takes a :class:`numpy.random.Generator` so that scenario runs
and test suites are reproducible from a single integer seed.
"""
from __future__ import annotations

from typing import List, Optional

import numpy as np

from .instrument import CPMap, Instrument
from .observable import Observable
from .operators import dag

__all__ = [
    "random_state_vector",
    "random_density",
    "random_unitary",
    "random_hermitian",
    "random_observable",
    "random_instrument",
]


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_state_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Density operator ``G G^dag / Tr`` from a ``dim x rank`` Ginibre matrix (full rank by default)."""
    g = _ginibre(rng, dim, dim if rank is None else rank)
    rho = g @ dag(g)
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with the phase fix of Mezzadri."""
    q, r = np.linalg.qr(_ginibre(rng, dim, dim))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = _ginibre(rng, dim, dim)
    return (g + dag(g)) / 2


def random_observable(dim: int, n_outcomes: int, rng: np.random.Generator) -> Observable:
    """Observable with ``n_outcomes`` distinct outcomes in a Haar-random eigenbasis.

    Each outcome gets at least one eigenvector; the rest are assigned at
    random, so degenerate outcomes occur whenever ``n_outcomes < dim``.
    """
    if not 1 <= n_outcomes <= dim:
        raise ValueError("need 1 <= n_outcomes <= dim")
    labels = np.concatenate([np.arange(n_outcomes),
                             rng.integers(0, n_outcomes, size=dim - n_outcomes)])
    rng.shuffle(labels)
    u = random_unitary(dim, rng)
    outcomes = np.sort(rng.choice(np.arange(-10, 11), size=n_outcomes, replace=False)).astype(float)
    projections = []
    for a in range(n_outcomes):
        cols = u[:, labels == a]
        projections.append(cols @ dag(cols))
    return Observable(tuple(outcomes), tuple(projections))


def _inv_sqrt(m: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(m)
    return (evecs / np.sqrt(evals)) @ dag(evecs)


def random_instrument(obs: Observable, rng: np.random.Generator,
                      max_kraus: int = 3) -> Instrument:
    """Random instrument compatible with ``obs``.

    Atom ``a`` gets ``1..max_kraus`` Kraus operators ``L_k S^{-1/2} Q_a^dag``
    where ``Q_a`` spans the range of ``E_a`` and ``S = sum_k L_k^dag L_k``, so
    that ``sum_k M_k^dag M_k = E_a`` exactly.
    """
    atoms: List[CPMap] = []
    for proj in obs.projections:
        evals, evecs = np.linalg.eigh(proj)
        q = evecs[:, evals > 0.5]
        r = q.shape[1]
        n = int(rng.integers(1, max_kraus + 1))
        ls = [_ginibre(rng, obs.dim, r) for _ in range(n)]
        s = sum(dag(l) @ l for l in ls)
        norm = _inv_sqrt(s)
        atoms.append(CPMap(tuple(l @ norm @ dag(q) for l in ls)))
    return Instrument(obs, tuple(atoms))
