"""Position measurement on a cyclic grid ``Z_N`` with controllable posterior states.

Object and probe are both particles on ``N`` sites with unit spacing and
``hbar = 1``. The two coupling stages are exact permutations of the composite
position basis, so translations by ``a`` are index shifts and no matrix
exponential is ever taken. Grid momentum eigenstates follow the DFT
convention ``<y|p> = exp(2 pi i p y / N) / sqrt(N)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .apparatus import (ApparatusModel, apparatus_outcome_distribution, conditional_state,
                        nonselective_state)
from .errors import StateError
from .observable import diagonal_observable
from .operators import as_vector, projector, trace_distance
from .policy import get_policy
from .states import fidelity_pure, from_vector, is_normalized

__all__ = [
    "GridSystem",
    "stage_one_unitary",
    "stage_two_unitary",
    "coupling_unitary",
    "build_position_apparatus",
    "TranslationReport",
    "verify_translated_posteriors",
    "MomentumReport",
    "momentum_nondisturbance_demo",
]


@dataclass(frozen=True)
class GridSystem:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("grid size must be an integer >= 2")

    @property
    def dim(self) -> int:
        return self.n

    def index(self, x: int, y: int) -> int:
        """Composite index of ``|x> (x) |y>`` (object slow)."""
        return (x % self.n) * self.n + (y % self.n)

    def fourier_matrix(self) -> np.ndarray:
        """Column ``p`` is the momentum eigenstate ``|p>`` in the position basis."""
        y = np.arange(self.n)
        return np.exp(2j * np.pi * np.outer(y, y) / self.n) / np.sqrt(self.n)

    def momentum_eigenstate(self, p: int) -> np.ndarray:
        y = np.arange(self.n)
        return np.exp(2j * np.pi * (p % self.n) * y / self.n) / np.sqrt(self.n)

    def position_eigenstate(self, x: int) -> np.ndarray:
        v = np.zeros(self.n, dtype=complex)
        v[x % self.n] = 1.0
        return v

    def shift(self, v, a: int) -> np.ndarray:
        """Translate a wave function by ``a`` sites: ``out(x) = v(x - a)``."""
        return np.roll(as_vector(v, self.n), a % self.n)

    def reflect(self, v) -> np.ndarray:
        """Parity ``out(y) = v(-y mod N)``; site 0 is fixed."""
        v = as_vector(v, self.n)
        return v[(-np.arange(self.n)) % self.n]

    def position_observable(self):
        return diagonal_observable(np.arange(self.n, dtype=float))


def _permutation(g: GridSystem, target: Callable[[int, int], Tuple[int, int]]) -> np.ndarray:
    """Unitary sending basis ket ``|x', y'>`` to ``|target(x', y')>``."""
    size = g.n * g.n
    u = np.zeros((size, size), dtype=complex)
    for xp in range(g.n):
        for yp in range(g.n):
            x, y = target(xp, yp)
            u[g.index(x, y), g.index(xp, yp)] = 1.0
    return u


def stage_one_unitary(g: GridSystem) -> np.ndarray:
    """First coupling stage ``exp(i p_x (x) y)``: ``|x', y'> -> |x' - y', y'>``."""
    return _permutation(g, lambda xp, yp: (xp - yp, yp))


def stage_two_unitary(g: GridSystem) -> np.ndarray:
    """Second coupling stage ``exp(-i x (x) p_y)``: ``|x', y'> -> |x', y' + x'>``."""
    return _permutation(g, lambda xp, yp: (xp, yp + xp))


def coupling_unitary(g: GridSystem) -> np.ndarray:
    """Stage two after stage one: ``|x', y'> -> |x' - y', x'>``."""
    return stage_two_unitary(g) @ stage_one_unitary(g)


def build_position_apparatus(g: GridSystem, phi) -> ApparatusModel:
    """Position-measuring apparatus whose posterior after outcome ``a`` is ``phi`` shifted by ``a``.

    The probe is prepared in the reflected wave function ``xi(y) = phi(-y)``
    and read out in its position basis.
    """
    phi = as_vector(phi, g.n)
    if not is_normalized(phi):
        raise StateError("phi is not normalized")
    xi = g.reflect(phi)
    x_hat = g.position_observable()
    return ApparatusModel(
        dim_h=g.n,
        sigma=projector(xi),
        unitary=coupling_unitary(g),
        probe=x_hat,
        measured=x_hat,
    )


@dataclass(frozen=True)
class TranslationReport:
    max_distance: float
    distances: Tuple[Optional[float], ...]
    passed: bool


def verify_translated_posteriors(g: GridSystem, phi, rho,
                                 tol: float = 1e-10) -> TranslationReport:
    """Compare each posterior with the density operator of ``phi`` shifted by the outcome.

    Outcomes with probability at or below the policy floor report ``None``.
    """
    model = build_position_apparatus(g, phi)
    probs = apparatus_outcome_distribution(model, rho)
    floor = get_policy().probability_floor
    distances = []
    for a in range(g.n):
        if probs[a] <= floor:
            distances.append(None)
            continue
        post = conditional_state(model, model.probe.singleton(a), rho)
        distances.append(trace_distance(post, from_vector(g.shift(phi, a))))
    worst = max((d for d in distances if d is not None), default=0.0)
    return TranslationReport(float(worst), tuple(distances), bool(worst <= tol))


@dataclass(frozen=True)
class MomentumReport:
    p: int
    prior_momentum: int
    fidelities: Tuple[Optional[float], ...]
    distribution: Tuple[float, ...]
    min_fidelity: float
    distribution_deviation: float
    nonselective_distance: float
    fidelity_ok: bool
    uniform_ok: bool
    nonselective_ok: bool

    @property
    def passed(self) -> bool:
        return self.fidelity_ok and self.uniform_ok and self.nonselective_ok


def momentum_nondisturbance_demo(g: GridSystem, p: int, prior_momentum: Optional[int] = None,
                                 fidelity_tol: float = 1e-10,
                                 uniform_tol: float = 1e-12,
                                 state_tol: float = 1e-10) -> MomentumReport:
    """Position measurement with the probe prepared in momentum eigenstate ``|p>``.

    The object ends in ``|-p>`` whatever the outcome, so a prior ``|-p>``
    passes through undisturbed. ``prior_momentum`` (default ``-p mod N``)
    selects a different prior for contrast runs; for those the fidelity
    check is expected to fail.
    """
    if not 0 <= p < g.n:
        raise IndexError(f"momentum index {p} outside 0..{g.n - 1}")
    minus_p = (-p) % g.n
    q = minus_p if prior_momentum is None else prior_momentum % g.n
    prior_vec = g.momentum_eigenstate(q)
    prior = from_vector(prior_vec)

    # phi = reflect(xi) with xi = |p>, i.e. phi = |-p>
    phi = g.reflect(g.momentum_eigenstate(p))
    model = build_position_apparatus(g, phi)

    probs = apparatus_outcome_distribution(model, prior)
    floor = get_policy().probability_floor
    fids = tuple(
        fidelity_pure(conditional_state(model, model.probe.singleton(a), prior), prior_vec)
        if probs[a] > floor else None
        for a in range(g.n))
    min_fid = min(f for f in fids if f is not None)
    deviation = float(np.max(np.abs(probs - 1.0 / g.n)))
    ns_dist = trace_distance(nonselective_state(model, prior), prior)
    return MomentumReport(
        p=p,
        prior_momentum=q,
        fidelities=fids,
        distribution=tuple(float(x) for x in probs),
        min_fidelity=float(min_fid),
        distribution_deviation=deviation,
        nonselective_distance=ns_dist,
        fidelity_ok=bool(min_fid >= 1 - fidelity_tol),
        uniform_ok=bool(deviation <= uniform_tol),
        nonselective_ok=bool(ns_dist <= state_tol),
    )
