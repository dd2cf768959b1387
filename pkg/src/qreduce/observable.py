"""Sharp observables with finite outcome sets.

An :class:`OutcomeSet` is a boolean mask over an observable's (ascending)
outcome list and stands in for a Borel set of outcomes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import DimensionError
from .operators import as_operator, dag, spectral_decomposition
from .policy import get_policy

__all__ = [
    "Observable",
    "OutcomeSet",
    "from_hermitian",
    "diagonal_observable",
    "projection_of",
    "born_probability",
]


@dataclass(frozen=True, eq=False)
class Observable:
    """Outcomes (strictly increasing) and their orthogonal spectral projections."""

    outcomes: Tuple[float, ...]
    projections: Tuple[np.ndarray, ...]

    def __post_init__(self):
        outcomes = tuple(float(a) for a in self.outcomes)
        projections = tuple(as_operator(p) for p in self.projections)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "projections", projections)

        if not outcomes:
            raise ValueError("observable needs at least one outcome")
        if len(outcomes) != len(projections):
            raise DimensionError("one projection per outcome required")
        if any(b <= a for a, b in zip(outcomes, outcomes[1:])):
            raise ValueError("outcomes must be strictly increasing")
        dim = projections[0].shape[0]
        if any(p.shape[0] != dim for p in projections):
            raise DimensionError("projections have different dimensions")

        tol = get_policy().projection
        total = sum(projections)
        if np.linalg.norm(total - np.eye(dim)) > tol:
            raise ValueError("projections do not sum to the identity")
        for i, p in enumerate(projections):
            if np.linalg.norm(p - dag(p)) > tol or np.linalg.norm(p @ p - p) > tol:
                raise ValueError(f"projection {i} is not an orthogonal projection")
            if np.linalg.norm(p) <= tol:
                raise ValueError(f"projection {i} is zero")
            for q in projections[i + 1:]:
                if np.linalg.norm(p @ q) > tol:
                    raise ValueError("projections are not mutually orthogonal")

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def __len__(self) -> int:
        return len(self.outcomes)

    def matrix(self) -> np.ndarray:
        return sum(a * p for a, p in zip(self.outcomes, self.projections))

    def same_as(self, other: "Observable") -> bool:
        if other is self:
            return True
        return (self.outcomes == other.outcomes and self.dim == other.dim and all(
            np.allclose(p, q, atol=get_policy().projection)
            for p, q in zip(self.projections, other.projections)))

    # outcome-set constructors
    def full(self) -> "OutcomeSet":
        return OutcomeSet(self, (True,) * len(self))

    def empty(self) -> "OutcomeSet":
        return OutcomeSet(self, (False,) * len(self))

    def subset(self, indices: Iterable[int]) -> "OutcomeSet":
        chosen = set(int(i) for i in indices)
        if any(i < 0 or i >= len(self) for i in chosen):
            raise IndexError(f"outcome index out of range 0..{len(self) - 1}")
        return OutcomeSet(self, tuple(i in chosen for i in range(len(self))))

    def singleton(self, index: int) -> "OutcomeSet":
        return self.subset([index])

    def values(self, values: Iterable[float], atol: float = 1e-9) -> "OutcomeSet":
        """Outcome set containing the listed outcome values."""
        idx = []
        for v in values:
            hits = [i for i, a in enumerate(self.outcomes) if abs(a - v) <= atol]
            if not hits:
                raise ValueError(f"{v} is not an outcome of this observable")
            idx.extend(hits)
        return self.subset(idx)

    def interval(self, low: float = -np.inf, high: float = np.inf,
                 closed: Tuple[bool, bool] = (True, True)) -> "OutcomeSet":
        """Compile the real interval ``[low, high]`` (ends per ``closed``) to an outcome set."""
        def inside(a):
            lo_ok = a >= low if closed[0] else a > low
            hi_ok = a <= high if closed[1] else a < high
            return lo_ok and hi_ok
        return OutcomeSet(self, tuple(inside(a) for a in self.outcomes))


@dataclass(frozen=True, eq=False)
class OutcomeSet:
    observable: Observable
    members: Tuple[bool, ...]

    def __post_init__(self):
        members = tuple(bool(m) for m in self.members)
        if len(members) != len(self.observable):
            raise DimensionError("outcome set length does not match the observable")
        object.__setattr__(self, "members", members)

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.members) if m)

    @property
    def outcomes(self) -> Tuple[float, ...]:
        return tuple(self.observable.outcomes[i] for i in self.indices)

    def __len__(self) -> int:
        return sum(self.members)

    def __eq__(self, other) -> bool:
        return (isinstance(other, OutcomeSet) and self.members == other.members
                and self.observable.same_as(other.observable))

    def __hash__(self):
        return hash(self.members)

    def _check(self, other: "OutcomeSet"):
        if not self.observable.same_as(other.observable):
            raise ValueError("outcome sets belong to different observables")

    def __or__(self, other: "OutcomeSet") -> "OutcomeSet":
        self._check(other)
        return OutcomeSet(self.observable, tuple(a or b for a, b in zip(self.members, other.members)))

    def __and__(self, other: "OutcomeSet") -> "OutcomeSet":
        self._check(other)
        return OutcomeSet(self.observable, tuple(a and b for a, b in zip(self.members, other.members)))

    def complement(self) -> "OutcomeSet":
        return OutcomeSet(self.observable, tuple(not m for m in self.members))

    def isdisjoint(self, other: "OutcomeSet") -> bool:
        return len(self & other) == 0


def from_hermitian(h, threshold: float | None = None) -> Observable:
    """Observable whose outcomes are the (degeneracy-merged) eigenvalues of ``h``."""
    pairs = spectral_decomposition(h, threshold)
    return Observable(tuple(a for a, _ in pairs), tuple(p for _, p in pairs))


def diagonal_observable(values: Sequence[float]) -> Observable:
    """Observable diagonal in the computational basis, e.g. a grid position.

    Equal values share a projection; outcomes come out sorted.
    """
    values = np.asarray(values, dtype=float)
    outcomes = np.unique(values)
    projections = [np.diag((values == a).astype(complex)) for a in outcomes]
    return Observable(tuple(outcomes), tuple(projections))


def _check_set(obs: Observable, s: OutcomeSet):
    if not s.observable.same_as(obs):
        raise ValueError("outcome set does not belong to this observable")


def projection_of(obs: Observable, s: OutcomeSet) -> np.ndarray:
    """Spectral projection ``E(s)``: the sum of the member outcomes' projections."""
    _check_set(obs, s)
    out = np.zeros((obs.dim, obs.dim), dtype=complex)
    for i in s.indices:
        out = out + obs.projections[i]
    return out


def born_probability(obs: Observable, s: OutcomeSet, rho) -> float:
    """``Tr[E(s) rho]``, clamped to [0, 1]."""
    rho = as_operator(rho)
    if rho.shape[0] != obs.dim:
        raise DimensionError(f"state dim {rho.shape[0]} != observable dim {obs.dim}")
    p = np.trace(projection_of(obs, s) @ rho).real
    tol = get_policy().trace
    if not -tol <= p <= 1 + tol:
        raise ValueError(f"Born probability {p} outside [0, 1]")
    return float(min(max(p, 0.0), 1.0))
