"""Pure states and density operators."""
from __future__ import annotations

import numpy as np

from .errors import DimensionError, StateError
from .operators import as_operator, as_vector, dag, projector
from .policy import get_policy

__all__ = [
    "is_normalized",
    "normalize",
    "from_vector",
    "validate",
    "check_density",
    "fidelity_pure",
    "maximally_mixed",
]


def is_normalized(v, tol: float | None = None) -> bool:
    tol = get_policy().normalized if tol is None else tol
    return abs(np.linalg.norm(as_vector(v)) - 1.0) <= tol


def normalize(v) -> np.ndarray:
    v = as_vector(v)
    n = np.linalg.norm(v)
    if n == 0:
        raise StateError("cannot normalize the zero vector")
    return v / n


def from_vector(v) -> np.ndarray:
    """Rank-one projector onto a normalized state vector."""
    v = as_vector(v)
    if not is_normalized(v):
        raise StateError(f"state vector not normalized (norm {np.linalg.norm(v):.15g})")
    return projector(v)


def validate(d) -> bool:
    """True iff ``d`` is Hermitian, unit-trace and positive semidefinite within policy tolerances."""
    pol = get_policy()
    try:
        d = as_operator(d)
    except ValueError:
        return False
    if np.linalg.norm(d - dag(d)) > pol.hermitian:
        return False
    if abs(np.trace(d) - 1.0) > pol.trace:
        return False
    return bool(np.linalg.eigvalsh((d + dag(d)) / 2)[0] >= -pol.psd)


def check_density(d, dim: int | None = None) -> np.ndarray:
    """Return ``d`` as an array, raising :class:`StateError` if it is not a density operator."""
    d = as_operator(d, dim)
    if not validate(d):
        raise StateError("not a valid density operator")
    return d


def fidelity_pure(d, v) -> float:
    """``<v|d|v>`` for a density operator ``d`` and a normalized vector ``v``."""
    d = as_operator(d)
    v = as_vector(v)
    if d.shape[0] != v.shape[0]:
        raise DimensionError(f"density operator dim {d.shape[0]} != vector dim {v.shape[0]}")
    if not is_normalized(v):
        raise StateError("state vector not normalized")
    f = np.vdot(v, d @ v)
    assert abs(f.imag) <= 1e-12, f"fidelity has imaginary part {f.imag}"
    return float(min(max(f.real, 0.0), 1.0))


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim
