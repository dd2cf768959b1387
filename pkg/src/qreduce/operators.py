"""Dense complex operator algebra.

Operators are plain square ``numpy`` arrays of dtype ``complex128``; state
vectors are 1-d arrays. Composite systems always put the object factor first,
so the composite basis index is ``i_obj * dim_probe + i_probe``.
"""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .errors import DimensionError, NotHermitianError
from .policy import get_policy

__all__ = [
    "as_operator",
    "as_vector",
    "dag",
    "tensor",
    "partial_trace_probe",
    "partial_trace_object",
    "is_hermitian",
    "spectral_decomposition",
    "is_unitary",
    "trace_distance",
    "ket",
    "projector",
]


def as_operator(m, dim: int | None = None) -> np.ndarray:
    """Coerce ``m`` to a finite square complex matrix, optionally of size ``dim``."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    return a


def as_vector(v, dim: int | None = None) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    if a.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    """Return ``|v><v|`` (no normalization)."""
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def tensor(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` with ``a`` as the slow index.

    Works for pairs of square matrices and for pairs of vectors. Raises
    :class:`DimensionError` if the composite dimension exceeds the policy's
    ``max_composite_dim``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise DimensionError("tensor expects two vectors or two matrices")
    dim = a.shape[0] * b.shape[0]
    if dim > get_policy().max_composite_dim:
        raise DimensionError("composite dimension too large")
    return np.kron(a, b)


def partial_trace_probe(m, dim_h: int, dim_k: int) -> np.ndarray:
    """Trace out the second (probe) factor of an operator on ``H (x) K``."""
    m = as_operator(m)
    if m.shape[0] != dim_h * dim_k:
        raise DimensionError(
            f"operator of dimension {m.shape[0]} does not split as {dim_h}x{dim_k}")
    return np.einsum("ikjk->ij", m.reshape(dim_h, dim_k, dim_h, dim_k))


def partial_trace_object(m, dim_h: int, dim_k: int) -> np.ndarray:
    """Trace out the first (object) factor of an operator on ``H (x) K``."""
    m = as_operator(m)
    if m.shape[0] != dim_h * dim_k:
        raise DimensionError(
            f"operator of dimension {m.shape[0]} does not split as {dim_h}x{dim_k}")
    return np.einsum("ikil->kl", m.reshape(dim_h, dim_k, dim_h, dim_k))


def is_hermitian(h, tol: float | None = None) -> bool:
    """Relative Frobenius test ``||h - h^dag|| <= tol * ||h||``; the zero matrix passes."""
    h = as_operator(h)
    tol = get_policy().hermitian if tol is None else tol
    scale = np.linalg.norm(h)
    if scale == 0.0:
        return True
    return np.linalg.norm(h - dag(h)) <= tol * scale


def spectral_decomposition(h, threshold: float | None = None) -> List[Tuple[float, np.ndarray]]:
    """Eigenvalue/projection pairs of a Hermitian matrix, eigenvalues ascending.

    Eigenvalues whose consecutive gaps are within ``threshold`` (absolute,
    policy default 1e-8) are merged into one spectral projection; the reported
    eigenvalue of a merged block is the block mean.
    """
    h = as_operator(h)
    if not is_hermitian(h):
        raise NotHermitianError("not Hermitian")
    threshold = get_policy().degeneracy if threshold is None else threshold
    evals, evecs = np.linalg.eigh((h + dag(h)) / 2)

    blocks: List[List[int]] = [[0]]
    for i in range(1, len(evals)):
        if evals[i] - evals[i - 1] <= threshold:
            blocks[-1].append(i)
        else:
            blocks.append([i])

    out = []
    for idx in blocks:
        vecs = evecs[:, idx]
        out.append((float(np.mean(evals[idx])), vecs @ dag(vecs)))
    return out


def is_unitary(u, tol: float | None = None) -> bool:
    u = as_operator(u)
    tol = get_policy().unitary if tol is None else tol
    return np.linalg.norm(dag(u) @ u - np.eye(u.shape[0])) <= tol


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b`` for Hermitian ``a``, ``b``."""
    diff = as_operator(a) - as_operator(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + dag(diff)) / 2))))
