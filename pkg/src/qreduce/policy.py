"""Numeric tolerances shared by every module.

A single frozen :class:`NumericPolicy` holds the defaults. Callers that need
different thresholds either pass ``tol=`` explicitly to a function or install a
modified policy for a block of code::

    with use_policy(probability_floor=1e-9):
        posterior_family(ins, rho)

The active policy lives in a :mod:`contextvars` variable, so overriding it in
one thread or task never leaks into another.
"""
from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass
from typing import Iterator


@dataclass(frozen=True)
class NumericPolicy:
    hermitian: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-10
    normalized: float = 1e-12
    degeneracy: float = 1e-8
    projection: float = 1e-10
    unitary: float = 1e-10
    probability_floor: float = 1e-12
    additivity: float = 1e-12
    rank_cutoff: float = 1e-12
    completion_cutoff: float = 1e-8
    sentinel_probability: float = 1e-12
    max_composite_dim: int = 4096

    def replace(self, **changes) -> "NumericPolicy":
        return dataclasses.replace(self, **changes)


DEFAULT_POLICY = NumericPolicy()

_active: contextvars.ContextVar[NumericPolicy] = contextvars.ContextVar(
    "qreduce_policy", default=DEFAULT_POLICY)


def get_policy() -> NumericPolicy:
    """Return the policy in effect for the current context."""
    return _active.get()


@contextlib.contextmanager
def use_policy(policy: NumericPolicy | None = None, **overrides) -> Iterator[NumericPolicy]:
    """Temporarily install ``policy`` (or the current one with ``overrides``)."""
    base = policy if policy is not None else get_policy()
    new = base.replace(**overrides) if overrides else base
    token = _active.set(new)
    try:
        yield new
    finally:
        _active.reset(token)
