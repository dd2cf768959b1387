"""Measuring-apparatus models ``(K, sigma, U, B)``.

All statistics here are computed from first principles on the object-probe
composite: evolve ``rho (x) sigma`` with ``U``, insert probe projections and
trace out the probe. :func:`extract_instrument` turns a model into its
operational distribution and :func:`dilate_instrument` goes the other way.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import AxiomError, DimensionError, MeasurementError, NullEventError, StateError
from .instrument import (CPMap, Instrument, LinearMap, choi_matrix, kraus_from_choi,
                         verify_axioms)
from .observable import Observable, OutcomeSet, diagonal_observable, projection_of
from .operators import (as_operator, dag, is_unitary, partial_trace_probe, tensor,
                        trace_distance)
from .policy import get_policy
from .states import validate

__all__ = [
    "ApparatusModel",
    "MeasuresReport",
    "NonMixtureReport",
    "evolve",
    "apparatus_outcome_distribution",
    "measured_distribution",
    "measures_check",
    "nonselective_state",
    "conditional_state",
    "apparatus_posterior_family",
    "joint_distribution",
    "factorization_residual",
    "extract_instrument",
    "dilate_instrument",
    "naive_composite_state",
    "demonstrate_non_mixture",
]


@dataclass(frozen=True, eq=False)
class ApparatusModel:
    """Object dimension, probe preparation, coupling unitary and probe observable.

    ``measured`` is the observable the model claims to measure and
    ``correspondence[b]`` names the measured-outcome index that probe outcome
    ``b`` reports (``None`` for padding outcomes that must never fire). With no
    correspondence, probe and measured outcomes are matched index by index.
    """

    dim_h: int
    sigma: np.ndarray
    unitary: np.ndarray
    probe: Observable
    measured: Optional[Observable] = None
    correspondence: Optional[Tuple[Optional[int], ...]] = None

    def __post_init__(self):
        dim_k = self.probe.dim
        sigma = as_operator(self.sigma, dim_k)
        if not validate(sigma):
            raise StateError("probe preparation is not a density operator")
        u = as_operator(self.unitary, self.dim_h * dim_k)
        if not is_unitary(u):
            raise ValueError("coupling is not unitary")
        if self.measured is not None and self.measured.dim != self.dim_h:
            raise DimensionError("measured observable does not act on the object space")
        if self.correspondence is not None:
            corr = tuple(None if c is None else int(c) for c in self.correspondence)
            if len(corr) != len(self.probe):
                raise DimensionError("correspondence needs one entry per probe outcome")
            n = len(self.measured) if self.measured is not None else 0
            if any(c is not None and not 0 <= c < n for c in corr):
                raise ValueError("correspondence points outside the measured outcomes")
            object.__setattr__(self, "correspondence", corr)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "unitary", u)

    @property
    def dim_k(self) -> int:
        return self.probe.dim

    def outcome_map(self) -> Tuple[Optional[int], ...]:
        if self.measured is None:
            raise MeasurementError("no outcome correspondence: model declares no measured observable")
        if self.correspondence is not None:
            return self.correspondence
        if len(self.probe) != len(self.measured):
            raise MeasurementError("no outcome correspondence")
        return tuple(range(len(self.probe)))

    def probe_set(self, measured_index: int) -> OutcomeSet:
        """Probe outcomes that report measured outcome ``measured_index``."""
        return self.probe.subset(b for b, a in enumerate(self.outcome_map()) if a == measured_index)


def _check_rho(m: ApparatusModel, rho) -> np.ndarray:
    rho = as_operator(rho)
    if rho.shape[0] != m.dim_h:
        raise DimensionError(f"state dim {rho.shape[0]} != object dim {m.dim_h}")
    return rho


def _probe_projection(m: ApparatusModel, s: OutcomeSet) -> np.ndarray:
    return tensor(np.eye(m.dim_h), projection_of(m.probe, s))


def evolve(m: ApparatusModel, rho) -> np.ndarray:
    """Composite state ``U (rho (x) sigma) U^dag`` just after the interaction."""
    rho = _check_rho(m, rho)
    u = m.unitary
    return u @ tensor(rho, m.sigma) @ dag(u)


def apparatus_outcome_distribution(m: ApparatusModel, rho) -> np.ndarray:
    """Probe-outcome probabilities ``Tr[(I (x) E_b) U (rho (x) sigma) U^dag]``."""
    composite = evolve(m, rho)
    return np.array([np.trace(_probe_projection(m, m.probe.singleton(b)) @ composite).real
                     for b in range(len(m.probe))])


def measured_distribution(m: ApparatusModel, rho) -> np.ndarray:
    """Probe distribution pooled onto the measured observable's outcomes."""
    probe_p = apparatus_outcome_distribution(m, rho)
    out = np.zeros(len(m.measured))
    for b, a in enumerate(m.outcome_map()):
        if a is not None:
            out[a] += probe_p[b]
    return out


@dataclass(frozen=True)
class MeasuresReport:
    passed: bool
    max_violation: float
    checked: int


def measures_check(m: ApparatusModel, basis_size: Optional[int] = None) -> MeasuresReport:
    """Check that the probe statistics reproduce the measured observable's Born rule.

    The check runs over the matrix units ``|i><j|`` of the object space (the
    first ``basis_size`` of them in row-major order, all by default), which
    by linearity covers every prior state. Padding probe outcomes must carry
    zero weight.
    """
    corr = m.outcome_map()
    d = m.dim_h
    units = [(i, j) for i in range(d) for j in range(d)]
    if basis_size is not None:
        units = units[:basis_size]
    u = m.unitary
    probe_projs = [_probe_projection(m, m.probe.singleton(b)) for b in range(len(m.probe))]
    worst = 0.0
    for i, j in units:
        e = np.zeros((d, d), dtype=complex)
        e[i, j] = 1.0
        composite = u @ tensor(e, m.sigma) @ dag(u)
        pooled = np.zeros(len(m.measured), dtype=complex)
        for b, proj in enumerate(probe_projs):
            q = np.trace(proj @ composite)
            if corr[b] is None:
                worst = max(worst, abs(q))
            else:
                pooled[corr[b]] += q
        for a, proj in enumerate(m.measured.projections):
            worst = max(worst, abs(pooled[a] - proj[j, i]))
    return MeasuresReport(bool(worst <= get_policy().trace), float(worst), len(units))


def nonselective_state(m: ApparatusModel, rho) -> np.ndarray:
    """``Tr_K[U (rho (x) sigma) U^dag]``."""
    return partial_trace_probe(evolve(m, rho), m.dim_h, m.dim_k)


def conditional_state(m: ApparatusModel, s: OutcomeSet, rho) -> np.ndarray:
    """Object state conditional on the probe outcome lying in ``s``.

    ``Tr_K[(I (x) E_B(s)) U (rho (x) sigma) U^dag]`` divided by its trace.
    """
    weighted = _probe_projection(m, s) @ evolve(m, rho)
    p = np.trace(weighted).real
    if p <= get_policy().probability_floor:
        raise NullEventError(p)
    return partial_trace_probe(weighted, m.dim_h, m.dim_k) / p


def apparatus_posterior_family(m: ApparatusModel, rho) -> List[Tuple[float, Optional[np.ndarray]]]:
    """Conditional object state for every measured outcome (``None`` on null outcomes)."""
    composite = evolve(m, rho)
    floor = get_policy().probability_floor
    family = []
    for a, value in enumerate(m.measured.outcomes):
        weighted = _probe_projection(m, m.probe_set(a)) @ composite
        p = np.trace(weighted).real
        family.append((value, partial_trace_probe(weighted, m.dim_h, m.dim_k) / p
                       if p > floor else None))
    return family


def joint_distribution(m: ApparatusModel, x_obs: Observable, rho) -> np.ndarray:
    """``P[x, b] = Tr[(E^X_x (x) E^B_b) U (rho (x) sigma) U^dag]``, rows indexed by ``x``."""
    if x_obs.dim != m.dim_h:
        raise DimensionError("follow-up observable does not act on the object space")
    composite = evolve(m, rho)
    out = np.empty((len(x_obs), len(m.probe)))
    for x, ex in enumerate(x_obs.projections):
        for b, eb in enumerate(m.probe.projections):
            out[x, b] = np.trace(tensor(ex, eb) @ composite).real
    return out


def factorization_residual(m: ApparatusModel, x_obs: Observable, rho,
                           floor: Optional[float] = None) -> float:
    """Largest ``|P[x, b] - Tr[E^X_x rho_b] p_b|`` over probe outcomes with ``p_b > floor``.

    ``rho_b`` is :func:`conditional_state` for the singleton ``{b}``.
    """
    floor = get_policy().probability_floor if floor is None else floor
    joint = joint_distribution(m, x_obs, rho)
    probe_p = apparatus_outcome_distribution(m, rho)
    worst = 0.0
    for b, p in enumerate(probe_p):
        if p <= floor:
            continue
        post = conditional_state(m, m.probe.singleton(b), rho)
        for x, ex in enumerate(x_obs.projections):
            worst = max(worst, abs(joint[x, b] - np.trace(ex @ post).real * p))
    return float(worst)


def _atom_map(m: ApparatusModel, probe_indices: Sequence[int]) -> LinearMap:
    """Linear map ``rho -> Tr_K[(I (x) E) U (rho (x) sigma) U^dag]`` for a probe outcome set."""
    dh, dk = m.dim_h, m.dim_k
    evals, evecs = np.linalg.eigh(m.sigma)
    root_sigma = (evecs * np.sqrt(np.clip(evals, 0, None))) @ dag(evecs)
    e = projection_of(m.probe, m.probe.subset(probe_indices))
    a = tensor(np.eye(dh), e) @ m.unitary @ tensor(np.eye(dh), root_sigma)
    a = a.reshape(dh, dk, dh, dk)
    return LinearMap(lambda rho: np.einsum("hkil,ij,gkjl->hg", a, rho, a.conj()), dh, dh)


def extract_instrument(m: ApparatusModel) -> Instrument:
    """Operational distribution of the model as an :class:`Instrument` on the measured observable.

    Each atom is evaluated on the matrix-unit basis (its Choi matrix) and
    Kraus-decomposed. Padding probe outcomes are asserted to be null.
    """
    report = measures_check(m)
    if not report.passed:
        raise MeasurementError(f"not an A-measurement (violation {report.max_violation:.3e})")
    corr = m.outcome_map()
    dh = m.dim_h
    pad = [b for b, a in enumerate(corr) if a is None]
    if pad:
        leak = np.linalg.norm(choi_matrix(_atom_map(m, pad)))
        if leak > get_policy().sentinel_probability:
            raise MeasurementError(f"padding probe outcomes carry weight {leak:.3e}")
    atoms = []
    for a in range(len(m.measured)):
        choi = choi_matrix(_atom_map(m, [b for b, c in enumerate(corr) if c == a]))
        atoms.append(CPMap(tuple(kraus_from_choi(choi, dh, dh))))
    return Instrument(m.measured, tuple(atoms))


def _complete_unitary(v: np.ndarray, dim_k: int) -> np.ndarray:
    """Embed the isometry ``v`` (columns = images of ``|i> (x) |ready>``) in a unitary.

    The missing columns come from greedy Gram-Schmidt over the canonical
    basis, always taking the candidate with the largest residual; candidates
    whose residual norm is below ``completion_cutoff`` are never used.
    """
    big, d = v.shape
    cutoff = get_policy().completion_cutoff
    basis = np.zeros((big, big), dtype=complex)
    basis[:, :d] = v
    residual = 1.0 - np.sum(np.abs(v) ** 2, axis=1)
    for n in range(d, big):
        j = int(np.argmax(residual))
        if residual[j] < cutoff ** 2:
            raise ArithmeticError("unitary completion ran out of candidates")
        q = basis[:, :n]
        cand = -q @ q[j].conj()
        cand[j] += 1.0
        cand -= q @ (dag(q) @ cand)
        cand /= np.linalg.norm(cand)
        basis[:, n] = cand
        residual -= np.abs(cand) ** 2
        residual[j] = 0.0

    u = np.empty((big, big), dtype=complex)
    ready_cols = np.arange(d) * dim_k
    other_cols = np.setdiff1d(np.arange(big), ready_cols)
    u[:, ready_cols] = v
    u[:, other_cols] = basis[:, d:]
    return u


def dilate_instrument(ins: Instrument) -> ApparatusModel:
    """Apparatus model whose operational distribution is ``ins``.

    The probe space has a ready vector ``|0>`` (the preparation) plus one
    basis vector ``|a,k>`` per Kraus operator. The coupling maps
    ``psi (x) |0>`` to ``sum_{a,k} M_{a,k} psi (x) |a,k>`` and is completed to a
    unitary. The probe reads ``a`` on ``|a,k>``; the ready vector is a padding
    outcome placed strictly below ``min(outcomes) - 1``.
    """
    report = verify_axioms(ins)
    if not report.ok:
        raise AxiomError(f"instrument fails the axioms: {report}")
    d = ins.dim
    labels, kraus = [], []
    for a, atom in enumerate(ins.atoms):
        for k in atom.kraus:
            labels.append(a)
            kraus.append(k)
    dk = 1 + len(kraus)
    v = np.zeros((d * dk, d), dtype=complex)
    for n, k in enumerate(kraus):
        v[np.arange(d) * dk + n + 1, :] = k
    if np.linalg.norm(dag(v) @ v - np.eye(d)) > get_policy().unitary:
        raise ArithmeticError("dilation is not an isometry")

    outcomes = ins.outcomes
    sentinel = outcomes[0] - 2.0
    probe = diagonal_observable([sentinel] + [outcomes[a] for a in labels])
    sigma = np.zeros((dk, dk), dtype=complex)
    sigma[0, 0] = 1.0
    return ApparatusModel(
        dim_h=d,
        sigma=sigma,
        unitary=_complete_unitary(v, dk),
        probe=probe,
        measured=ins.observable,
        correspondence=(None,) + tuple(range(len(outcomes))),
    )


def naive_composite_state(m: ApparatusModel, s: OutcomeSet, rho) -> np.ndarray:
    """Composite state obtained by applying the projection postulate to the probe.

    ``P C P / Tr[P C]`` with ``P = I (x) E_B(s)``. This is *not* the correct
    conditional composite state; see :func:`demonstrate_non_mixture`.
    """
    proj = _probe_projection(m, s)
    sandwiched = proj @ evolve(m, rho) @ proj
    p = np.trace(sandwiched).real
    if p <= get_policy().probability_floor:
        raise NullEventError(p)
    return sandwiched / p


@dataclass(frozen=True)
class NonMixtureReport:
    distance: float
    object_residual: float
    probabilities: Tuple[float, ...]


def demonstrate_non_mixture(m: ApparatusModel, s: OutcomeSet, partition: Sequence[OutcomeSet],
                            rho) -> NonMixtureReport:
    """Compare the projected composite state for ``s`` with the mixture over a partition of ``s``.

    ``distance`` is the trace distance between the projected state for ``s``
    and the probability-weighted mixture of the projected states for the
    parts. ``object_residual`` is the same comparison for the object states of
    :func:`conditional_state`, which do mix correctly.
    """
    parts = list(partition)
    union = m.probe.empty()
    for part in parts:
        if not union.isdisjoint(part):
            raise ValueError("partition blocks overlap")
        union = union | part
    if union != s:
        raise ValueError("partition does not cover the outcome set")

    composite = evolve(m, rho)
    probs = [float(np.trace(_probe_projection(m, part) @ composite).real) for part in parts]
    floor = get_policy().probability_floor
    for p in probs:
        if p <= floor:
            raise NullEventError(p)
    total = sum(probs)

    naive_mix = sum(p * naive_composite_state(m, part, rho) for p, part in zip(probs, parts)) / total
    object_mix = sum(p * conditional_state(m, part, rho) for p, part in zip(probs, parts)) / total
    return NonMixtureReport(
        distance=trace_distance(naive_composite_state(m, s, rho), naive_mix),
        object_residual=trace_distance(conditional_state(m, s, rho), object_mix),
        probabilities=tuple(probs),
    )
