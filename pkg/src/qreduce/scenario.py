"""JSON scenario files: loading, validation, execution and reporting.

A scenario file looks like::

    {
      "name": "momentum_demo_N8_p3",
      "kind": "momentum-demo",
      "seed": 0,
      "repetitions": 32,
      "tolerances": {"fidelity": 1e-10},
      "parameters": {"N": 8, "p": 3}
    }

Complex numbers are ``[re, im]`` pairs (plain reals are accepted on input),
matrices are row-major nested lists. Outcome sets are given as
``{"indices": [...]}``, ``{"values": [...]}``, ``{"interval": [lo, hi]}`` or
``"all"`` and are compiled to index subsets when the scenario is prepared.

Running a scenario yields a :class:`Report`; its ``body`` is a deterministic
function of the scenario and seed, while wall-clock data lives in
``metadata``.
"""
from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import apparatus as app
from . import instrument as inst
from .errors import QReduceError
from .observable import Observable, OutcomeSet, born_probability, diagonal_observable, from_hermitian
from .operators import dag, trace_distance
from .policy import NumericPolicy, get_policy, use_policy
from .position import (GridSystem, build_position_apparatus, momentum_nondisturbance_demo,
                       verify_translated_posteriors)
from .random_ops import (random_density, random_instrument, random_observable,
                         random_state_vector, random_unitary)
from .states import check_density, from_vector, is_normalized

__all__ = [
    "KINDS",
    "ScenarioParseError",
    "ScenarioValidationError",
    "Scenario",
    "Check",
    "Report",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "emit_distribution_table",
    "encode_complex",
]

KINDS = ("instrument-verify", "dilate", "position-demo", "momentum-demo",
         "non-mixture-demo", "joint-distribution")

# per-check thresholds; overridable through the scenario "tolerances" block
CHECK_TOLERANCES = {
    "cp": 1e-10,
    "additivity": 1e-12,
    "compatibility": 1e-10,
    "normalization": 1e-10,
    "born": 1e-10,
    "reconstruction": 1e-10,
    "posterior": 1e-9,
    "posterior_probability": 1e-6,
    "measures": 1e-10,
    "round_trip": 1e-9,
    "agreement": 1e-10,
    "sentinel": 1e-12,
    "distribution": 1e-12,
    "translation": 1e-10,
    "prior_independence": 1e-10,
    "fidelity": 1e-10,
    "uniform": 1e-12,
    "nonselective": 1e-10,
    "contrast_gap": 0.01,
    "non_mixture": 0.01,
    "mixture_identity": 1e-10,
    "factorization": 1e-10,
    "factorization_floor": 1e-6,
}


class ScenarioParseError(QReduceError):
    """File missing, unreadable or not JSON."""


class ScenarioValidationError(QReduceError):
    """Well-formed JSON that does not describe a valid scenario."""


@dataclass
class Scenario:
    name: str
    kind: str
    parameters: Dict[str, Any]
    seed: int = 0
    repetitions: int = 32
    tolerances: Dict[str, float] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    relation: str = "<="

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        if self.relation == "<=":
            return self.value <= self.threshold
        if self.relation == ">=":
            return self.value >= self.threshold
        if self.relation == "<":
            return self.value < self.threshold
        if self.relation == ">":
            return self.value > self.threshold
        raise ValueError(self.relation)

    def as_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "value": float(self.value), "relation": self.relation,
                "threshold": float(self.threshold), "passed": bool(self.passed)}


@dataclass
class Report:
    body: Dict[str, Any]
    metadata: Dict[str, Any]

    @property
    def passed(self) -> bool:
        return self.body["verdict"] == "PASS"

    @property
    def failed_checks(self) -> List[str]:
        return [c["name"] for c in self.body["checks"] if not c["passed"]]

    def body_json(self) -> str:
        return json.dumps(self.body, indent=2, allow_nan=True)

    def to_json(self) -> str:
        return json.dumps({"report": self.body, "metadata": self.metadata}, indent=2,
                          allow_nan=True) + "\n"


# encoding / decoding ----------------------------------------------------------

def encode_complex(a) -> Any:
    """Nested ``[re, im]`` representation of a complex scalar, vector or matrix."""
    a = np.asarray(a)
    if a.ndim == 0:
        z = complex(a)
        return [float(z.real), float(z.imag)]
    return [encode_complex(x) for x in a]


def _to_complex(x) -> complex:
    if isinstance(x, bool):
        raise ScenarioValidationError("booleans are not numbers")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, list) and len(x) == 2 and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in x):
        return complex(float(x[0]), float(x[1]))
    raise ScenarioValidationError(f"expected a number or [re, im] pair, got {x!r}")


def parse_vector(data, dim: Optional[int] = None) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise ScenarioValidationError("vector must be a nonempty list")
    v = np.array([_to_complex(x) for x in data])
    if dim is not None and len(v) != dim:
        raise ScenarioValidationError(f"vector has length {len(v)}, expected {dim}")
    return v


def parse_matrix(data, dim: Optional[int] = None, square: bool = True) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ScenarioValidationError("matrix must be a nonempty list of rows")
    rows = [[_to_complex(x) for x in r] for r in data]
    if len({len(r) for r in rows}) != 1:
        raise ScenarioValidationError("matrix rows have different lengths")
    m = np.array(rows)
    if square and m.shape[0] != m.shape[1]:
        raise ScenarioValidationError(f"matrix must be square, got {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ScenarioValidationError(f"matrix has dimension {m.shape[0]}, expected {dim}")
    return m


def _require(params: Dict[str, Any], key: str):
    if key not in params:
        raise ScenarioValidationError(f"missing parameter '{key}'")
    return params[key]


def _int_param(params, key, default=None, minimum=None) -> int:
    value = params.get(key, default) if default is not None else _require(params, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioValidationError(f"'{key}' must be an integer")
    if minimum is not None and value < minimum:
        raise ScenarioValidationError(f"'{key}' must be >= {minimum}")
    return value


def parse_pure(data, dim: int, rng: np.random.Generator) -> np.ndarray:
    """State vector: explicit list, or ``{"random": true}``."""
    if isinstance(data, dict) and data.get("random"):
        return random_state_vector(dim, rng)
    if isinstance(data, dict) and "basis" in data:
        v = np.zeros(dim, dtype=complex)
        idx = data["basis"]
        if not isinstance(idx, int) or not 0 <= idx < dim:
            raise ScenarioValidationError("basis index out of range")
        v[idx] = 1.0
        return v
    if isinstance(data, dict) and "vector" in data:
        data = data["vector"]
    v = parse_vector(data, dim)
    if not is_normalized(v):
        raise ScenarioValidationError(f"state vector not normalized (norm {np.linalg.norm(v):.17g})")
    return v


def parse_state(data, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Density operator from ``{"vector"|"density"|"random"|"basis"|"maximally_mixed"}``."""
    if data == "maximally_mixed" or (isinstance(data, dict) and data.get("maximally_mixed")):
        return np.eye(dim, dtype=complex) / dim
    if isinstance(data, dict) and "density" in data:
        rho = parse_matrix(data["density"], dim)
        try:
            return check_density(rho, dim)
        except QReduceError as exc:
            raise ScenarioValidationError(str(exc)) from exc
    if isinstance(data, dict) and data.get("random") and "rank" in data:
        rank = data["rank"]
        if not isinstance(rank, int) or not 1 <= rank <= dim:
            raise ScenarioValidationError("rank must be an integer in 1..dim")
        return random_density(dim, rng, rank)
    if isinstance(data, dict) and data.get("random") == "mixed":
        return random_density(dim, rng)
    return from_vector(parse_pure(data, dim, rng))


def parse_observable(data, rng: np.random.Generator, dim: Optional[int] = None) -> Observable:
    if not isinstance(data, dict):
        raise ScenarioValidationError("observable must be an object")
    try:
        if "diagonal" in data:
            values = data["diagonal"]
            if not isinstance(values, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                raise ScenarioValidationError("diagonal must be a list of reals")
            obs = diagonal_observable(values)
        elif "matrix" in data:
            obs = from_hermitian(parse_matrix(data["matrix"], dim))
        elif "random" in data:
            desc = data["random"]
            d = _int_param(desc, "dim", minimum=1)
            n = _int_param(desc, "outcomes", minimum=1)
            obs = random_observable(d, n, rng)
        else:
            raise ScenarioValidationError("observable needs 'diagonal', 'matrix' or 'random'")
    except ScenarioValidationError:
        raise
    except (QReduceError, ValueError) as exc:
        raise ScenarioValidationError(f"invalid observable: {exc}") from exc
    if dim is not None and obs.dim != dim:
        raise ScenarioValidationError(f"observable acts on dimension {obs.dim}, expected {dim}")
    return obs


def parse_instrument(data, obs: Observable, rng: np.random.Generator) -> inst.Instrument:
    if not isinstance(data, dict):
        raise ScenarioValidationError("instrument must be an object")
    kind = data.get("type")
    try:
        if kind == "von-neumann":
            return inst.von_neumann_instrument(obs)
        if kind == "kraus":
            atoms = _require(data, "atoms")
            if not isinstance(atoms, list) or len(atoms) != len(obs):
                raise ScenarioValidationError("need one Kraus list per outcome")
            return inst.Instrument(obs, tuple(
                inst.CPMap(tuple(parse_matrix(k, obs.dim) for k in ks)) for ks in atoms))
        if kind == "controlled-posterior":
            family = _require(data, "family")
            if not isinstance(family, list) or len(family) != len(obs):
                raise ScenarioValidationError("need one posterior state per outcome")
            return inst.controlled_posterior_instrument(
                obs, [parse_state(f, obs.dim, rng) for f in family])
        if kind == "random":
            return random_instrument(obs, rng, _int_param(data, "max_kraus", 3, minimum=1))
    except ScenarioValidationError:
        raise
    except (QReduceError, ValueError) as exc:
        raise ScenarioValidationError(f"invalid instrument: {exc}") from exc
    raise ScenarioValidationError(f"unknown instrument type {kind!r}")


def parse_outcome_set(data, obs: Observable) -> OutcomeSet:
    try:
        if data == "all":
            return obs.full()
        if isinstance(data, dict) and "indices" in data:
            return obs.subset(data["indices"])
        if isinstance(data, dict) and "values" in data:
            return obs.values(data["values"])
        if isinstance(data, dict) and "interval" in data:
            lo, hi = data["interval"]
            lo = -np.inf if lo is None else float(lo)
            hi = np.inf if hi is None else float(hi)
            return obs.interval(lo, hi)
    except (IndexError, ValueError, TypeError) as exc:
        raise ScenarioValidationError(f"invalid outcome set: {exc}") from exc
    raise ScenarioValidationError(f"cannot read outcome set {data!r}")


# loading ------------------------------------------------------------------------

def parse_scenario(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioValidationError("scenario must be a JSON object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ScenarioValidationError(f"unknown scenario kind {kind!r}")
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise ScenarioValidationError("'parameters' must be an object")
    seed = _int_param(doc, "seed", 0, minimum=0)
    reps = _int_param(doc, "repetitions", 32, minimum=1)
    tolerances = doc.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ScenarioValidationError("'tolerances' must be an object")
    policy_fields = set(NumericPolicy.__dataclass_fields__)
    for key, value in tolerances.items():
        if key not in CHECK_TOLERANCES and key not in policy_fields:
            raise ScenarioValidationError(f"unknown tolerance {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise ScenarioValidationError(f"tolerance {key!r} must be a nonnegative number")
    name = doc.get("name", kind)
    if not isinstance(name, str):
        raise ScenarioValidationError("'name' must be a string")
    return Scenario(name=name, kind=kind, parameters=params, seed=seed, repetitions=reps,
                    tolerances=dict(tolerances), raw=doc)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
        doc = json.loads(text)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    return parse_scenario(doc)


# runners ------------------------------------------------------------------------
# Each kind has a prepare step (input decoding; failures are validation errors)
# and an execute step returning (results, checks, distribution).

class _Ctx:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.rng = np.random.default_rng(scenario.seed)
        self.tol = dict(CHECK_TOLERANCES)
        self.tol.update({k: v for k, v in scenario.tolerances.items() if k in CHECK_TOLERANCES})
        self.checks: List[Check] = []

    def check(self, name: str, value: float, tol_key: str, relation: str = "<="):
        self.checks.append(Check(name, float(value), self.tol[tol_key], relation))


def _priors(params, dim: int, ctx: _Ctx) -> List[np.ndarray]:
    if "priors" in params:
        priors = params["priors"]
        if not isinstance(priors, list) or not priors:
            raise ScenarioValidationError("'priors' must be a nonempty list")
        return [parse_state(p, dim, ctx.rng) for p in priors]
    return [random_density(dim, ctx.rng) for _ in range(ctx.scenario.repetitions)]


def _axiom_checks(ctx: _Ctx, ins: inst.Instrument) -> Dict[str, Any]:
    rep = inst.verify_axioms(ins, seed=ctx.scenario.seed, repetitions=ctx.scenario.repetitions)
    ctx.check("cp_min_choi_eigenvalue", rep.cp_violation, "cp")
    ctx.check("additivity_residual", rep.additivity_violation, "additivity")
    ctx.check("compatibility_residual", rep.compat_violation, "compatibility")
    return {"cp_violation": rep.cp_violation, "additivity_violation": rep.additivity_violation,
            "compat_violation": rep.compat_violation}


def _prepare_instrument(params, ctx):
    obs = parse_observable(_require(params, "observable"), ctx.rng)
    desc = _require(params, "instrument")
    family = None
    if isinstance(desc, dict) and desc.get("type") == "controlled-posterior":
        family = _require(desc, "family")
        if not isinstance(family, list) or len(family) != len(obs):
            raise ScenarioValidationError("need one posterior state per outcome")
        family = [parse_state(f, obs.dim, ctx.rng) for f in family]
        ins = inst.controlled_posterior_instrument(obs, family)
    else:
        ins = parse_instrument(desc, obs, ctx.rng)
    priors = _priors(params, obs.dim, ctx)
    return {"obs": obs, "ins": ins, "priors": priors, "family": family}


def _execute_instrument_verify(p, ctx):
    obs, ins, priors = p["obs"], p["ins"], p["priors"]
    results = {"outcomes": list(obs.outcomes), "axioms": _axiom_checks(ctx, ins)}
    born_err = norm_err = recon_err = post_err = 0.0
    distributions = []
    floor = ctx.tol["posterior_probability"]
    targets = p["family"]
    for rho in priors:
        dist = inst.outcome_distribution(ins, rho)
        distributions.append(dist)
        born = np.array([born_probability(obs, obs.singleton(a), rho) for a in range(len(obs))])
        born_err = max(born_err, float(np.max(np.abs(dist - born))))
        norm_err = max(norm_err, abs(float(dist.sum()) - 1.0))
        family = inst.posterior_family(ins, rho)
        recon = sum((pa * st for pa, (_, st) in zip(dist, family) if st is not None),
                    np.zeros_like(rho))
        recon_err = max(recon_err, float(np.linalg.norm(recon - inst.apply(ins, obs.full(), rho))))
        if targets is not None:
            for a, (_, st) in enumerate(family):
                if st is not None and dist[a] > floor:
                    post_err = max(post_err, trace_distance(st, targets[a]))
    ctx.check("born_agreement", born_err, "born")
    ctx.check("normalization", norm_err, "normalization")
    ctx.check("posterior_reconstruction", recon_err, "reconstruction")
    if targets is not None:
        ctx.check("controlled_posterior_distance", post_err, "posterior")
        results["prescribed_posteriors"] = [encode_complex(t) for t in targets]
    results["distributions"] = [[float(x) for x in d] for d in distributions]
    return results, list(zip(obs.outcomes, distributions[0]))


def _execute_dilate(p, ctx):
    obs, ins, priors = p["obs"], p["ins"], p["priors"]
    results = {"outcomes": list(obs.outcomes), "axioms": _axiom_checks(ctx, ins)}
    model = app.dilate_instrument(ins)
    mc = app.measures_check(model)
    ctx.check("measures_check", mc.max_violation, "measures")
    extracted = app.extract_instrument(model)
    ctx.check("round_trip_choi_distance", inst.choi_distance(extracted, ins), "round_trip")
    agree = cond = sentinel = 0.0
    floor = get_policy().probability_floor
    for rho in priors:
        probe_p = app.apparatus_outcome_distribution(model, rho)
        sentinel = max(sentinel, float(sum(abs(probe_p[b]) for b, a in
                                           enumerate(model.outcome_map()) if a is None)))
        dist = inst.outcome_distribution(ins, rho)
        agree = max(agree, float(np.max(np.abs(app.measured_distribution(model, rho) - dist))))
        for a in range(len(obs)):
            if dist[a] > floor:
                lhs = app.conditional_state(model, model.probe_set(a), rho)
                rhs = inst.selective_state(ins, obs.singleton(a), rho)
                cond = max(cond, trace_distance(lhs, rhs))
    ctx.check("distribution_agreement", agree, "agreement")
    ctx.check("posterior_agreement", cond, "agreement")
    ctx.check("sentinel_probability", sentinel, "sentinel")
    results.update({
        "probe_dim": model.dim_k,
        "probe_outcomes": list(model.probe.outcomes),
        "correspondence": list(model.correspondence),
        "coupling_unitary_residual": float(np.linalg.norm(
            dag(model.unitary) @ model.unitary - np.eye(model.unitary.shape[0]))),
    })
    return results, list(zip(obs.outcomes, inst.outcome_distribution(ins, priors[0])))


def _prepare_position(params, ctx):
    g = GridSystem(_int_param(params, "N", minimum=2))
    phi = parse_pure(params.get("phi", {"random": True}), g.n, ctx.rng)
    rho = parse_state(params.get("prior", {"random": True}), g.n, ctx.rng)
    other = random_density(g.n, ctx.rng)
    return {"grid": g, "phi": phi, "rho": rho, "other": other}


def _execute_position(p, ctx):
    g, phi, rho, other = p["grid"], p["phi"], p["rho"], p["other"]
    model = build_position_apparatus(g, phi)
    ctx.check("measures_check", app.measures_check(model).max_violation, "measures")
    dist = app.apparatus_outcome_distribution(model, rho)
    ctx.check("distribution_vs_position", float(np.max(np.abs(dist - np.diag(rho).real))),
              "distribution")
    tr = verify_translated_posteriors(g, phi, rho)
    ctx.check("translated_posterior_distance", tr.max_distance, "translation")

    fam_a = app.apparatus_posterior_family(model, rho)
    fam_b = app.apparatus_posterior_family(model, other)
    indep = max((trace_distance(x, y) for (_, x), (_, y) in zip(fam_a, fam_b)
                 if x is not None and y is not None), default=0.0)
    ctx.check("prior_independence", indep, "prior_independence")

    ins = app.extract_instrument(model)
    fam_i = inst.posterior_family(ins, rho)
    cross = max((trace_distance(x, y) for (_, x), (_, y) in zip(fam_a, fam_i)
                 if x is not None and y is not None), default=0.0)
    ctx.check("instrument_posterior_agreement", cross, "agreement")

    results = {
        "N": g.n,
        "phi": encode_complex(phi),
        "probe_preparation": encode_complex(g.reflect(phi)),
        "outcome_distribution": [float(x) for x in dist],
        "posterior_distances": [None if d is None else float(d) for d in tr.distances],
        "nonselective_state": encode_complex(app.nonselective_state(model, rho)),
    }
    return results, list(zip(model.probe.outcomes, dist))


def _prepare_momentum(params, ctx):
    g = GridSystem(_int_param(params, "N", minimum=2))
    pm = _int_param(params, "p")
    if not 0 <= pm < g.n:
        raise ScenarioValidationError(f"momentum index {pm} outside 0..{g.n - 1}")
    contrast = params.get("contrast_momentum")
    if contrast is not None:
        if isinstance(contrast, bool) or not isinstance(contrast, int):
            raise ScenarioValidationError("'contrast_momentum' must be an integer")
        if contrast % g.n == (-pm) % g.n:
            raise ScenarioValidationError("contrast momentum must differ from -p")
    return {"grid": g, "p": pm, "contrast": contrast}


def _execute_momentum(p, ctx):
    g, pm = p["grid"], p["p"]
    rep = momentum_nondisturbance_demo(g, pm, fidelity_tol=ctx.tol["fidelity"],
                                       uniform_tol=ctx.tol["uniform"],
                                       state_tol=ctx.tol["nonselective"])
    ctx.check("fidelity_deficit", 1.0 - rep.min_fidelity, "fidelity")
    ctx.check("uniform_deviation", rep.distribution_deviation, "uniform")
    ctx.check("nonselective_distance", rep.nonselective_distance, "nonselective")
    results = {
        "N": g.n, "p": pm, "prior_momentum": rep.prior_momentum,
        "fidelities": list(rep.fidelities),
        "outcome_distribution": list(rep.distribution),
    }
    if p["contrast"] is not None:
        c = momentum_nondisturbance_demo(g, pm, prior_momentum=p["contrast"])
        ctx.check("contrast_fidelity_gap", 1.0 - c.min_fidelity, "contrast_gap", ">")
        results["contrast"] = {"prior_momentum": c.prior_momentum,
                               "fidelities": list(c.fidelities)}
    return results, list(zip(range(g.n), rep.distribution))


def _prepare_non_mixture(params, ctx):
    base = _prepare_position(params, ctx)
    model = build_position_apparatus(base["grid"], base["phi"])
    s = parse_outcome_set(params.get("set", "all"), model.probe)
    parts = params.get("partition")
    if not isinstance(parts, list) or len(parts) != 2:
        raise ScenarioValidationError("'partition' must list two outcome sets")
    partition = [parse_outcome_set(x, model.probe) for x in parts]
    if not partition[0].isdisjoint(partition[1]) or (partition[0] | partition[1]) != s:
        raise ScenarioValidationError("partition blocks must be disjoint and cover the set")
    base.update(model=model, s=s, partition=partition)
    return base


def _execute_non_mixture(p, ctx):
    model, rho = p["model"], p["rho"]
    rep = app.demonstrate_non_mixture(model, p["s"], p["partition"], rho)
    ctx.check("naive_state_mixture_distance", rep.distance, "non_mixture", ">")
    ctx.check("object_state_mixture_residual", rep.object_residual, "mixture_identity")
    dist = app.apparatus_outcome_distribution(model, rho)
    results = {
        "N": p["grid"].n,
        "set": list(p["s"].indices),
        "partition": [list(x.indices) for x in p["partition"]],
        "part_probabilities": list(rep.probabilities),
        "distance": rep.distance,
        "object_residual": rep.object_residual,
    }
    return results, list(zip(model.probe.outcomes, dist))


def _prepare_joint(params, ctx):
    desc = _require(params, "model")
    if not isinstance(desc, dict):
        raise ScenarioValidationError("'model' must be an object")
    kind = desc.get("type")
    if kind == "position":
        g = GridSystem(_int_param(desc, "N", minimum=2))
        phi = parse_pure(desc.get("phi", {"random": True}), g.n, ctx.rng)
        model = build_position_apparatus(g, phi)
        x_obs = g.position_observable()
    elif kind == "random":
        dh = _int_param(desc, "dim_h", minimum=1)
        dk = _int_param(desc, "dim_k", minimum=1)
        model = app.ApparatusModel(
            dim_h=dh,
            sigma=random_density(dk, ctx.rng),
            unitary=random_unitary(dh * dk, ctx.rng),
            probe=random_observable(dk, int(ctx.rng.integers(1, dk + 1)), ctx.rng),
        )
        x_obs = random_observable(dh, int(ctx.rng.integers(1, dh + 1)), ctx.rng)
    else:
        raise ScenarioValidationError(f"unknown model type {kind!r}")
    if "x_observable" in params:
        x_obs = parse_observable(params["x_observable"], ctx.rng, model.dim_h)
    rho = parse_state(params.get("prior", {"random": "mixed"}), model.dim_h, ctx.rng)
    return {"model": model, "x_obs": x_obs, "rho": rho}


def _execute_joint(p, ctx):
    model, x_obs, rho = p["model"], p["x_obs"], p["rho"]
    joint = app.joint_distribution(model, x_obs, rho)
    probe_p = app.apparatus_outcome_distribution(model, rho)
    ctx.check("joint_normalization", abs(joint.sum() - 1.0), "normalization")
    ctx.check("marginal_agreement", float(np.max(np.abs(joint.sum(axis=0) - probe_p))), "agreement")
    ctx.check("joint_nonnegative", max(0.0, -float(joint.min())), "agreement")
    ctx.check("factorization_residual",
              app.factorization_residual(model, x_obs, rho, ctx.tol["factorization_floor"]),
              "factorization")
    results = {
        "x_outcomes": list(x_obs.outcomes),
        "probe_outcomes": list(model.probe.outcomes),
        "joint": [[float(v) for v in row] for row in joint],
    }
    return results, list(zip(model.probe.outcomes, probe_p))


_RUNNERS: Dict[str, Tuple[Callable, Callable]] = {
    "instrument-verify": (_prepare_instrument, _execute_instrument_verify),
    "dilate": (_prepare_instrument, _execute_dilate),
    "position-demo": (_prepare_position, _execute_position),
    "momentum-demo": (_prepare_momentum, _execute_momentum),
    "non-mixture-demo": (_prepare_non_mixture, _execute_non_mixture),
    "joint-distribution": (_prepare_joint, _execute_joint),
}


def run_scenario(scenario, seed: Optional[int] = None) -> Report:
    """Execute a scenario (a :class:`Scenario` or a path) and build its report.

    Raises :class:`ScenarioParseError` / :class:`ScenarioValidationError` for
    bad input. Numerical failures, including library errors raised while
    executing, are reported as failing checks, never as exceptions.
    """
    source = None
    if not isinstance(scenario, Scenario):
        source = str(scenario)
        scenario = load_scenario(scenario)
    if seed is not None:
        if seed < 0:
            raise ScenarioValidationError("seed must be nonnegative")
        scenario.seed = seed

    overrides = {k: v for k, v in scenario.tolerances.items()
                 if k in NumericPolicy.__dataclass_fields__}
    ctx = _Ctx(scenario)
    prepare, execute = _RUNNERS[scenario.kind]
    with use_policy(**overrides):
        try:
            prepared = prepare(scenario.parameters, ctx)
        except ScenarioValidationError:
            raise
        except (QReduceError, ValueError, TypeError, KeyError, IndexError) as exc:
            raise ScenarioValidationError(f"{type(exc).__name__}: {exc}") from exc
        error = None
        try:
            results, distribution = execute(prepared, ctx)
        except (QReduceError, ArithmeticError, ValueError) as exc:
            results, distribution = {}, []
            error = f"{type(exc).__name__}: {exc}"

    checks = [c.as_dict() for c in ctx.checks]
    verdict = "PASS" if error is None and checks and all(c["passed"] for c in checks) else "FAIL"
    body = {
        "scenario": scenario.name,
        "kind": scenario.kind,
        "seed": scenario.seed,
        "repetitions": scenario.repetitions,
        "inputs": scenario.parameters,
        "tolerances": dict(sorted(ctx.tol.items())),
        "results": _jsonable(results),
        "distribution": [{"outcome": float(a), "probability": float(pr)} for a, pr in distribution],
        "checks": checks,
        "error": error,
        "verdict": verdict,
    }
    from . import __version__
    metadata = {
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "tool": f"qreduce {__version__}",
        "source": source,
    }
    return Report(body, metadata)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _fmt(x: float) -> str:
    return format(float(x), "#.17g")


def emit_distribution_table(report: Report) -> str:
    """Tab-separated ``outcome, probability, cumulative`` rows, one per outcome."""
    rows = ["outcome\tprobability\tcumulative"]
    cumulative = 0.0
    for entry in report.body["distribution"]:
        cumulative += entry["probability"]
        rows.append("\t".join((_fmt(entry["outcome"]), _fmt(entry["probability"]),
                               _fmt(cumulative))))
    return "\n".join(rows) + "\n"
