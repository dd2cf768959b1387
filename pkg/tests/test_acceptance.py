"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Thresholds are the stated ones; nothing here is loosened to make a case pass.
"""
import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from conftest import record_criterion
from qreduce import (GridSystem, apparatus_outcome_distribution, apparatus_posterior_family,
                     build_position_apparatus, choi_distance, choi_matrix,
                     controlled_posterior_instrument, dilate_instrument, extract_instrument,
                     factorization_residual, from_vector, joint_distribution, measured_distribution,
                     measures_check, momentum_nondisturbance_demo, outcome_distribution,
                     posterior_family, random_density, random_instrument, random_observable,
                     random_state_vector, random_unitary, transpose_map, trace_distance,
                     verify_axioms, ApparatusModel)
from qreduce.observable import born_probability
from qreduce.scenario import run_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _controlled_triples():
    rng = np.random.default_rng(2024)
    triples = []
    for _ in range(20):
        dim = int(rng.integers(2, 6))
        obs = random_observable(dim, int(rng.integers(2, dim + 1)), rng)
        family = [random_density(dim, rng) if rng.random() < 0.5
                  else from_vector(random_state_vector(dim, rng)) for _ in range(len(obs))]
        triples.append((obs, family, random_density(dim, rng)))
    return triples


def test_criterion_1_axioms():
    rng = np.random.default_rng(1)
    cp = add = compat = 0.0
    all_ok = True
    for i in range(50):
        dim = int(rng.integers(2, 6))
        n_out = int(rng.integers(2, min(4, dim) + 1))
        rep = verify_axioms(random_instrument(random_observable(dim, n_out, rng), rng), seed=i)
        all_ok &= rep.ok
        cp, add, compat = (max(cp, rep.cp_violation), max(add, rep.additivity_violation),
                           max(compat, rep.compat_violation))
    transpose_min = min(np.linalg.eigvalsh(choi_matrix(transpose_map(d)))[0] for d in (2, 3, 4))
    passed = all_ok and cp <= 1e-10 and add <= 1e-12 and compat <= 1e-10 and transpose_min <= -0.9
    record_criterion(1, "instrument axioms", passed,
                     f"(cp {cp:.1e}, additivity {add:.1e}, compat {compat:.1e}, "
                     f"transpose min eig {transpose_min:.2f})")
    assert passed


def test_criterion_2_controllability():
    worst_post = worst_born = 0.0
    for obs, family, rho in _controlled_triples():
        ins = controlled_posterior_instrument(obs, family)
        probs = outcome_distribution(ins, rho)
        born = [born_probability(obs, obs.singleton(a), rho) for a in range(len(obs))]
        worst_born = max(worst_born, float(np.max(np.abs(probs - born))))
        for (p, (_, post)), target in zip(zip(probs, posterior_family(ins, rho)), family):
            if p > 1e-6:
                worst_post = max(worst_post, trace_distance(post, target))
    passed = worst_post <= 1e-9 and worst_born <= 1e-10
    record_criterion(2, "controlled posteriors", passed,
                     f"(posterior {worst_post:.1e}, born {worst_born:.1e})")
    assert passed


def test_criterion_3_dilation_round_trip():
    worst_choi = worst_meas = 0.0
    for obs, family, _ in _controlled_triples():
        ins = controlled_posterior_instrument(obs, family)
        model = dilate_instrument(ins)
        worst_choi = max(worst_choi, choi_distance(extract_instrument(model), ins))
        worst_meas = max(worst_meas, measures_check(model).max_violation)
    passed = worst_choi <= 1e-9 and worst_meas <= 1e-10
    record_criterion(3, "dilation round trip", passed,
                     f"(choi {worst_choi:.1e}, measures {worst_meas:.1e})")
    assert passed


def test_criterion_4_statistical_equivalence():
    rng = np.random.default_rng(4)
    g = GridSystem(8)
    position = build_position_apparatus(g, random_state_vector(8, rng))
    dilated = dilate_instrument(extract_instrument(position))
    different = (dilated.dim_k != position.dim_k
                 or not np.allclose(dilated.unitary, position.unitary))
    worst = 0.0
    for _ in range(10):
        rho = random_density(8, rng)
        worst = max(worst, float(np.max(np.abs(apparatus_outcome_distribution(position, rho)
                                               - measured_distribution(dilated, rho)))))
        for (_, x), (_, y) in zip(apparatus_posterior_family(position, rho),
                                  apparatus_posterior_family(dilated, rho)):
            if (x is None) != (y is None):
                worst = np.inf
            elif x is not None:
                worst = max(worst, trace_distance(x, y))
    passed = different and worst <= 1e-9
    record_criterion(4, "statistical equivalence", passed,
                     f"(max deviation {worst:.1e}, probe dims {position.dim_k}/{dilated.dim_k})")
    assert passed


def test_criterion_5_position_exactness():
    rng = np.random.default_rng(5)
    worst_dist = worst_shift = worst_indep = 0.0
    for n in (2, 4, 8, 16):
        g = GridSystem(n)
        phi = random_state_vector(n, rng)
        model = build_position_apparatus(g, phi)
        targets = [from_vector(g.shift(phi, a)) for a in range(n)]
        for _ in range(10):
            psi, other = random_state_vector(n, rng), random_state_vector(n, rng)
            rho = from_vector(psi)
            dist = apparatus_outcome_distribution(model, rho)
            worst_dist = max(worst_dist, float(np.max(np.abs(dist - np.abs(psi) ** 2))))
            fam = apparatus_posterior_family(model, rho)
            fam_other = apparatus_posterior_family(model, from_vector(other))
            for a in range(n):
                x, y = fam[a][1], fam_other[a][1]
                if x is not None:
                    worst_shift = max(worst_shift, trace_distance(x, targets[a]))
                if x is not None and y is not None:
                    worst_indep = max(worst_indep, trace_distance(x, y))
    passed = worst_dist <= 1e-12 and worst_shift <= 1e-10 and worst_indep <= 1e-10
    record_criterion(5, "position model exactness", passed,
                     f"(distribution {worst_dist:.1e}, shift {worst_shift:.1e}, "
                     f"prior independence {worst_indep:.1e})")
    assert passed


def test_criterion_6_momentum_nondisturbance():
    g = GridSystem(8)
    reports = [momentum_nondisturbance_demo(g, p) for p in range(8)]
    min_fid = min(r.min_fidelity for r in reports)
    deviation = max(r.distribution_deviation for r in reports)
    contrast = max(momentum_nondisturbance_demo(g, p, prior_momentum=(1 - p) % 8).min_fidelity
                   for p in range(8))
    passed = min_fid >= 1 - 1e-10 and deviation <= 1e-12 and contrast < 1 - 0.01
    record_criterion(6, "momentum non-disturbance", passed,
                     f"(min fidelity 1-{1 - min_fid:.1e}, uniform {deviation:.1e}, "
                     f"contrast fidelity {contrast:.2f})")
    assert passed


def test_criterion_7_non_mixture_witness():
    rep = run_scenario(SCENARIOS / "non_mixture_witness.json")
    distance = rep.body["results"]["distance"]
    residual = rep.body["results"]["object_residual"]
    passed = distance > 0.01 and residual <= 1e-10
    record_criterion(7, "non-mixture witness", passed,
                     f"(distance {distance:.3f}, object residual {residual:.1e})")
    assert passed


def test_criterion_8_factorization():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(10):
        dh, dk = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        model = ApparatusModel(dh, random_density(dk, rng), random_unitary(dh * dk, rng),
                               probe=random_observable(dk, int(rng.integers(1, dk + 1)), rng))
        x_obs = random_observable(dh, int(rng.integers(1, dh + 1)), rng)
        rho = random_density(dh, rng)
        worst = max(worst, factorization_residual(model, x_obs, rho, 1e-6))
    g = GridSystem(8)
    position = build_position_apparatus(g, random_state_vector(8, rng))
    rho = random_density(8, rng)
    assert joint_distribution(position, g.position_observable(), rho).shape == (8, 8)
    worst = max(worst, factorization_residual(position, g.position_observable(), rho, 1e-6))
    passed = worst <= 1e-10
    record_criterion(8, "joint factorization", passed, f"(residual {worst:.1e})")
    assert passed


def test_criterion_9_cli_determinism(tmp_path):
    shipped = sorted(SCENARIOS.glob("*.json"))
    mismatched = [p.name for p in shipped
                  if run_scenario(p).body_json() != run_scenario(p).body_json()]
    bodies = []
    for run in ("a", "b"):
        out = tmp_path / run
        res = subprocess.run([sys.executable, "-m", "qreduce", "verify-all", str(SCENARIOS),
                              "--out-dir", str(out)], capture_output=True, text=True)
        bodies.append({p.name: json.dumps(json.loads(p.read_text())["report"], sort_keys=True)
                       for p in sorted(out.glob("*.json"))})
    passed = (not mismatched and res.returncode == 0 and bodies[0] == bodies[1]
              and len(bodies[0]) == len(shipped))
    record_criterion(9, "CLI determinism", passed,
                     f"({len(shipped)} scenarios, verify-all exit {res.returncode})")
    assert passed
