"""Experiment runner: one subcommand per acceptance suite, a JSON report per run and optional CSV scans."""
import argparse
import csv
import json
import math
import os
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import progressbar
from colorama import Fore
from loguru import logger
from tabulate import tabulate

from rigidity_lab import __version__
from rigidity_lab.barycenter import (affine_equivariance_check, containment_check, d_bar_d_point, d_bar_d_weight,
                                     hessian_bounds, random_measure, resolve_point_oracle, resolve_weight_oracle,
                                     solve)
from rigidity_lab.boundary_actions import (conjugacy_upgrade_probe, find_expansion_certificate, semiconjugacy_residual,
                                           sup_distance, uniqueness_probe, verify_certificate)
from rigidity_lab.chamber_bundle import (LEAF_TOLERANCE, a_q_basis, fiber_isometry_residual, flow_orbit, forward_face,
                                         leaf_intersection_defect, orthogonality_report, parallel_set_sample, project,
                                         random_bundle_point, random_fiber_point, retraction_non_expansion, trivialize,
                                         untrivialize)
from rigidity_lab.circle import FiniteAction, identity_map, rotation, rotation_number, trig_homeomorphism
from rigidity_lab.config import SUBCOMMAND_PARAMETERS, ExperimentConfig, build_config, load_parameter_file
from rigidity_lab.denjoy import (collapse_from_tree, denjoy_blowup, geometric_schedule, invariance_check,
                                 inverse_square_schedule, monotonicity_defect)
from rigidity_lab.equivariant_map import (build_f_tilde, equivariance_report, leaf_proximity_report, perturbed_action,
                                          tangent_tilt_report)
from rigidity_lab.errors import ConfigError
from rigidity_lab.fuchsian import H2, build_partition, genus_two_lattice, partition_report
from rigidity_lab.lie import (PSL2_SQUARED, SL, GroupElement, ParabolicData, block_pattern, boundary_angle_action,
                              cartan, exp_diagonal, flag_distance, generalized_iwasawa, iwasawa, q_minus, q_plus,
                              random_group_element, reverse_generalized_iwasawa)
from rigidity_lab.manifolds import ModelPoint, model_by_name, random_isometry
from rigidity_lab.metric_family import (FAMILY_KINDS, d_bar_d_metric, d_bar_total, graph_tilt_trend, random_instance,
                                        resolve_derivative)
from rigidity_lab.model import AssertionRecord, ReportEncoder, RunReport, at_least, at_most, flag
from rigidity_lab.quasiflat import (coarse_intersection_probe, flat_intersection, make_bilipschitz_flat,
                                    parallelism_check, product_distance_identity, shadowing_regression,
                                    standard_flat_triple)
from rigidity_lab.rho_alpha import (action_property_check, chamber_cocycle, chamber_collapse_witness,
                                    continuity_defect, kappa_arrays, random_chamber_points, standard_stabilizer)

TWO_PI = 2 * math.pi
EQUIVARIANCE_BOUND = 1e-8
RELATIVE_FLOOR = 1e-6
LEAF_TIMES = np.linspace(-2.0, 2.0, 9)
CONTINUITY_ALPHAS = (0.1, 0.05, 0.025, 0.0125)

Scan = Tuple[List[str], List[List[Any]]]
Suite = Callable[[ExperimentConfig, RunReport, np.random.Generator], Dict[str, Scan]]


def progress_bar(max_value: int, quiet: bool):
    if quiet:
        return progressbar.NullBar(max_value=max_value)
    widgets = [
        '[',
        progressbar.SimpleProgress(),
        progressbar.Bar(marker='\x1b[32m#\x1b[39m'),
        progressbar.Timer(),
        '|',
        progressbar.ETA(),
        ']'
    ]
    return progressbar.ProgressBar(widgets=widgets, max_value=max_value, redirect_stdout=True)


def relative_error(value: np.ndarray, reference: np.ndarray) -> float:
    value = np.asarray(value, dtype=float)
    reference = np.asarray(reference, dtype=float)
    return float(np.linalg.norm(value - reference) / max(float(np.linalg.norm(reference)), RELATIVE_FLOOR))


def non_increasing(values: Sequence[float], slack: float = 1e-9) -> bool:
    return all(b <= a * (1 + slack) + slack for a, b in zip(values, values[1:]))


def model_names(config: ExperimentConfig) -> List[str]:
    return [name.strip() for name in str(config.get("models")).split(",") if name.strip()]


# barycenter-suite

def barycenter_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    instances = config.get("instances")
    atoms = config.get("atoms")
    rows = []
    for name in model_names(config):
        model = model_by_name(name)
        guard = model.barycenter_guard_radius
        violations = {"q_defect": 0, "q_eigenvalues": 0, "point_derivative": 0, "containment": 0}
        worst_ratio = 0.0
        with progress_bar(instances, config.quiet) as bar:
            for k in range(instances):
                radius = float(rng.uniform(0.05, 0.45)) * guard
                center = model.random_point(rng, 1.0)
                mu = random_measure(model, rng, atoms, radius, center)
                result = solve(mu, config.tol)
                bounds = hessian_bounds(mu, result)
                violations["q_defect"] += int(bounds.q_defect > bounds.q_defect_bound + 1e-12)
                violations["q_eigenvalues"] += int(bounds.q_min_eigenvalue < 0.75 - 1e-12
                                                   or bounds.q_inverse_norm > 4.0 / 3.0 + 1e-12)
                violations["point_derivative"] += int(bounds.point_derivative_defect
                                                      > bounds.point_derivative_bound + 1e-7)
                violations["containment"] += int(not containment_check(mu, ModelPoint(model, center), radius).holds)
                if bounds.q_defect_bound > 0:
                    worst_ratio = max(worst_ratio, bounds.q_defect / bounds.q_defect_bound)
                rows.append([name, bounds.diameter, bounds.q_defect, bounds.q_defect_bound, bounds.q_min_eigenvalue,
                             bounds.q_inverse_norm, bounds.point_derivative_defect, bounds.point_derivative_bound])
                bar.update(k + 1)
        for key, count in violations.items():
            report.add(at_most(f"{name}: {key} violations", count, 0, f"{instances} instances"))
        report.results[f"{name}_worst_q_ratio"] = worst_ratio

        worst = 0.0
        for _ in range(config.get("equivariance_instances")):
            mu = random_measure(model, rng, atoms, float(rng.uniform(0.05, 0.45)) * guard)
            worst = max(worst, affine_equivariance_check(mu, random_isometry(model, rng)))
        report.add(at_most(f"{name}: isometry equivariance residual", worst, EQUIVARIANCE_BOUND))

    for kind in FAMILY_KINDS:
        violations = 0
        worst_ratio = 0.0
        for _ in range(config.get("family_instances")):
            certificate = d_bar_total(random_instance(kind, rng, config.get("family_radius"))).certificate
            violations += int(not certificate.holds)
            if certificate.budget > 0:
                worst_ratio = max(worst_ratio, certificate.lhs / certificate.budget)
        report.add(at_most(f"{kind} family: velocity bound violations", violations, 0,
                           f"worst lhs/budget {worst_ratio:.3g}"))
    trend = graph_tilt_trend(config.floats("tilt_levels"), rng, config.get("tilt_instances"))
    means = [row.mean_tilt for row in trend]
    report.add(flag("graph tilt shrinks with the diameter", non_increasing(means),
                    ", ".join(f"r={row.r}: {row.mean_tilt:.3g}" for row in trend)))
    report.results["graph_tilt"] = trend
    header = ["model", "diameter", "q_defect", "q_defect_bound", "q_min_eigenvalue", "q_inverse_norm",
              "point_derivative_defect", "point_derivative_bound"]
    tilt_rows = [[row.r, row.mean_tilt, row.max_tilt] for row in trend]
    return {"bounds": (header, rows), "graph-tilt": (["r", "mean_tilt", "max_tilt"], tilt_rows)}


# derivative-suite

def derivative_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    instances = config.get("instances")
    atoms = config.get("atoms")
    step = config.get("step")
    models = [model_by_name(name) for name in model_names(config)]
    worst = {"d_bar_d_weight": 0.0, "d_bar_d_point": 0.0, "d_bar_d_metric": 0.0, "d_bar_total": 0.0}
    rows = []
    with progress_bar(instances, config.quiet) as bar:
        for k in range(instances):
            model = models[k % len(models)]
            mu = random_measure(model, rng, atoms, config.get("radius"))
            result = solve(mu, config.tol)
            i = int(rng.integers(atoms))
            weight_error = relative_error(d_bar_d_weight(mu, i, result).frame_coords(),
                                          resolve_weight_oracle(mu, i, result, step))
            direction = rng.normal(size=model.dimension)
            direction /= np.linalg.norm(direction)
            point_error = relative_error(d_bar_d_point(mu, i, result).matrix @ direction,
                                         resolve_point_oracle(mu, i, direction, result, step))

            instance = random_instance(FAMILY_KINDS[k % len(FAMILY_KINDS)], rng, config.get("radius"))
            metric_error = relative_error(d_bar_d_metric(instance).chart,
                                          resolve_derivative(instance, freeze_measure=True))
            total_error = relative_error(d_bar_total(instance).derivative.chart, resolve_derivative(instance))

            for key, value in zip(worst, (weight_error, point_error, metric_error, total_error)):
                worst[key] = max(worst[key], value)
            rows.append([model.describe()["kind"], instance.kind, weight_error, point_error, metric_error,
                         total_error])
            bar.update(k + 1)
    for key, value in worst.items():
        report.add(at_most(f"{key} relative error", value, config.get("relative_error"), f"{instances} instances"))
    return {"errors": (["model", "family", "weight", "point", "metric", "total"], rows)}


# iwasawa-suite

def _residual(g: GroupElement, h: GroupElement) -> float:
    scale = max(1.0, max(float(np.linalg.norm(m)) for m in g.factors))
    return g.distance_to(h) / scale


def _orthogonal(k: GroupElement) -> bool:
    return all(np.allclose(m.T @ m, np.eye(len(m)), atol=1e-10) for m in k.factors)


def q_minus_shapes(rng: np.random.Generator) -> Dict[str, bool]:
    """Block shapes of N_Q, A'_Q and M_Q for Q- in SL(3), blocks of sizes (2, 1)."""
    q = q_minus()
    n = block_pattern(q, q.random_n(rng)).tolist()
    a_prime = q.random_a_prime(rng)
    zeros_a = (block_pattern(q, a_prime) == '0').tolist()
    zeros_m = (block_pattern(q, q.random_m(rng)) == '0').tolist()
    off_blocks = [[False, False, True], [False, False, True], [True, True, False]]
    diagonal = [[i != j for j in range(3)] for i in range(3)]
    n_plus = block_pattern(q_plus(), q_plus().random_n(rng)).tolist()
    return {
        "N_Q of Q-": n == [['1', '0', '*'], ['0', '1', '*'], ['0', '0', '1']],
        "A'_Q of Q-": zeros_a == diagonal and math.isclose(a_prime.factors[0][0, 0], a_prime.factors[0][1, 1],
                                                             rel_tol=1e-12),
        "M_Q of Q-": zeros_m == off_blocks,
        "N_Q of Q+": n_plus == [['1', '*', '*'], ['0', '1', '0'], ['0', '0', '1']],
    }


def iwasawa_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    elements = config.get("elements")
    bound = config.get("bound")
    cases = [
        ("SL(2)", SL, 2, [ParabolicData.minimal(SL, 2)]),
        ("SL(3)", SL, 3, [ParabolicData.minimal(SL, 3), q_minus(), q_plus()]),
        ("PSL2^2", PSL2_SQUARED, 2, [ParabolicData.minimal(PSL2_SQUARED), ParabolicData.psl2_squared({1})]),
    ]
    rows = []
    for label, group, n, parabolics in cases:
        worst = {"iwasawa": 0.0, "generalized": 0.0, "reverse": 0.0, "cartan": 0.0, "levi": 0.0}
        membership_failures = 0
        with progress_bar(elements, config.quiet) as bar:
            for k in range(elements):
                g = random_group_element(rng, group, n)
                kk, a, nn = iwasawa(g)
                worst["iwasawa"] = max(worst["iwasawa"], _residual(g, kk @ a @ nn))
                minimal = ParabolicData.minimal(group, n)
                membership_failures += int(not (_orthogonal(kk) and minimal.in_a(a) and minimal.in_n(nn)))
                for parabolic in parabolics:
                    kk, a, nn = generalized_iwasawa(g, parabolic)
                    worst["generalized"] = max(worst["generalized"], _residual(g, kk @ a @ nn))
                    membership_failures += int(not (_orthogonal(kk) and parabolic.in_a(a) and parabolic.in_n(nn)))
                    nr, ar, kr = reverse_generalized_iwasawa(g, parabolic)
                    worst["reverse"] = max(worst["reverse"], _residual(g, nr @ ar @ kr))
                    q = parabolic.random_parabolic(rng)
                    m, a, nn = parabolic.decompose(q)
                    nr, ar, mr = parabolic.decompose_reversed(q)
                    worst["levi"] = max(worst["levi"], _residual(q, m @ a @ nn), _residual(q, nr @ ar @ mr))
                    membership_failures += int(not (parabolic.in_m(m) and parabolic.in_a(a) and parabolic.in_n(nn)))
                k1, hs, k2 = cartan(g)
                worst["cartan"] = max(worst["cartan"], _residual(g, k1 @ exp_diagonal(g, hs) @ k2))
                bar.update(k + 1)
        for key, value in worst.items():
            report.add(at_most(f"{label}: {key} reconstruction", value, bound, f"{elements} elements"))
        report.add(at_most(f"{label}: membership failures", membership_failures, 0))
        rows.append([label] + list(worst.values()) + [membership_failures])
    for name, holds in q_minus_shapes(rng).items():
        report.add(flag(f"block shape of {name}", holds))
    return {"residuals": (["group", "iwasawa", "generalized", "reverse", "cartan", "levi", "membership_failures"],
                          rows)}


# chamber-suite

def chamber_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    points = config.get("points")
    times = np.linspace(0.0, config.get("horizon"), 11)
    cases = [("SL(3) minimal", ParabolicData.minimal(SL, 3)), ("Q-", q_minus()),
             ("PSL2^2 minimal", ParabolicData.minimal(PSL2_SQUARED))]
    rows = []
    for label, parabolic in cases:
        round_trip = 0.0
        coset_failures = 0
        drift = 0.0
        isometry = 0.0
        leaves = 0.0
        with progress_bar(points, config.quiet) as bar:
            for k in range(points):
                v = random_bundle_point(rng, parabolic)
                x, xi = trivialize(v)
                w = untrivialize(x, xi, parabolic)
                round_trip = max(round_trip, project(w).distance(x), flag_distance(forward_face(w), xi))
                coset_failures += int(not v.same_as(w))
                g = random_group_element(rng, parabolic.group, parabolic.n)
                isometry = max(isometry, fiber_isometry_residual(v, random_fiber_point(rng, v), g))
                if k < 100:
                    for t, _, d in flow_orbit(v, times):
                        drift = max(drift, d)
                        rows.append([label, k, t, d])
                    leaves = max(leaves, leaf_intersection_defect(v, LEAF_TIMES))
                bar.update(k + 1)
        report.add(at_most(f"{label}: trivialization round trip", round_trip, config.get("round_trip_bound")))
        report.add(at_most(f"{label}: coset round-trip failures", coset_failures, 0))
        report.add(at_most(f"{label}: face drift along the flow", drift, config.get("drift_bound")))
        report.add(at_most(f"{label}: G acts isometrically on the fibers", isometry, 1e-9))
        report.add(at_most(f"{label}: flow orbit in the stable and opposite unstable leaves", leaves, LEAF_TOLERANCE,
                           f"t in [{LEAF_TIMES[0]:g}, {LEAF_TIMES[-1]:g}]"))

        expansion = retraction_non_expansion(rng, parabolic, config.get("pairs"))
        report.add(at_most(f"{label}: retraction expansions", expansion.violations, 0,
                           f"worst ratio {expansion.worst_ratio:.6f}"))
        grid = rng.normal(size=(20, len(a_q_basis(parabolic))))
        report.add(at_most(f"{label}: parallel set fixed by the retraction",
                           parallel_set_sample(parabolic, grid).fixed_point_defect, 1e-8))
        report.results[f"{label}_orthogonality"] = orthogonality_report(parabolic)
    return {"flow": (["parabolic", "point", "t", "face_drift"], rows)}


# expansion

def expansion_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    lattice = genus_two_lattice()
    rho0 = lattice.boundary_action()
    certificate = find_expansion_certificate(rho0, config.get("lam"), config.get("max_word_length"))
    check = verify_certificate(rho0, certificate)
    report.add(flag("expansion certificate found", certificate.holds,
                    f"{len(certificate.cover)} arcs, word length <= {certificate.witness_length}"))
    report.add(flag("certificate holds on a refined grid", check.holds, f"worst ratio {check.worst_ratio:.6f}"))
    report.results["certificate"] = certificate

    rho, h = perturbed_action(lattice, config.get("perturbation"))
    copy = trig_homeomorphism(config.get("perturbation"), 1, 0.3, label="h'")
    trivial = uniqueness_probe(rho0, rho0, identity_map(), identity_map(), certificate)
    perturbed = uniqueness_probe(rho, rho0, h, copy, certificate)
    mismatch = uniqueness_probe(rho, rho0, h, trig_homeomorphism(config.get("mismatch"), 2, label="g"), certificate)
    report.add(flag("uniqueness on the unperturbed action", trivial.verdict is True))
    report.add(flag("uniqueness on the conjugated perturbation", perturbed.verdict is True,
                    f"sup distance {perturbed.sup_distance:.3g}"))
    report.add(flag("uniqueness refuses a non-semi-conjugacy", mismatch.verdict is None, mismatch.message))

    upgrade = conjugacy_upgrade_probe(rho, rho0, h, certificate)
    report.add(flag("upgrade probe finds an injective semi-conjugacy", upgrade.verdict is True,
                    f"lambda' {upgrade.expansion_margin:.4f}"))

    base = FiniteAction(dict(rho0.generators), list(rho0.relations), dict(rho0.inverse_labels), check_relations=False)
    blowup = denjoy_blowup(base, float(rng.uniform(0.0, TWO_PI)), geometric_schedule(config.get("denjoy_points")))
    collapsed = conjugacy_upgrade_probe(blowup.action, base, blowup.collapse, certificate)
    report.add(at_least("collapse witnesses on the Denjoy blow-up", collapsed.witnesses, 1))
    report.results["uniqueness"] = {"trivial": trivial, "perturbed": perturbed, "mismatch": mismatch}
    report.results["upgrade"] = {"perturbed": upgrade, "denjoy": collapsed}
    rows = [[arc.start, arc.end, ".".join(arc.word), arc.min_derivative] for arc in certificate.cover]
    return {"cover": (["start", "end", "word", "min_derivative"], rows)}


# denjoy

def denjoy_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    angle = config.get("rotation")
    base = FiniteAction({"a": rotation(angle, label="a")}, [("a", "A")], {"a": "A"})
    points = config.get("points")
    schedule = config.get("schedule")
    if schedule == "inverse-square":
        lengths = inverse_square_schedule(points, config.get("total"))
    elif schedule == "geometric":
        lengths = geometric_schedule(points)
    else:
        raise ConfigError(f"unknown schedule {schedule}; expected inverse-square or geometric")
    blowup = denjoy_blowup(base, float(rng.uniform(0.0, TWO_PI)), lengths)
    bound = config.get("residual_bound")
    report.add(at_most("blown-up relation residual", blowup.action.relation_residual(), bound))
    report.add(at_most("semi-conjugacy residual of the collapse",
                       semiconjugacy_residual(blowup.action, base, blowup.collapse), bound))
    report.add(at_most("collapse agrees with the interval tree", sup_distance(blowup.collapse,
                                                                              collapse_from_tree(blowup)), bound))
    report.add(at_most("collapse monotonicity defect", monotonicity_defect(blowup.collapse), bound))
    invariance = invariance_check(blowup, "a", config.get("iterations"))
    report.add(flag("inserted intervals are invariant", invariance.holds,
                    f"{invariance.steps_inside} steps, {invariance.numeric_agreement}/{invariance.numeric_steps} "
                    f"numeric agreement"))
    report.add(at_least("steps inside inserted intervals", invariance.steps_inside, invariance.iterations))
    begin, end = blowup.interval_bounds(0)
    inside = blowup.collapse.lift(np.array([begin + 0.25 * (end - begin), begin + 0.75 * (end - begin)]))
    report.add(at_most("collapse is constant on an inserted interval", abs(float(inside[1] - inside[0])), bound,
                       f"interval of length {end - begin:.4g}"))
    drift = abs(rotation_number(blowup.action.generators["a"]) - rotation_number(base.generators["a"]))
    report.add(at_most("rotation number preserved", drift, 5e-3))
    report.results["inserted_length"] = blowup.inserted_length
    report.results["invariance"] = invariance
    rows = [[i, blowup.points[i], blowup.lengths[i]] for i in range(min(points, 1000))]
    return {"intervals": (["index", "orbit_point", "length"], rows)}


# rho-alpha

def rho_alpha_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    trials = config.get("trials")
    bound = config.get("residual_bound")
    worst = 0.0
    for _ in range(trials):
        g = random_group_element(rng, PSL2_SQUARED)
        h = random_group_element(rng, PSL2_SQUARED)
        xi, eta, _ = (float(v[0]) for v in random_chamber_points(rng, 1))
        moved_xi = float(boundary_angle_action(h.factors[0], xi))
        moved_eta = float(boundary_angle_action(h.factors[1], eta))
        lhs = float(chamber_cocycle(g @ h, xi, eta))
        rhs = float(chamber_cocycle(g, moved_xi, moved_eta)) * float(chamber_cocycle(h, xi, eta))
        worst = max(worst, abs(lhs - rhs) / lhs)
    report.add(at_most("cocycle identity residual", worst, bound, f"{trials} triples"))

    for alpha in config.floats("alphas"):
        check = action_property_check(alpha, rng, trials)
        report.add(at_most(f"alpha={alpha}: action residual", check.residual, bound))
        report.add(at_most(f"alpha={alpha}: face displacement", check.face_residual, 0.0))

    standard = 0.0
    for _ in range(trials):
        g = random_group_element(rng, PSL2_SQUARED)
        xi, eta, theta = random_chamber_points(rng, 16)
        deformed = kappa_arrays(g, 0.0, xi, eta, theta)
        expected = (boundary_angle_action(g.factors[0], xi), boundary_angle_action(g.factors[1], eta), theta)
        standard = max(standard, max(float(np.max(np.abs(a - b))) for a, b in zip(deformed, expected)))
    report.add(at_most("alpha=0 agrees with the standard action", standard, 1e-12))

    generators = {f"s{i}": random_group_element(rng, PSL2_SQUARED) for i in range(2)}
    rows = [[alpha, continuity_defect(alpha, generators, config.get("grid"))]
            for alpha in np.linspace(0.0, 1.0, 11)]
    report.add(at_most("continuity defect at alpha=0", rows[0][1], 0.0))
    shrinking = [continuity_defect(alpha, generators, config.get("grid")) for alpha in CONTINUITY_ALPHAS]
    report.add(flag("continuity defect strictly decreasing as alpha -> 0",
                    all(b < a for a, b in zip(shrinking, shrinking[1:])),
                    ", ".join(f"{alpha:g}: {v:.4g}" for alpha, v in zip(CONTINUITY_ALPHAS, shrinking))))
    rows += [[alpha, v] for alpha, v in zip(CONTINUITY_ALPHAS, shrinking)]
    report.results["continuity"] = rows
    return {"continuity": (["alpha", "defect"], rows)}


# collapse-witness

def collapse_witness_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    gamma, xi, eta = standard_stabilizer()
    alpha = config.get("alpha")
    iterations = config.get("iterations")
    bound = config.get("limit_bound")
    thetas = config.floats("thetas")
    traces = [chamber_collapse_witness(alpha, gamma, xi, eta, theta, iterations) for theta in thetas]
    for trace, theta in zip(traces, thetas):
        report.add(at_most(f"theta0={theta}: |theta_n - limit|", trace.final_gap, bound,
                           f"cocycle {trace.cocycle:.6g}"))
        report.add(at_most(f"theta0={theta}: monotone from step", trace.monotone_from, iterations // 2))
    limits = [t.limit for t in traces]
    finals = [t.thetas[-1] for t in traces]
    report.add(at_most("seeds share the limit", max(limits) - min(limits), bound))
    report.add(at_most("seeds share the final angle", max(finals) - min(finals), 2 * bound))
    control = chamber_collapse_witness(0.0, gamma, xi, eta, thetas[0], iterations)
    report.add(at_most("alpha=0 leaves the chamber angle fixed",
                       max(abs(t - thetas[0]) for t in control.thetas), 0.0))
    report.results["traces"] = traces
    rows = [[theta] + row for trace, theta in zip(traces, thetas) for row in trace.rows()]
    return {"traces": (["theta0", "n", "theta", "xi", "eta"], rows)}


# f-tilde

def f_tilde_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    lattice = genus_two_lattice()
    report.add(at_most("octagon relator residual", lattice.relator_defect(), 1e-9, ".".join(lattice.relator)))
    partition = build_partition(lattice, config.get("chart_radius"))
    partition_check = partition_report(partition, rng, config.get("samples"))
    report.add(flag("equivariant partition of unity", partition_check.holds,
                    f"max multiplicity {partition_check.max_multiplicity}"))
    amplitudes = sorted(config.floats("amplitudes"), reverse=True)
    leaf_values, tilt_values = [], []
    rows = []
    for amplitude in amplitudes:
        rho, _ = perturbed_action(lattice, amplitude)
        f = build_f_tilde(lattice, partition, rho)
        # same samples for every amplitude
        local = np.random.default_rng(config.seed)
        equivariance = equivariance_report(f, local, config.get("samples"), config.quiet)
        report.add(at_most(f"A={amplitude}: equivariance residual", equivariance.residual,
                           config.get("residual_bound"), f"worst generator {equivariance.worst_label}"))
        leaf = leaf_proximity_report(f, float(local.uniform(0.0, TWO_PI)), H2.origin(), config.get("leaf_radius"))
        tilt = tangent_tilt_report(f, local, config.get("tilt_samples"))
        report.add(flag(f"A={amplitude}: tangent tilt within budget", tilt.within_budget,
                        f"worst slack {tilt.worst_slack:.3g}"))
        leaf_values.append(leaf.sup_distance)
        tilt_values.append(tilt.max_tilt)
        rows.append([amplitude, equivariance.residual, equivariance.max_atom_diameter,
                     equivariance.section_deviation, leaf.sup_distance, tilt.max_tilt, tilt.max_budget])
    report.add(flag("leaf proximity non-increasing as the amplitude shrinks", non_increasing(leaf_values),
                    ", ".join(f"{v:.4g}" for v in leaf_values)))
    report.add(flag("tangent tilt non-increasing as the amplitude shrinks", non_increasing(tilt_values),
                    ", ".join(f"{v:.4g}" for v in tilt_values)))
    header = ["amplitude", "equivariance_residual", "max_atom_diameter", "section_deviation", "leaf_distance",
              "max_tilt", "max_budget"]
    report.results["amplitudes"] = [dict(zip(header, row)) for row in rows]
    return {"amplitudes": (header, rows)}


# quasiflat

def quasiflat_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    window = config.get("window")
    n = config.get("n")
    shadowing = shadowing_regression(config.floats("levels"), config.seed, window, n)
    report.add(flag("fit distance at L=1 within the grid slack", shadowing.exact_at_one))
    report.add(flag("fit distance monotone in L", shadowing.monotone,
                    ", ".join(f"{r.L}: {r.hausdorff:.4g}" for r in shadowing.rows)))
    exact = make_bilipschitz_flat(1.0, config.seed, config.get("identity_window"), n)
    report.add(at_most("product-distance identity on a flat",
                       product_distance_identity(exact, rng, config.get("identity_pairs")), 1e-8))
    f1, f2, f3 = standard_flat_triple()
    parallel = parallelism_check(f1, f2, f3, window=window, n=n)
    report.add(flag("three-flat parallelism", parallel.parallel,
                    f"distance in [{parallel.inf_distance:.6f}, {parallel.sup_distance:.6f}]"))
    report.results["shadowing"] = shadowing
    report.results["parallelism"] = parallel
    rows = [[r.L, r.lipschitz_estimate, r.amplitude, r.hausdorff] for r in shadowing.rows]
    return {"shadowing": (["L", "lipschitz_estimate", "amplitude", "hausdorff"], rows)}


# coarse-intersect

def coarse_intersect_suite(config: ExperimentConfig, report: RunReport, rng: np.random.Generator) -> Dict[str, Scan]:
    f1, f2, f3 = standard_flat_triple(config.get("shift"), config.get("angle"))
    report.add(flag("flats intersect in a singular geodesic", flat_intersection(f1, f2) is not None))
    rows = []
    for label, other in (("F1 F2", f2), ("F1 F3", f3)):
        probe = coarse_intersection_probe(f1, other, config.floats("radii"), config.get("window"), config.get("n"))
        report.add(flag(f"{label}: spread ratio stable across scales", probe.stable))
        report.add(flag(f"{label}: coarse intersection within 3R at every scale", probe.holds))
        for scale in probe.scales:
            report.add(at_most(f"{label} R={scale.radius}: spread", scale.spread, 3.0 * scale.radius,
                               f"{scale.samples} samples, dimension {scale.dimension}"))
            if scale.fit_distance is not None:
                report.add(at_most(f"{label} R={scale.radius}: fitted geodesic distance", scale.fit_distance,
                                   3.0 * scale.radius))
            rows.append([label, scale.radius, scale.samples, scale.dimension, scale.spread, scale.fit_distance])
        report.results[label] = probe
    return {"scales": (["pair", "radius", "samples", "dimension", "spread", "fit_distance"], rows)}


SUITES: Dict[str, Tuple[Suite, str]] = {
    "barycenter-suite": (barycenter_suite, "Hessian and derivative bounds, containment and equivariance"),
    "derivative-suite": (derivative_suite, "barycenter derivatives against re-solve finite differences"),
    "iwasawa-suite": (iwasawa_suite, "Iwasawa, generalized Iwasawa and Cartan reconstructions, block shapes"),
    "chamber-suite": (chamber_suite, "trivialization round trip, flow invariance, retraction non-expansion"),
    "expansion": (expansion_suite, "expansion certificate, uniqueness and upgrade probes"),
    "denjoy": (denjoy_suite, "Denjoy blow-up of an irrational rotation"),
    "rho-alpha": (rho_alpha_suite, "cocycle identity and the deformed chamber actions"),
    "collapse-witness": (collapse_witness_suite, "chamber angle traces under a stabilizing element"),
    "f-tilde": (f_tilde_suite, "the equivariant map over the genus-2 surface"),
    "quasiflat": (quasiflat_suite, "flat shadowing of biLipschitz flats and parallelism"),
    "coarse-intersect": (coarse_intersect_suite, "coarse intersections of flats across scales"),
}

ALIASES = {("rho-alpha", "alphas"): ["--alpha"]}


def write_scans(config: ExperimentConfig, scans: Dict[str, Scan]) -> List[str]:
    paths = []
    for name, (header, rows) in scans.items():
        path = os.path.join(config.out, f"{config.subcommand}-seed{config.seed}-{name}.csv")
        logger.info(f"=> {path}")
        with open(path, mode='w', newline='') as file:
            writer = csv.writer(file)
            writer.writerow(header)
            writer.writerows(rows)
        paths.append(path)
    return paths


def write_report(config: ExperimentConfig, report: RunReport) -> str:
    path = os.path.join(config.out, f"{config.subcommand}-seed{config.seed}.json")
    logger.info(f"=> {path}")
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(report, f, indent=2, sort_keys=True, cls=ReportEncoder)
        f.write("\n")
    return path


def status(record: AssertionRecord) -> str:
    return f"{Fore.GREEN}PASS{Fore.RESET}" if record.holds else f"{Fore.RED}FAIL{Fore.RESET}"


def summary_table(report: RunReport) -> str:
    table = [[a.name, f"{a.value:.4g}", f"{a.bound:.4g}", status(a)] for a in report.assertions]
    return tabulate(table, tablefmt='github', headers=["assertion", "value", "bound", "status"])


def run(config: ExperimentConfig) -> RunReport:
    suite, _ = SUITES[config.subcommand]
    rng = np.random.default_rng(config.seed)
    parameters = config.resolved()
    parameters["tol"] = config.tol
    report = RunReport(config.subcommand, config.seed, __version__, parameters)
    start = time.perf_counter()
    scans = suite(config, report, rng)
    logger.info(f"{config.subcommand} finished in {time.perf_counter() - start:.1f}s")
    os.makedirs(config.out, exist_ok=True)
    write_report(config, report)
    if config.csv:
        write_scans(config, scans)
    print(summary_table(report))
    failed = [a.name for a in report.assertions if not a.holds]
    if failed:
        logger.warning(f"{len(failed)} assertion(s) failed: {', '.join(failed)}")
    return report


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("-s", "--seed",
                        help="Seed of the random generator (default: 0)",
                        type=int, default=argparse.SUPPRESS)
    parser.add_argument("-o", "--out",
                        help="Directory for the JSON report and CSV scans (default: out)",
                        type=str, default=argparse.SUPPRESS)
    parser.add_argument("-t", "--tol",
                        help="Barycenter solver tolerance (default: 1e-10)",
                        type=float, default=argparse.SUPPRESS)
    parser.add_argument("-c", "--config",
                        help="File of key=value lines with parameters; flags override it",
                        type=str)
    parser.add_argument("-q", "--quiet",
                        help="No progress bars, warnings and errors only",
                        action="store_true")
    parser.add_argument("--csv",
                        help="Also write the CSV scans",
                        action="store_true")


@logger.catch
def get_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Run one of the rigidity-lab experiment suites",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("-v", "--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="subcommand", metavar="subcommand", required=True)
    for name, (_, description) in SUITES.items():
        sub = subparsers.add_parser(name, help=description, description=description,
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        _add_common_arguments(sub)
        for key, default in SUBCOMMAND_PARAMETERS[name].items():
            flags = [f"--{key.replace('_', '-')}"] + ALIASES.get((name, key), [])
            sub.add_argument(*flags, dest=key, type=type(default), default=argparse.SUPPRESS,
                             help=f"default: {default}")
    return parser.parse_args(argv)


def config_from_arguments(args: argparse.Namespace) -> ExperimentConfig:
    values = vars(args)
    flags = {key: value for key, value in values.items()
             if key not in ("subcommand", "config", "quiet", "csv")}
    file_values = load_parameter_file(args.config) if args.config else None
    return build_config(args.subcommand, flags, file_values, args.quiet, args.csv)


@logger.catch(onerror=lambda _: sys.exit(1))
def main(argv: Optional[Sequence[str]] = None):
    args = get_arguments(argv)
    if args.quiet:
        logger.remove()
        logger.add(sys.stderr, level="WARNING")
    try:
        config = config_from_arguments(args)
    except ConfigError as e:
        logger.error(str(e))
        sys.exit(2)
    report = run(config)
    sys.exit(0 if report.passed else 1)


if __name__ == '__main__':
    main()
