"""Acceptance suite: one test per release criterion, one printed line each.

Every test emits "[PASS] name: details" (visible under pytest -s) and the
pytest -v status line doubles as the per-criterion pass/fail record. Constants
come from the committed calibration fixture, not the hand-tuned per-module
defaults. Monte-Carlo thresholds were measured at the frozen seeds before
being committed; see the repository notes for the measured margins.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import constants_from_fixture, dyadic, population_phi, random_model
from efronci import (
    DiscreteAtoms,
    DiscretePrior,
    EfronModel,
    ExperimentConfig,
    PointMass,
    SampleSet,
    chi2_moment_bound,
    chi2_quadrature,
    ci_known_variance,
    ci_unknown_variance,
    disk_distance,
    gaussian_raw_moments,
    grid_known,
    grid_unknown,
    hankel_dets,
    matching_priors_known,
    order3_residuals,
    prior_moments,
    quadratic_gap_lb,
    quartic_gap_check,
    run_experiment,
    sample,
    toeplitz_psd_check,
    two_point_instance_unknown,
    upsilon_known,
    upsilon_unknown,
)
from efronci.hard_instances import hankel_closed_form


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", flush=True)
    assert ok, f"{name}: {detail}"


# --- certificate soundness ---------------------------------------------------


def test_genuine_cf_certificates_stay_inside_unit_disk(acceptance_fixture):
    """1000 random models: population residuals never breach either order."""
    known = constants_from_fixture(acceptance_fixture, "known")
    unknown = constants_from_fixture(acceptance_fixture, "unknown")
    kappa_known = known.kappa_for("known")
    kappa_unknown = unknown.kappa_for("unknown")
    rng = np.random.default_rng(2401)
    start = time.monotonic()
    worst1 = -math.inf
    worst2 = -math.inf
    for _ in range(1000):
        model = random_model(rng, eps_max=1.0 / 3.0)
        phi = population_phi(model)
        for t in grid_known(model.sigma2, kappa_known, 4096).frequencies:
            v = abs(upsilon_known(phi(t), t, model.theta, model.sigma2))
            worst1 = max(worst1, v)
        for t in grid_unknown(model.sigma2, kappa_unknown, 4096).frequencies:
            u1 = upsilon_unknown(phi(t), t, model.theta, model.sigma2)
            u2 = upsilon_unknown(phi(2.0 * t), 2.0 * t, model.theta, model.sigma2)
            v = abs(u1 * u1 - u2) + abs(u1) ** 2
            worst2 = max(worst2, v)
    elapsed = time.monotonic() - start
    ok = worst1 <= 1.0 + 1e-12 and worst2 <= 1.0 + 1e-12 and elapsed < 60.0
    _report(
        "cf-certificates",
        ok,
        f"max order-1 {worst1:.15f}, max order-2 {worst2:.15f}, {elapsed:.1f}s",
    )


def test_gap_lemma_lower_bounds_hold_under_brute_force():
    """1e5 random tuples per lemma: exact separation minus bound >= -1e-10."""
    rng = np.random.default_rng(2402)
    worst_quad = math.inf
    for _ in range(100_000):
        b = float(rng.uniform(-math.pi, math.pi))
        eps = float(rng.uniform(0.0, 0.49))
        exact = (
            math.sqrt(1.0 - 4.0 * (1.0 - eps) * math.cos(b) + 4.0 * (1.0 - eps) ** 2)
            - 2.0 * eps
        )
        worst_quad = min(worst_quad, exact - quadratic_gap_lb(b, eps))
    worst_quart = math.inf
    for _ in range(100_000):
        t = float(rng.uniform(0.05, 2.0))
        r = float(rng.uniform(0.0, 1.0)) * math.pi / t
        lam = float(rng.uniform(0.05, 4.0))
        sigma2 = float(rng.uniform(0.05, 4.0))
        lhs, bound = quartic_gap_check(t, r, lam, sigma2)
        worst_quart = min(worst_quart, lhs - bound)
    ok = worst_quad >= -1e-10 and worst_quart >= -1e-10
    _report(
        "gap-lemmas",
        ok,
        f"min quadratic margin {worst_quad:.3e}, min quartic margin {worst_quart:.3e}",
    )


def test_toeplitz_psd_holds_for_cfs_and_rejects_witness(acceptance_fixture):
    """100 random models pass every T_m test; a non-CF triple fails hard."""
    known = constants_from_fixture(acceptance_fixture, "known")
    kappa = known.kappa_for("known")
    rng = np.random.default_rng(2403)
    worst_eig = math.inf
    worst_resid = math.inf
    for _ in range(100):
        model = random_model(rng, eps_max=1.0 / 3.0)
        phi = population_phi(model)
        for t in grid_known(model.sigma2, kappa, 1024).frequencies:
            z = [phi(k * t) for k in range(6)]
            for m in range(1, 6):
                passed, min_eig = toeplitz_psd_check(z[: m + 1], m)
                worst_eig = min(worst_eig, min_eig + 1e-10 * (m + 1))
                assert passed
            worst_resid = min(worst_resid, *order3_residuals(z[1], z[2], z[3]))
    bad_passed, bad_eig = toeplitz_psd_check((1.0, 0.9, -0.5), 2)
    bad_resid = order3_residuals(0.9, -0.5, 0.0)
    ok = (
        worst_eig >= 0.0
        and worst_resid >= -1e-10
        and not bad_passed
        and bad_eig < -0.1
        and min(bad_resid) < -0.1
    )
    _report(
        "toeplitz-psd",
        ok,
        f"slack past tolerance {worst_eig:.3e}, min residual {worst_resid:.3e}, "
        f"witness eig {bad_eig:.3f}",
    )


# --- interval performance ----------------------------------------------------


def test_known_variance_coverage_under_point_mass(acceptance_fixture):
    """n=4096, eps in {0, 0.05, 0.2}, PointMass(50): coverage >= 0.86 per cell."""
    known = constants_from_fixture(acceptance_fixture, "known")
    config = ExperimentConfig(
        mode="known",
        n_list=(4096,),
        eps_list=(0.0, 0.05, 0.2),
        adversaries=(PointMass(50.0),),
        trials=500,
        delta=0.1,
        eps_max=0.2,
        constants=known,
        master_seed=2024,
    )
    results = run_experiment(config, workers=1)
    rates = {r.eps: r.coverage_rate for r in results}
    ok = all(rate >= 0.86 for rate in rates.values())
    _report(
        "known-coverage",
        ok,
        ", ".join(f"eps={e}: {r:.3f}" for e, r in sorted(rates.items())),
    )


def test_unknown_variance_coverage_under_point_mass(acceptance_fixture):
    """n=8192, eps in {0, 0.1}: coverage >= 0.9 - 3 * MC stderr per cell."""
    unknown = constants_from_fixture(acceptance_fixture, "unknown")
    config = ExperimentConfig(
        mode="unknown",
        n_list=(8192,),
        eps_list=(0.0, 0.1),
        adversaries=(PointMass(50.0),),
        trials=300,
        delta=0.1,
        eps_max=1.0 / 3.0,
        constants=unknown,
        master_seed=2024,
    )
    results = run_experiment(config, workers=1)
    ok = all(r.coverage_rate >= 0.9 - 3.0 * r.mc_stderr for r in results)
    _report(
        "unknown-coverage",
        ok,
        ", ".join(
            f"eps={r.eps}: {r.coverage_rate:.3f} (stderr {r.mc_stderr:.4f})"
            for r in results
        ),
    )


def _median_lengths(mode: str, n_list, constants, trials: int = 300):
    model = EfronModel(theta=0.3, sigma2=1.0, eps=0.0, adversary=PointMass(0.0))
    medians = []
    for n in n_list:
        lengths = []
        for i in range(trials):
            s = sample(model, n, seed=11000 + i, stream=(n,))
            if mode == "known":
                out = ci_known_variance(s, 1.0, constants, detail=False)
            else:
                out = ci_unknown_variance(s, constants, detail=False)
            if not out.interval.empty:
                lengths.append(out.interval.length)
        medians.append(float(np.median(lengths)))
    return medians


def _log_log_slope(n_list, medians) -> float:
    return float(np.polyfit(np.log(np.array(n_list)), np.log(np.array(medians)), 1)[0])


def test_rate_exponents_match_theory(acceptance_fixture):
    """Median length shrinks like n^-1/4 (known) and n^-1/8 (unknown)."""
    known = constants_from_fixture(acceptance_fixture, "known")
    unknown = constants_from_fixture(acceptance_fixture, "unknown")
    n_known = (256, 1024, 4096, 16384, 65536)
    slope_known = _log_log_slope(n_known, _median_lengths("known", n_known, known))
    n_unknown = (1024, 4096, 16384, 65536)
    slope_unknown = _log_log_slope(
        n_unknown, _median_lengths("unknown", n_unknown, unknown)
    )
    ok = abs(slope_known - (-0.25)) <= 0.08 and abs(slope_unknown - (-0.125)) <= 0.06
    _report(
        "rate-exponents",
        ok,
        f"known slope {slope_known:.4f} (target -0.25 +/- 0.08), "
        f"unknown slope {slope_unknown:.4f} (target -0.125 +/- 0.06)",
    )


def test_adaptivity_gap_between_clean_and_saturated_contamination(acceptance_fixture):
    """Median length at eps = eps_max is >= 1.5x the clean median (known mode)."""
    known = constants_from_fixture(acceptance_fixture, "known")
    atom = acceptance_fixture["adaptivity_atom_over_sigma"]
    config = ExperimentConfig(
        mode="known",
        n_list=(16384,),
        eps_list=(0.0, 0.2),
        adversaries=(DiscreteAtoms(((-atom, 0.5), (atom, 0.5))),),
        trials=300,
        delta=0.1,
        eps_max=0.2,
        constants=known,
        master_seed=17,
    )
    clean, dirty = run_experiment(config, workers=1)
    ratio = dirty.median_length / clean.median_length
    _report(
        "adaptivity-gap",
        ratio >= 1.5,
        f"clean median {clean.median_length:.4f}, dirty {dirty.median_length:.4f}, "
        f"ratio {ratio:.3f}",
    )


# --- lower-bound instances ---------------------------------------------------


def test_matching_priors_agree_through_order_k_plus_one():
    """K in {8, 16}: moments 0..K+1 match to 1e-8 rel, masses concentrate."""
    worst = 0.0
    for K in (8, 16):
        tau = math.e * math.sqrt(K)
        for eps in (0.05, 0.2):
            nu0, nu1 = matching_priors_known(0.25, eps, K, tau)
            m0 = prior_moments(nu0, K + 1)
            m1 = prior_moments(nu1, K + 1)
            for a, b in zip(m0, m1):
                worst = max(worst, abs(a - b) / max(1.0, abs(a)))
            assert nu0.mass_at(0.0) >= 1.0 - 0.25
            assert max(nu1.weights) >= 1.0 - eps
    _report(
        "matching-priors",
        worst <= 1e-8,
        f"max relative moment gap {worst:.3e} across K in (8, 16)",
    )


def test_two_point_instance_traps_third_moment():
    """Contaminated point mass matches N(1, 7/3) through order 3, not order 4."""
    mu0, mean, var = two_point_instance_unknown(1.0 / 3.0)
    gauss = gaussian_raw_moments(mean, var, 4)
    mine = prior_moments(mu0, 4)
    gaps = [abs(a - b) / max(1.0, abs(b)) for a, b in zip(mine, gauss)]
    h2_ok = True
    h2_detail = math.inf
    for s2 in (0.5, 1.0, 7.0 / 3.0, 4.0, 10.0):
        closed = hankel_closed_form(0.3, s2, 2)
        numeric = hankel_dets(0.3, s2, 2)[2]
        h2_detail = min(h2_detail, -closed)
        h2_ok = h2_ok and closed < 0.0 and numeric < 0.0
        h2_ok = h2_ok and abs(numeric - closed) <= 1e-8 * abs(closed)
    fourth_gap = abs(mine[4] - gauss[4])
    ok = (
        abs(var - 7.0 / 3.0) <= 1e-12
        and max(gaps[:4]) <= 1e-10
        and fourth_gap > 1.0
        and h2_ok
    )
    _report(
        "two-point-instance",
        ok,
        f"moment gaps 0-3 max {max(gaps[:4]):.3e}, fourth {fourth_gap:.3f}, "
        f"min |H2| {h2_detail:.3e}",
    )


def test_chi2_moment_bound_dominates_quadrature():
    """50 random small priors: series bound >= quadrature; point-mass closed form."""
    rng = np.random.default_rng(2410)
    worst = math.inf
    for _ in range(50):
        w0 = float(rng.uniform(0.55, 0.9))
        k0 = int(rng.integers(1, 4))
        rest = rng.dirichlet(np.ones(k0)) * (1.0 - w0)
        atoms0 = ((0.0, w0),) + tuple(
            (float(rng.uniform(-1.0, 1.0)), float(w)) for w in rest
        )
        k1 = int(rng.integers(1, 4))
        w1 = rng.dirichlet(np.ones(k1))
        atoms1 = tuple((float(rng.uniform(-1.0, 1.0)), float(w)) for w in w1)
        nu0 = DiscretePrior(atoms0)
        nu1 = DiscretePrior(atoms1)
        bound = chi2_moment_bound(nu0, nu1, 60)
        quad = chi2_quadrature(nu0, nu1)
        worst = min(worst, bound - quad)
    point_ok = True
    for c in (0.05, 0.1, 0.3, 0.7, 1.2):
        bound = chi2_moment_bound(
            DiscretePrior(((0.0, 1.0),)), DiscretePrior(((c, 1.0),)), 60
        )
        target = 2.0 * math.expm1(c * c)
        point_ok = point_ok and abs(bound - target) <= 1e-12 * max(1.0, target)
    ok = worst >= -1e-12 and point_ok
    _report(
        "chi2-oracle",
        ok,
        f"min (bound - quadrature) {worst:.3e}, point-mass closed form "
        f"{'exact' if point_ok else 'off'}",
    )


# --- exact equivariance ------------------------------------------------------

_EQ_MODEL = EfronModel(theta=1.5, sigma2=1.0, eps=0.1, adversary=PointMass(8.0))
_SHIFT = 3.25  # dyadic, so translation stays exact on the 2^-26 lattice
_SCALE = 2.0


def _pilot_tuple(out, loc, var):
    p = out.pilot
    return (
        loc(p.theta_tilde),
        var(p.sigma2_tilde),
        var(p.sigma2_minus),
        var(p.sigma2_plus),
        loc(p.pilot_interval.lower),
        loc(p.pilot_interval.upper),
    )


def _equivariance_mismatches(mode: str, transform: str, constants, runs: int) -> int:
    n = 512 if mode == "known" else 1024
    mismatches = 0
    for i in range(runs):
        s = sample(_EQ_MODEL, n, seed=21000 + i, stream=(0 if mode == "known" else 1, i))
        base = SampleSet(dyadic(s.values), s.seed_provenance)
        if transform == "translate":
            other = base.translated(_SHIFT)
            loc = lambda x: x + _SHIFT
            var = lambda v: v
            sig = (1.0, 1.0)
        else:
            other = base.scaled(_SCALE)
            loc = lambda x: _SCALE * x
            var = lambda v: _SCALE * _SCALE * v
            sig = (1.0, _SCALE * _SCALE)
        if mode == "known":
            out0 = ci_known_variance(base, sig[0], constants, detail=False)
            out1 = ci_known_variance(other, sig[1], constants, detail=False)
        else:
            out0 = ci_unknown_variance(base, constants, detail=False)
            out1 = ci_unknown_variance(other, constants, detail=False)
        if out0.interval.empty or out1.interval.empty:
            mismatches += out0.interval.empty != out1.interval.empty
            continue
        same = (
            out1.interval.lower == loc(out0.interval.lower)
            and out1.interval.upper == loc(out0.interval.upper)
            and out1.accepted_candidates
            == tuple(loc(c) for c in out0.accepted_candidates)
            and _pilot_tuple(out1, lambda x: x, lambda v: v)
            == _pilot_tuple(out0, loc, var)
        )
        mismatches += not same
    return mismatches


def test_outputs_are_exactly_translation_and_scale_equivariant(acceptance_fixture):
    """100 paired dyadic runs: pilot fields and CI endpoints map exactly."""
    known = constants_from_fixture(acceptance_fixture, "known")
    unknown = constants_from_fixture(acceptance_fixture, "unknown")
    bad = 0
    for mode, constants in (("known", known), ("unknown", unknown)):
        for transform in ("translate", "scale"):
            bad += _equivariance_mismatches(mode, transform, constants, runs=25)
    _report("equivariance", bad == 0, f"{bad} mismatched runs out of 100")


# --- figure package ----------------------------------------------------------


def test_reports_package_renders_reference_figures(acceptance_fixture, tmp_path):
    """Rendering package: three figures, slope and geometry parity with core."""
    reports = pytest.importorskip("efronci_reports")
    from efronci.harness import write_results_csv

    known = constants_from_fixture(acceptance_fixture, "known")
    config = ExperimentConfig(
        mode="known",
        n_list=(256, 1024, 4096),
        eps_list=(0.0,),
        adversaries=(PointMass(12.0),),
        trials=30,
        delta=0.1,
        eps_max=0.2,
        constants=known,
        master_seed=77,
    )
    results = run_experiment(config, workers=1)
    results_csv = tmp_path / "results.csv"
    write_results_csv(results, results_csv)

    geometry_csv = tmp_path / "geometry.csv"
    angles = np.linspace(0.0, math.pi, 50)
    with open(geometry_csv, "w") as f:
        f.write("eps_max,eps,angle,distance\n")
        for a in angles:
            f.write(f"0.2,0.05,{float(a)!r},{disk_distance(0.2, 0.05, float(a))!r}\n")

    rate_svg = tmp_path / "rate.svg"
    coverage_svg = tmp_path / "coverage.svg"
    disk_svg = tmp_path / "disk.svg"
    reports.render_figure(results_csv, "rate_plot", rate_svg)
    reports.render_figure(results_csv, "coverage_plot", coverage_svg)
    reports.render_figure(geometry_csv, "disk_geometry", disk_svg)
    rendered = all(
        p.exists() and p.read_text().lstrip().startswith("<?xml")
        for p in (rate_svg, coverage_svg, disk_svg)
    )

    frame = reports.load_results(results_csv)
    slope, _ = reports.rate_fit(frame)
    n_arr = np.array([r.n for r in results], dtype=float)
    med = np.array([r.median_length for r in results])
    expected_slope = float(np.polyfit(np.log(n_arr), np.log(med), 1)[0])
    slope_gap = abs(slope - expected_slope)

    curve = reports.disk_profile(0.2, 0.05, angles)
    geometry_gap = max(
        abs(c - disk_distance(0.2, 0.05, a)) for c, a in zip(curve, angles)
    )
    ok = rendered and slope_gap <= 1e-9 and geometry_gap <= 1e-12
    _report(
        "reports-figures",
        ok,
        f"rendered={rendered}, slope gap {slope_gap:.2e}, "
        f"geometry gap {geometry_gap:.2e}",
    )
