"""Command-line entry points: CI computation, simulation sweeps, calibration,
hard-instance export, disk geometry dumps, sampling, and the HTTP service.

Exit codes: 0 on success, 2 on configuration/validation errors.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import sys
from typing import Optional

import click
import numpy as np

from .certificates import disk_distance
from .ci import ci_known_variance, ci_output_to_dict, ci_unknown_variance
from .hard_instances import (
    gaussian_raw_moments,
    matching_priors_known,
    prior_moments,
    two_point_instance_unknown,
)
from .harness import (
    CalibrationTargets,
    ExperimentConfig,
    calibrate_constants,
    model_from_spec,
    run_experiment,
    write_results_csv,
)
from .model import SampleSet, SeedProvenance, sample
from .pilot import PilotConstants

__all__ = ["main"]

CONFIG_ERROR_EXIT = 2


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(CONFIG_ERROR_EXIT)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot read {path}: {exc}")


def _load_samples(path: str) -> SampleSet:
    try:
        values = np.loadtxt(path, ndmin=1)
    except (OSError, ValueError) as exc:
        _fail(f"cannot read samples from {path}: {exc}")
    try:
        return SampleSet(values, SeedProvenance(0, ()))
    except ValueError as exc:
        _fail(str(exc))


def _build_constants(
    constants_path: Optional[str], delta: float, eps_max: float
) -> PilotConstants:
    overrides = dict(_load_json(constants_path)) if constants_path else {}
    overrides["delta"] = delta
    overrides["eps_max"] = eps_max
    try:
        return PilotConstants(**overrides)
    except (TypeError, ValueError) as exc:
        _fail(f"bad constants: {exc}")


def _emit_json(payload: dict, report: Optional[str]) -> None:
    text = json.dumps(payload, indent=2)
    if report:
        with open(report, "w") as fh:
            fh.write(text + "\n")
    click.echo(text)


def _constants_to_dict(constants: PilotConstants) -> dict:
    return {
        "M": constants.M,
        "L": constants.L,
        "kappa": constants.kappa,
        "c0": constants.c0,
        "C1": constants.C1,
        "C2": constants.C2,
        "C3": constants.C3,
        "delta": constants.delta,
        "eps_max": constants.eps_max,
        "pivot_step": constants.pivot_step,
    }


@click.group()
def main() -> None:
    """Adaptive robust confidence intervals for contaminated Gaussian data."""


@main.command("ci-known")
@click.option("--sigma2", type=float, required=True, help="Known noise variance.")
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--eps-max", type=float, default=0.2, show_default=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--constants", "constants_path", type=click.Path(exists=True))
@click.option("--report", type=click.Path())
def ci_known_cmd(
    sigma2: float,
    delta: float,
    eps_max: float,
    input_path: str,
    constants_path: Optional[str],
    report: Optional[str],
) -> None:
    """Known-variance CI from one float per line."""
    samples = _load_samples(input_path)
    constants = _build_constants(constants_path, delta, eps_max)
    try:
        out = ci_known_variance(samples, sigma2, constants, detail=False)
    except ValueError as exc:
        _fail(str(exc))
    _emit_json(ci_output_to_dict(out), report)


@main.command("ci-unknown")
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--eps-max", type=float, default=1.0 / 3.0, show_default=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--constants", "constants_path", type=click.Path(exists=True))
@click.option("--report", type=click.Path())
def ci_unknown_cmd(
    delta: float,
    eps_max: float,
    input_path: str,
    constants_path: Optional[str],
    report: Optional[str],
) -> None:
    """Unknown-variance CI (requires eps-max <= 1/3)."""
    samples = _load_samples(input_path)
    constants = _build_constants(constants_path, delta, eps_max)
    try:
        out = ci_unknown_variance(samples, constants, detail=False)
    except ValueError as exc:
        _fail(str(exc))
    _emit_json(ci_output_to_dict(out), report)


@main.command("simulate")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--workers", type=int, default=None)
def simulate_cmd(config_path: str, out_path: str, workers: Optional[int]) -> None:
    """Coverage/length sweep from a JSON config to a CSV table."""
    spec = _load_json(config_path)
    sweeps = spec["sweeps"] if isinstance(spec, dict) and "sweeps" in spec else [spec]
    if not isinstance(sweeps, list):
        _fail("config must be a sweep object or {'sweeps': [...]}")
    results = []
    try:
        configs = [ExperimentConfig.from_dict(s) for s in sweeps]
    except ValueError as exc:
        _fail(str(exc))
    for config in configs:
        results.extend(run_experiment(config, workers=workers))
    write_results_csv(results, out_path)
    click.echo(f"wrote {len(results)} rows to {out_path}")


@main.command("calibrate")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--workers", type=int, default=None)
def calibrate_cmd(config_path: str, out_path: str, workers: Optional[int]) -> None:
    """Search tuning constants meeting coverage targets at minimum length."""
    spec = _load_json(config_path)
    try:
        config = ExperimentConfig.from_dict(spec["experiment"])
        targets = CalibrationTargets(
            coverage=float(spec["targets"]["coverage"]),
            pilot_coverage=float(spec["targets"]["pilot_coverage"]),
        )
        grid = spec.get("search_grid")
        chosen = calibrate_constants(config, targets, search_grid=grid, workers=workers)
    except (KeyError, ValueError) as exc:
        _fail(str(exc))
    check = run_experiment(
        dataclasses.replace(config, constants=chosen), workers=workers
    )
    payload = {
        "constants": _constants_to_dict(chosen),
        "achieved": {
            "min_coverage": min(r.coverage_rate for r in check),
            "median_lengths": [r.median_length for r in check],
        },
    }
    with open(out_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    click.echo(f"wrote constants to {out_path}")


@main.command("hard-instance")
@click.option(
    "--mode",
    type=click.Choice(["matching-known", "two-point-unknown"]),
    required=True,
)
@click.option("--eps-max", type=float, required=True)
@click.option("--eps", type=float, default=None)
@click.option("--K", "k_order", type=int, default=8, show_default=True)
@click.option("--tau", type=float, default=None, help="Defaults to e*sqrt(K).")
@click.option("--out", "out_path", type=click.Path(), required=True)
def hard_instance_cmd(
    mode: str,
    eps_max: float,
    eps: Optional[float],
    k_order: int,
    tau: Optional[float],
    out_path: str,
) -> None:
    """Export a lower-bound instance with its verified moment table."""
    try:
        if mode == "matching-known":
            if eps is None:
                _fail("matching-known requires --eps")
            tau_val = tau if tau is not None else math.e * math.sqrt(k_order)
            nu0, nu1 = matching_priors_known(eps_max, eps, k_order, tau_val)
            k_max = k_order + 1
            m0 = prior_moments(nu0, k_max)
            m1 = prior_moments(nu1, k_max)
            payload = {
                "mode": mode,
                "params": {"eps_max": eps_max, "eps": eps, "K": k_order, "tau": tau_val},
                "nu0": {"atoms": [list(a) for a in nu0.atoms]},
                "nu1": {"atoms": [list(a) for a in nu1.atoms]},
                "moments": {
                    "order": list(range(k_max + 1)),
                    "nu0": list(m0),
                    "nu1": list(m1),
                    "abs_gap": [abs(a - b) for a, b in zip(m0, m1)],
                },
            }
        else:
            mu0, g_mean, g_var = two_point_instance_unknown(eps_max)
            m0 = prior_moments(mu0, 4)
            m1 = gaussian_raw_moments(g_mean, g_var, 4)
            payload = {
                "mode": mode,
                "params": {"eps_max": eps_max},
                "mu0": {"atoms": [list(a) for a in mu0.atoms]},
                "gaussian": {"mean": g_mean, "var": g_var},
                "moments": {
                    "order": list(range(5)),
                    "mu0": list(m0),
                    "gaussian": list(m1),
                    "abs_gap": [abs(a - b) for a, b in zip(m0, m1)],
                },
            }
    except ValueError as exc:
        _fail(str(exc))
    with open(out_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    click.echo(f"wrote instance to {out_path}")


@main.command("disk-geometry")
@click.option("--eps-max", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--points", type=int, default=181, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def disk_geometry_cmd(eps_max: float, eps: float, points: int, out_path: str) -> None:
    """Dump the two-disk separation distance over an angle sweep [0, pi]."""
    if points < 2:
        _fail("need at least 2 sweep points")
    angles = np.linspace(0.0, math.pi, points)
    try:
        rows = [
            (eps_max, eps, float(a), disk_distance(eps_max, eps, float(a)))
            for a in angles
        ]
    except ValueError as exc:
        _fail(str(exc))
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps_max", "eps", "angle", "distance"])
        for row in rows:
            writer.writerow([repr(v) for v in row])
    click.echo(f"wrote {len(rows)} rows to {out_path}")


@main.command("sample")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def sample_cmd(model_path: str, n: int, seed: int, out_path: str) -> None:
    """Draw a sample from a model config, one float per line."""
    spec = _load_json(model_path)
    try:
        model = model_from_spec(spec)
        drawn = sample(model, n, seed)
    except ValueError as exc:
        _fail(str(exc))
    np.savetxt(out_path, drawn.values, fmt="%.17g")
    click.echo(f"wrote {n} samples to {out_path}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
