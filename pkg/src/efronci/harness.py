"""Monte-Carlo coverage/length experiments and constant calibration.

Per-trial randomness derives from (master_seed, cell_index, trial_index)
substreams, so result tables reproduce bit-identically regardless of the
execution schedule. wallclock_s is the only nondeterministic column.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .certificates import CertificateError
from .ci import ci_known_variance, ci_unknown_variance
from .ecf import GridError
from .hard_instances import DiscretePrior
from .model import (
    Adversary,
    DiscreteAtoms,
    EfronModel,
    GaussianMixture,
    ModelError,
    PointMass,
    sample,
)
from .pilot import ConstantsError, PilotConstants, PilotError

__all__ = [
    "HarnessError",
    "ExperimentConfig",
    "ExperimentResult",
    "CalibrationTargets",
    "adversary_label",
    "adversary_from_spec",
    "adversary_to_spec",
    "model_from_spec",
    "run_experiment",
    "write_results_csv",
    "results_to_rows",
    "calibrate_constants",
    "prior_to_model",
    "tv_product_bound",
    "indistinguishability_probe",
]

CSV_HEADER = (
    "mode,n,eps,adversary,trials,coverage,mc_stderr,"
    "mean_length,median_length,empty_rate,wallclock_s"
)

# Exceptions a single trial may raise; recorded as failures, never fatal.
_TRIAL_ERRORS = (PilotError, ConstantsError, CertificateError, GridError, ModelError)


class HarnessError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a mode crossed with n_list x eps_list x adversaries.

    delta/eps_max on the config override the same fields on `constants`, so a
    sweep always certifies at the level it reports.
    """

    mode: str
    n_list: tuple[int, ...]
    eps_list: tuple[float, ...]
    adversaries: tuple[Adversary, ...]
    trials: int
    delta: float = 0.1
    eps_max: float = 0.2
    constants: PilotConstants = field(default_factory=PilotConstants)
    master_seed: int = 0
    theta: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("known", "unknown"):
            raise HarnessError(f"mode must be known or unknown, got {self.mode!r}")
        if self.trials < 1:
            raise HarnessError("trials must be >= 1")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise HarnessError("n_list must be nonempty positive integers")
        if not self.adversaries:
            raise HarnessError("need at least one adversary")
        if self.sigma2 <= 0:
            raise HarnessError("sigma2 must be positive")
        if any(not (0.0 <= e <= self.eps_max) for e in self.eps_list):
            raise HarnessError("every eps must lie in [0, eps_max]")
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
        object.__setattr__(self, "adversaries", tuple(self.adversaries))
        synced = dataclasses.replace(
            self.constants, delta=self.delta, eps_max=self.eps_max
        )
        object.__setattr__(self, "constants", synced)

    @staticmethod
    def from_dict(spec: dict) -> "ExperimentConfig":
        try:
            adversaries = tuple(
                adversary_from_spec(a) for a in spec.get("adversaries", [])
            )
            const_spec = dict(spec.get("constants", {}))
            constants = PilotConstants(**const_spec)
            return ExperimentConfig(
                mode=spec["mode"],
                n_list=tuple(spec["n_list"]),
                eps_list=tuple(spec["eps_list"]),
                adversaries=adversaries,
                trials=int(spec["trials"]),
                delta=float(spec.get("delta", 0.1)),
                eps_max=float(spec.get("eps_max", 0.2)),
                constants=constants,
                master_seed=int(spec.get("master_seed", 0)),
                theta=float(spec.get("theta", 0.0)),
                sigma2=float(spec.get("sigma2", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, HarnessError):
                raise
            raise HarnessError(f"bad experiment config: {exc}") from exc


@dataclass(frozen=True)
class ExperimentResult:
    mode: str
    n: int
    eps: float
    adversary: str
    trials: int
    coverage_rate: float
    mc_stderr: float
    mean_length: float
    median_length: float
    empty_rate: float
    wallclock_s: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.coverage_rate <= 1.0):
            raise HarnessError("coverage_rate must lie in [0, 1]")


def adversary_label(adv: Adversary) -> str:
    if isinstance(adv, PointMass):
        return f"pm({adv.location:g})"
    if isinstance(adv, DiscreteAtoms):
        locs = adv.locations
        return f"atoms{len(adv.atoms)}[{locs.min():g},{locs.max():g}]"
    if isinstance(adv, GaussianMixture):
        means = ",".join(f"{m:g}" for m, _, _ in adv.components)
        return f"gmix({means})"
    raise HarnessError(f"unknown adversary type {type(adv).__name__}")


def adversary_from_spec(spec: dict) -> Adversary:
    kind = str(spec.get("type", "")).lower()
    if kind in ("pointmass", "point_mass", "pm"):
        return PointMass(float(spec["location"]))
    if kind in ("discrete", "atoms"):
        return DiscreteAtoms(tuple((float(x), float(w)) for x, w in spec["atoms"]))
    if kind in ("gaussian_mixture", "gmix", "mixture"):
        return GaussianMixture(
            tuple((float(m), float(v), float(w)) for m, v, w in spec["components"])
        )
    raise HarnessError(f"unknown adversary spec type {spec.get('type')!r}")


def adversary_to_spec(adv: Adversary) -> dict:
    if isinstance(adv, PointMass):
        return {"type": "pointmass", "location": adv.location}
    if isinstance(adv, DiscreteAtoms):
        return {"type": "discrete", "atoms": [list(a) for a in adv.atoms]}
    if isinstance(adv, GaussianMixture):
        return {
            "type": "gaussian_mixture",
            "components": [list(c) for c in adv.components],
        }
    raise HarnessError(f"unknown adversary type {type(adv).__name__}")


def model_from_spec(spec: dict) -> EfronModel:
    """Model from the key-value config format (adversary optional at eps=0)."""
    try:
        eps = float(spec.get("eps", 0.0))
        adv_spec = spec.get("adversary")
        adversary = adversary_from_spec(adv_spec) if adv_spec else PointMass(0.0)
        return EfronModel(
            theta=float(spec.get("theta", 0.0)),
            sigma2=float(spec.get("sigma2", 1.0)),
            eps=eps,
            adversary=adversary,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (HarnessError, ModelError)):
            raise
        raise HarnessError(f"bad model config: {exc}") from exc


@dataclass(frozen=True)
class _CellStats:
    covered: int
    empty_or_failed: int
    pilot_covered: int
    lengths: tuple[float, ...]
    wallclock_s: float


def _run_trial(
    config: ExperimentConfig,
    model: EfronModel,
    n: int,
    cell_index: int,
    trial_index: int,
) -> tuple[bool, Optional[float], bool]:
    """Returns (covered, length or None, pilot_covered)."""
    samples = sample(model, n, config.master_seed, stream=(cell_index, trial_index))
    try:
        if config.mode == "known":
            out = ci_known_variance(
                samples, config.sigma2, config.constants, detail=False
            )
        else:
            out = ci_unknown_variance(samples, config.constants, detail=False)
    except _TRIAL_ERRORS:
        return False, None, False
    covered = out.interval.contains(config.theta)
    length = None if out.interval.empty else out.interval.length
    pilot_covered = out.pilot.pilot_interval.contains(config.theta)
    return covered, length, pilot_covered


def _trial_task(args: tuple) -> tuple[bool, Optional[float], bool]:
    return _run_trial(*args)


def _run_cell(
    config: ExperimentConfig,
    eps: float,
    adversary: Adversary,
    n: int,
    cell_index: int,
    pool: Optional[ProcessPoolExecutor],
) -> _CellStats:
    model = EfronModel(
        theta=config.theta, sigma2=config.sigma2, eps=eps, adversary=adversary
    )
    start = time.perf_counter()
    args = [(config, model, n, cell_index, t) for t in range(config.trials)]
    if pool is None:
        records = [_run_trial(*a) for a in args]
    else:
        records = list(pool.map(_trial_task, args, chunksize=8))
    covered = sum(1 for c, _, _ in records if c)
    empties = sum(1 for _, length, _ in records if length is None)
    pilot_cov = sum(1 for _, _, p in records if p)
    lengths = tuple(length for _, length, _ in records if length is not None)
    return _CellStats(
        covered=covered,
        empty_or_failed=empties,
        pilot_covered=pilot_cov,
        lengths=lengths,
        wallclock_s=time.perf_counter() - start,
    )


def _cells(config: ExperimentConfig):
    idx = 0
    for n in config.n_list:
        for eps in config.eps_list:
            for adv in config.adversaries:
                yield idx, n, eps, adv
                idx += 1


def _sweep(
    config: ExperimentConfig, workers: Optional[int] = None
) -> list[tuple[int, float, Adversary, _CellStats]]:
    if workers is None:
        workers = os.cpu_count() or 1
    out = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for idx, n, eps, adv in _cells(config):
            out.append((n, eps, adv, _run_cell(config, eps, adv, n, idx, pool)))
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def run_experiment(
    config: ExperimentConfig, workers: Optional[int] = None
) -> tuple[ExperimentResult, ...]:
    """Seeded coverage/length sweep over every (n, eps, adversary) cell.

    A trial whose CI computation raises is recorded as non-coverage and folded
    into empty_rate (no interval was produced); the sweep itself never aborts.
    """
    results = []
    for n, eps, adv, stats in _sweep(config, workers):
        trials = config.trials
        cov = stats.covered / trials
        lengths = np.array(stats.lengths) if stats.lengths else np.array([np.nan])
        results.append(
            ExperimentResult(
                mode=config.mode,
                n=n,
                eps=eps,
                adversary=adversary_label(adv),
                trials=trials,
                coverage_rate=cov,
                mc_stderr=math.sqrt(cov * (1.0 - cov) / trials),
                mean_length=float(np.mean(lengths)),
                median_length=float(np.median(lengths)),
                empty_rate=stats.empty_or_failed / trials,
                wallclock_s=stats.wallclock_s,
            )
        )
    return tuple(results)


def results_to_rows(results: Sequence[ExperimentResult]) -> list[list]:
    rows = []
    for r in results:
        rows.append(
            [
                r.mode,
                r.n,
                repr(r.eps),
                r.adversary,
                r.trials,
                repr(r.coverage_rate),
                repr(r.mc_stderr),
                repr(r.mean_length),
                repr(r.median_length),
                repr(r.empty_rate),
                repr(r.wallclock_s),
            ]
        )
    return rows


def write_results_csv(results: Sequence[ExperimentResult], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        writer.writerows(results_to_rows(results))


@dataclass(frozen=True)
class CalibrationTargets:
    """Coverage floors the calibrated constants must meet on the stress suite."""

    coverage: float
    pilot_coverage: float

    def __post_init__(self) -> None:
        if not (0.0 < self.coverage <= 1.0 and 0.0 < self.pilot_coverage <= 1.0):
            raise HarnessError("targets must lie in (0, 1]")


_DEFAULT_SEARCH = {
    "known": {"M": (6.0, 8.0, 10.0)},
    "unknown": {"M": (4.0, 5.0), "L": (4.0, 6.0)},
}


def calibrate_constants(
    config: ExperimentConfig,
    targets: CalibrationTargets,
    search_grid: Optional[dict[str, Sequence[float]]] = None,
    workers: Optional[int] = None,
) -> PilotConstants:
    """Grid search minimizing median length subject to coverage floors.

    Candidates are Cartesian products over the given PilotConstants fields,
    enumerated in a fixed order, so reruns with the same master_seed return
    identical constants. Infeasible grids raise HarnessError.
    """
    grid = search_grid if search_grid is not None else _DEFAULT_SEARCH[config.mode]
    legal = {"M", "L", "kappa", "c0", "C1", "C2", "C3", "pivot_step"}
    bad = set(grid) - legal
    if bad:
        raise HarnessError(f"unknown constants fields: {sorted(bad)}")
    keys = sorted(grid)
    best: Optional[tuple[float, PilotConstants]] = None
    for combo in itertools.product(*(grid[k] for k in keys)):
        try:
            candidate = dataclasses.replace(
                config.constants, **dict(zip(keys, combo))
            )
            candidate.kappa_for(config.mode)
        except ConstantsError:
            continue
        trial_config = dataclasses.replace(config, constants=candidate)
        stats = [s for _, _, _, s in _sweep(trial_config, workers)]
        trials = config.trials
        min_cov = min(s.covered / trials for s in stats)
        min_pilot = min(s.pilot_covered / trials for s in stats)
        if min_cov < targets.coverage or min_pilot < targets.pilot_coverage:
            continue
        all_lengths = [s.lengths for s in stats]
        if any(not ls for ls in all_lengths):
            continue
        score = float(np.mean([np.median(ls) for ls in all_lengths]))
        if best is None or score < best[0]:
            best = (score, candidate)
    if best is None:
        raise HarnessError("no grid point met the calibration targets")
    return best[1]


def prior_to_model(
    prior: DiscretePrior, sigma2: float = 1.0, scale: float = 1.0
) -> EfronModel:
    """Read a discrete prior as a contaminated location model.

    The heaviest atom becomes the null location theta; the remaining mass,
    renormalized, becomes the contamination distribution. Locations are
    multiplied by `scale` first (separation dial for probe experiments).
    """
    atoms = [(loc * scale, w) for loc, w in prior.atoms]
    heavy = max(range(len(atoms)), key=lambda i: (atoms[i][1], -i))
    theta, w_heavy = atoms[heavy]
    eps = 1.0 - w_heavy
    rest = [a for i, a in enumerate(atoms) if i != heavy]
    if eps <= 1e-15 or not rest:
        return EfronModel(theta=theta, sigma2=sigma2, eps=0.0, adversary=PointMass(0.0))
    adversary = DiscreteAtoms(tuple((loc, w / eps) for loc, w in rest))
    return EfronModel(theta=theta, sigma2=sigma2, eps=eps, adversary=adversary)


def tv_product_bound(chi2_single: float, n: int) -> float:
    """TV bound across n iid copies: (1/2) sqrt((1 + chi2)^n - 1), capped at 1."""
    if chi2_single < 0 or n < 1:
        raise HarnessError("need chi2 >= 0 and n >= 1")
    log_growth = n * math.log1p(chi2_single)
    if log_growth > 700.0:
        return 1.0
    return min(1.0, 0.5 * math.sqrt(math.expm1(log_growth)))


def indistinguishability_probe(
    instance: tuple[DiscretePrior, DiscretePrior],
    n: int,
    trials: int,
    sigma2: float = 1.0,
    constants: Optional[PilotConstants] = None,
    master_seed: int = 7,
    scale: float = 1.0,
) -> float:
    """Type-I + type-II error of the CI-induced test 1{0 not in CI}.

    Samples from the null (first prior convolved with noise) and alternative
    (second prior) models; the null's heavy atom must sit at 0. An error sum
    near 1 certifies indistinguishability at this separation; well below 1
    means the CI separates the pair.
    """
    if trials < 1:
        raise HarnessError("trials must be >= 1")
    if constants is None:
        constants = PilotConstants()
    null_model = prior_to_model(instance[0], sigma2, scale)
    alt_model = prior_to_model(instance[1], sigma2, scale)
    if null_model.theta != 0.0:
        raise HarnessError("null prior must concentrate at 0")
    def rejects(model: EfronModel, arm: int, t: int) -> bool:
        s = sample(model, n, master_seed, stream=(arm, t))
        try:
            out = ci_known_variance(s, sigma2, constants, detail=False)
        except _TRIAL_ERRORS:
            return True  # no interval produced counts as a rejection
        return not out.interval.contains(0.0)

    type1 = sum(1 for t in range(trials) if rejects(null_model, 0, t))
    type2 = sum(1 for t in range(trials) if not rejects(alt_model, 1, t))
    return (type1 + type2) / trials
